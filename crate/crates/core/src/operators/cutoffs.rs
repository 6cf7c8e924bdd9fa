use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::model::ModelConfig;

/// Index into the three strips.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strip {
    Left,
    Bulk,
    Right,
}

impl Strip {
    pub const ALL: [Strip; 3] = [Strip::Left, Strip::Bulk, Strip::Right];
}

/// Quintic smoothstep 6t^5 - 15t^4 + 10t^3 clamped to [0, 1], with derivatives.
#[inline]
fn ramp(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let t2 = t * t;
        let v = t2 * t * (10.0 + t * (-15.0 + 6.0 * t));
        let d1 = 30.0 * t2 * (1.0 - t) * (1.0 - t);
        let d2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        (v, d1, d2)
    }
}

/// Sharp strips J~ and smooth cutoffs J for one geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSystem {
    /// Half-separation S/2.
    pub s2: f64,
    pub d: f64,
    /// Constant cutoffs (every J = 1); makes the commutators vanish.
    pub constant: bool,
}

impl CutoffSystem {
    /// Sharp strip boundaries (-S/2 + D/2, S/2 - D/2).
    pub fn breaks(&self) -> (f64, f64) {
        (-self.s2 + 0.5 * self.d, self.s2 - 0.5 * self.d)
    }

    /// J~_i(x); the strips are half-open so they partition the line.
    pub fn sharp(&self, s: Strip, x: f64) -> f64 {
        let (a, b) = self.breaks();
        let hit = match s {
            Strip::Left => x < a,
            Strip::Bulk => a <= x && x < b,
            Strip::Right => x >= b,
        };
        if hit {
            1.0
        } else {
            0.0
        }
    }

    /// (J_i, J_i', J_i'') at x.
    pub fn smooth(&self, s: Strip, x: f64) -> (f64, f64, f64) {
        if self.constant {
            return (1.0, 0.0, 0.0);
        }
        let a = -self.s2 + 0.75 * self.d;
        let c = self.s2 - 0.25 * self.d;
        match s {
            Strip::Left => {
                let (v, d1, d2) = ramp(x - a);
                (1.0 - v, -d1, -d2)
            }
            Strip::Right => {
                let (v, d1, d2) = ramp(-x - a);
                (1.0 - v, d1, -d2)
            }
            Strip::Bulk => {
                if x >= 0.0 {
                    let (v, d1, d2) = ramp(x - c);
                    (1.0 - v, -d1, -d2)
                } else {
                    let (v, d1, d2) = ramp(-x - c);
                    (1.0 - v, d1, -d2)
                }
            }
        }
    }

    /// J_i sampled on grid columns.
    pub fn smooth_table(&self, s: Strip, grid: &Grid) -> Vec<f64> {
        (0..grid.nx).map(|i| self.smooth(s, grid.x(i)).0).collect()
    }

    pub fn sharp_table(&self, s: Strip, grid: &Grid) -> Vec<f64> {
        (0..grid.nx).map(|i| self.sharp(s, grid.x(i))).collect()
    }

    /// (sup|J'|, sup|J''|) over the transitions.
    pub fn derivative_bounds(&self) -> (f64, f64) {
        let mut m1: f64 = 0.0;
        let mut m2: f64 = 0.0;
        for k in 0..=2000 {
            let (_, d1, d2) = ramp(k as f64 / 2000.0);
            m1 = m1.max(d1.abs());
            m2 = m2.max(d2.abs());
        }
        (m1, m2)
    }
}

pub fn build_cutoffs(cfg: &ModelConfig) -> Result<CutoffSystem> {
    if cfg.strip_width() < 4 {
        return Err(Error::Geometry(alloc::format!("strip width D = {} < 4", cfg.strip_width())));
    }
    cfg.check_geometry()?;
    let c = CutoffSystem { s2: 0.5 * cfg.sep(), d: cfg.d(), constant: false };
    let (d1, _) = c.derivative_bounds();
    if d1 > 2.0 {
        return Err(Error::Geometry("ramp slope exceeds 2".into()));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cs(l: u32) -> CutoffSystem {
        build_cutoffs(&ModelConfig::default().with_l(l)).unwrap()
    }

    #[test]
    fn plateaus() {
        for l in [16u32, 25, 36, 49] {
            let c = cs(l);
            let (s2, d) = (c.s2, c.d);
            assert_eq!(c.smooth(Strip::Left, -s2 + 0.75 * d - 1.0).0, 1.0);
            assert_eq!(c.smooth(Strip::Left, -s2 + 0.75 * d).0, 1.0);
            assert_eq!(c.smooth(Strip::Left, -s2 + 0.75 * d + 1.0).0, 0.0);
            assert_eq!(c.smooth(Strip::Right, s2 - 0.75 * d).0, 1.0);
            assert_eq!(c.smooth(Strip::Right, s2 - 0.75 * d - 1.0).0, 0.0);
            assert_eq!(c.smooth(Strip::Bulk, s2 - 0.25 * d).0, 1.0);
            assert_eq!(c.smooth(Strip::Bulk, -s2 + 0.25 * d - 1.0).0, 0.0);
            assert_eq!(c.smooth(Strip::Bulk, 0.0).0, 1.0);
            assert_eq!(c.smooth(Strip::Left, 0.0).0, 0.0);
            assert_eq!(c.smooth(Strip::Right, 0.0).0, 0.0);
        }
    }

    #[test]
    fn slope_bound_and_curvature() {
        let (d1, d2) = cs(16).derivative_bounds();
        assert!((d1 - 1.875).abs() < 1e-6);
        assert!((d2 - 10.0 / 3f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn derivatives_consistent() {
        let c = cs(25);
        let h = 1e-5;
        for k in 0..400 {
            let x = -13.0 + k as f64 * 0.065;
            for s in Strip::ALL {
                let (_, d1, d2) = c.smooth(s, x);
                let fd1 = (c.smooth(s, x + h).0 - c.smooth(s, x - h).0) / (2.0 * h);
                let fd2 = (c.smooth(s, x + h).1 - c.smooth(s, x - h).1) / (2.0 * h);
                assert!((d1 - fd1).abs() < 1e-6, "{s:?} {x}");
                assert!((d2 - fd2).abs() < 1e-4, "{s:?} {x}");
            }
        }
    }

    #[test]
    fn smooth_is_one_on_sharp_support() {
        for l in [16u32, 25, 36, 49] {
            let c = cs(l);
            for k in 0..4000 {
                let x = -40.0 + k as f64 * 0.02;
                for s in Strip::ALL {
                    if c.sharp(s, x) == 1.0 {
                        assert_eq!(c.smooth(s, x).0, 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn overlap_rejected() {
        let cfg = ModelConfig { separation: Some(6), ..ModelConfig::default() };
        assert!(matches!(build_cutoffs(&cfg), Err(Error::Geometry(_))));
    }

    proptest! {
        #[test]
        fn sharp_partition(x in -60.0..60.0f64, l in 16u32..64) {
            let c = cs(l);
            let s: f64 = Strip::ALL.iter().map(|s| c.sharp(*s, x)).sum();
            prop_assert_eq!(s, 1.0);
            for st in Strip::ALL {
                let v = c.smooth(st, x).0;
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
