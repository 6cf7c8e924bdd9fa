use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::ModelConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegionName {
    /// Lambda: the whole sample.
    Full,
    Left,
    Right,
    Bulk,
    /// Lambda_1 = Lambda_l minus Lambda_2.
    One,
    /// Outermost columns of Lambda_l.
    Two,
}

impl RegionName {
    pub const ALL: [RegionName; 6] = [RegionName::Full, RegionName::Left, RegionName::Right, RegionName::Bulk, RegionName::One, RegionName::Two];

    pub fn label(self) -> &'static str {
        match self {
            RegionName::Full => "Lambda",
            RegionName::Left => "Lambda_l",
            RegionName::Right => "Lambda_r",
            RegionName::Bulk => "Lambda_b",
            RegionName::One => "Lambda_1",
            RegionName::Two => "Lambda_2",
        }
    }
}

/// A rectangular block of integer sites: n in [n_lo, n_hi], all m of one period.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub name: RegionName,
    pub n_lo: i64,
    pub n_hi: i64,
    pub m_lo: i64,
    pub m_hi: i64,
}

fn ints(a: f64, b: f64) -> (i64, i64) {
    (a.ceil() as i64, b.floor() as i64)
}

impl RegionSpec {
    pub fn new(name: RegionName, cfg: &ModelConfig) -> Self {
        let s2 = 0.5 * cfg.sep();
        let d = cfg.d();
        let half_l = 0.5 * cfg.lf();
        // one period of m: m in [-L/2, L/2) so that no site is counted twice on the cylinder
        let m_lo = (-half_l).ceil() as i64;
        let m_hi = half_l.ceil() as i64 - 1;
        let two = ints(-s2, -s2 + (0.25 * d - 1.0));
        let left = ints(-s2, -s2 + 0.75 * d + 1.0);
        let (n_lo, n_hi) = match name {
            RegionName::Full => ints(-s2, s2),
            RegionName::Left => left,
            RegionName::Right => ints(s2 - 0.75 * d - 1.0, s2),
            RegionName::Bulk => ints(-s2 + (0.25 * d - 1.0), s2 - (0.25 * d - 1.0)),
            RegionName::Two => two,
            RegionName::One => {
                if two.0 > two.1 {
                    left
                } else {
                    (left.0.max(two.1 + 1), left.1)
                }
            }
        };
        Self { name, n_lo, n_hi, m_lo, m_hi }
    }

    pub fn contains(&self, n: i64, m: i64) -> bool {
        (self.n_lo..=self.n_hi).contains(&n) && (self.m_lo..=self.m_hi).contains(&m)
    }

    pub fn is_empty(&self) -> bool {
        self.n_lo > self.n_hi || self.m_lo > self.m_hi
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            ((self.n_hi - self.n_lo + 1) * (self.m_hi - self.m_lo + 1)) as usize
        }
    }

    /// Sites in (n, m) lexicographic order.
    pub fn sites(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::with_capacity(self.len());
        for n in self.n_lo..=self.n_hi {
            for m in self.m_lo..=self.m_hi {
                out.push((n, m));
            }
        }
        out
    }

    pub fn is_subset_of(&self, other: &RegionSpec) -> bool {
        self.is_empty() || (self.n_lo >= other.n_lo && self.n_hi <= other.n_hi && self.m_lo >= other.m_lo && self.m_hi <= other.m_hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_l16() {
        let cfg = ModelConfig::default();
        let r = |n| RegionSpec::new(n, &cfg);
        assert_eq!((r(RegionName::Full).n_lo, r(RegionName::Full).n_hi), (-8, 8));
        assert_eq!((r(RegionName::Full).m_lo, r(RegionName::Full).m_hi), (-8, 7));
        assert_eq!((r(RegionName::Left).n_lo, r(RegionName::Left).n_hi), (-8, -4));
        assert_eq!((r(RegionName::Right).n_lo, r(RegionName::Right).n_hi), (4, 8));
        assert_eq!((r(RegionName::Two).n_lo, r(RegionName::Two).n_hi), (-8, -8));
        assert_eq!((r(RegionName::One).n_lo, r(RegionName::One).n_hi), (-7, -4));
        assert_eq!(r(RegionName::Full).len(), 17 * 16);
    }

    #[test]
    fn partition_of_left() {
        for l in [16u32, 25, 36, 49, 64] {
            let cfg = ModelConfig::default().with_l(l);
            let left = RegionSpec::new(RegionName::Left, &cfg);
            let one = RegionSpec::new(RegionName::One, &cfg);
            let two = RegionSpec::new(RegionName::Two, &cfg);
            let full = RegionSpec::new(RegionName::Full, &cfg);
            for (n, m) in full.sites() {
                let in1 = one.contains(n, m);
                let in2 = two.contains(n, m);
                assert!(!(in1 && in2));
                assert_eq!(in1 || in2, left.contains(n, m));
            }
            for name in RegionName::ALL {
                assert!(RegionSpec::new(name, &cfg).is_subset_of(&full));
            }
        }
    }
}
