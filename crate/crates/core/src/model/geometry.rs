#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point (x, y) on the cylinder, y periodic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::Left => "l",
            Side::Right => "r",
        }
    }
}

/// Reduce a y-difference to its representative in [-L/2, L/2].
#[inline]
pub fn wrap_dy(dy: f64, l: f64) -> f64 {
    dy - l * (dy / l).round()
}

/// Geodesic distance on the cylinder of circumference `l`.
pub fn star_distance(p: Point, q: Point, l: f64) -> Result<f64> {
    if !(p.x.is_finite() && p.y.is_finite() && q.x.is_finite() && q.y.is_finite()) {
        return Err(Error::Input("star_distance: non-finite coordinate".into()));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Input("star_distance: period must be positive".into()));
    }
    let dx = p.x - q.x;
    let dy = wrap_dy(p.y - q.y, l);
    Ok(dx.hypot(dy))
}

/// Power-law wall c|x - x_w|^m beyond the wall position, zero inside.
#[inline]
pub fn power_wall(x: f64, side: Side, wall_at: f64, c: f64, m: f64) -> f64 {
    let d = match side {
        Side::Left => -wall_at - x,
        Side::Right => x - wall_at,
    };
    if d > 0.0 {
        c * d.powf(m)
    } else {
        0.0
    }
}

/// Normalized bump (1 - (4r)^2)^3 on r < 1/4; peak value 1 at r = 0.
#[inline]
pub fn bump(r: f64) -> f64 {
    let s = 16.0 * r * r;
    if s < 1.0 {
        let t = 1.0 - s;
        t * t * t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn star_examples() {
        let d = |a: (f64, f64), b: (f64, f64), l| star_distance(Point::new(a.0, a.1), Point::new(b.0, b.1), l).unwrap();
        assert_eq!(d((0.0, 0.0), (0.0, 0.0), 10.0), 0.0);
        assert!((d((0.0, -4.9), (0.0, 4.9), 10.0) - 0.2).abs() < 1e-12);
        assert!((d((3.0, 0.0), (0.0, 4.0), 100.0) - 5.0).abs() < 1e-12);
        assert!(star_distance(Point::new(f64::NAN, 0.0), Point::new(0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn bump_is_c2_at_support_edge() {
        let h = 1e-5;
        let d2 = |r: f64| (bump(r + h) - 2.0 * bump(r) + bump(r - h)) / (h * h);
        // f'' vanishes linearly at the edge: about 3072 (1/4 - r)
        assert!(d2(0.25 - 3.0 * h).abs() < 0.2);
        assert!(d2(0.25 - 30.0 * h).abs() > 0.5);
        assert!(d2(0.25 + 2.0 * h).abs() == 0.0);
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(0.25), 0.0);
    }

    fn pt() -> impl Strategy<Value = Point> {
        (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y)| Point::new(x, y))
    }

    proptest! {
        #[test]
        fn star_is_metric(p in pt(), q in pt(), r in pt(), l in 0.5..40.0f64) {
            let pq = star_distance(p, q, l).unwrap();
            let qp = star_distance(q, p, l).unwrap();
            let pr = star_distance(p, r, l).unwrap();
            let rq = star_distance(r, q, l).unwrap();
            prop_assert!(pq >= 0.0);
            prop_assert!((pq - qp).abs() <= 1e-12 * (1.0 + pq));
            prop_assert!(pq <= pr + rq + 1e-9);
            prop_assert!(pq <= (p.x - q.x).hypot(p.y - q.y) + 1e-9);
        }

        #[test]
        fn star_zero_on_period_shift(p in pt(), k in -3i32..3, l in 0.5..40.0f64) {
            let q = Point::new(p.x, p.y + k as f64 * l);
            prop_assert!(star_distance(p, q, l).unwrap() < 1e-9 * (1.0 + p.y.abs() + l));
        }

        #[test]
        fn wall_monotone(a in 0.0..20.0f64, b in 0.0..20.0f64, c in 0.1..3.0f64, m in 2.0..6.0f64) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-9);
            prop_assert!(power_wall(-8.0 - hi, Side::Left, 8.0, c, m) > power_wall(-8.0 - lo, Side::Left, 8.0, c, m));
            prop_assert!(power_wall(8.0 + hi, Side::Right, 8.0, c, m) > power_wall(8.0 + lo, Side::Right, 8.0, c, m));
            prop_assert_eq!(power_wall(8.0 - lo.min(16.0), Side::Right, 8.0, c, m), 0.0);
        }
    }
}
