use alloc::vec;
use alloc::vec::Vec;
use core::ops::RangeInclusive;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelConfig, Side};
use crate::operators::Grid;

/// Kinetic y-part of the fiber operator at momentum k.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiberModel {
    /// 1/2 (k - B x)^2
    Continuum,
    /// (1 - cos((k - B x) hy)) / hy^2, the fiber of the 2D grid operator.
    Lattice { hy: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiberDomain {
    /// Nodes anchored at the outer domain end, window of +-radius around the state.
    Adaptive { hx: f64, radius: f64 },
    /// The x-nodes of a 2D grid.
    Fixed { x0: f64, hx: f64, nx: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub model: FiberModel,
    pub domain: FiberDomain,
    /// Step of the centered difference (Richardson-refined).
    pub dk: f64,
}

impl BranchSpec {
    /// Fine continuum fiber, used for branch geometry.
    pub fn continuum(cfg: &ModelConfig) -> Self {
        let lb = 1.0 / cfg.b.sqrt();
        Self { model: FiberModel::Continuum, domain: FiberDomain::Adaptive { hx: 0.05 * lb, radius: 10.0 * lb }, dk: 0.02 * cfg.b.sqrt() }
    }

    /// Fibers of the 2D operator on `grid`.
    pub fn lattice(cfg: &ModelConfig, grid: &Grid) -> Self {
        Self {
            model: FiberModel::Lattice { hy: grid.hy },
            domain: FiberDomain::Fixed { x0: grid.x0, hx: grid.hx, nx: grid.nx },
            dk: 0.02 * cfg.b.sqrt(),
        }
    }

    /// Lattice kinetic term with adaptive nodes of the grid spacing.
    pub fn lattice_adaptive(cfg: &ModelConfig, grid: &Grid) -> Self {
        let lb = 1.0 / cfg.b.sqrt();
        Self { model: FiberModel::Lattice { hy: grid.hy }, domain: FiberDomain::Adaptive { hx: grid.hx, radius: 10.0 * lb }, dk: 0.02 * cfg.b.sqrt() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub m: i64,
    pub k: f64,
    pub energy: f64,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralBranch {
    pub side: Side,
    pub n: usize,
    pub l: f64,
    pub flux: f64,
    pub points: Vec<BranchPoint>,
}

impl SpectralBranch {
    pub fn energies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.energy).collect()
    }

    /// Points with energy inside (lo, hi).
    pub fn within(&self, lo: f64, hi: f64) -> impl Iterator<Item = &BranchPoint> + '_ {
        self.points.iter().filter(move |p| p.energy > lo && p.energy < hi)
    }

    /// min |e_{m+1} - e_m| over consecutive pairs with at least one energy in (lo, hi).
    pub fn min_spacing(&self, lo: f64, hi: f64) -> Option<f64> {
        self.points
            .windows(2)
            .filter(|w| w.iter().any(|p| p.energy > lo && p.energy < hi))
            .map(|w| (w[1].energy - w[0].energy).abs())
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))))
    }

    pub fn is_strictly_monotone(&self) -> bool {
        let up = |w: &[BranchPoint]| w[1].energy > w[0].energy;
        let down = |w: &[BranchPoint]| w[1].energy < w[0].energy;
        match self.side {
            Side::Left => self.points.windows(2).all(down),
            Side::Right => self.points.windows(2).all(up),
        }
    }
}

/// One x-discretized fiber: nodes plus the tridiagonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Fiber {
    pub x: Vec<f64>,
    pub diag: Vec<f64>,
    pub off: f64,
}

fn node_range(side: Side, k: f64, cfg: &ModelConfig, spec: &BranchSpec) -> Vec<f64> {
    match spec.domain {
        FiberDomain::Fixed { x0, hx, nx } => (0..nx).map(|i| x0 + i as f64 * hx).collect(),
        FiberDomain::Adaptive { hx, radius } => {
            let (x_min, x_max) = cfg.x_extent();
            let s2 = 0.5 * cfg.sep();
            let gc = k / cfg.b;
            match side {
                Side::Left => {
                    let lo = x_min.max(gc.min(-s2) - radius);
                    let hi = gc.max(-s2) + radius;
                    let i0 = ((lo - x_min) / hx).floor().max(0.0) as usize;
                    let i1 = ((hi - x_min) / hx).ceil() as usize;
                    (i0..=i1).map(|i| x_min + i as f64 * hx).collect()
                }
                Side::Right => {
                    let hi = x_max.min(gc.max(s2) + radius);
                    let lo = gc.min(s2) - radius;
                    let i0 = ((x_max - hi) / hx).floor().max(0.0) as usize;
                    let i1 = ((x_max - lo) / hx).ceil() as usize;
                    (i0..=i1).rev().map(|i| x_max - i as f64 * hx).collect()
                }
            }
        }
    }
}

fn kinetic(model: FiberModel, k: f64, b: f64, x: f64) -> f64 {
    let q = k - b * x;
    match model {
        FiberModel::Continuum => 0.5 * q * q,
        FiberModel::Lattice { hy } => (1.0 - (q * hy).cos()) / (hy * hy),
    }
}

fn kinetic_dk(model: FiberModel, k: f64, b: f64, x: f64) -> f64 {
    let q = k - b * x;
    match model {
        FiberModel::Continuum => q,
        FiberModel::Lattice { hy } => (q * hy).sin() / hy,
    }
}

impl Fiber {
    /// Fiber of side `side` at momentum k on the given nodes.
    pub fn on_nodes(side: Side, k: f64, cfg: &ModelConfig, model: FiberModel, x: Vec<f64>) -> Self {
        let hx = if x.len() > 1 { (x[1] - x[0]).abs() } else { 1.0 };
        let tx = 0.5 / (hx * hx);
        let diag = x.iter().map(|&xi| 2.0 * tx + kinetic(model, k, cfg.b, xi) + cfg.wall_potential(xi, side)).collect();
        Self { x, diag, off: -tx }
    }

    pub fn new(side: Side, k: f64, cfg: &ModelConfig, spec: &BranchSpec) -> Self {
        Self::on_nodes(side, k, cfg, spec.model, node_range(side, k, cfg, spec))
    }

    /// Number of eigenvalues strictly below `lambda` (Sturm count).
    pub fn count_below(&self, lambda: f64) -> usize {
        let b2 = self.off * self.off;
        let mut count = 0;
        let mut d = 1.0;
        for (i, a) in self.diag.iter().enumerate() {
            d = if i == 0 { a - lambda } else { a - lambda - b2 / d };
            if d == 0.0 {
                d = -f64::EPSILON * (a.abs() + lambda.abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The j-th smallest eigenvalue by bisection.
    pub fn eigenvalue(&self, j: usize) -> f64 {
        let r = 2.0 * self.off.abs();
        let mut lo = self.diag.iter().fold(f64::INFINITY, |a, &d| a.min(d)) - r;
        let mut hi = self.diag.iter().fold(f64::NEG_INFINITY, |a, &d| a.max(d)) + r;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Unit eigenvector for an accurate eigenvalue, by inverse iteration with partial pivoting.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.diag.len();
        let scale = self.diag.iter().fold(1.0f64, |a, d| a.max(d.abs()));
        let shift = lambda + 1e-13 * scale;
        let mut v = vec![1.0; n];
        for _ in 0..3 {
            v = tridiag_solve(&self.diag, self.off, shift, &v);
            let nv = v.iter().map(|z| z * z).sum::<f64>().sqrt();
            v.iter_mut().for_each(|z| *z /= nv);
        }
        // sign convention: positive at the largest entry
        let imax = (0..n).max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap()).unwrap_or(0);
        if v[imax] < 0.0 {
            v.iter_mut().for_each(|z| *z = -*z);
        }
        v
    }
}

/// Solves (T - shift) x = r for symmetric tridiagonal T (diag, constant off), partial pivoting.
fn tridiag_solve(diag: &[f64], off: f64, shift: f64, r: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let tiny = f64::EPSILON * (off.abs() + 1.0);
    let guard = |v: f64| if v == 0.0 { tiny } else { v };
    if n == 1 {
        return vec![r[0] / guard(diag[0] - shift)];
    }
    let mut d: Vec<f64> = diag.iter().map(|a| a - shift).collect();
    let mut dl = vec![off; n - 1];
    let mut du = vec![off; n - 1];
    let mut b = r.to_vec();
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            let f = dl[i] / guard(d[i]);
            d[i + 1] -= f * du[i];
            b[i + 1] -= f * b[i];
            dl[i] = 0.0;
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            let t = d[i + 1];
            d[i + 1] = du[i] - f * t;
            if i + 1 < n - 1 {
                dl[i] = du[i + 1];
                du[i + 1] = -f * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = t;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - f * b[i + 1];
        }
    }
    let mut x = vec![0.0; n];
    x[n - 1] = b[n - 1] / guard(d[n - 1]);
    x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / guard(d[n - 2]);
    for i in (0..n - 2).rev() {
        x[i] = (b[i] - du[i] * x[i + 1] - dl[i] * x[i + 2]) / guard(d[i]);
    }
    x
}

/// Energy of the n-th fiber level at momentum k on a fixed node set.
fn level(side: Side, n: usize, k: f64, cfg: &ModelConfig, model: FiberModel, nodes: &[f64]) -> f64 {
    Fiber::on_nodes(side, k, cfg, model, nodes.to_vec()).eigenvalue(n)
}

/// epsilon_n(k) and its derivative (centered differences, one Richardson step).
pub fn branch_point(side: Side, n: usize, k: f64, cfg: &ModelConfig, spec: &BranchSpec) -> (f64, f64) {
    let nodes = node_range(side, k, cfg, spec);
    let e = level(side, n, k, cfg, spec.model, &nodes);
    let h = spec.dk;
    let d = |h: f64| (level(side, n, k + h, cfg, spec.model, &nodes) - level(side, n, k - h, cfg, spec.model, &nodes)) / (2.0 * h);
    let (d1, d2) = (d(h), d(0.5 * h));
    (e, (4.0 * d2 - d1) / 3.0)
}

pub fn momentum(m: i64, cfg: &ModelConfig) -> f64 {
    (2.0 * core::f64::consts::PI * m as f64 + cfg.flux) / cfg.lf()
}

/// Branch table over k_m = (2 pi m + Phi)/L for m in `m_range`.
pub fn solve_branch(side: Side, n: usize, m_range: RangeInclusive<i64>, cfg: &ModelConfig, spec: &BranchSpec) -> Result<SpectralBranch> {
    if m_range.is_empty() {
        return Err(Error::Input("solve_branch: empty m range".into()));
    }
    let points = m_range
        .map(|m| {
            let k = momentum(m, cfg);
            let (energy, slope) = branch_point(side, n, k, cfg, spec);
            BranchPoint { m, k, energy, slope }
        })
        .collect();
    Ok(SpectralBranch { side, n, l: cfg.lf(), flux: cfg.flux, points })
}

/// Branch restricted to the window (lo, hi) plus `margin` points on each side.
pub fn solve_branch_window(side: Side, n: usize, cfg: &ModelConfig, spec: &BranchSpec, window: (f64, f64), margin: usize) -> Result<SpectralBranch> {
    let (x_min, x_max) = cfg.x_extent();
    let per = cfg.lf() * cfg.b / (2.0 * core::f64::consts::PI);
    let m_lo = ((x_min - 2.0) * per).floor() as i64;
    let m_hi = ((x_max + 2.0) * per).ceil() as i64;
    let full = solve_branch(side, n, m_lo..=m_hi, cfg, spec)?;
    let inside: Vec<usize> = (0..full.points.len()).filter(|&i| full.points[i].energy > window.0 && full.points[i].energy < window.1).collect();
    let (Some(&a), Some(&b)) = (inside.first(), inside.last()) else {
        return Err(Error::Input("branch never enters the window".into()));
    };
    if a < margin || b + margin >= full.points.len() {
        return Err(Error::Input("branch table too short for the requested margin".into()));
    }
    Ok(SpectralBranch { points: full.points[a - margin..=b + margin].to_vec(), ..full })
}

/// Normalized fiber state at momentum k: (energy, nodes, amplitudes).
pub fn fiber_state(side: Side, n: usize, k: f64, cfg: &ModelConfig, spec: &BranchSpec) -> (f64, Vec<f64>, Vec<f64>) {
    let f = Fiber::new(side, k, cfg, spec);
    let e = f.eigenvalue(n);
    let v = f.eigenvector(e);
    (e, f.x, v)
}

/// <phi, d_k H(k) phi> for a normalized fiber vector.
pub fn fiber_velocity(k: f64, cfg: &ModelConfig, model: FiberModel, x: &[f64], phi: &[f64]) -> f64 {
    x.iter().zip(phi).map(|(xi, p)| p * p * kinetic_dk(model, k, cfg.b, *xi)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiag_solver_matches_dense() {
        let diag = [2.0, -1.0, 0.5, 3.0, 0.1, 1.0];
        let off = 0.7;
        let shift = 0.3;
        let r = [1.0, 2.0, -1.0, 0.5, 0.0, 3.0];
        let x = tridiag_solve(&diag, off, shift, &r);
        for i in 0..6 {
            let mut s = (diag[i] - shift) * x[i];
            if i > 0 {
                s += off * x[i - 1];
            }
            if i < 5 {
                s += off * x[i + 1];
            }
            assert!((s - r[i]).abs() < 1e-12, "{i} {s} {}", r[i]);
        }
    }

    #[test]
    fn harmonic_oscillator_levels() {
        let cfg = ModelConfig::default();
        let spec = BranchSpec::continuum(&cfg);
        // guiding center at 0: far from both walls
        let f = Fiber::new(Side::Left, 0.0, &cfg, &spec);
        assert!((f.eigenvalue(0) - 0.5).abs() < 2e-4);
        assert!((f.eigenvalue(1) - 1.5).abs() < 1e-3);
        let v = f.eigenvector(f.eigenvalue(0));
        let resid: f64 = (0..v.len())
            .map(|i| {
                let mut s = (f.diag[i] - f.eigenvalue(0)) * v[i];
                if i > 0 {
                    s += f.off * v[i - 1];
                }
                if i + 1 < v.len() {
                    s += f.off * v[i + 1];
                }
                s * s
            })
            .sum::<f64>()
            .sqrt();
        assert!(resid < 1e-9);
    }
}
