use alloc::vec;
use alloc::vec::Vec;
use faer::{c64, Mat};
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use super::assemble::{assemble_on, AssembledOperator, Variant};
use super::cutoffs::{CutoffSystem, Strip};
use super::grid::{Grid, XBoundary};
use crate::error::{Error, Result};
use crate::linalg::{norm, ResolventLu, ShiftedLdlt, ZERO};
use crate::model::{DisorderField, ModelConfig, Side};

struct Part {
    lu: ResolventLu,
    j: Vec<f64>,
    jt: Vec<f64>,
}

/// K(z) = sum_i [H_i, J_i] R_i(z) J~_i, applied through sparse factorizations.
pub struct KappaOperator {
    pub grid: Grid,
    pub z: c64,
    tx: f64,
    parts: Vec<Part>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn strip_variant(s: Strip) -> Variant {
    match s {
        Strip::Left => Variant::Single(Side::Left),
        Strip::Bulk => Variant::Bulk,
        Strip::Right => Variant::Single(Side::Right),
    }
}

/// Builds K(z) for H_l, H_b, H_r assembled from `cfg` and `field` on `grid`.
pub fn assemble_kappa(z: c64, cfg: &ModelConfig, grid: &Grid, field: &DisorderField, cutoffs: &CutoffSystem) -> Result<KappaOperator> {
    let (lo, hi) = cfg.gap_window();
    if !(z.re > lo && z.re < hi) {
        return Err(Error::Precondition(alloc::format!("Re z = {} outside the gap window ({lo}, {hi})", z.re)));
    }
    let ops: Vec<AssembledOperator> = Strip::ALL.iter().map(|s| assemble_on(strip_variant(*s), cfg, grid, Some(field))).collect::<Result<_>>()?;
    kappa_from_ops(z, cutoffs, [&ops[0], &ops[1], &ops[2]])
}

/// K(z) from already assembled (H_l, H_b, H_r).
pub fn kappa_from_ops(z: c64, cutoffs: &CutoffSystem, ops: [&AssembledOperator; 3]) -> Result<KappaOperator> {
    let grid = ops[0].grid;
    if grid.boundary != XBoundary::Dirichlet || ops.iter().any(|o| o.grid != grid) {
        return Err(Error::Input("K(z) needs three operators on one Dirichlet grid".into()));
    }
    let mut parts = Vec::with_capacity(3);
    for (s, op) in Strip::ALL.iter().zip(ops) {
        if z.im.abs() <= 1e-12 {
            // a zero pivot of H - Re z certifies z in the spectrum
            ShiftedLdlt::new(op, z.re).map_err(|e| Error::SingularResolvent { re: z.re, im: z.im, reason: alloc::format!("{}: {e}", op.variant.label()) })?;
        }
        let lu = ResolventLu::new(op, z)?;
        parts.push(Part { lu, j: cutoffs.smooth_table(*s, &grid), jt: cutoffs.sharp_table(*s, &grid) });
    }
    Ok(KappaOperator { grid, z, tx: ops[0].tx, parts })
}

impl KappaOperator {
    fn weight(&self, w: &[f64], x: &[c64]) -> Mat<c64> {
        let ny = self.grid.ny;
        Mat::from_fn(x.len(), 1, |k, _| x[k] * w[k / ny])
    }

    /// ([T_x, J] w) with T_x = -1/2 D_xx; `transpose` applies its transpose.
    fn commutator(&self, j: &[f64], w: &Mat<c64>, out: &mut [c64], transpose: bool) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let t = self.tx;
        for i in 0..nx {
            let (cp, cm) = if transpose {
                (if i + 1 < nx { -t * (j[i] - j[i + 1]) } else { 0.0 }, if i > 0 { -t * (j[i] - j[i - 1]) } else { 0.0 })
            } else {
                (if i + 1 < nx { -t * (j[i + 1] - j[i]) } else { 0.0 }, if i > 0 { -t * (j[i - 1] - j[i]) } else { 0.0 })
            };
            if cp == 0.0 && cm == 0.0 {
                continue;
            }
            for jj in 0..ny {
                let k = i * ny + jj;
                let mut acc = ZERO;
                if cp != 0.0 {
                    acc += w[(k + ny, 0)] * cp;
                }
                if cm != 0.0 {
                    acc += w[(k - ny, 0)] * cm;
                }
                out[k] += acc;
            }
        }
    }

    pub fn apply(&self, x: &[c64]) -> Vec<c64> {
        let mut y = vec![ZERO; x.len()];
        for p in &self.parts {
            if p.j.windows(2).all(|w| w[0] == w[1]) {
                continue;
            }
            let mut w = self.weight(&p.jt, x);
            p.lu.solve_in_place(w.as_mut());
            self.commutator(&p.j, &w, &mut y, false);
        }
        y
    }

    /// K(z)^* x = sum_i J~_i R_i(z)^* [T, J_i]^T x.
    pub fn apply_adjoint(&self, x: &[c64]) -> Vec<c64> {
        let ny = self.grid.ny;
        let mut y = vec![ZERO; x.len()];
        let xm = Mat::from_fn(x.len(), 1, |k, _| x[k]);
        for p in &self.parts {
            if p.j.windows(2).all(|w| w[0] == w[1]) {
                continue;
            }
            let mut c = vec![ZERO; x.len()];
            self.commutator(&p.j, &xm, &mut c, true);
            let mut w = Mat::from_fn(x.len(), 1, |k, _| c[k]);
            p.lu.solve_adjoint_in_place(w.as_mut());
            for k in 0..x.len() {
                y[k] += w[(k, 0)] * p.jt[k / ny];
            }
        }
        y
    }

    /// sum_i J_i R_i(z) J~_i x.
    pub fn glue(&self, x: &[c64]) -> Vec<c64> {
        let ny = self.grid.ny;
        let mut y = vec![ZERO; x.len()];
        for p in &self.parts {
            let mut w = self.weight(&p.jt, x);
            p.lu.solve_in_place(w.as_mut());
            for k in 0..x.len() {
                y[k] += w[(k, 0)] * p.j[k / ny];
            }
        }
        y
    }

    /// ||K(z)|| by power iteration on K^* K.
    pub fn norm(&self, rtol: f64, max_iter: usize, seed: u64) -> NormEstimate {
        let n = self.grid.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x: Vec<c64> = (0..n).map(|_| c64::new(gauss(&mut rng), gauss(&mut rng))).collect();
        let s = norm(&x);
        x.iter_mut().for_each(|v| *v /= s);
        let mut last = 0.0;
        for it in 1..=max_iter {
            let kx = self.apply(&x);
            let est = norm(&kx);
            if est == 0.0 {
                return NormEstimate { value: 0.0, iterations: it, converged: true };
            }
            if it > 1 && (est - last).abs() <= rtol * est {
                return NormEstimate { value: est, iterations: it, converged: true };
            }
            last = est;
            let w = self.apply_adjoint(&kx);
            let wn = norm(&w);
            if wn == 0.0 {
                return NormEstimate { value: est, iterations: it, converged: true };
            }
            x = w.into_iter().map(|v| v / wn).collect();
        }
        NormEstimate { value: last, iterations: max_iter, converged: false }
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (2.0 * core::f64::consts::PI * u2).cos()
}

/// Deterministic standard normal draws, shared by the iterative solvers.
pub fn gaussian_vector(n: usize, seed: u64) -> Vec<c64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| c64::new(gauss(&mut rng), gauss(&mut rng))).collect()
}
