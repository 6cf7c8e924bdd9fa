use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use faer::{c64, Mat};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ResolventLu;
use crate::model::{star_distance, GridControl, ModelConfig, Point};
use crate::operators::{assemble_on, AssembledOperator, Grid, Variant};
use crate::stats::{linear_fit, lstsq, LinearFit};

/// 1 + |ln(B r^2 / 2)|
pub fn log_envelope(r: f64, b: f64) -> f64 {
    1.0 + (0.5 * b * r * r).ln().abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelEnvelope {
    /// B/8
    pub gaussian_rate: f64,
    /// sqrt(B)/16
    pub exp_rate: f64,
    /// 2/sqrt(B)
    pub core_radius: f64,
    pub b: f64,
    /// max of |G|/(e^{-B r^2/8} Phi0) over r in [2, 3]/sqrt(B)
    pub prefactor: f64,
    /// max of |G|/(e^{-sqrt(B) r/16} Phi0) over the same shell
    pub exp_prefactor: f64,
}

impl KernelEnvelope {
    pub fn gaussian(&self, r: f64) -> f64 {
        self.prefactor * (-self.gaussian_rate * r * r).exp() * log_envelope(r, self.b)
    }

    pub fn exponential(&self, r: f64) -> f64 {
        self.exp_prefactor * (-self.exp_rate * r).exp() * log_envelope(r, self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub dx: f64,
    pub dy: f64,
    pub r: f64,
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelDecay {
    pub z: (f64, f64),
    pub samples: Vec<KernelSample>,
    /// Fit of ln|G| = a - rate r beyond the core.
    pub exp_fit: LinearFit,
    pub exp_rate: f64,
    /// ln|G| = a - g r - q r^2 beyond the core: (g, q).
    pub mixed_rates: (f64, f64),
    pub envelope: KernelEnvelope,
    pub gaussian_violations: usize,
    pub exp_violations: usize,
}

fn check_z(z: c64, cfg: &ModelConfig) -> Result<()> {
    let b = cfg.b;
    let d = (z.re - 0.5 * b).abs().min((z.re - 1.5 * b).abs());
    let dist = (d * d + z.im * z.im).sqrt();
    let ok = z.re > 0.5 * b && z.re < 1.5 * b && z.im.abs() <= 1.0 && dist >= cfg.epsilon;
    if !ok {
        return Err(Error::SingularResolvent { re: z.re, im: z.im, reason: format!("needs B/2 < Re z < 3B/2, |Im z| <= 1 and distance {} from the Landau levels", cfg.epsilon) });
    }
    Ok(())
}

/// Free Landau operator on the magnetic torus of y-period L.
pub fn landau_reference(cfg: &ModelConfig) -> Result<AssembledOperator> {
    let h = match cfg.grid {
        GridControl::Auto { h } => h,
        GridControl::Explicit { .. } => 0.2 / cfg.b.sqrt(),
    };
    let grid = Grid::landau_torus(cfg.b, cfg.lf(), h, cfg.lf())?;
    assemble_on(Variant::Landau, cfg, &grid, None)
}

/// Kernel column from source node (i0, j0); magnitudes are densities (divided by the cell).
fn column(op: &AssembledOperator, lu: &ResolventLu, i0: usize, j0: usize) -> Vec<c64> {
    let g = &op.grid;
    let mut rhs = Mat::<c64>::zeros(g.len(), 1);
    rhs[(g.idx(i0, j0), 0)] = c64::new(1.0 / g.cell(), 0.0);
    lu.solve_in_place(rhs.as_mut());
    (0..g.len()).map(|k| rhs[(k, 0)]).collect()
}

/// Target offsets (di, dj): 8 radii per decade along x, the diagonal, and y across the seam.
fn offsets(g: &Grid, r_max: f64) -> Vec<(usize, usize)> {
    let r0 = g.hx.min(g.hy);
    let steps = (8.0 * (r_max / r0).log10()).floor() as usize;
    let mut out = Vec::new();
    for s in 0..=steps {
        let r = r0 * 10f64.powf(s as f64 / 8.0);
        let di = (r / g.hx).round() as usize;
        let dd = (r / core::f64::consts::SQRT_2 / g.hx).round() as usize;
        let dj_d = (r / core::f64::consts::SQRT_2 / g.hy).round() as usize;
        let dj = (r / g.hy).round() as usize;
        for o in [(di, 0), (dd, dj_d), (0, g.ny - dj.min(g.ny / 2))] {
            if o != (0, 0) && o.1 != g.ny && !out.contains(&o) {
                out.push(o);
            }
        }
    }
    out
}

fn samples_from(op: &AssembledOperator, col: &[c64], i0: usize, j0: usize, offs: &[(usize, usize)]) -> Result<Vec<KernelSample>> {
    let g = &op.grid;
    let src = Point::new(g.x(i0), g.y(j0));
    offs.iter()
        .map(|&(di, dj)| {
            let (i, j) = (i0 + di, (j0 + dj) % g.ny);
            let p = Point::new(g.x(i), g.y(j));
            let r = star_distance(src, p, g.ly)?;
            Ok(KernelSample { dx: p.x - src.x, dy: p.y - src.y, r, magnitude: col[g.idx(i, j)].norm() })
        })
        .collect()
}

/// Kernel magnitudes of (z - H_L)^{-1} around a source at node (i0, j0).
pub fn kernel_samples(op: &AssembledOperator, z: c64, i0: usize, j0: usize, r_max: f64) -> Result<Vec<KernelSample>> {
    let lu = ResolventLu::new(op, z)?;
    let col = column(op, &lu, i0, j0);
    let offs = offsets(&op.grid, r_max);
    if offs.iter().any(|o| i0 + o.0 >= op.grid.nx) {
        return Err(Error::Input("probe offsets leave the grid".into()));
    }
    samples_from(op, &col, i0, j0, &offs)
}

pub fn kernel_decay_probe(z: c64, cfg: &ModelConfig) -> Result<KernelDecay> {
    check_z(z, cfg)?;
    let op = landau_reference(cfg)?;
    let g = op.grid;
    let r_max = (0.5 * g.ly).min(0.5 * g.lx()) - g.hx.max(g.hy);
    let i0 = g.nx / 2 - (0.5 * r_max / g.hx) as usize;
    let samples = kernel_samples(&op, z, i0, 0, r_max)?;
    fit_kernel(z, cfg.b, samples)
}

/// Rates and envelope checks for a set of kernel samples.
pub fn fit_kernel(z: c64, b: f64, samples: Vec<KernelSample>) -> Result<KernelDecay> {
    let sb = b.sqrt();
    let core_radius = 2.0 / sb;
    let outer: Vec<&KernelSample> = samples.iter().filter(|s| s.r >= core_radius && s.magnitude > 0.0).collect();
    if outer.len() < 4 {
        return Err(Error::Input("too few kernel samples beyond the core".into()));
    }
    let r: Vec<f64> = outer.iter().map(|s| s.r).collect();
    let ln: Vec<f64> = outer.iter().map(|s| s.magnitude.ln()).collect();
    let exp_fit = linear_fit(&r, &ln)?;
    let c = lstsq(&[vec![1.0; r.len()], r.iter().map(|v| -v).collect(), r.iter().map(|v| -v * v).collect()], &ln)?;
    let shell: Vec<&&KernelSample> = outer.iter().filter(|s| s.r <= 3.0 / sb).collect();
    if shell.is_empty() {
        return Err(Error::Input("no kernel samples in the fitting shell".into()));
    }
    let mut env = KernelEnvelope { gaussian_rate: b / 8.0, exp_rate: sb / 16.0, core_radius, b, prefactor: 1.0, exp_prefactor: 1.0 };
    env.prefactor = shell.iter().map(|s| s.magnitude / env.gaussian(s.r)).fold(0.0, f64::max);
    env.exp_prefactor = shell.iter().map(|s| s.magnitude / env.exponential(s.r)).fold(0.0, f64::max);
    let slack = 1.0 + 1e-9;
    let gaussian_violations = outer.iter().filter(|s| s.magnitude > slack * env.gaussian(s.r)).count();
    let exp_violations = outer.iter().filter(|s| s.magnitude > slack * env.exponential(s.r)).count();
    Ok(KernelDecay { z: (z.re, z.im), samples, exp_rate: -exp_fit.slope, exp_fit, mixed_rates: (c[1], c[2]), envelope: env, gaussian_violations, exp_violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_z_near_landau_level() {
        let cfg = ModelConfig::default();
        assert!(matches!(kernel_decay_probe(c64::new(0.52, 0.0), &cfg), Err(Error::SingularResolvent { .. })));
        assert!(matches!(kernel_decay_probe(c64::new(1.0, 1.5), &cfg), Err(Error::SingularResolvent { .. })));
    }

    #[test]
    fn log_envelope_minimum() {
        let r = (2.0f64).sqrt();
        assert!((log_envelope(r, 1.0) - 1.0).abs() < 1e-15);
    }
}
