use alloc::string::{String, ToString};
use alloc::vec::Vec;
use faer::{c64, Mat};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{decay_fit, edge_field, DecayFit};
use crate::error::Result;
use crate::linalg::{norm, ResolventLu};
use crate::model::ModelConfig;
use crate::operators::{assemble_kappa, assemble_on, build_cutoffs, Grid, KappaOperator, Variant};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoupleOptions {
    pub rtol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for DecoupleOptions {
    fn default() -> Self {
        Self { rtol: 1e-6, max_iter: 500, seed: 0x6b61 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplePoint {
    pub l: u32,
    pub separation: u32,
    pub seed: Option<u64>,
    pub z: (f64, f64),
    pub norm: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub skipped: Option<String>,
}

/// ||K(z)|| for one size, separation and disorder seed; precondition failures become skips.
pub fn decouple_task(cfg: &ModelConfig, z: c64, seed: Option<u64>, opts: &DecoupleOptions) -> DecouplePoint {
    let mut p = DecouplePoint { l: cfg.l, separation: cfg.sep() as u32, seed, z: (z.re, z.im), norm: None, iterations: 0, converged: false, skipped: None };
    let built = (|| -> Result<KappaOperator> {
        cfg.validate()?;
        cfg.check_geometry()?;
        let grid = Grid::for_model(cfg)?;
        let field = edge_field(cfg, seed)?;
        let cut = build_cutoffs(cfg)?;
        assemble_kappa(z, cfg, &grid, &field, &cut)
    })();
    match built {
        Ok(k) => {
            let n = k.norm(opts.rtol, opts.max_iter, opts.seed);
            p.norm = Some(n.value);
            p.iterations = n.iterations;
            p.converged = n.converged;
        }
        Err(e) => p.skipped = Some(e.to_string()),
    }
    p
}

/// Fit of ln ||K|| against sqrt(L) over the points at z.
pub fn decouple_fit(points: &[DecouplePoint], z: (f64, f64)) -> Result<DecayFit> {
    let sel: Vec<&DecouplePoint> = points.iter().filter(|p| p.z == z && p.norm.is_some()).collect();
    let sizes: Vec<u32> = sel.iter().map(|p| p.l).collect();
    let vals: Vec<f64> = sel.iter().map(|p| p.norm.unwrap_or(0.0)).collect();
    let mut f = decay_fit("kappa_norm", &sizes, &vals)?;
    f.label = alloc::format!("kappa_norm z={}{:+}i", z.0, z.1);
    Ok(f)
}

/// Relative defect of (sum_i J_i R_i J~_i) x = R(z) (1 - K(z)) x for a random x.
pub fn resolvent_identity_defect(cfg: &ModelConfig, z: c64, seed: Option<u64>, probe: u64) -> Result<f64> {
    let grid = Grid::for_model(cfg)?;
    let field = edge_field(cfg, seed)?;
    let cut = build_cutoffs(cfg)?;
    let k = assemble_kappa(z, cfg, &grid, &field, &cut)?;
    let x = crate::operators::gaussian_vector(grid.len(), probe);
    let lhs = k.glue(&x);
    let kx = k.apply(&x);
    let full = assemble_on(Variant::Full, cfg, &grid, Some(&field))?;
    let lu = ResolventLu::new(&full, z)?;
    let mut rhs = Mat::<c64>::from_fn(grid.len(), 1, |i, _| x[i] - kx[i]);
    lu.solve_in_place(rhs.as_mut());
    let diff: Vec<c64> = (0..grid.len()).map(|i| lhs[i] - rhs[(i, 0)]).collect();
    Ok(norm(&diff) / norm(&lhs))
}
