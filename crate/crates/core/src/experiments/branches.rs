use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{branch_point, fiber_state, momentum, BranchPoint, BranchSpec, SpectralBranch};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, Side};
use crate::observables::{average_velocity, plane_wave_state};
use crate::operators::{assemble_on, Grid, Variant};

/// Guiding center (in magnetic lengths inside the sample) where a branch table stops.
pub const BULK_DEPTH: f64 = 4.0;
const MAX_POINTS: usize = 100_000;

fn m_at(gc: f64, cfg: &ModelConfig) -> f64 {
    (gc * cfg.b * cfg.lf() - cfg.flux) / (2.0 * core::f64::consts::PI)
}

/// Branch n of one wall from the bulk (guiding center `BULK_DEPTH` magnetic lengths inside
/// the wall) out to the first point above the gap window, sorted by m.
pub fn branch_table(side: Side, n: usize, cfg: &ModelConfig, spec: &BranchSpec) -> Result<SpectralBranch> {
    let s2 = 0.5 * cfg.sep();
    let depth = BULK_DEPTH * cfg.magnetic_length();
    let top = cfg.gap_window().1;
    let (start, step): (i64, i64) = match side {
        Side::Left => (m_at(-s2 + depth, cfg).ceil() as i64, -1),
        Side::Right => (m_at(s2 - depth, cfg).floor() as i64, 1),
    };
    let mut points = Vec::new();
    let mut m = start;
    loop {
        let k = momentum(m, cfg);
        let (energy, slope) = branch_point(side, n, k, cfg, spec);
        points.push(BranchPoint { m, k, energy, slope });
        if energy > top {
            break;
        }
        if points.len() >= MAX_POINTS {
            return Err(Error::Input("branch never leaves the gap window".into()));
        }
        m += step;
    }
    points.sort_by_key(|p| p.m);
    Ok(SpectralBranch { side, n, l: cfg.lf(), flux: cfg.flux, points })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    pub side: Side,
    pub l: u32,
    pub points: usize,
    pub monotone: bool,
    /// epsilon_0 with the guiding center at the sample center.
    pub bulk_energy: f64,
    pub bulk_error: f64,
    pub min_spacing: Option<f64>,
    /// L times the minimal spacing inside the gap window.
    pub scaled_spacing: Option<f64>,
    /// max |e_{m+1} - 2 e_m + e_{m-1}| inside the gap window.
    pub max_second_difference: f64,
    /// min over the table of epsilon_1 - epsilon_0 where epsilon_0 is in the gap window.
    pub level_gap: f64,
    pub n1_in_window: bool,
}

pub fn summarize_branch(branch: &SpectralBranch, cfg: &ModelConfig, spec: &BranchSpec) -> BranchSummary {
    let (lo, hi) = cfg.gap_window();
    let (bulk_energy, _) = branch_point(branch.side, 0, 0.0, cfg, spec);
    let min_spacing = branch.min_spacing(lo, hi);
    let inside = |e: f64| e > lo && e < hi;
    let pts = &branch.points;
    let max_second_difference =
        pts.windows(3).filter(|w| w.iter().all(|p| inside(p.energy))).map(|w| (w[2].energy - 2.0 * w[1].energy + w[0].energy).abs()).fold(0.0, f64::max);
    let mut level_gap = f64::INFINITY;
    let mut n1_in_window = false;
    for p in pts.iter().filter(|p| inside(p.energy)) {
        let (e1, _) = branch_point(branch.side, 1, p.k, cfg, spec);
        level_gap = level_gap.min(e1 - p.energy);
        n1_in_window |= inside(e1);
    }
    BranchSummary {
        side: branch.side,
        l: cfg.l,
        points: pts.len(),
        monotone: branch.is_strictly_monotone(),
        bulk_energy,
        bulk_error: (bulk_energy - 0.5 * cfg.b).abs(),
        min_spacing,
        scaled_spacing: min_spacing.map(|s| s * cfg.lf()),
        max_second_difference,
        level_gap,
        n1_in_window,
    }
}

/// Largest relative deviation of the values from their mean.
pub fn relative_spread(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::INFINITY;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max)
}

/// One branch eigenstate lifted to the 2D grid: velocity against the branch slope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HfRow {
    pub side: Side,
    pub m: i64,
    pub k: f64,
    pub energy: f64,
    pub slope: f64,
    pub velocity: f64,
    /// ||H psi - E psi|| of the lifted state for the clean single-wall operator.
    pub residual: f64,
    pub deviation: f64,
}

/// Adaptive fiber amplitudes placed on the x-nodes of the grid.
pub fn embed_fiber(grid: &Grid, x: &[f64], phi: &[f64]) -> Result<Vec<f64>> {
    let mut out = alloc::vec![0.0; grid.nx];
    for (xi, p) in x.iter().zip(phi) {
        let t = (xi - grid.x0) / grid.hx;
        let i = t.round();
        if (t - i).abs() > 1e-6 || i < 0.0 || i as usize >= grid.nx {
            return Err(Error::Input("fiber node off the grid".into()));
        }
        out[i as usize] = *p;
    }
    Ok(out)
}

/// Hellmann-Feynman check on every lattice edge-branch point in the gap window.
pub fn hellmann_feynman(side: Side, cfg: &ModelConfig, grid: &Grid) -> Result<Vec<HfRow>> {
    let spec = BranchSpec::lattice_adaptive(cfg, grid);
    let op = assemble_on(Variant::Clean(side), cfg, grid, None)?;
    let (lo, hi) = cfg.gap_window();
    let branch = branch_table(side, 0, cfg, &spec)?;
    let mut rows = Vec::new();
    for p in branch.within(lo, hi) {
        let (e, x, phi) = fiber_state(side, 0, p.k, cfg, &spec);
        let psi = plane_wave_state(grid, p.m, &embed_fiber(grid, &x, &phi)?)?;
        let velocity = average_velocity(&psi, &op)?;
        let residual = crate::linalg::residual(&op, &psi, e);
        rows.push(HfRow { side, m: p.m, k: p.k, energy: p.energy, slope: p.slope, velocity, residual, deviation: (velocity - p.slope).abs() });
    }
    if rows.is_empty() {
        return Err(Error::Input("no lattice branch point in the gap window".into()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_of_constant_is_zero() {
        assert_eq!(relative_spread(&[2.0, 2.0]), 0.0);
        assert!((relative_spread(&[1.0, 3.0]) - 0.5).abs() < 1e-15);
    }
}
