use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{count_in, momentum, BranchSpec, Fiber};
use crate::error::{Error, Result};
use crate::model::{derive_seed, sample_disorder, ModelConfig, RegionName, RegionSpec, Side};
use crate::operators::{assemble_on, Grid, Variant};
use crate::stats::wilson;

/// Levels of the clean single-wall operator on the model grid near the windows, sorted.
pub fn clean_levels(side: Side, cfg: &ModelConfig, grid: &Grid) -> Result<Vec<f64>> {
    let spec = BranchSpec::lattice(cfg, grid);
    let (w, g) = (cfg.window(), cfg.gap_window());
    let lo = w.0.min(g.0) - 0.1 * cfg.b;
    let hi = w.1.max(g.1) + 0.1 * cfg.b;
    let mut e = Vec::new();
    for m in 0..grid.ny as i64 {
        let f = Fiber::new(side, momentum(m, cfg), cfg, &spec);
        for j in f.count_below(lo)..f.count_below(hi) {
            e.push(f.eigenvalue(j));
        }
    }
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Midpoint between consecutive clean levels closest to the window center.
pub fn wegner_energy(side: Side, cfg: &ModelConfig, grid: &Grid) -> Result<f64> {
    let levels = clean_levels(side, cfg, grid)?;
    let (lo, hi) = cfg.window();
    let center = 0.5 * (lo + hi);
    levels
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]))
        .filter(|m| *m > lo && *m < hi)
        .min_by(|a, b| (a - center).abs().total_cmp(&(b - center).abs()))
        .ok_or_else(|| Error::Input("no clean level gap inside the window".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WegnerRow {
    pub delta_bar: f64,
    pub hits: usize,
    pub n: usize,
    pub p_hat: f64,
    pub wilson: (f64, f64),
    /// dist(I, E_0m) for the clean level nearest E.
    pub distance: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WegnerReport {
    pub l: u32,
    pub side: Side,
    pub energy: f64,
    pub nearest_level: f64,
    pub n: usize,
    /// Realizations whose inertia counts failed; counted, never resampled.
    pub failures: usize,
    pub rows: Vec<WegnerRow>,
}

/// Checks E and every delta against the window and the clean levels; returns the nearest level.
pub fn wegner_setup(side: Side, cfg: &ModelConfig, grid: &Grid, energy: f64, deltas: &[f64]) -> Result<f64> {
    let (lo, hi) = cfg.window();
    let (glo, ghi) = cfg.gap_window();
    if !(energy > lo.max(glo) && energy < hi.min(ghi)) {
        return Err(Error::Precondition(format!("E = {energy} outside the target window")));
    }
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Input("half-widths must be positive".into()));
    }
    let levels = clean_levels(side, cfg, grid)?;
    let nearest = levels.iter().copied().min_by(|a, b| (a - energy).abs().total_cmp(&(b - energy).abs())).ok_or_else(|| Error::Input("no clean levels".into()))?;
    let dmax = deltas.iter().copied().fold(0.0, f64::max);
    if (nearest - energy).abs() <= dmax {
        return Err(Error::Precondition(format!("interval [{}, {}] contains the clean level {nearest}", energy - dmax, energy + dmax)));
    }
    Ok(nearest)
}

/// Seed of realization `index` under `master`.
pub fn realization_seed(master: u64, index: u64) -> u64 {
    derive_seed(master, index)
}

/// For one realization: whether dist(sigma(H_alpha), E) < delta, per delta.
pub fn wegner_sample(side: Side, cfg: &ModelConfig, grid: &Grid, energy: f64, deltas: &[f64], seed: u64) -> Result<Vec<bool>> {
    let region = RegionSpec::new(if side == Side::Left { RegionName::Left } else { RegionName::Right }, cfg);
    let field = sample_disorder(cfg, &region, seed)?;
    let op = assemble_on(Variant::Single(side), cfg, grid, Some(&field))?;
    let dmax = deltas.iter().copied().fold(0.0, f64::max);
    if count_in(&op, energy - dmax, energy + dmax)? == 0 {
        return Ok(alloc::vec![false; deltas.len()]);
    }
    deltas.iter().map(|d| Ok(count_in(&op, energy - d, energy + d)? > 0)).collect()
}

pub fn wegner_bound(cfg: &ModelConfig, delta_bar: f64, distance: f64) -> f64 {
    cfg.density.sup() * delta_bar * cfg.v0 * cfg.v0 * cfg.lf().powi(4) / (distance * distance)
}

/// Reduces per-realization outcomes (None for failed realizations) into the report.
pub fn wegner_report(side: Side, cfg: &ModelConfig, energy: f64, nearest: f64, deltas: &[f64], outcomes: &[Option<Vec<bool>>]) -> WegnerReport {
    let ok: Vec<&Vec<bool>> = outcomes.iter().flatten().collect();
    let n = ok.len();
    let rows = deltas
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let hits = ok.iter().filter(|o| o[i]).count();
            let w = wilson(hits, n, 1.96);
            let distance = (nearest - energy).abs() - d;
            let bound = wegner_bound(cfg, d, distance);
            WegnerRow { delta_bar: d, hits, n, p_hat: if n > 0 { hits as f64 / n as f64 } else { 0.0 }, wilson: w, distance, bound, pass: w.1 <= bound }
        })
        .collect();
    WegnerReport { l: cfg.l, side, energy, nearest_level: nearest, n, failures: outcomes.len() - n, rows }
}

/// Sequential campaign; realizations use `realization_seed(master, i)`.
pub fn run_wegner(cfg: &ModelConfig, energy: Option<f64>, deltas: &[f64], n: usize, side: Side, master: u64) -> Result<WegnerReport> {
    cfg.validate()?;
    let grid = Grid::for_model(cfg)?;
    let e = match energy {
        Some(e) => e,
        None => wegner_energy(side, cfg, &grid)?,
    };
    let nearest = wegner_setup(side, cfg, &grid, e, deltas)?;
    let outcomes: Vec<Option<Vec<bool>>> = (0..n as u64).map(|i| wegner_sample(side, cfg, &grid, e, deltas, realization_seed(master, i)).ok()).collect();
    Ok(wegner_report(side, cfg, e, nearest, deltas, &outcomes))
}
