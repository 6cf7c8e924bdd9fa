use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{solve_branch_window, BranchSpec, SpectralBranch};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, Side};
use crate::operators::Grid;

/// Distance between the clean left and right spectra inside the gap window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct H1Margin {
    pub min_gap: f64,
    /// L times the gap (the d0 of the non-degeneracy hypothesis).
    pub scaled: f64,
    pub left_energy: f64,
    pub right_energy: f64,
}

fn window_energies(b: &SpectralBranch, lo: f64, hi: f64) -> Vec<f64> {
    b.within(lo, hi).map(|p| p.energy).collect()
}

fn set_gap(a: &[f64], b: &[f64]) -> Option<(f64, f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    for &x in a {
        for &y in b {
            let d = (x - y).abs();
            if best.map_or(true, |b| d < b.0) {
                best = Some((d, x, y));
            }
        }
    }
    best
}

pub fn margin_from_branches(cfg: &ModelConfig, left: &SpectralBranch, right: &SpectralBranch) -> Result<H1Margin> {
    let (lo, hi) = cfg.gap_window();
    let (d, l, r) = set_gap(&window_energies(left, lo, hi), &window_energies(right, lo, hi)).ok_or_else(|| Error::Input("a clean branch has no level in the gap window".into()))?;
    Ok(H1Margin { min_gap: d, scaled: d * cfg.lf(), left_energy: l, right_energy: r })
}

/// Clean-wall margin on the lattice fibers of the model grid.
pub fn hypothesis_margin(cfg: &ModelConfig) -> Result<H1Margin> {
    let grid = Grid::for_model(cfg)?;
    let spec = BranchSpec::lattice_adaptive(cfg, &grid);
    let w = cfg.gap_window();
    let left = solve_branch_window(Side::Left, 0, cfg, &spec, w, 1)?;
    let right = solve_branch_window(Side::Right, 0, cfg, &spec, w, 1)?;
    margin_from_branches(cfg, &left, &right)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxRow {
    pub phi: f64,
    /// min_m |eps_l((-2 pi m + Phi)/L) - eps_r((2 pi m + Phi)/L)| over levels in the gap window.
    pub same_m_gap: f64,
    /// Same with eps_l taken at -m - 1.
    pub shifted_gap: f64,
    /// Distance between the two level sets.
    pub set_gap: f64,
    pub scaled_same_m: f64,
    pub scaled_shifted: f64,
    pub scaled_set: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub l: u32,
    pub rows: Vec<FluxRow>,
    /// Flux maximizing L times the set gap.
    pub phi_star: f64,
}

fn paired_gap(left: &SpectralBranch, right: &SpectralBranch, shift: i64, lo: f64, hi: f64) -> f64 {
    let inside = |e: f64| e > lo && e < hi;
    let mut best = f64::INFINITY;
    for r in right.points.iter().filter(|p| inside(p.energy)) {
        if let Some(l) = left.points.iter().find(|p| p.m == -r.m - shift) {
            if inside(l.energy) {
                best = best.min((l.energy - r.energy).abs());
            }
        }
    }
    best
}

fn symmetric(cfg: &ModelConfig) -> Result<()> {
    if cfg.wall_left != cfg.wall_right {
        return Err(Error::Precondition("flux sweep needs symmetric walls".into()));
    }
    Ok(())
}

fn flux_branches(cfg: &ModelConfig, spec: &BranchSpec) -> Result<(SpectralBranch, SpectralBranch)> {
    let w = cfg.gap_window();
    Ok((solve_branch_window(Side::Left, 0, cfg, spec, w, 2)?, solve_branch_window(Side::Right, 0, cfg, spec, w, 2)?))
}

pub fn flux_row(cfg: &ModelConfig, phi: f64, spec: &BranchSpec) -> Result<FluxRow> {
    symmetric(cfg)?;
    let c = ModelConfig { flux: phi, ..cfg.clone() };
    let (left, right) = flux_branches(&c, spec)?;
    let (lo, hi) = c.gap_window();
    let same_m_gap = paired_gap(&left, &right, 0, lo, hi);
    let shifted_gap = paired_gap(&left, &right, 1, lo, hi);
    let set_gap = set_gap(&window_energies(&left, lo, hi), &window_energies(&right, lo, hi)).map_or(f64::INFINITY, |g| g.0);
    let l = c.lf();
    Ok(FluxRow { phi, same_m_gap, shifted_gap, set_gap, scaled_same_m: l * same_m_gap, scaled_shifted: l * shifted_gap, scaled_set: l * set_gap })
}

pub fn run_flux_sweep(cfg: &ModelConfig, phis: &[f64]) -> Result<FluxReport> {
    symmetric(cfg)?;
    let spec = BranchSpec::continuum(cfg);
    let rows: Vec<FluxRow> = phis.iter().map(|&p| flux_row(cfg, p, &spec)).collect::<Result<_>>()?;
    let phi_star = rows.iter().filter(|r| r.scaled_set.is_finite()).max_by(|a, b| a.scaled_set.total_cmp(&b.scaled_set)).map_or(0.0, |r| r.phi);
    Ok(FluxReport { l: cfg.l, rows, phi_star })
}

/// Largest distance from a level of one flux to the nearest level of the other, per side,
/// over levels inside the gap window shrunk by `guard`.
pub fn flux_period_defect(cfg: &ModelConfig, phi_a: f64, phi_b: f64, guard: f64) -> Result<f64> {
    let spec = BranchSpec::continuum(cfg);
    let a = flux_branches(&ModelConfig { flux: phi_a, ..cfg.clone() }, &spec)?;
    let b = flux_branches(&ModelConfig { flux: phi_b, ..cfg.clone() }, &spec)?;
    let (lo, hi) = cfg.gap_window();
    let mut worst: f64 = 0.0;
    for (x, y) in [(&a.0, &b.0), (&a.1, &b.1), (&b.0, &a.0), (&b.1, &a.1)] {
        for p in x.within(lo + guard, hi - guard) {
            let d = y.points.iter().map(|q| (q.energy - p.energy).abs()).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    Ok(worst)
}
