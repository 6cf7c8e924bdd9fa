use alloc::format;
use alloc::vec::Vec;
use faer::c64;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{EigenPair, SpectralBranch};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, Side};
use crate::operators::{AssembledOperator, CutoffSystem, Grid, Strip};

/// Masses <psi, J~_i psi> over the three strips.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideMass {
    pub left: f64,
    pub bulk: f64,
    pub right: f64,
}

impl SideMass {
    pub fn total(&self) -> f64 {
        self.left + self.bulk + self.right
    }

    pub fn of(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeClass {
    LeftEdge,
    RightEdge,
    Ambiguous,
}

impl EdgeClass {
    pub fn label(self) -> &'static str {
        match self {
            EdgeClass::LeftEdge => "left-edge",
            EdgeClass::RightEdge => "right-edge",
            EdgeClass::Ambiguous => "ambiguous",
        }
    }

    pub fn side(self) -> Option<Side> {
        match self {
            EdgeClass::LeftEdge => Some(Side::Left),
            EdgeClass::RightEdge => Some(Side::Right),
            EdgeClass::Ambiguous => None,
        }
    }
}

/// Why a state was not assigned to a side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmbiguityReason {
    SlowVelocity,
    BulkMass,
    SignMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeObservable {
    pub energy: f64,
    pub velocity: f64,
    pub mass: SideMass,
    pub class: EdgeClass,
    pub reason: Option<AmbiguityReason>,
}

/// Thresholds for `classify`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRule {
    /// |J| below this (in units of sqrt(B)) is ambiguous.
    pub min_speed: f64,
    pub max_bulk: f64,
}

impl Default for ClassifyRule {
    fn default() -> Self {
        Self { min_speed: 0.05, max_bulk: 0.5 }
    }
}

fn check_len(psi: &[c64], grid: &Grid) -> Result<()> {
    if psi.len() != grid.len() {
        return Err(Error::Input(format!("state has {} entries, grid {}x{} has {}", psi.len(), grid.nx, grid.ny, grid.len())));
    }
    Ok(())
}

/// J = <psi, v_y psi> with v_y discretized exactly as in the operator.
pub fn average_velocity(psi: &[c64], op: &AssembledOperator) -> Result<f64> {
    check_len(psi, &op.grid)?;
    let mut v = alloc::vec![c64::new(0.0, 0.0); psi.len()];
    op.apply_velocity(psi, &mut v);
    Ok(psi.iter().zip(&v).map(|(a, b)| (a.conj() * b).re).sum())
}

/// Same as `average_velocity`, with the state's grid checked against the operator's.
pub fn average_velocity_on(psi: &[c64], grid: &Grid, op: &AssembledOperator) -> Result<f64> {
    if !grid.same_shape(&op.grid) {
        return Err(Error::Input("state grid differs from operator grid".into()));
    }
    average_velocity(psi, op)
}

pub fn localization_profile(psi: &[c64], grid: &Grid, cutoffs: &CutoffSystem) -> Result<SideMass> {
    check_len(psi, grid)?;
    let mut m = [0.0; 3];
    for i in 0..grid.nx {
        let x = grid.x(i);
        let row: f64 = psi[i * grid.ny..(i + 1) * grid.ny].iter().map(|a| a.norm_sqr()).sum();
        for (s, slot) in Strip::ALL.iter().zip(m.iter_mut()) {
            *slot += cutoffs.sharp(*s, x) * row;
        }
    }
    Ok(SideMass { left: m[0], bulk: m[1], right: m[2] })
}

pub fn classify(velocity: f64, mass: &SideMass, b: f64, rule: &ClassifyRule) -> (EdgeClass, Option<AmbiguityReason>) {
    if mass.bulk > rule.max_bulk {
        return (EdgeClass::Ambiguous, Some(AmbiguityReason::BulkMass));
    }
    if velocity.abs() < rule.min_speed * b.sqrt() {
        return (EdgeClass::Ambiguous, Some(AmbiguityReason::SlowVelocity));
    }
    let by_mass = if mass.left >= mass.right { EdgeClass::LeftEdge } else { EdgeClass::RightEdge };
    let sign_ok = match by_mass {
        EdgeClass::LeftEdge => velocity < 0.0,
        _ => velocity > 0.0,
    };
    if sign_ok {
        (by_mass, None)
    } else {
        (EdgeClass::Ambiguous, Some(AmbiguityReason::SignMismatch))
    }
}

pub fn observe(pair: &EigenPair, op: &AssembledOperator, cutoffs: &CutoffSystem, rule: &ClassifyRule) -> Result<EdgeObservable> {
    let velocity = average_velocity(&pair.vector, op)?;
    let mass = localization_profile(&pair.vector, &op.grid, cutoffs)?;
    let (class, reason) = classify(velocity, &mass, op.b, rule);
    Ok(EdgeObservable { energy: pair.energy, velocity, mass, class, reason })
}

/// psi(x_i, y_j) = phi_i e^{2 pi i m y_j / L} / sqrt(ny): the 2D lift of a fiber state.
pub fn plane_wave_state(grid: &Grid, m: i64, phi: &[f64]) -> Result<Vec<c64>> {
    if phi.len() != grid.nx {
        return Err(Error::Input(format!("fiber state has {} nodes, grid has {}", phi.len(), grid.nx)));
    }
    let s = 1.0 / (grid.ny as f64).sqrt();
    let q = 2.0 * core::f64::consts::PI * m as f64 / grid.ny as f64;
    let mut out = Vec::with_capacity(grid.len());
    for p in phi {
        for j in 0..grid.ny {
            let t = q * j as f64;
            out.push(c64::new(t.cos(), t.sin()) * (p * s));
        }
    }
    Ok(out)
}

/// Terms of the single-wall velocity lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityBound {
    pub energy: f64,
    /// Branch point nearest the energy.
    pub m_star: i64,
    /// Point of A = [m* - a, m* + a] with the smallest |J|.
    pub m_bar: i64,
    pub a: usize,
    pub j_bar: f64,
    /// V0^2 [1/(B/2 - delta)^2 + sup_{A^c} (E_m - E)^{-2}]
    pub leakage: f64,
    /// 3 V0/(B/2 - delta) sqrt(2 (E + V0))
    pub correction: f64,
    pub raw: f64,
    pub value: f64,
}

pub const BOUND_NEIGHBORHOOD: usize = 3;

pub fn velocity_lower_bound(energy: f64, branch: &SpectralBranch, cfg: &ModelConfig) -> Result<VelocityBound> {
    velocity_lower_bound_with(energy, branch, cfg, BOUND_NEIGHBORHOOD)
}

pub fn velocity_lower_bound_with(energy: f64, branch: &SpectralBranch, cfg: &ModelConfig, a: usize) -> Result<VelocityBound> {
    let pts = &branch.points;
    let star = (0..pts.len())
        .min_by(|&i, &j| (pts[i].energy - energy).abs().total_cmp(&(pts[j].energy - energy).abs()))
        .ok_or_else(|| Error::Input("empty branch".into()))?;
    if star < a + 1 || star + a + 1 >= pts.len() {
        return Err(Error::Input(format!("branch does not cover m* +- {} around E = {energy}", a + 1)));
    }
    let bar = (star - a..=star + a).min_by(|&i, &j| pts[i].slope.abs().total_cmp(&pts[j].slope.abs())).unwrap_or(star);
    // a monotone branch is closest to E just outside A
    let outside = (pts[star - a - 1].energy - energy).abs().min((pts[star + a + 1].energy - energy).abs());
    let gap = 0.5 * cfg.b - cfg.delta;
    let leakage = cfg.v0 * cfg.v0 * (1.0 / (gap * gap) + 1.0 / (outside * outside));
    let correction = 3.0 * cfg.v0 / gap * (2.0 * (energy + cfg.v0)).max(0.0).sqrt();
    let j_bar = pts[bar].slope;
    let raw = j_bar.abs() * (1.0 - leakage) - correction;
    Ok(VelocityBound { energy, m_star: pts[star].m, m_bar: pts[bar].m, a, j_bar, leakage, correction, raw, value: raw.max(0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::BranchPoint;
    use crate::model::ModelConfig;
    use crate::operators::{assemble, Variant};
    use alloc::vec;

    fn line_branch(slope: f64) -> SpectralBranch {
        let points = (-10..=10).map(|m| BranchPoint { m, k: m as f64, energy: 1.0 + 0.01 * slope * m as f64, slope }).collect();
        SpectralBranch { side: Side::Right, n: 0, l: 16.0, flux: 0.0, points }
    }

    #[test]
    fn bound_without_disorder_is_branch_velocity() {
        let cfg = ModelConfig { v0: 0.0, ..Default::default() };
        let b = velocity_lower_bound(1.0, &line_branch(0.7), &cfg).unwrap();
        assert_eq!(b.value, 0.7);
        assert_eq!(b.correction, 0.0);
    }

    #[test]
    fn bound_correction_term() {
        let cfg = ModelConfig { v0: 0.02, delta: 0.2, b: 1.0, ..Default::default() };
        let b = velocity_lower_bound(1.0, &line_branch(0.7), &cfg).unwrap();
        let expect = 3.0 * (0.02 / 0.3) * 2.04f64.sqrt();
        assert!((b.correction - expect).abs() < 1e-14);
        assert!((b.correction - 0.2857).abs() < 1e-4);
    }

    #[test]
    fn bound_needs_coverage() {
        let cfg = ModelConfig::default();
        assert!(velocity_lower_bound(1.1, &line_branch(1.0), &cfg).is_err());
    }

    #[test]
    fn masses_of_left_supported_state() {
        let cfg = ModelConfig::default();
        let op = assemble(Variant::Clean(Side::Left), &cfg, None).unwrap();
        let cut = crate::operators::build_cutoffs(&cfg).unwrap();
        let g = &op.grid;
        let mut psi = vec![c64::new(0.0, 0.0); g.len()];
        let i = (0..g.nx).find(|&i| g.x(i) > -8.0).unwrap();
        psi[g.idx(i, 3)] = c64::new(0.6, 0.0);
        psi[g.idx(i, 4)] = c64::new(0.0, 0.8);
        let m = localization_profile(&psi, g, &cut).unwrap();
        assert_eq!((m.left, m.bulk, m.right), (1.0, 0.0, 0.0));
        assert!(average_velocity(&psi[1..], &op).is_err());
    }

    #[test]
    fn classification_rules() {
        let rule = ClassifyRule::default();
        let left = SideMass { left: 0.9, bulk: 0.1, right: 0.0 };
        assert_eq!(classify(-0.3, &left, 1.0, &rule).0, EdgeClass::LeftEdge);
        assert_eq!(classify(0.3, &left, 1.0, &rule).1, Some(AmbiguityReason::SignMismatch));
        assert_eq!(classify(-0.01, &left, 1.0, &rule).1, Some(AmbiguityReason::SlowVelocity));
        let bulk = SideMass { left: 0.2, bulk: 0.6, right: 0.2 };
        assert_eq!(classify(0.3, &bulk, 1.0, &rule).1, Some(AmbiguityReason::BulkMass));
    }
}
