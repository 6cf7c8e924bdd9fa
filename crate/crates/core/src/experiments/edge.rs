use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use faer::c64;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{decay_fit, hypothesis_margin, DecayFit};
use crate::eigensolve::{polish, solve_branch_window, solve_window_with, BranchSpec, EigenPair, Projector, SolveOptions, SolverInfo, SpectralBranch};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::{sample_disorder, DisorderField, ModelConfig, RegionName, RegionSpec, Side};
use crate::observables::{observe, velocity_lower_bound_with, ClassifyRule, EdgeClass, EdgeObservable, VelocityBound};
use crate::operators::{assemble_on, build_cutoffs, AssembledOperator, Grid, Variant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeOptions {
    pub solve: SolveOptions,
    pub rule: ClassifyRule,
    pub polish_iterations: usize,
    /// Matching cap in units of the solver tolerance.
    pub cap_factor: f64,
    /// Eigenvalues closer than this form one cluster for projectors.
    pub cluster: f64,
    pub bound_neighborhood: usize,
}

impl Default for EdgeOptions {
    fn default() -> Self {
        Self { solve: SolveOptions::default(), rule: ClassifyRule::default(), polish_iterations: 3, cap_factor: 10.0, cluster: 1e-9, bound_neighborhood: 3 }
    }
}

impl EdgeOptions {
    pub fn cap(&self) -> f64 {
        self.cap_factor * self.solve.tol
    }
}

/// One eigenstate of a single-wall operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleState {
    pub observable: EdgeObservable,
    /// Mostly supported at the truncated far end of the x-domain.
    pub spurious: bool,
    pub bound: Option<VelocityBound>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub side: Side,
    pub full_energy: f64,
    pub single_energy: f64,
    pub raw_displacement: f64,
    /// |<phi, (H_omega - H_alpha) psi> / <phi, psi>|
    pub displacement: f64,
    pub velocity_full: f64,
    pub velocity_single: f64,
    pub velocity_displacement: f64,
    pub projector_distance: f64,
    pub rank_full: usize,
    pub rank_single: usize,
    pub full_class: EdgeClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unmatched {
    pub operator: String,
    pub energy: f64,
    pub nearest: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeTask {
    pub l: u32,
    /// None for the disorder-free run.
    pub seed: Option<u64>,
    pub h1_gap: f64,
    pub full: Vec<EdgeObservable>,
    pub left: Vec<SingleState>,
    pub right: Vec<SingleState>,
    pub matches: Vec<MatchedPair>,
    pub unmatched: Vec<Unmatched>,
    pub max_displacement: Option<f64>,
    pub max_raw_displacement: Option<f64>,
    pub max_velocity_displacement: Option<f64>,
    pub max_projector_distance: Option<f64>,
    pub solver: Vec<SolverInfo>,
}

impl EdgeTask {
    pub fn ambiguous(&self) -> usize {
        self.full.iter().filter(|o| o.class == EdgeClass::Ambiguous).count()
    }

    pub fn min_speed(&self) -> Option<f64> {
        self.full.iter().map(|o| o.velocity.abs()).fold(None, |a, v| Some(a.map_or(v, |a: f64| a.min(v))))
    }

    /// Non-spurious single-wall states whose |J| falls below a positive velocity bound.
    pub fn bound_violations(&self) -> usize {
        self.left.iter().chain(&self.right).filter(|s| !s.spurious).filter(|s| s.bound.is_some_and(|b| b.value > 0.0 && s.observable.velocity.abs() < b.value)).count()
    }

    /// Matched pairs whose H_omega state is not classified on the matched side.
    pub fn side_disagreements(&self) -> usize {
        self.matches.iter().filter(|m| m.full_class.side() != Some(m.side)).count()
    }
}

/// Disorder of the whole sample for a seed, or the zero field.
pub fn edge_field(cfg: &ModelConfig, seed: Option<u64>) -> Result<DisorderField> {
    let full = RegionSpec::new(RegionName::Full, cfg);
    match seed {
        Some(s) => sample_disorder(cfg, &full, s),
        None => Ok(DisorderField::zero(cfg, &full)),
    }
}

fn cluster_frame(pairs: &[EigenPair], e: f64, tol: f64) -> Projector {
    let sel: Vec<&EigenPair> = pairs.iter().filter(|p| (p.energy - e).abs() <= tol).collect();
    let vecs: Vec<&[c64]> = sel.iter().map(|p| p.vector.as_slice()).collect();
    Projector::from_vectors(&vecs, sel.iter().map(|p| p.energy).collect())
}

struct SingleSolve {
    side: Side,
    op: AssembledOperator,
    pairs: Vec<EigenPair>,
    states: Vec<SingleState>,
    info: SolverInfo,
}

fn solve_single(side: Side, cfg: &ModelConfig, grid: &Grid, field: &DisorderField, opts: &EdgeOptions, branch: Option<&SpectralBranch>) -> Result<SingleSolve> {
    let op = assemble_on(Variant::Single(side), cfg, grid, Some(field))?;
    let spec = solve_window_with(&op, cfg.window(), &opts.solve)?;
    let cut = build_cutoffs(cfg)?;
    let mut states = Vec::with_capacity(spec.len());
    for p in &spec.pairs {
        let observable = observe(p, &op, &cut, &opts.rule)?;
        let spurious = observable.mass.of(side.opposite()) > 0.5;
        let bound = match (spurious, branch) {
            (false, Some(b)) => Some(velocity_lower_bound_with(p.energy, b, cfg, opts.bound_neighborhood)?),
            _ => None,
        };
        states.push(SingleState { observable, spurious, bound });
    }
    Ok(SingleSolve { side, op, pairs: spec.pairs, states, info: spec.info })
}

/// Branch used by the velocity bound; None when V0 = 0 makes the bound trivial or coverage fails.
fn bound_branch(side: Side, cfg: &ModelConfig, grid: &Grid, a: usize) -> Option<SpectralBranch> {
    solve_branch_window(side, 0, cfg, &BranchSpec::lattice_adaptive(cfg, grid), cfg.gap_window(), a + 2).ok()
}

/// Spectra of H_omega, H_l, H_r in the window, their observables and the matching.
pub fn edge_task(cfg: &ModelConfig, seed: Option<u64>, opts: &EdgeOptions) -> Result<EdgeTask> {
    cfg.validate()?;
    cfg.check_geometry()?;
    let cap = opts.cap();
    let h1 = hypothesis_margin(cfg)?;
    if h1.min_gap <= cap {
        return Err(Error::Hypothesis1 { left: h1.left_energy, right: h1.right_energy, tolerance: cap });
    }
    let grid = Grid::for_model(cfg)?;
    let field = edge_field(cfg, seed)?;
    let cut = build_cutoffs(cfg)?;
    let full_op = assemble_on(Variant::Full, cfg, &grid, Some(&field))?;
    let full_spec = solve_window_with(&full_op, cfg.window(), &opts.solve)?;
    let full: Vec<EdgeObservable> = full_spec.pairs.iter().map(|p| observe(p, &full_op, &cut, &opts.rule)).collect::<Result<_>>()?;

    let mut singles = Vec::new();
    for side in [Side::Left, Side::Right] {
        let br = bound_branch(side, cfg, &grid, opts.bound_neighborhood);
        singles.push(solve_single(side, cfg, &grid, &field, opts, br.as_ref())?);
    }
    // candidates: (single index, pair index)
    let cands: Vec<(usize, usize)> =
        (0..2).flat_map(|s| singles[s].states.iter().enumerate().filter(|(_, st)| !st.spurious).map(move |(j, _)| (s, j))).collect();
    for &(s, j) in cands.iter().filter(|c| c.0 == 0) {
        for &(t, k) in cands.iter().filter(|c| c.0 == 1) {
            let (a, b) = (singles[s].pairs[j].energy, singles[t].pairs[k].energy);
            if (a - b).abs() <= cap {
                return Err(Error::Hypothesis1 { left: a, right: b, tolerance: cap });
            }
        }
    }

    let polished_full: Vec<EigenPair> = full_spec.pairs.iter().map(|p| polish(&full_op, p, opts.polish_iterations)).collect::<Result<_>>()?;
    let mut polished_single: BTreeMap<(usize, usize), EigenPair> = BTreeMap::new();
    for &(s, j) in &cands {
        polished_single.insert((s, j), polish(&singles[s].op, &singles[s].pairs[j], opts.polish_iterations)?);
    }

    let mut edges: Vec<(f64, f64, usize, (usize, usize))> = Vec::new();
    for (i, p) in polished_full.iter().enumerate() {
        for (&key, q) in &polished_single {
            let d = (p.energy - q.energy).abs();
            if d <= cap {
                edges.push((d, -dot(&q.vector, &p.vector).norm(), i, key));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
    let mut used_full = alloc::vec![false; polished_full.len()];
    let mut used_single: BTreeMap<(usize, usize), bool> = BTreeMap::new();
    let mut matches = Vec::new();
    let full_pairs = polished_full.clone();
    for (d, _, i, key) in edges {
        if used_full[i] || used_single.contains_key(&key) {
            continue;
        }
        used_full[i] = true;
        used_single.insert(key, true);
        let single = &singles[key.0];
        let p = &polished_full[i];
        let q = &polished_single[&key];
        let num: c64 = q.vector.iter().zip(&p.vector).zip(full_op.potential.iter().zip(&single.op.potential)).map(|((a, b), (w1, w2))| a.conj() * b * (w1 - w2)).sum();
        let den = dot(&q.vector, &p.vector);
        let displacement = if den.norm() > 0.0 { (num / den).norm() } else { f64::INFINITY };
        let velocity_full = crate::observables::average_velocity(&p.vector, &full_op)?;
        let velocity_single = crate::observables::average_velocity(&q.vector, &single.op)?;
        let same_side: Vec<EigenPair> = polished_single.iter().filter(|(k, _)| k.0 == key.0).map(|(_, v)| v.clone()).collect();
        let pf = cluster_frame(&full_pairs, p.energy, opts.cluster);
        let ps = cluster_frame(&same_side, q.energy, opts.cluster);
        matches.push(MatchedPair {
            side: single.side,
            full_energy: p.energy,
            single_energy: q.energy,
            raw_displacement: d,
            displacement,
            velocity_full,
            velocity_single,
            velocity_displacement: (velocity_full - velocity_single).abs(),
            projector_distance: pf.distance(&ps),
            rank_full: pf.rank(),
            rank_single: ps.rank(),
            full_class: full[i].class,
        });
    }
    matches.sort_by(|a, b| a.full_energy.total_cmp(&b.full_energy));

    let mut unmatched = Vec::new();
    let nearest = |e: f64, others: &mut dyn Iterator<Item = f64>| others.map(|o| (o - e).abs()).fold(f64::INFINITY, f64::min);
    for (_, p) in polished_full.iter().enumerate().filter(|(i, _)| !used_full[*i]) {
        unmatched.push(Unmatched { operator: "H_omega".into(), energy: p.energy, nearest: nearest(p.energy, &mut polished_single.values().map(|q| q.energy)) });
    }
    for (key, q) in polished_single.iter().filter(|(k, _)| !used_single.contains_key(k)) {
        unmatched.push(Unmatched {
            operator: Variant::Single(singles[key.0].side).label().into(),
            energy: q.energy,
            nearest: nearest(q.energy, &mut polished_full.iter().map(|p| p.energy)),
        });
    }

    let max_of = |f: &dyn Fn(&MatchedPair) -> f64| matches.iter().map(f).fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.max(v))));
    let (left, right) = {
        let mut it = singles.into_iter();
        let l = it.next().unwrap();
        let r = it.next().unwrap();
        (l, r)
    };
    Ok(EdgeTask {
        l: cfg.l,
        seed,
        h1_gap: h1.min_gap,
        max_displacement: max_of(&|m| m.displacement),
        max_raw_displacement: max_of(&|m| m.raw_displacement),
        max_velocity_displacement: max_of(&|m| m.velocity_displacement),
        max_projector_distance: max_of(&|m| m.projector_distance),
        full,
        solver: alloc::vec![full_spec.info, left.info, right.info],
        left: left.states,
        right: right.states,
        matches,
        unmatched,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub l: u32,
    pub tasks: usize,
    pub states: usize,
    pub matched: usize,
    pub unmatched: usize,
    pub ambiguous: usize,
    pub min_speed: Option<f64>,
    pub max_displacement: Option<f64>,
    pub max_velocity_displacement: Option<f64>,
    pub max_projector_distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub tasks: Vec<EdgeTask>,
    pub sizes: Vec<SizeSummary>,
    pub displacement_fit: Option<DecayFit>,
    pub velocity_fit: Option<DecayFit>,
    pub projector_fit: Option<DecayFit>,
    /// Seeds whose max displacement strictly decreases through the sizes.
    pub monotone_seeds: usize,
    pub seeds: usize,
    pub j_min: Option<f64>,
    pub ambiguous: usize,
    pub side_disagreements: usize,
    pub bound_violations: usize,
    pub unmatched: usize,
    pub rank_mismatches: usize,
}

fn opt_max(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn opt_min(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Reduces edge tasks (any order) into the report; tasks are sorted by (L, seed).
pub fn edge_report(mut tasks: Vec<EdgeTask>) -> MatchReport {
    tasks.sort_by_key(|t| (t.l, t.seed));
    let mut sizes: Vec<SizeSummary> = Vec::new();
    for t in &tasks {
        if sizes.last().map_or(true, |s| s.l != t.l) {
            sizes.push(SizeSummary {
                l: t.l,
                tasks: 0,
                states: 0,
                matched: 0,
                unmatched: 0,
                ambiguous: 0,
                min_speed: None,
                max_displacement: None,
                max_velocity_displacement: None,
                max_projector_distance: None,
            });
        }
        let s = sizes.last_mut().unwrap();
        s.tasks += 1;
        s.states += t.full.len();
        s.matched += t.matches.len();
        s.unmatched += t.unmatched.len();
        s.ambiguous += t.ambiguous();
        s.min_speed = opt_min(s.min_speed, t.min_speed());
        s.max_displacement = opt_max(s.max_displacement, t.max_displacement);
        s.max_velocity_displacement = opt_max(s.max_velocity_displacement, t.max_velocity_displacement);
        s.max_projector_distance = opt_max(s.max_projector_distance, t.max_projector_distance);
    }
    let series = |f: &dyn Fn(&EdgeTask) -> Option<f64>| {
        let pts: Vec<(u32, f64)> = tasks.iter().filter_map(|t| f(t).map(|v| (t.l, v))).collect();
        let (l, v): (Vec<u32>, Vec<f64>) = pts.into_iter().unzip();
        decay_fit("", &l, &v).ok()
    };
    let mut displacement_fit = series(&|t| t.max_displacement);
    let mut velocity_fit = series(&|t| t.max_velocity_displacement);
    let mut projector_fit = series(&|t| t.max_projector_distance);
    for (f, name) in [(&mut displacement_fit, "displacement"), (&mut velocity_fit, "velocity_displacement"), (&mut projector_fit, "projector_distance")] {
        if let Some(f) = f.as_mut() {
            f.label = name.into();
        }
    }
    let mut by_seed: BTreeMap<Option<u64>, Vec<(u32, Option<f64>)>> = BTreeMap::new();
    for t in &tasks {
        by_seed.entry(t.seed).or_default().push((t.l, t.max_displacement));
    }
    let monotone_seeds = by_seed
        .values()
        .filter(|v| v.iter().all(|x| x.1.is_some()) && v.windows(2).all(|w| w[1].1.unwrap() < w[0].1.unwrap()))
        .count();
    MatchReport {
        j_min: sizes.iter().fold(None, |a, s| opt_min(a, s.min_speed)),
        ambiguous: tasks.iter().map(|t| t.ambiguous()).sum(),
        side_disagreements: tasks.iter().map(|t| t.side_disagreements()).sum(),
        bound_violations: tasks.iter().map(|t| t.bound_violations()).sum(),
        unmatched: tasks.iter().map(|t| t.unmatched.len()).sum(),
        rank_mismatches: tasks.iter().flat_map(|t| &t.matches).filter(|m| m.projector_distance < 1.0 && m.rank_full != m.rank_single).count(),
        seeds: by_seed.len(),
        monotone_seeds,
        sizes,
        displacement_fit,
        velocity_fit,
        projector_fit,
        tasks,
    }
}
