//! Campaign drivers over (L, seed, z) task grids and the properties checked on their results.
//! Tasks run on a rayon pool; results come back in task order.

use std::f64::consts::PI;

use edgelab_core::eigensolve::{count_in, BranchSpec, SpectralBranch};
use edgelab_core::experiments::*;
use edgelab_core::model::{derive_seed, ModelConfig, Side};
use edgelab_core::observables::{kernel_decay_probe, landau_reference, KernelDecay};
use edgelab_core::operators::Grid;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::Property;

pub const HF_TOL: f64 = 1e-4;
pub const SPREAD_TOL: f64 = 0.3;
pub const BULK_TOL: f64 = 1e-3;
pub const MONOTONE_FRACTION: f64 = 0.9;
/// Projector distance accepted as the solver floor in the clean limit.
pub const PROJECTOR_FLOOR: f64 = 1e-6;
/// Branch coincidence and period tolerance of the flux sweep.
pub const FLUX_TOL: f64 = 1e-8;
pub const LIFT_FACTOR: f64 = 10.0;
pub const LANDAU_REL: f64 = 0.01;

pub fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool")
}

/// Disorder seeds of realizations 0..count under `master`.
pub fn realization_seeds(master: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| derive_seed(master, i)).collect()
}

fn prop(name: &str, pass: bool, detail: String) -> Property {
    Property::new(name, pass, detail)
}

#[derive(Clone, Debug, Serialize)]
pub struct LandauCheck {
    pub flux_quanta: usize,
    pub below_first: usize,
    pub first: usize,
    pub between: usize,
    pub second: usize,
    pub in_window: usize,
}

/// Eigenvalue counts of the free torus operator around 0.5 B and 1.5 B (relative width 1%).
pub fn landau_check(model: &ModelConfig) -> edgelab_core::Result<LandauCheck> {
    let op = landau_reference(model)?;
    let b = model.b;
    let (a0, a1) = (0.5 * b * (1.0 - LANDAU_REL), 0.5 * b * (1.0 + LANDAU_REL));
    let (b0, b1) = (1.5 * b * (1.0 - LANDAU_REL), 1.5 * b * (1.0 + LANDAU_REL));
    let g = &op.grid;
    let w = model.window();
    Ok(LandauCheck {
        flux_quanta: g.ny * (g.lx() * g.hy * b / (2.0 * PI)).round() as usize,
        below_first: count_in(&op, -1.0, a0)?,
        first: count_in(&op, a0, a1)?,
        between: count_in(&op, a1, b0)?,
        second: count_in(&op, b0, b1)?,
        in_window: count_in(&op, w.0, w.1)?,
    })
}

pub fn landau_properties(c: &LandauCheck) -> Vec<Property> {
    let clusters = c.below_first == 0 && c.between == 0 && c.first == c.flux_quanta && c.second == c.flux_quanta && c.first > 0;
    vec![
        prop("landau-clusters", clusters, format!("{c:?}")),
        prop("landau-window-empty", c.in_window == 0, format!("{} eigenvalues in the window", c.in_window)),
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchRun {
    pub side: Side,
    pub l: u32,
    pub branch: SpectralBranch,
    pub summary: BranchSummary,
    pub hf: Option<Vec<HfRow>>,
}

pub fn branch_run(model: &ModelConfig, side: Side, n: usize, l: u32, hf: bool) -> edgelab_core::Result<BranchRun> {
    let cfg = model.with_l(l);
    let spec = BranchSpec::continuum(&cfg);
    let branch = branch_table(side, n, &cfg, &spec)?;
    let summary = summarize_branch(&branch, &cfg, &spec);
    let hf = if hf { Some(hellmann_feynman(side, &cfg, &Grid::for_model(&cfg)?)?) } else { None };
    Ok(BranchRun { side, l, branch, summary, hf })
}

pub fn branch_campaign(model: &ModelConfig, sides: &[Side], n: usize, sizes: &[u32], hf: bool, pool: &rayon::ThreadPool) -> edgelab_core::Result<Vec<BranchRun>> {
    let tasks: Vec<(Side, u32)> = sides.iter().flat_map(|&s| sizes.iter().map(move |&l| (s, l))).collect();
    pool.install(|| tasks.par_iter().map(|&(s, l)| branch_run(model, s, n, l, hf)).collect())
}

/// Left branches decrease in k, right branches increase.
pub fn oriented_monotone(b: &SpectralBranch) -> bool {
    b.points.windows(2).all(|w| match b.side {
        Side::Left => w[1].energy < w[0].energy,
        Side::Right => w[1].energy > w[0].energy,
    })
}

pub fn branch_properties(runs: &[BranchRun], n: usize) -> Vec<Property> {
    let mut out = Vec::new();
    let bad: Vec<String> = runs.iter().filter(|r| !oriented_monotone(&r.branch)).map(|r| format!("{:?} L={}", r.side, r.l)).collect();
    out.push(prop("branch-monotone", bad.is_empty(), if bad.is_empty() { format!("{} tables", runs.len()) } else { bad.join(" ") }));
    if n == 0 {
        let worst = runs.iter().map(|r| r.summary.bulk_error).fold(0.0, f64::max);
        out.push(prop("branch-bulk-limit", worst <= BULK_TOL, format!("max |e - B/2| = {worst:.3e}")));
        for side in [Side::Left, Side::Right] {
            let scaled: Vec<Option<f64>> = runs.iter().filter(|r| r.side == side).map(|r| r.summary.scaled_spacing).collect();
            if scaled.len() < 2 {
                continue;
            }
            let vals: Vec<f64> = scaled.iter().flatten().copied().collect();
            let spread = relative_spread(&vals);
            let pass = vals.len() == scaled.len() && vals.iter().all(|v| *v > 0.0) && spread <= SPREAD_TOL;
            let name = if side == Side::Left { "spacing-stability-left" } else { "spacing-stability-right" };
            out.push(prop(name, pass, format!("L*min spacing {vals:.4?}, spread {spread:.3}")));
        }
    }
    if runs.iter().any(|r| r.hf.is_some()) {
        let rows: Vec<&HfRow> = runs.iter().flat_map(|r| r.hf.iter().flatten()).collect();
        let worst = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
        out.push(prop("hellmann-feynman", !rows.is_empty() && worst <= HF_TOL, format!("{} states, max |J - de/dk| = {worst:.3e}", rows.len())));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskFailure {
    pub l: u32,
    pub seed: Option<u64>,
    pub error: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeCampaign {
    pub report: MatchReport,
    pub failures: Vec<TaskFailure>,
    pub clean: bool,
}

pub fn edge_campaign(model: &ModelConfig, opts: &EdgeOptions, sizes: &[u32], seeds: &[Option<u64>], pool: &rayon::ThreadPool) -> EdgeCampaign {
    let tasks: Vec<(u32, Option<u64>)> = sizes.iter().flat_map(|&l| seeds.iter().map(move |&s| (l, s))).collect();
    let results: Vec<(u32, Option<u64>, edgelab_core::Result<EdgeTask>)> =
        pool.install(|| tasks.par_iter().map(|&(l, s)| (l, s, edge_task(&model.with_l(l), s, opts))).collect());
    let mut done = Vec::new();
    let mut failures = Vec::new();
    for (l, seed, r) in results {
        match r {
            Ok(t) => done.push(t),
            Err(e) => failures.push(TaskFailure { l, seed, error: e.to_string() }),
        }
    }
    EdgeCampaign { report: edge_report(done), failures, clean: seeds.iter().all(|s| s.is_none()) }
}

fn failure_detail(f: &[TaskFailure]) -> String {
    match f.first() {
        None => "0 failed tasks".into(),
        Some(t) => format!("{} failed tasks, first L={} seed={:?}: {}", f.len(), t.l, t.seed, t.error),
    }
}

fn distinct_sizes(r: &MatchReport) -> usize {
    r.sizes.len()
}

pub fn edge_properties(c: &EdgeCampaign) -> Vec<Property> {
    let r = &c.report;
    let mut out = vec![
        prop("edge-tasks", c.failures.is_empty(), failure_detail(&c.failures)),
        prop("edge-ambiguous", r.ambiguous == 0, format!("{} ambiguous states", r.ambiguous)),
        prop("edge-side-sign", r.side_disagreements == 0, format!("{} matched pairs with the wrong side", r.side_disagreements)),
        prop("edge-speed", r.j_min.is_some_and(|j| j > 0.0), format!("min |J| = {:?}", r.j_min)),
        prop("edge-coverage", r.unmatched == 0, format!("{} unmatched states", r.unmatched)),
        prop("velocity-bound", r.bound_violations == 0, format!("{} single-wall states below the bound", r.bound_violations)),
    ];
    if !c.clean && distinct_sizes(r) >= 3 {
        let need = (MONOTONE_FRACTION * r.seeds as f64).ceil() as usize;
        out.push(prop("displacement-monotone", r.monotone_seeds >= need, format!("{}/{} seeds decrease through every size", r.monotone_seeds, r.seeds)));
        let f = r.displacement_fit.as_ref();
        out.push(prop("displacement-slope", f.is_some_and(|f| f.slope_negative), f.map_or("no fit".into(), |f| format!("slope {:.4} CI {:.4?}", f.fit.slope, f.fit.slope_ci))));
    }
    out
}

pub fn projector_properties(c: &EdgeCampaign) -> Vec<Property> {
    let r = &c.report;
    let mut out = vec![
        prop("projector-tasks", c.failures.is_empty(), failure_detail(&c.failures)),
        prop("projector-rank", r.rank_mismatches == 0, format!("{} matched pairs with unequal ranks", r.rank_mismatches)),
    ];
    if c.clean {
        let worst = r.sizes.iter().filter_map(|s| s.max_projector_distance).fold(0.0, f64::max);
        let any = r.sizes.iter().any(|s| s.matched > 0);
        out.push(prop("projector-floor", any && worst <= PROJECTOR_FLOOR, format!("max ||P - P_alpha|| = {worst:.3e}")));
    } else if distinct_sizes(r) >= 3 {
        let f = r.projector_fit.as_ref();
        out.push(prop("projector-slope", f.is_some_and(|f| f.slope_negative), f.map_or("no fit".into(), |f| format!("slope {:.4} CI {:.4?}", f.fit.slope, f.fit.slope_ci))));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct WegnerCampaign {
    pub report: WegnerReport,
    /// (seed, per-delta hit or None for a failed realization)
    pub samples: Vec<(u64, Option<Vec<bool>>)>,
}

pub fn wegner_campaign(model: &ModelConfig, side: Side, energy: Option<f64>, deltas: &[f64], n: usize, master: u64, pool: &rayon::ThreadPool) -> edgelab_core::Result<WegnerCampaign> {
    model.validate()?;
    let grid = Grid::for_model(model)?;
    let e = match energy {
        Some(e) => e,
        None => wegner_energy(side, model, &grid)?,
    };
    let nearest = wegner_setup(side, model, &grid, e, deltas)?;
    let seeds: Vec<u64> = (0..n as u64).map(|i| realization_seed(master, i)).collect();
    let samples: Vec<(u64, Option<Vec<bool>>)> = pool.install(|| seeds.par_iter().map(|&s| (s, wegner_sample(side, model, &grid, e, deltas, s).ok())).collect());
    let outcomes: Vec<Option<Vec<bool>>> = samples.iter().map(|s| s.1.clone()).collect();
    Ok(WegnerCampaign { report: wegner_report(side, model, e, nearest, deltas, &outcomes), samples })
}

pub fn wegner_properties(c: &WegnerCampaign) -> Vec<Property> {
    let bad: Vec<String> = c.report.rows.iter().filter(|r| !r.pass).map(|r| format!("delta {:e}: {:.4} > {:.4}", r.delta_bar, r.wilson.1, r.bound)).collect();
    vec![prop("wegner-bound", bad.is_empty(), if bad.is_empty() { format!("{} widths, N = {}", c.report.rows.len(), c.report.n) } else { bad.join("; ") })]
}

pub fn decouple_campaign(model: &ModelConfig, zs: &[(f64, f64)], sizes: &[u32], seeds: &[Option<u64>], opts: &DecoupleOptions, pool: &rayon::ThreadPool) -> Vec<DecouplePoint> {
    let tasks: Vec<(u32, (f64, f64), Option<u64>)> = zs.iter().flat_map(|&z| sizes.iter().flat_map(move |&l| seeds.iter().map(move |&s| (l, z, s)))).collect();
    pool.install(|| tasks.par_iter().map(|&(l, z, s)| decouple_task(&model.with_l(l), Complex64::new(z.0, z.1), s, opts)).collect())
}

/// ||K|| at fixed circumference for several wall separations.
pub fn separation_sweep(model: &ModelConfig, zs: &[(f64, f64)], separations: &[u32], seeds: &[Option<u64>], opts: &DecoupleOptions, pool: &rayon::ThreadPool) -> Vec<DecouplePoint> {
    let tasks: Vec<(u32, (f64, f64), Option<u64>)> = zs.iter().flat_map(|&z| separations.iter().flat_map(move |&d| seeds.iter().map(move |&s| (d, z, s)))).collect();
    pool.install(|| {
        tasks.par_iter().map(|&(d, z, s)| decouple_task(&ModelConfig { separation: Some(d), ..model.clone() }, Complex64::new(z.0, z.1), s, opts)).collect()
    })
}

pub fn decouple_fits(points: &[DecouplePoint], zs: &[(f64, f64)]) -> Vec<((f64, f64), Option<DecayFit>)> {
    zs.iter().map(|&z| (z, decouple_fit(points, z).ok())).collect()
}

pub fn decouple_properties(points: &[DecouplePoint], zs: &[(f64, f64)]) -> Vec<Property> {
    let mut sizes: Vec<u32> = points.iter().map(|p| p.l).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Vec::new();
    }
    decouple_fits(points, zs)
        .into_iter()
        .map(|(z, f)| {
            let name = format!("kappa-slope z={}", crate::config::fmt_complex(z));
            prop(&name, f.as_ref().is_some_and(|f| f.slope_negative), f.map_or("no fit".into(), |f| format!("slope {:.4} CI {:.4?}", f.fit.slope, f.fit.slope_ci)))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FluxCampaign {
    pub report: FluxReport,
    /// Set distance between the clean spectra at flux 0 and 2 pi.
    pub period_defect: f64,
}

pub fn flux_campaign(model: &ModelConfig, phis: &[f64]) -> edgelab_core::Result<FluxCampaign> {
    let report = run_flux_sweep(model, phis)?;
    let period_defect = flux_period_defect(model, 0.0, 2.0 * PI, 1e-3)?;
    Ok(FluxCampaign { report, period_defect })
}

pub fn flux_properties(c: &FluxCampaign) -> Vec<Property> {
    let row = |phi: f64| c.report.rows.iter().find(|r| (r.phi - phi).abs() < 1e-12);
    let mut out = Vec::new();
    if let Some(r0) = row(0.0) {
        out.push(prop("flux-coincidence", r0.same_m_gap <= FLUX_TOL, format!("same-m gap at 0: {:.3e}", r0.same_m_gap)));
        if let Some(r1) = row(PI / 2.0) {
            let pass = r1.scaled_set > LIFT_FACTOR * r0.scaled_set;
            out.push(prop("flux-lift", pass, format!("L*gap {:.4} at pi/2 vs {:.3e} at 0", r1.scaled_set, r0.scaled_set)));
        }
    }
    out.push(prop("flux-period", c.period_defect <= FLUX_TOL, format!("set distance between 0 and 2 pi: {:.3e}", c.period_defect)));
    out
}

pub fn kernel_run(model: &ModelConfig, z: (f64, f64)) -> edgelab_core::Result<KernelDecay> {
    kernel_decay_probe(Complex64::new(z.0, z.1), model)
}

pub fn kernel_properties(k: &KernelDecay, b: f64) -> Vec<Property> {
    let floor = b.sqrt() / 16.0;
    vec![
        prop("kernel-rate", k.exp_rate >= floor, format!("fitted rate {:.4} vs sqrt(B)/16 = {floor:.4}", k.exp_rate)),
        prop("kernel-envelope", k.gaussian_violations == 0 && k.exp_violations == 0, format!("{} gaussian, {} exponential violations", k.gaussian_violations, k.exp_violations)),
    ]
}
