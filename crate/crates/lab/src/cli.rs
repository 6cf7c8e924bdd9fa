//! Command-line dispatch. Every command is a thin shell over `campaign` and the core library.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgelab_core::eigensolve::{solve_window_with, EigenPair};
use edgelab_core::experiments::{edge_field, EdgeTask};
use edgelab_core::model::{DisorderField, ModelConfig, Side};
use edgelab_core::observables::{landau_reference, observe};
use edgelab_core::operators::{assemble_on, build_cutoffs, Grid, Variant};
use serde_json::json;

use crate::campaign::*;
use crate::config::{parse_complex, side_id, ConfigError, LabConfig};
use crate::output::{num, opt, Manifest, Outputs, Table};

#[derive(Parser, Debug)]
#[command(name = "edgelab", version, about = "Edge-state laboratory for random magnetic Schrodinger operators on a cylinder")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Configuration file (flat key = value with [section] headers)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides EDGELAB_OUTDIR and run.outdir)
    #[arg(long, global = true)]
    pub outdir: Option<PathBuf>,
    /// Master seed (overrides EDGELAB_SEED and run.seed)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Also write per-figure CSV under plot/
    #[arg(long, global = true)]
    pub plot_data: bool,
    /// Override one configuration key
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SideArg {
    L,
    R,
    Both,
}

impl SideArg {
    fn sides(self) -> Vec<Side> {
        match self {
            SideArg::L => vec![Side::Left],
            SideArg::R => vec![Side::Right],
            SideArg::Both => vec![Side::Left, Side::Right],
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantArg {
    Full,
    Left,
    Right,
    Bulk,
    CleanLeft,
    CleanRight,
    Landau,
    LandauTorus,
}

impl VariantArg {
    fn variant(self) -> Variant {
        match self {
            VariantArg::Full => Variant::Full,
            VariantArg::Left => Variant::Single(Side::Left),
            VariantArg::Right => Variant::Single(Side::Right),
            VariantArg::Bulk => Variant::Bulk,
            VariantArg::CleanLeft => Variant::Clean(Side::Left),
            VariantArg::CleanRight => Variant::Clean(Side::Right),
            VariantArg::Landau | VariantArg::LandauTorus => Variant::Landau,
        }
    }

    fn id(self) -> &'static str {
        match self {
            VariantArg::Full => "full",
            VariantArg::Left => "left",
            VariantArg::Right => "right",
            VariantArg::Bulk => "bulk",
            VariantArg::CleanLeft => "clean-left",
            VariantArg::CleanRight => "clean-right",
            VariantArg::Landau => "landau",
            VariantArg::LandauTorus => "landau-torus",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct Campaign {
    /// Circumferences (default: run.sizes)
    #[arg(long = "L", value_delimiter = ',')]
    pub sizes: Vec<u32>,
    /// Number of disorder realizations (default: run.seeds)
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Disorder-free run (V = 0)
    #[arg(long)]
    pub clean: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Branch tables epsilon_n(k) and slopes of the clean single-wall operators
    Branches {
        #[arg(long, value_enum, default_value = "both")]
        side: SideArg,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long = "L", value_delimiter = ',')]
        sizes: Vec<u32>,
        /// Also compare J with the branch slope on the grid
        #[arg(long)]
        hellmann_feynman: bool,
    },
    /// Eigenpairs of one operator variant in the target window
    Spectrum {
        #[arg(long = "L")]
        l: Option<u32>,
        #[arg(long, value_enum, default_value = "full")]
        variant: VariantArg,
        /// Realization index under the master seed
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[arg(long)]
        clean: bool,
        /// Energy window lo,hi (default: the target window)
        #[arg(long, value_delimiter = ',', num_args = 1)]
        window: Vec<f64>,
        #[arg(long)]
        export_coo: bool,
        #[arg(long)]
        export_disorder: bool,
        /// Site table n,m,coupling replacing the sampled disorder
        #[arg(long)]
        disorder_table: Option<PathBuf>,
    },
    /// Spectral matching of H_omega against H_l and H_r
    EdgeReport(Campaign),
    /// Distances between matched spectral projectors
    Projector(Campaign),
    /// Monte Carlo Wegner estimate for one single-wall operator
    Wegner {
        #[arg(long = "L")]
        l: Option<u32>,
        /// Energy or 'auto'
        #[arg(long)]
        energy: Option<String>,
        #[arg(long, value_delimiter = ',')]
        deltas: Vec<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        side: Option<String>,
    },
    /// Norm of the decoupling remainder K(z) against L
    Decouple {
        #[arg(long = "L", value_delimiter = ',')]
        sizes: Vec<u32>,
        #[arg(long, value_delimiter = ',')]
        z: Vec<String>,
        /// Disorder realizations; 0 for the clean operator
        #[arg(long)]
        seeds: Option<usize>,
        /// Wall separations at the largest L
        #[arg(long, value_delimiter = ',')]
        separations: Vec<u32>,
    },
    /// Left/right branch gaps against the flux for symmetric walls
    FluxSweep {
        #[arg(long = "L")]
        l: Option<u32>,
        #[arg(long, value_delimiter = ',')]
        phis: Vec<f64>,
        /// Copy the left wall onto the right
        #[arg(long)]
        mirror_left: bool,
    },
    /// Off-diagonal decay of the free resolvent kernel
    KernelDecay {
        #[arg(long)]
        z: Option<String>,
        #[arg(long = "L")]
        l: Option<u32>,
    },
    /// Check a configuration; optionally print every effective key
    ValidateConfig {
        #[arg(long)]
        print_effective: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Branches { .. } => "branches",
            Command::Spectrum { .. } => "spectrum",
            Command::EdgeReport(_) => "edge-report",
            Command::Projector(_) => "projector",
            Command::Wegner { .. } => "wegner",
            Command::Decouple { .. } => "decouple",
            Command::FluxSweep { .. } => "flux-sweep",
            Command::KernelDecay { .. } => "kernel-decay",
            Command::ValidateConfig { .. } => "validate-config",
        }
    }
}

#[derive(Debug)]
pub enum LabError {
    Usage(String),
    Io(std::io::Error),
    Run(String),
}

impl From<ConfigError> for LabError {
    fn from(e: ConfigError) -> Self {
        LabError::Usage(e.0)
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e)
    }
}

impl From<edgelab_core::Error> for LabError {
    fn from(e: edgelab_core::Error) -> Self {
        use edgelab_core::Error as E;
        match e {
            E::Config(_) | E::Input(_) | E::Geometry(_) | E::Precondition(_) => LabError::Usage(e.to_string()),
            other => LabError::Run(other.to_string()),
        }
    }
}

/// Effective configuration: defaults, then the file, then the environment, then flags.
pub fn resolve(common: &Common, env: impl Fn(&str) -> Option<String>) -> Result<LabConfig, LabError> {
    let mut cfg = LabConfig::default();
    if let Some(p) = &common.config {
        let text = std::fs::read_to_string(p).map_err(|e| LabError::Usage(format!("cannot read {}: {e}", p.display())))?;
        cfg.apply_text(&text)?;
    }
    cfg.apply_env(env)?;
    for s in &common.sets {
        let (k, v) = s.split_once('=').ok_or_else(|| LabError::Usage(format!("--set expects KEY=VALUE, got '{s}'")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(d) = &common.outdir {
        cfg.run.outdir = d.display().to_string();
    }
    if let Some(s) = common.seed {
        cfg.run.seed = s;
    }
    if let Some(j) = common.jobs {
        cfg.run.jobs = j;
    }
    Ok(cfg)
}

struct Ctx {
    cfg: LabConfig,
    out: Outputs,
    plot: bool,
    pool: rayon::ThreadPool,
    params: serde_json::Value,
    timings: BTreeMap<String, f64>,
}

impl Ctx {
    fn model_at(&self, l: Option<u32>) -> ModelConfig {
        l.map_or(self.cfg.model.clone(), |l| self.cfg.model.with_l(l))
    }

    fn sizes(&self, given: &[u32]) -> Vec<u32> {
        if given.is_empty() {
            self.cfg.run.sizes.clone()
        } else {
            given.to_vec()
        }
    }

    fn timed<T>(&mut self, name: &str, f: impl FnOnce(&Self) -> T) -> T {
        let t = Instant::now();
        let r = f(self);
        self.timings.insert(name.into(), t.elapsed().as_secs_f64());
        r
    }
}

/// Parses argv and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, &argv, |k| std::env::var(k).ok()) {
        Ok(failures) if failures.is_empty() => 0,
        Ok(failures) => {
            eprintln!("failed properties: {}", failures.join(", "));
            1
        }
        Err(LabError::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(LabError::Io(e)) => {
            eprintln!("i/o error: {e}");
            1
        }
        Err(LabError::Run(m)) => {
            eprintln!("run failed: {m}");
            1
        }
    }
}

/// Runs a parsed command; returns the names of failed properties.
pub fn execute(cli: &Cli, argv: &[String], env: impl Fn(&str) -> Option<String>) -> Result<Vec<String>, LabError> {
    let cfg = resolve(&cli.common, env)?;
    if let Command::ValidateConfig { print_effective } = cli.command {
        if print_effective {
            print!("{}", cfg.render());
        }
        cfg.validate()?;
        eprintln!("configuration valid (hash {})", cfg.hash());
        return Ok(Vec::new());
    }
    cfg.validate()?;
    let out = Outputs::new(Path::new(&cfg.run.outdir))?;
    let mut ctx = Ctx { pool: pool(cfg.run.jobs), cfg, out, plot: cli.common.plot_data, params: json!({}), timings: BTreeMap::new() };
    let start = Instant::now();
    match &cli.command {
        Command::Branches { side, n, sizes, hellmann_feynman } => branches(&mut ctx, *side, *n, sizes, *hellmann_feynman)?,
        Command::Spectrum { l, variant, index, clean, window, export_coo, export_disorder, disorder_table } => {
            spectrum(&mut ctx, *l, *variant, *index, *clean, window, *export_coo, *export_disorder, disorder_table.as_deref())?
        }
        Command::EdgeReport(c) => edge_or_projector(&mut ctx, c, false)?,
        Command::Projector(c) => edge_or_projector(&mut ctx, c, true)?,
        Command::Wegner { l, energy, deltas, n, side } => wegner(&mut ctx, *l, energy.as_deref(), deltas, *n, side.as_deref())?,
        Command::Decouple { sizes, z, seeds, separations } => decouple(&mut ctx, sizes, z, *seeds, separations)?,
        Command::FluxSweep { l, phis, mirror_left } => flux(&mut ctx, *l, phis, *mirror_left)?,
        Command::KernelDecay { z, l } => kernel(&mut ctx, z.as_deref(), *l)?,
        Command::ValidateConfig { .. } => unreachable!(),
    }
    ctx.timings.insert("total".into(), start.elapsed().as_secs_f64());
    let name = cli.command.name();
    let summary = ctx.out.summary_table();
    ctx.out.table("summary.csv", &summary)?;
    let props = ctx.out.properties_table();
    ctx.out.table(&format!("{name}/properties.csv"), &props)?;
    let failures: Vec<String> = ctx.out.failures().into_iter().map(String::from).collect();
    let manifest = Manifest {
        tool: "edgelab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        argv: argv.to_vec(),
        config_hash: ctx.cfg.hash(),
        master_seed: ctx.cfg.run.seed,
        config: ctx.cfg.to_map(),
        parameters: ctx.params.clone(),
        files: ctx.out.files.clone(),
        timings: ctx.timings.clone(),
        properties: ctx.out.properties.clone(),
    };
    ctx.out.json("manifest.json", &manifest)?;
    for p in ctx.out.properties.iter().filter(|p| !p.pass) {
        eprintln!("FAIL {}: {}", p.name, p.detail);
    }
    Ok(failures)
}

pub fn branch_table_csv(run: &BranchRun) -> Table {
    let mut t = Table::new(&["m", "k", "energy", "slope"]);
    for p in &run.branch.points {
        t.push(vec![p.m.to_string(), num(p.k), num(p.energy), num(p.slope)]);
    }
    t
}

fn branches(ctx: &mut Ctx, side: SideArg, n: usize, sizes: &[u32], hf: bool) -> Result<(), LabError> {
    let sizes = ctx.sizes(sizes);
    let sides = side.sides();
    ctx.params = json!({ "side": format!("{side:?}").to_lowercase(), "n": n, "sizes": sizes, "hellmann_feynman": hf });
    let runs = ctx.timed("branches", |c| branch_campaign(&c.cfg.model, &sides, n, &sizes, hf, &c.pool))?;
    let mut summaries = Vec::new();
    for r in &runs {
        let key = format!("{}_n{n}_L{}", side_id(r.side), r.l);
        ctx.out.table(&format!("branches/{key}.csv"), &branch_table_csv(r))?;
        if let Some(rows) = &r.hf {
            let mut t = Table::new(&["m", "k", "energy", "slope", "velocity", "residual", "deviation"]);
            for h in rows {
                t.push(vec![h.m.to_string(), num(h.k), num(h.energy), num(h.slope), num(h.velocity), num(h.residual), num(h.deviation)]);
            }
            ctx.out.table(&format!("branches/hf_{key}.csv"), &t)?;
        }
        summaries.push(&r.summary);
    }
    ctx.out.json("branches/summary.json", &summaries)?;
    if ctx.plot {
        for s in &sides {
            let mut cols = Vec::new();
            for r in runs.iter().filter(|r| r.side == *s) {
                cols.push((format!("k_L{}", r.l), r.branch.points.iter().map(|p| num(p.k)).collect()));
                cols.push((format!("energy_L{}", r.l), r.branch.points.iter().map(|p| num(p.energy)).collect()));
            }
            ctx.out.table(&format!("plot/branches_{}_n{n}.csv", side_id(*s)), &Table::from_columns(cols))?;
        }
    }
    for p in branch_properties(&runs, n) {
        ctx.out.check(p);
    }
    Ok(())
}

/// Reads a site table with header n,m,coupling.
pub fn read_disorder_table(path: &Path, cfg: &ModelConfig) -> Result<DisorderField, LabError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| LabError::Usage(format!("{}: {e}", path.display())))?;
    let mut sites = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| LabError::Usage(format!("{}: {e}", path.display())))?;
        let parse = |j: usize| rec.get(j).map(str::trim).ok_or_else(|| LabError::Usage(format!("{} row {}: missing column", path.display(), i + 1)));
        let bad = || LabError::Usage(format!("{} row {}: bad number", path.display(), i + 1));
        let n: i64 = parse(0)?.parse().map_err(|_| bad())?;
        let m: i64 = parse(1)?.parse().map_err(|_| bad())?;
        let x: f64 = parse(2)?.parse().map_err(|_| bad())?;
        sites.push(((n, m), x));
    }
    Ok(DisorderField::from_sites(0, cfg.density, cfg.bump_amplitude(), cfg.l, sites)?)
}

pub fn disorder_table_csv(field: &DisorderField) -> Table {
    let mut t = Table::new(&["n", "m", "coupling"]);
    for (n, m, x) in edgelab_core::model::site_table(field) {
        // shortest round-trip representation
        t.push(vec![n.to_string(), m.to_string(), x.to_string()]);
    }
    t
}

#[allow(clippy::too_many_arguments)]
fn spectrum(ctx: &mut Ctx, l: Option<u32>, variant: VariantArg, index: u64, clean: bool, window: &[f64], coo: bool, export: bool, table: Option<&Path>) -> Result<(), LabError> {
    let cfg = ctx.model_at(l);
    cfg.validate()?;
    let w = match window {
        [] => cfg.window(),
        [lo, hi] => (*lo, *hi),
        _ => return Err(LabError::Usage("--window expects lo,hi".into())),
    };
    let seed = (!clean && table.is_none()).then(|| realization_seeds(ctx.cfg.run.seed, index as usize + 1)[index as usize]);
    let field = match table {
        Some(p) => read_disorder_table(p, &cfg)?,
        None => edge_field(&cfg, seed)?,
    };
    let torus = variant == VariantArg::LandauTorus;
    let op = if torus { landau_reference(&cfg)? } else { assemble_on(variant.variant(), &cfg, &Grid::for_model(&cfg)?, Some(&field))? };
    let key = format!("{}_L{}_{}", variant.id(), cfg.l, if table.is_some() { "table".into() } else { seed.map_or("clean".to_string(), |_| format!("r{index}")) });
    ctx.params = json!({ "L": cfg.l, "variant": variant.id(), "index": index, "seed": seed, "window": [w.0, w.1], "disorder_table": table.map(|p| p.display().to_string()) });
    let opts = ctx.cfg.edge.solve;
    let spec = ctx.timed("solve", |_| solve_window_with(&op, w, &opts))?;
    let mut t = Table::new(&["index", "energy", "residual", "velocity", "mass_left", "mass_bulk", "mass_right", "class"]);
    let cut = build_cutoffs(&cfg)?;
    for (i, p) in spec.pairs.iter().enumerate() {
        let mut row = vec![i.to_string(), num(p.energy), num(p.residual)];
        if torus {
            row.extend(std::iter::repeat(String::new()).take(5));
        } else {
            let o = observe(p, &op, &cut, &ctx.cfg.edge.rule)?;
            row.extend([num(o.velocity), num(o.mass.left), num(o.mass.bulk), num(o.mass.right), o.class.label().into()]);
        }
        t.push(row);
    }
    ctx.out.table(&format!("spectrum/{key}.csv"), &t)?;
    ctx.out.json(&format!("spectrum/{key}.json"), &json!({ "solver": spec.info, "window": [w.0, w.1], "count": spec.len(), "orthonormality_defect": spec.orthonormality_defect(), "checksum": op.checksum }))?;
    if coo {
        let mut c = Table::new(&["row", "col", "re", "im"]);
        for (i, j, re, im) in op.coo() {
            c.push(vec![i.to_string(), j.to_string(), re.to_string(), im.to_string()]);
        }
        ctx.out.table(&format!("spectrum/{key}_coo.csv"), &c)?;
    }
    if export {
        ctx.out.table(&format!("spectrum/{key}_disorder.csv"), &disorder_table_csv(&field))?;
    }
    if ctx.plot {
        ctx.out.table(&format!("plot/spectrum_{key}.csv"), &Table::from_columns(vec![("energy".into(), spec.pairs.iter().map(|p: &EigenPair| num(p.energy)).collect())]))?;
    }
    Ok(())
}

fn task_key(t: &EdgeTask, seeds: &[Option<u64>]) -> String {
    match t.seed {
        None => format!("L{}_clean", t.l),
        Some(s) => format!("L{}_r{:03}", t.l, seeds.iter().position(|x| *x == Some(s)).unwrap_or(usize::MAX)),
    }
}

pub fn matches_csv(t: &EdgeTask) -> Table {
    let mut tb = Table::new(&[
        "side",
        "full_energy",
        "single_energy",
        "raw_displacement",
        "displacement",
        "velocity_full",
        "velocity_single",
        "velocity_displacement",
        "projector_distance",
        "rank_full",
        "rank_single",
        "full_class",
    ]);
    for m in &t.matches {
        tb.push(vec![
            side_id(m.side).into(),
            num(m.full_energy),
            num(m.single_energy),
            num(m.raw_displacement),
            num(m.displacement),
            num(m.velocity_full),
            num(m.velocity_single),
            num(m.velocity_displacement),
            num(m.projector_distance),
            m.rank_full.to_string(),
            m.rank_single.to_string(),
            m.full_class.label().into(),
        ]);
    }
    tb
}

pub fn states_csv(t: &EdgeTask) -> Table {
    let mut tb = Table::new(&["operator", "energy", "velocity", "mass_left", "mass_bulk", "mass_right", "class", "spurious", "bound"]);
    let full = t.full.iter().map(|o| ("H_omega", o, None, None));
    let single = t.left.iter().map(|s| ("H_l", &s.observable, Some(s.spurious), s.bound)).chain(t.right.iter().map(|s| ("H_r", &s.observable, Some(s.spurious), s.bound)));
    for (name, o, spurious, bound) in full.chain(single) {
        tb.push(vec![
            name.into(),
            num(o.energy),
            num(o.velocity),
            num(o.mass.left),
            num(o.mass.bulk),
            num(o.mass.right),
            o.class.label().into(),
            spurious.map_or(String::new(), |s| s.to_string()),
            opt(bound.map(|b| b.value)),
        ]);
    }
    for u in &t.unmatched {
        tb.push(vec![format!("unmatched {}", u.operator), num(u.energy), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new()]);
    }
    tb
}

fn edge_or_projector(ctx: &mut Ctx, c: &Campaign, projector: bool) -> Result<(), LabError> {
    let sizes = ctx.sizes(&c.sizes);
    let n = c.seeds.unwrap_or(ctx.cfg.run.seeds);
    let seeds: Vec<Option<u64>> = if c.clean { vec![None] } else { realization_seeds(ctx.cfg.run.seed, n).into_iter().map(Some).collect() };
    let dir = if projector { "projector" } else { "edge-report" };
    ctx.params = json!({ "sizes": sizes, "seeds": seeds, "clean": c.clean });
    let camp = ctx.timed("tasks", |x| edge_campaign(&x.cfg.model, &x.cfg.edge, &sizes, &seeds, &x.pool));
    let r = &camp.report;
    for t in &r.tasks {
        let key = task_key(t, &seeds);
        if projector {
            let mut tb = Table::new(&["side", "full_energy", "single_energy", "projector_distance", "rank_full", "rank_single"]);
            for m in &t.matches {
                tb.push(vec![side_id(m.side).into(), num(m.full_energy), num(m.single_energy), num(m.projector_distance), m.rank_full.to_string(), m.rank_single.to_string()]);
            }
            ctx.out.table(&format!("{dir}/{key}.csv"), &tb)?;
        } else {
            ctx.out.table(&format!("{dir}/{key}.csv"), &matches_csv(t))?;
            ctx.out.table(&format!("{dir}/{key}_states.csv"), &states_csv(t))?;
        }
    }
    let mut sizes_t = Table::new(&["L", "tasks", "states", "matched", "unmatched", "ambiguous", "min_speed", "max_displacement", "max_velocity_displacement", "max_projector_distance"]);
    for s in &r.sizes {
        sizes_t.push(vec![
            s.l.to_string(),
            s.tasks.to_string(),
            s.states.to_string(),
            s.matched.to_string(),
            s.unmatched.to_string(),
            s.ambiguous.to_string(),
            opt(s.min_speed),
            opt(s.max_displacement),
            opt(s.max_velocity_displacement),
            opt(s.max_projector_distance),
        ]);
    }
    ctx.out.table(&format!("{dir}/sizes.csv"), &sizes_t)?;
    let mut fail_t = Table::new(&["L", "seed", "error"]);
    for f in &camp.failures {
        fail_t.push(vec![f.l.to_string(), f.seed.map_or("clean".into(), |s| s.to_string()), f.error.clone()]);
    }
    ctx.out.table(&format!("{dir}/task_failures.csv"), &fail_t)?;
    ctx.out.json(&format!("{dir}/report.json"), &json!({
        "sizes": r.sizes,
        "displacement_fit": r.displacement_fit,
        "velocity_fit": r.velocity_fit,
        "projector_fit": r.projector_fit,
        "monotone_seeds": r.monotone_seeds,
        "seeds": r.seeds,
        "j_min": r.j_min,
        "ambiguous": r.ambiguous,
        "side_disagreements": r.side_disagreements,
        "bound_violations": r.bound_violations,
        "unmatched": r.unmatched,
        "rank_mismatches": r.rank_mismatches,
        "h1_gaps": r.tasks.iter().map(|t| (t.l, t.h1_gap)).collect::<Vec<_>>(),
    }))?;
    let fits = if projector { vec![&r.projector_fit] } else { vec![&r.displacement_fit, &r.velocity_fit, &r.projector_fit] };
    for f in fits.into_iter().flatten() {
        ctx.out.fit(dir, f);
    }
    if ctx.plot {
        let value = |t: &EdgeTask| if projector { t.max_projector_distance } else { t.max_displacement };
        let mut cols = vec![("sqrt_L".to_string(), sizes.iter().map(|l| num((*l as f64).sqrt())).collect::<Vec<_>>())];
        for s in &seeds {
            let name = s.map_or("clean".to_string(), |x| format!("r{:03}", seeds.iter().position(|y| *y == Some(x)).unwrap_or(0)));
            let col = sizes.iter().map(|l| r.tasks.iter().find(|t| t.l == *l && t.seed == *s).and_then(value).map_or(String::new(), |v| num(v.ln()))).collect();
            cols.push((format!("ln_max_{name}"), col));
        }
        ctx.out.table(&format!("plot/{dir}.csv"), &Table::from_columns(cols))?;
    }
    let props = if projector { projector_properties(&camp) } else { edge_properties(&camp) };
    for p in props {
        ctx.out.check(p);
    }
    Ok(())
}

fn wegner(ctx: &mut Ctx, l: Option<u32>, energy: Option<&str>, deltas: &[f64], n: Option<usize>, side: Option<&str>) -> Result<(), LabError> {
    let cfg = ctx.model_at(l);
    let e = match energy {
        None => ctx.cfg.wegner.energy,
        Some("auto") => None,
        Some(s) => Some(s.parse::<f64>().map_err(|_| LabError::Usage(format!("--energy: cannot parse '{s}'")))?),
    };
    let deltas = if deltas.is_empty() { ctx.cfg.wegner.deltas.clone() } else { deltas.to_vec() };
    let n = n.unwrap_or(ctx.cfg.wegner.n);
    let side = side.map(crate::config::parse_side).transpose()?.unwrap_or(ctx.cfg.wegner.side);
    let master = ctx.cfg.run.seed;
    ctx.params = json!({ "L": cfg.l, "energy": e, "deltas": deltas, "n": n, "side": side_id(side) });
    let camp = ctx.timed("samples", |x| wegner_campaign(&cfg, side, e, &deltas, n, master, &x.pool))?;
    let r = &camp.report;
    let key = format!("{}_L{}", side_id(side), cfg.l);
    let mut t = Table::new(&["delta_bar", "hits", "n", "p_hat", "wilson_lo", "wilson_hi", "distance", "bound", "pass"]);
    for row in &r.rows {
        t.push(vec![num(row.delta_bar), row.hits.to_string(), row.n.to_string(), num(row.p_hat), num(row.wilson.0), num(row.wilson.1), num(row.distance), num(row.bound), row.pass.to_string()]);
    }
    ctx.out.table(&format!("wegner/{key}.csv"), &t)?;
    let mut s = Table::new(&["index", "seed", "outcome"]);
    for (i, (seed, o)) in camp.samples.iter().enumerate() {
        let outcome = o.as_ref().map_or("failed".into(), |v| v.iter().map(|b| if *b { "1" } else { "0" }).collect::<Vec<_>>().join(";"));
        s.push(vec![i.to_string(), seed.to_string(), outcome]);
    }
    ctx.out.table(&format!("wegner/{key}_samples.csv"), &s)?;
    ctx.out.json(&format!("wegner/{key}.json"), &json!({ "energy": r.energy, "nearest_level": r.nearest_level, "n": r.n, "failures": r.failures }))?;
    if ctx.plot {
        let col = |f: &dyn Fn(&edgelab_core::experiments::WegnerRow) -> f64| r.rows.iter().map(|x| num(f(x))).collect::<Vec<_>>();
        let cols = vec![("delta_bar".into(), col(&|x| x.delta_bar)), ("p_hat".into(), col(&|x| x.p_hat)), ("wilson_hi".into(), col(&|x| x.wilson.1)), ("bound".into(), col(&|x| x.bound))];
        ctx.out.table("plot/wegner.csv", &Table::from_columns(cols))?;
    }
    for p in wegner_properties(&camp) {
        ctx.out.check(p);
    }
    Ok(())
}

pub fn decouple_csv(points: &[edgelab_core::experiments::DecouplePoint]) -> Table {
    let mut t = Table::new(&["L", "separation", "seed", "z_re", "z_im", "norm", "iterations", "converged", "skipped"]);
    for p in points {
        t.push(vec![
            p.l.to_string(),
            p.separation.to_string(),
            p.seed.map_or("clean".into(), |s| s.to_string()),
            num(p.z.0),
            num(p.z.1),
            opt(p.norm),
            p.iterations.to_string(),
            p.converged.to_string(),
            p.skipped.clone().unwrap_or_default(),
        ]);
    }
    t
}

fn decouple(ctx: &mut Ctx, sizes: &[u32], z: &[String], seeds: Option<usize>, separations: &[u32]) -> Result<(), LabError> {
    let sizes = ctx.sizes(sizes);
    let zs: Vec<(f64, f64)> = if z.is_empty() { ctx.cfg.decouple_z.clone() } else { z.iter().map(|s| parse_complex(s)).collect::<Result<_, _>>()? };
    let n = seeds.unwrap_or(0);
    let seeds: Vec<Option<u64>> = if n == 0 { vec![None] } else { realization_seeds(ctx.cfg.run.seed, n).into_iter().map(Some).collect() };
    let separations = if separations.is_empty() { ctx.cfg.separations.clone() } else { separations.to_vec() };
    ctx.params = json!({ "sizes": sizes, "z": zs, "seeds": seeds, "separations": separations });
    let opts = ctx.cfg.decouple;
    let points = ctx.timed("sizes", |x| decouple_campaign(&x.cfg.model, &zs, &sizes, &seeds, &opts, &x.pool));
    ctx.out.table("decouple/points.csv", &decouple_csv(&points))?;
    for (_, f) in decouple_fits(&points, &zs) {
        if let Some(f) = f {
            ctx.out.fit("decouple", &f);
        }
    }
    if !separations.is_empty() {
        let l = *sizes.iter().max().unwrap_or(&ctx.cfg.model.l);
        let m = ctx.cfg.model.with_l(l);
        let sweep = ctx.timed("separations", |x| separation_sweep(&m, &zs, &separations, &seeds, &opts, &x.pool));
        ctx.out.table("decouple/separation.csv", &decouple_csv(&sweep))?;
    }
    if ctx.plot {
        let mut cols = vec![("sqrt_L".to_string(), sizes.iter().map(|l| num((*l as f64).sqrt())).collect::<Vec<_>>())];
        for &z in &zs {
            let col = sizes
                .iter()
                .map(|l| {
                    let v: Vec<f64> = points.iter().filter(|p| p.l == *l && p.z == z).filter_map(|p| p.norm).collect();
                    if v.is_empty() {
                        String::new()
                    } else {
                        num(v.iter().copied().fold(0.0, f64::max).ln())
                    }
                })
                .collect();
            cols.push((format!("ln_norm_z={}", crate::config::fmt_complex(z)), col));
        }
        ctx.out.table("plot/decouple.csv", &Table::from_columns(cols))?;
    }
    for p in decouple_properties(&points, &zs) {
        ctx.out.check(p);
    }
    Ok(())
}

pub fn flux_csv(c: &FluxCampaign) -> Table {
    let mut t = Table::new(&["phi", "same_m_gap", "shifted_gap", "set_gap", "scaled_same_m", "scaled_shifted", "scaled_set"]);
    for r in &c.report.rows {
        t.push(vec![num(r.phi), num(r.same_m_gap), num(r.shifted_gap), num(r.set_gap), num(r.scaled_same_m), num(r.scaled_shifted), num(r.scaled_set)]);
    }
    t
}

fn flux(ctx: &mut Ctx, l: Option<u32>, phis: &[f64], mirror: bool) -> Result<(), LabError> {
    let mut cfg = ctx.model_at(l);
    if mirror {
        cfg.wall_right = cfg.wall_left;
    }
    let phis = if phis.is_empty() { ctx.cfg.flux_phis.clone() } else { phis.to_vec() };
    ctx.params = json!({ "L": cfg.l, "phis": phis, "mirror_left": mirror });
    let camp = ctx.timed("sweep", |_| flux_campaign(&cfg, &phis))?;
    ctx.out.table(&format!("flux-sweep/L{}.csv", cfg.l), &flux_csv(&camp))?;
    ctx.out.json(&format!("flux-sweep/L{}.json", cfg.l), &json!({ "phi_star": camp.report.phi_star, "period_defect": camp.period_defect }))?;
    if ctx.plot {
        let rows = &camp.report.rows;
        let cols = vec![
            ("phi".into(), rows.iter().map(|r| num(r.phi)).collect()),
            ("L_same_m_gap".into(), rows.iter().map(|r| num(r.scaled_same_m)).collect()),
            ("L_shifted_gap".into(), rows.iter().map(|r| num(r.scaled_shifted)).collect()),
            ("L_set_gap".into(), rows.iter().map(|r| num(r.scaled_set)).collect()),
        ];
        ctx.out.table("plot/flux-sweep.csv", &Table::from_columns(cols))?;
    }
    for p in flux_properties(&camp) {
        ctx.out.check(p);
    }
    Ok(())
}

pub fn kernel_csv(k: &edgelab_core::observables::KernelDecay) -> Table {
    let mut t = Table::new(&["dx", "dy", "r", "magnitude", "gaussian_envelope", "exp_envelope"]);
    for s in &k.samples {
        t.push(vec![num(s.dx), num(s.dy), num(s.r), num(s.magnitude), num(k.envelope.gaussian(s.r)), num(k.envelope.exponential(s.r))]);
    }
    t
}

fn kernel(ctx: &mut Ctx, z: Option<&str>, l: Option<u32>) -> Result<(), LabError> {
    let cfg = ctx.model_at(l);
    let z = z.map(parse_complex).transpose()?.unwrap_or(ctx.cfg.kernel_z);
    ctx.params = json!({ "L": cfg.l, "z": [z.0, z.1] });
    let k = ctx.timed("probe", |_| kernel_run(&cfg, z))?;
    ctx.out.table(&format!("kernel-decay/L{}.csv", cfg.l), &kernel_csv(&k))?;
    ctx.out.json(&format!("kernel-decay/L{}.json", cfg.l), &json!({ "z": k.z, "exp_fit": k.exp_fit, "exp_rate": k.exp_rate, "mixed_rates": k.mixed_rates, "envelope": k.envelope, "gaussian_violations": k.gaussian_violations, "exp_violations": k.exp_violations }))?;
    if ctx.plot {
        let cols = vec![("r".into(), k.samples.iter().map(|s| num(s.r)).collect()), ("ln_magnitude".into(), k.samples.iter().map(|s| num(s.magnitude.ln())).collect())];
        ctx.out.table("plot/kernel-decay.csv", &Table::from_columns(cols))?;
    }
    for p in kernel_properties(&k, cfg.b) {
        ctx.out.check(p);
    }
    Ok(())
}
