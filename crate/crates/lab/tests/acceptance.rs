//! Desk-scale acceptance run: one pass/fail line per criterion.

use std::time::Instant;

use edgelab::campaign::*;
use edgelab::output::Property;
use edgelab_core::eigensolve::{dense_window, solve_window_with, Method, Projector, SolveOptions, WindowSpectrum};
use edgelab_core::experiments::EdgeOptions;
use edgelab_core::model::*;
use edgelab_core::operators::{assemble_on, Grid, Variant};

const SIZES: [u32; 4] = [16, 25, 36, 49];
const SEEDS: usize = 20;
const MASTER: u64 = 2024;

fn pick<'a>(props: &'a [Property], names: &[&str]) -> Vec<&'a Property> {
    props.iter().filter(|p| names.iter().any(|n| p.name.starts_with(n))).collect()
}

struct Ledger {
    failed: Vec<usize>,
}

impl Ledger {
    fn report(&mut self, n: usize, title: &str, props: Vec<Property>, t: Instant) {
        let pass = !props.is_empty() && props.iter().all(|p| p.pass);
        let detail: Vec<String> = props.iter().map(|p| format!("{}{}: {}", if p.pass { "" } else { "FAILED " }, p.name, p.detail)).collect();
        println!("criterion {n:2} {title}: {} [{:.0}s] {}", if pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64(), detail.join(" | "));
        if !pass {
            self.failed.push(n);
        }
    }
}

fn error(name: &str, e: impl std::fmt::Display) -> Vec<Property> {
    vec![Property::new(name, false, e.to_string())]
}

fn frame(s: &WindowSpectrum, idx: &[usize]) -> Projector {
    let v: Vec<&[num_complex::Complex64]> = idx.iter().map(|&i| s.pairs[i].vector.as_slice()).collect();
    Projector::from_vectors(&v, idx.iter().map(|&i| s.pairs[i].energy).collect())
}

fn oracle() -> Vec<Property> {
    let mut out = Vec::new();
    let opts = |method| SolveOptions { method, tol: 1e-11, ..Default::default() };
    for (seed, n, window) in [(1u64, 40usize, (0.8, 1.2)), (2, 48, (0.7, 1.3))] {
        let cfg = ModelConfig { grid: GridControl::Explicit { nx: n, ny: n, x_min: -13.0, x_max: 13.0 }, ..Default::default() };
        let grid = Grid::for_model(&cfg).unwrap();
        let f = sample_disorder(&cfg, &RegionSpec::new(RegionName::Full, &cfg), seed).unwrap();
        let op = assemble_on(Variant::Full, &cfg, &grid, Some(&f)).unwrap();
        let (d, s) = match (dense_window(&op, window, &opts(Method::Dense)), solve_window_with(&op, window, &opts(Method::ShiftInvert))) {
            (Ok(d), Ok(s)) => (d, s),
            (a, b) => return error("oracle-solve", format!("{:?} {:?}", a.err(), b.err())),
        };
        let same = d.len() == s.len() && !d.is_empty();
        let de = if same { d.pairs.iter().zip(&s.pairs).map(|(a, b)| (a.energy - b.energy).abs()).fold(0.0, f64::max) } else { f64::INFINITY };
        out.push(Property::new(&format!("oracle-eigenvalues {n}x{n}"), same && de <= 1e-8, format!("{} vs {} pairs, max diff {de:.2e}", d.len(), s.len())));
        if same {
            // clusters of near-degenerate levels, compared as subspaces
            let mut clusters: Vec<Vec<usize>> = Vec::new();
            for i in 0..d.len() {
                match clusters.last_mut() {
                    Some(c) if d.pairs[i].energy - d.pairs[*c.last().unwrap()].energy < 1e-6 => c.push(i),
                    _ => clusters.push(vec![i]),
                }
            }
            let worst = clusters.iter().map(|c| frame(&d, c).distance(&frame(&s, c))).fold(0.0, f64::max);
            out.push(Property::new(&format!("oracle-subspaces {n}x{n}"), worst <= 1e-6, format!("max principal-angle sine {worst:.2e}")));
        }
    }
    let mut mismatches = 0usize;
    for &l in &SIZES {
        let cfg = ModelConfig::default().with_l(l);
        let full = sample_disorder(&cfg, &RegionSpec::new(RegionName::Full, &cfg), 99).unwrap();
        for name in [RegionName::Left, RegionName::Right, RegionName::Bulk, RegionName::One, RegionName::Two] {
            let r = RegionSpec::new(name, &cfg);
            let direct = sample_disorder(&cfg, &r, 99).unwrap();
            mismatches += r.sites().into_iter().filter(|&(n, m)| direct.get(n, m).map(f64::to_bits) != full.get(n, m).map(f64::to_bits)).count();
            let restricted = full.restrict(&r);
            mismatches += usize::from(site_table(&restricted) != site_table(&direct));
        }
    }
    out.push(Property::new("disorder-restriction", mismatches == 0, format!("{mismatches} bit mismatches over all regions and sizes")));
    out
}

fn main() {
    let mut ledger = Ledger { failed: Vec::new() };
    let base = ModelConfig::default();
    let pool = pool(std::thread::available_parallelism().map_or(1, |n| n.get()));

    let t = Instant::now();
    let c1 = landau_check(&base).map(|c| landau_properties(&c)).unwrap_or_else(|e| error("landau", e));
    ledger.report(1, "Landau-level recovery", c1, t);

    let t = Instant::now();
    let runs = branch_campaign(&base, &[Side::Left, Side::Right], 0, &SIZES, true, &pool);
    let bp = runs.as_ref().map(|r| branch_properties(r, 0)).unwrap_or_else(|e| error("branches", e));
    ledger.report(2, "branch structure", pick(&bp, &["branch-", "spacing-", "branches"]).into_iter().cloned().collect(), t);
    let t = Instant::now();
    ledger.report(3, "Hellmann-Feynman", pick(&bp, &["hellmann-feynman", "branches"]).into_iter().cloned().collect(), t);

    let t = Instant::now();
    let seeds: Vec<Option<u64>> = realization_seeds(MASTER, SEEDS).into_iter().map(Some).collect();
    let edge = edge_campaign(&base, &EdgeOptions::default(), &SIZES, &seeds, &pool);
    let ep = edge_properties(&edge);
    let mut c4: Vec<Property> = pick(&ep, &["edge-tasks", "edge-ambiguous", "edge-side-sign", "edge-speed"]).into_iter().cloned().collect();
    c4.push(Property::new("realizations", edge.report.seeds >= 20, format!("{} seeds x {} sizes", edge.report.seeds, edge.report.sizes.len())));
    ledger.report(4, "edge dichotomy", c4, t);
    let t5 = Instant::now();
    ledger.report(5, "spectral matching", pick(&ep, &["displacement-", "edge-coverage"]).into_iter().cloned().collect(), t5);

    let t = Instant::now();
    let mut c6 = Vec::new();
    for side in [Side::Left, Side::Right] {
        match wegner_campaign(&base, side, None, &[1e-4, 2e-4, 4e-4], 400, MASTER, &pool) {
            Ok(w) => {
                for mut p in wegner_properties(&w) {
                    p.name = format!("{} {:?}", p.name, side);
                    c6.push(p);
                }
            }
            Err(e) => c6.extend(error("wegner", e)),
        }
    }
    ledger.report(6, "Wegner estimate", c6, t);

    let t = Instant::now();
    let z = [(1.0, 0.1)];
    let pts = decouple_campaign(&base, &z, &SIZES, &[seeds[0]], &Default::default(), &pool);
    let mut c7 = decouple_properties(&pts, &z);
    c7.extend(projector_properties(&edge));
    let clean = edge_campaign(&base, &EdgeOptions::default(), &SIZES, &[None], &pool);
    c7.extend(pick(&projector_properties(&clean), &["projector-floor"]).into_iter().cloned());
    ledger.report(7, "decoupling and projectors", c7, t);

    let t = Instant::now();
    let sym = ModelConfig { wall_right: base.wall_left, ..base.clone() };
    let phis: Vec<f64> = (0..=8).map(|i| i as f64 * std::f64::consts::PI / 4.0).collect();
    let c8 = flux_campaign(&sym, &phis).map(|f| flux_properties(&f)).unwrap_or_else(|e| error("flux", e));
    ledger.report(8, "flux lifting", c8, t);

    let t = Instant::now();
    let c9 = kernel_run(&base, (base.b, 0.0)).map(|k| kernel_properties(&k, base.b)).unwrap_or_else(|e| error("kernel", e));
    ledger.report(9, "kernel decay", c9, t);

    let t = Instant::now();
    ledger.report(10, "oracle equivalence", oracle(), t);

    if ledger.failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failing criteria {:?}", ledger.failed);
        std::process::exit(1);
    }
}
