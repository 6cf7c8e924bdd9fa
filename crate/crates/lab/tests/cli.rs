//! The binary against direct library calls, exit codes, and configuration precedence.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use edgelab::campaign::*;
use edgelab::cli::{branch_table_csv, decouple_csv, flux_csv, kernel_csv, matches_csv, resolve, states_csv, Common};
use edgelab::config::{LabConfig, ENV_OUTDIR, ENV_SEED};
use edgelab::output::{num, Table};
use edgelab_core::eigensolve::solve_window_with;
use edgelab_core::experiments::{decouple_task, edge_task, DecoupleOptions, EdgeOptions};
use edgelab_core::model::{ModelConfig, Side};
use edgelab_core::operators::{assemble_on, Grid, Variant};
use num_complex::Complex64;

fn edgelab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgelab")).args(args).arg("--outdir").arg(out).env_remove(ENV_OUTDIR).env_remove(ENV_SEED).output().unwrap()
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn csv(t: &Table) -> String {
    String::from_utf8(t.to_csv()).unwrap()
}

fn ok(o: &Output) {
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn branches_match_the_library() {
    let d = tempfile::tempdir().unwrap();
    let o = edgelab(&["branches", "--side", "l", "--n", "0", "--L", "16"], d.path());
    ok(&o);
    let run = branch_run(&ModelConfig::default(), Side::Left, 0, 16, false).unwrap();
    let got = read(d.path().join("branches/l_n0_L16.csv"));
    assert_eq!(got, csv(&branch_table_csv(&run)));
    // monotone decreasing energy column
    let e: Vec<f64> = got.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(e.len() > 10 && e.windows(2).all(|w| w[1] < w[0]));
    assert!(got.starts_with("m,k,energy,slope\n"));
}

#[test]
fn edge_report_matches_the_library_and_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["edge-report", "--L", "16", "--seeds", "1", "--seed", "77"];
    ok(&edgelab(&args, a.path()));
    ok(&edgelab(&args, b.path()));
    let seed = realization_seeds(77, 1)[0];
    let t = edge_task(&ModelConfig::default(), Some(seed), &EdgeOptions::default()).unwrap();
    assert_eq!(read(a.path().join("edge-report/L16_r000.csv")), csv(&matches_csv(&t)));
    assert_eq!(read(a.path().join("edge-report/L16_r000_states.csv")), csv(&states_csv(&t)));
    let files = |d: &Path| {
        let m: serde_json::Value = serde_json::from_str(&read(d.join("manifest.json"))).unwrap();
        (m["files"].clone(), m["config_hash"].clone(), m["master_seed"].clone())
    };
    assert_eq!(files(a.path()), files(b.path()));
    assert_eq!(files(a.path()).2, 77);
}

#[test]
fn spectrum_matches_the_library() {
    let d = tempfile::tempdir().unwrap();
    ok(&edgelab(&["spectrum", "--variant", "clean-right", "--clean"], d.path()));
    let cfg = ModelConfig::default();
    let op = assemble_on(Variant::Clean(Side::Right), &cfg, &Grid::for_model(&cfg).unwrap(), None).unwrap();
    let s = solve_window_with(&op, cfg.window(), &EdgeOptions::default().solve).unwrap();
    let got = read(d.path().join("spectrum/clean-right_L16_clean.csv"));
    let energies: Vec<&str> = got.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(energies, s.pairs.iter().map(|p| num(p.energy)).collect::<Vec<_>>());
}

#[test]
fn disorder_table_round_trips() {
    let d = tempfile::tempdir().unwrap();
    ok(&edgelab(&["spectrum", "--index", "2", "--export-disorder"], d.path()));
    let table = d.path().join("spectrum/full_L16_r2_disorder.csv");
    let e = tempfile::tempdir().unwrap();
    ok(&edgelab(&["spectrum", "--disorder-table", table.to_str().unwrap()], e.path()));
    assert_eq!(read(d.path().join("spectrum/full_L16_r2.csv")), read(e.path().join("spectrum/full_L16_table.csv")));
}

#[test]
fn flux_kernel_and_decouple_match_the_library() {
    let d = tempfile::tempdir().unwrap();
    ok(&edgelab(&["flux-sweep", "--mirror-left", "--phis", "0,1.5707963267948966"], d.path()));
    let mut sym = ModelConfig::default();
    sym.wall_right = sym.wall_left;
    let f = flux_campaign(&sym, &[0.0, std::f64::consts::FRAC_PI_2]).unwrap();
    assert_eq!(read(d.path().join("flux-sweep/L16.csv")), csv(&flux_csv(&f)));

    ok(&edgelab(&["kernel-decay", "--z", "1+0i"], d.path()));
    let k = kernel_run(&ModelConfig::default(), (1.0, 0.0)).unwrap();
    assert_eq!(read(d.path().join("kernel-decay/L16.csv")), csv(&kernel_csv(&k)));

    ok(&edgelab(&["decouple", "--L", "16", "--z", "1+0.1i"], d.path()));
    let p = decouple_task(&ModelConfig::default(), Complex64::new(1.0, 0.1), None, &DecoupleOptions::default());
    assert_eq!(read(d.path().join("decouple/points.csv")), csv(&decouple_csv(&[p])));
}

#[test]
fn plot_data_has_one_series_per_column() {
    let d = tempfile::tempdir().unwrap();
    ok(&edgelab(&["branches", "--L", "16,25", "--plot-data"], d.path()));
    let p = read(d.path().join("plot/branches_r_n0.csv"));
    assert_eq!(p.lines().next().unwrap(), "k_L16,energy_L16,k_L25,energy_L25");
}

#[test]
fn manifest_inventories_every_file() {
    let d = tempfile::tempdir().unwrap();
    ok(&edgelab(&["kernel-decay"], d.path()));
    let m: serde_json::Value = serde_json::from_str(&read(d.path().join("manifest.json"))).unwrap();
    let files = m["files"].as_array().unwrap();
    for f in files {
        let data = fs::read(d.path().join(f["path"].as_str().unwrap())).unwrap();
        use sha2::Digest;
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(sha2::Sha256::digest(&data)));
    }
    let paths: Vec<&str> = files.iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert!(paths.contains(&"summary.csv") && paths.contains(&"kernel-decay/L16.csv"));
    assert_eq!(m["command"], "kernel-decay");
    assert_eq!(LabConfig::default().hash(), m["config_hash"].as_str().unwrap());
}

#[test]
fn window_violation_exits_with_usage_code() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.cfg");
    fs::write(&cfg, "[model]\ndelta = 0.3\nV0 = 0.1\n").unwrap();
    let o = edgelab(&["validate-config", "--config", cfg.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("V0 + epsilon + delta < B/2"));
}

#[test]
fn unknown_flag_and_key_are_usage_errors() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(edgelab(&["branches", "--bogus"], d.path()).status.code(), Some(2));
    assert_eq!(edgelab(&["branches", "--set", "model.nope=1"], d.path()).status.code(), Some(2));
    assert_eq!(edgelab(&["frobnicate"], d.path()).status.code(), Some(2));
}

#[test]
fn failed_property_exits_one_and_names_it() {
    let d = tempfile::tempdir().unwrap();
    let o = edgelab(&["wegner", "--deltas", "1e-12", "--n", "5"], d.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("wegner-bound"), "{err}");
    assert!(read(d.path().join("wegner/properties.csv")).contains("wegner-bound,false"));
}

#[test]
fn print_effective_is_loadable() {
    let d = tempfile::tempdir().unwrap();
    let o = edgelab(&["validate-config", "--print-effective", "--set", "model.V0=0.02"], d.path());
    ok(&o);
    let c = LabConfig::parse(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(c.model.v0, 0.02);
    assert_eq!(c.run.outdir, d.path().display().to_string());
}

#[test]
fn flags_beat_environment_beats_file() {
    let d = tempfile::tempdir().unwrap();
    let file = d.path().join("c.cfg");
    fs::write(&file, "run.seed = 1\nrun.outdir = from-file\n").unwrap();
    let env = |k: &str| match k {
        ENV_SEED => Some("2".to_string()),
        ENV_OUTDIR => Some("from-env".to_string()),
        _ => None,
    };
    let common = Common { config: Some(file.clone()), ..Default::default() };
    let c = resolve(&common, env).unwrap();
    assert_eq!((c.run.seed, c.run.outdir.as_str()), (2, "from-env"));
    let c = resolve(&common, |_| None).unwrap();
    assert_eq!((c.run.seed, c.run.outdir.as_str()), (1, "from-file"));
    let flags = Common { config: Some(file), seed: Some(3), outdir: Some("from-flag".into()), ..Default::default() };
    let c = resolve(&flags, env).unwrap();
    assert_eq!((c.run.seed, c.run.outdir.as_str()), (3, "from-flag"));
}

#[test]
fn environment_seed_reaches_the_manifest() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_edgelab")).args(["kernel-decay"]).env(ENV_OUTDIR, d.path()).env(ENV_SEED, "4242").output().unwrap();
    ok(&o);
    let m: serde_json::Value = serde_json::from_str(&read(d.path().join("manifest.json"))).unwrap();
    assert_eq!(m["master_seed"], 4242);
}
