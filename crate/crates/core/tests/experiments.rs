use edgelab_core::experiments::*;
use edgelab_core::model::*;
use edgelab_core::Error;
use faer::c64;
use std::f64::consts::PI;

fn symmetric() -> ModelConfig {
    let d = ModelConfig::default();
    ModelConfig { wall_right: d.wall_left, ..d }
}

#[test]
fn clean_sample_matches_at_the_tolerance_floor() {
    let cfg = ModelConfig::default();
    let opts = EdgeOptions::default();
    let t = edge_task(&cfg, None, &opts).unwrap();
    assert!(!t.matches.is_empty());
    assert!(t.unmatched.is_empty(), "{:?}", t.unmatched);
    assert_eq!(t.ambiguous(), 0);
    assert_eq!(t.side_disagreements(), 0);
    for m in &t.matches {
        assert!(m.raw_displacement <= opts.cap());
        assert!(m.projector_distance < 1e-6, "{m:?}");
        assert_eq!(m.rank_full, m.rank_single);
    }
}

#[test]
fn disordered_task_is_reproducible() {
    let cfg = ModelConfig::default();
    let opts = EdgeOptions::default();
    let a = edge_task(&cfg, Some(11), &opts).unwrap();
    let b = edge_task(&cfg, Some(11), &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.unmatched.is_empty());
    for m in &a.matches {
        assert_eq!(m.velocity_full.signum(), if m.side == Side::Left { -1.0 } else { 1.0 });
    }
    let r1 = edge_report(vec![a.clone(), b.clone()]);
    let r2 = edge_report(vec![b, a]);
    assert_eq!(r1, r2);
}

#[test]
fn symmetric_walls_violate_the_hypothesis() {
    assert!(matches!(edge_task(&symmetric(), Some(1), &EdgeOptions::default()), Err(Error::Hypothesis1 { .. })));
}

#[test]
fn flux_sweep_examples() {
    let cfg = symmetric();
    let r = run_flux_sweep(&cfg, &[0.0, PI / 2.0]).unwrap();
    assert!(r.rows[0].same_m_gap < 1e-10);
    assert!(r.rows[1].scaled_set > 10.0 * r.rows[0].scaled_set.max(1e-12));
    assert_eq!(r.phi_star, PI / 2.0);
    assert!(flux_period_defect(&cfg, 0.0, 2.0 * PI, 1e-3).unwrap() < 1e-8);
    assert!(matches!(run_flux_sweep(&ModelConfig::default(), &[0.0]), Err(Error::Precondition(_))));
}

#[test]
fn wegner_hits_vanish_as_the_interval_shrinks() {
    let cfg = ModelConfig::default();
    let r = run_wegner(&cfg, None, &[1e-12, 1e-4, 4e-4], 40, Side::Left, 5).unwrap();
    assert_eq!(r.failures, 0);
    assert_eq!(r.rows[0].hits, 0);
    assert!(r.rows.windows(2).all(|w| w[0].hits <= w[1].hits));
    assert!(r.rows[1..].iter().all(|row| row.pass));
}

#[test]
fn wegner_interval_on_a_clean_level_is_rejected() {
    let cfg = ModelConfig::default();
    let grid = edgelab_core::operators::Grid::for_model(&cfg).unwrap();
    let levels = clean_levels(Side::Left, &cfg, &grid).unwrap();
    let (lo, hi) = cfg.window();
    let e = levels.iter().copied().find(|e| *e > lo + 0.05 && *e < hi - 0.05).unwrap();
    assert!(matches!(wegner_setup(Side::Left, &cfg, &grid, e, &[1e-4]), Err(Error::Precondition(_))));
    assert!(matches!(wegner_setup(Side::Left, &cfg, &grid, 0.5, &[1e-4]), Err(Error::Precondition(_))));
}

#[test]
fn clean_decoupling_decreases_with_size() {
    let z = c64::new(1.0, 0.1);
    let opts = DecoupleOptions::default();
    let a = decouple_task(&ModelConfig::default(), z, None, &opts);
    let b = decouple_task(&ModelConfig::default().with_l(36), z, None, &opts);
    assert!(a.converged && b.converged);
    assert!(b.norm.unwrap() < a.norm.unwrap(), "{a:?} {b:?}");
}

#[test]
fn decoupling_skips_failed_preconditions() {
    let bad = ModelConfig { delta: 0.4, ..ModelConfig::default() };
    let p = decouple_task(&bad, c64::new(1.0, 0.1), Some(1), &DecoupleOptions::default());
    assert!(p.norm.is_none());
    assert!(p.skipped.unwrap().contains("window condition"));
}
