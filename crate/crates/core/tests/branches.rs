use edgelab_core::eigensolve::*;
use edgelab_core::experiments::*;
use edgelab_core::model::*;
use edgelab_core::operators::Grid;
use edgelab_core::Error;

fn symmetric() -> ModelConfig {
    let d = ModelConfig::default();
    ModelConfig { wall_right: d.wall_left, ..d }
}

#[test]
fn bulk_limits_reach_the_lowest_landau_level() {
    let cfg = ModelConfig::default();
    let spec = BranchSpec::continuum(&cfg);
    // guiding centers 6 magnetic lengths inside the walls
    let (el, _) = branch_point(Side::Left, 0, cfg.b * (-0.5 * cfg.sep() + 6.0), &cfg, &spec);
    let (er, _) = branch_point(Side::Right, 0, cfg.b * (0.5 * cfg.sep() - 6.0), &cfg, &spec);
    assert!((el - 0.5).abs() < 1e-3 && (er - 0.5).abs() < 1e-3, "{el} {er}");
    let (e1, _) = branch_point(Side::Left, 1, 0.0, &cfg, &spec);
    assert!((e1 - 1.5).abs() < 1e-3);
}

#[test]
fn branches_are_monotone_with_opposite_slopes() {
    for l in [16, 25, 36] {
        let cfg = ModelConfig::default().with_l(l);
        let spec = BranchSpec::continuum(&cfg);
        let left = branch_table(Side::Left, 0, &cfg, &spec).unwrap();
        let right = branch_table(Side::Right, 0, &cfg, &spec).unwrap();
        assert!(left.is_strictly_monotone() && right.is_strictly_monotone());
        let (lo, hi) = cfg.gap_window();
        assert!(left.within(lo, hi).all(|p| p.slope < 0.0));
        assert!(right.within(lo, hi).all(|p| p.slope > 0.0));
        assert!(left.points.windows(2).all(|w| w[1].m == w[0].m + 1));
    }
}

#[test]
fn mirror_identity_for_symmetric_walls() {
    let cfg = symmetric();
    let spec = BranchSpec::continuum(&cfg);
    for m in -40..=-5 {
        let (l, _) = branch_point(Side::Left, 0, momentum(m, &cfg), &cfg, &spec);
        let (r, _) = branch_point(Side::Right, 0, momentum(-m, &cfg), &cfg, &spec);
        assert!((l - r).abs() < 1e-10, "m={m}: {l} vs {r}");
    }
}

#[test]
fn spacing_scaled_by_l_is_positive_and_stable() {
    for side in [Side::Left, Side::Right] {
        let mut scaled = Vec::new();
        for l in [16, 25, 36, 49] {
            let cfg = ModelConfig::default().with_l(l);
            let spec = BranchSpec::continuum(&cfg);
            let s = summarize_branch(&branch_table(side, 0, &cfg, &spec).unwrap(), &cfg, &spec);
            scaled.push(s.scaled_spacing.unwrap());
        }
        assert!(scaled.iter().all(|s| *s > 0.0));
        assert!(relative_spread(&scaled) <= 0.3, "{side:?} {scaled:?}");
    }
}

#[test]
fn branches_are_smooth_and_isolated_from_the_next_band() {
    for l in [16, 36] {
        let cfg = ModelConfig::default().with_l(l);
        let spec = BranchSpec::continuum(&cfg);
        for side in [Side::Left, Side::Right] {
            let s = summarize_branch(&branch_table(side, 0, &cfg, &spec).unwrap(), &cfg, &spec);
            assert!(s.max_second_difference < 0.2);
            assert!(!s.n1_in_window);
            assert!(s.level_gap > 1.0);
            assert!(s.bulk_error < 1e-3);
        }
    }
}

#[test]
fn second_differences_shrink_with_l() {
    let d2 = |l| {
        let cfg = ModelConfig::default().with_l(l);
        let spec = BranchSpec::continuum(&cfg);
        summarize_branch(&branch_table(Side::Left, 0, &cfg, &spec).unwrap(), &cfg, &spec).max_second_difference
    };
    assert!(d2(36) < d2(16));
}

#[test]
fn hellmann_feynman_on_the_grid() {
    for l in [16, 25] {
        let cfg = ModelConfig::default().with_l(l);
        let grid = Grid::for_model(&cfg).unwrap();
        for side in [Side::Left, Side::Right] {
            let rows = hellmann_feynman(side, &cfg, &grid).unwrap();
            assert!(rows.len() >= 3);
            for r in rows {
                assert!(r.deviation <= 1e-4, "{r:?}");
                assert!(r.residual < 1e-8);
                assert_eq!(r.velocity.signum(), if side == Side::Left { -1.0 } else { 1.0 });
            }
        }
    }
}

#[test]
fn lattice_and_continuum_branches_agree_at_grid_resolution() {
    let cfg = ModelConfig::default();
    let grid = Grid::for_model(&cfg).unwrap();
    let c = BranchSpec::continuum(&cfg);
    let a = BranchSpec::lattice_adaptive(&cfg, &grid);
    for m in [-25, -20, -15] {
        let k = momentum(m, &cfg);
        let (e1, _) = branch_point(Side::Left, 0, k, &cfg, &c);
        let (e2, _) = branch_point(Side::Left, 0, k, &cfg, &a);
        assert!((e1 - e2).abs() < 2e-2, "{e1} {e2}");
    }
}

#[test]
fn empty_range_is_input_error() {
    let cfg = ModelConfig::default();
    #[allow(clippy::reversed_empty_ranges)]
    let r = solve_branch(Side::Left, 0, 3..=2, &cfg, &BranchSpec::continuum(&cfg));
    assert!(matches!(r, Err(Error::Input(_))));
}

#[test]
fn clean_levels_cover_the_grid_spectrum() {
    let cfg = ModelConfig::default();
    let grid = Grid::for_model(&cfg).unwrap();
    let op = edgelab_core::operators::assemble_on(edgelab_core::operators::Variant::Clean(Side::Left), &cfg, &grid, None).unwrap();
    let w = cfg.window();
    let levels = clean_levels(Side::Left, &cfg, &grid).unwrap();
    let inside: Vec<f64> = levels.iter().copied().filter(|e| *e > w.0 && *e < w.1).collect();
    let s = solve_window(&op, w, 1e-10).unwrap();
    assert_eq!(inside.len(), s.len());
    for (a, b) in inside.iter().zip(s.energies()) {
        assert!((a - b).abs() < 1e-9);
    }
}
