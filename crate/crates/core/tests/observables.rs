use edgelab_core::eigensolve::*;
use edgelab_core::experiments::embed_fiber;
use edgelab_core::model::*;
use edgelab_core::observables::*;
use edgelab_core::operators::*;
use edgelab_core::Error;
use faer::c64;
use proptest::prelude::*;

#[test]
fn bulk_landau_state_carries_no_current() {
    let cfg = ModelConfig::default();
    let grid = Grid::for_model(&cfg).unwrap();
    let spec = BranchSpec::lattice_adaptive(&cfg, &grid);
    let landau = assemble_on(Variant::Landau, &cfg, &grid, None).unwrap();
    for m in [-2, 0, 3] {
        let k = momentum(m, &cfg);
        let (e, x, phi) = fiber_state(Side::Left, 0, k, &cfg, &spec);
        let psi = plane_wave_state(&grid, m, &embed_fiber(&grid, &x, &phi).unwrap()).unwrap();
        assert!(average_velocity(&psi, &landau).unwrap().abs() < 1e-8);
        assert!(edgelab_core::linalg::residual(&landau, &psi, e) < 1e-8);
    }
}

#[test]
fn velocity_matches_independent_quadrature() {
    // <psi, v psi> for a plane wave e^{i q j} phi_i is sum_i |phi_i|^2 sin(q - theta_i)/hy
    let cfg = ModelConfig { flux: 0.4, ..ModelConfig::default() };
    let grid = Grid::for_model(&cfg).unwrap();
    let op = assemble_on(Variant::Clean(Side::Right), &cfg, &grid, None).unwrap();
    let phi: Vec<f64> = (0..grid.nx).map(|i| (-(grid.x(i) - 7.0).powi(2) / 2.0).exp()).collect();
    let n = phi.iter().map(|p| p * p).sum::<f64>().sqrt();
    let phi: Vec<f64> = phi.iter().map(|p| p / n).collect();
    let m = 118;
    let psi = plane_wave_state(&grid, m, &phi).unwrap();
    let q = 2.0 * std::f64::consts::PI * m as f64 / grid.ny as f64;
    let expect: f64 = (0..grid.nx)
        .map(|i| {
            let theta = (cfg.b * grid.x(i) - cfg.flux / cfg.lf()) * grid.hy;
            phi[i] * phi[i] * (q - theta).sin() / grid.hy
        })
        .sum();
    assert!((average_velocity(&psi, &op).unwrap() - expect).abs() < 1e-12);
}

#[test]
fn velocity_rejects_foreign_grid() {
    let cfg = ModelConfig::default();
    let op = assemble(Variant::Clean(Side::Left), &cfg, None).unwrap();
    let psi = vec![c64::new(1.0, 0.0); op.dim() - 1];
    assert!(matches!(average_velocity(&psi, &op), Err(Error::Input(_))));
    let other = Grid::new(op.grid.nx, op.grid.ny + 1, -10.0, 10.0, 16.0).unwrap();
    assert!(matches!(average_velocity_on(&psi, &other, &op), Err(Error::Input(_))));
}

#[test]
fn single_wall_states_are_localized_and_signed() {
    let cfg = ModelConfig::default().with_l(36);
    let grid = Grid::for_model(&cfg).unwrap();
    let cut = build_cutoffs(&cfg).unwrap();
    for side in [Side::Left, Side::Right] {
        let op = assemble_on(Variant::Clean(side), &cfg, &grid, None).unwrap();
        let s = solve_window(&op, cfg.window(), 1e-10).unwrap();
        let mut seen = 0;
        for p in &s.pairs {
            let o = observe(p, &op, &cut, &ClassifyRule::default()).unwrap();
            assert!((o.mass.total() - 1.0).abs() < 1e-12);
            if o.mass.of(side.opposite()) > 0.5 {
                continue;
            }
            seen += 1;
            assert!(o.mass.of(side) >= 0.99, "{o:?}");
            assert_eq!(o.class.side(), Some(side));
            assert_eq!(o.velocity.signum(), if side == Side::Left { -1.0 } else { 1.0 });
        }
        assert!(seen >= 3);
    }
}

#[test]
fn kernel_is_translation_invariant_across_the_seam() {
    let cfg = ModelConfig::default();
    let op = landau_reference(&cfg).unwrap();
    let z = c64::new(1.0, 0.0);
    let i0 = 20;
    let a = kernel_samples(&op, z, i0, 0, 7.0).unwrap();
    let b = kernel_samples(&op, z, i0, op.grid.ny / 2 + 3, 7.0).unwrap();
    assert_eq!(a.len(), b.len());
    for (p, q) in a.iter().zip(&b) {
        assert_eq!(p.dx, q.dx);
        assert!((p.r - q.r).abs() < 1e-12);
        assert!((p.magnitude - q.magnitude).abs() <= 1e-10 * p.magnitude.max(1e-30));
    }
}

#[test]
fn kernel_decays_at_least_at_the_lemma_rate() {
    for l in [16, 25] {
        let cfg = ModelConfig::default().with_l(l);
        let k = kernel_decay_probe(c64::new(cfg.b, 0.0), &cfg).unwrap();
        assert!(k.exp_rate >= cfg.b.sqrt() / 16.0, "{}", k.exp_rate);
        assert_eq!(k.gaussian_violations, 0);
        assert_eq!(k.exp_violations, 0);
        assert!(k.exp_fit.negative_with_confidence());
        assert!(k.samples.iter().any(|s| s.dy != 0.0 && s.dx == 0.0));
    }
}

#[test]
fn envelope_is_dominated_near_the_shell() {
    let cfg = ModelConfig::default();
    let k = kernel_decay_probe(c64::new(1.0, 0.3), &cfg).unwrap();
    for s in k.samples.iter().filter(|s| s.r >= k.envelope.core_radius) {
        assert!(s.magnitude <= (1.0 + 1e-9) * k.envelope.gaussian(s.r));
    }
}

#[test]
fn velocity_bound_against_hand_evaluation() {
    let cfg = ModelConfig { v0: 0.005, ..ModelConfig::default() };
    let grid = Grid::for_model(&cfg).unwrap();
    let spec = BranchSpec::lattice_adaptive(&cfg, &grid);
    let br = solve_branch_window(Side::Right, 0, &cfg, &spec, cfg.gap_window(), 5).unwrap();
    let e = 1.0;
    let b = velocity_lower_bound(e, &br, &cfg).unwrap();
    // hand evaluation from the branch table
    let star = br.points.iter().enumerate().min_by(|a, c| (a.1.energy - e).abs().total_cmp(&(c.1.energy - e).abs())).unwrap().0;
    let a = BOUND_NEIGHBORHOOD;
    let jmin = br.points[star - a..=star + a].iter().map(|p| p.slope.abs()).fold(f64::INFINITY, f64::min);
    let far = (br.points[star - a - 1].energy - e).abs().min((br.points[star + a + 1].energy - e).abs());
    let g = 0.5 - 0.2;
    let expect = jmin * (1.0 - 0.005f64.powi(2) * (1.0 / (g * g) + 1.0 / (far * far))) - 3.0 * 0.005 / g * (2.0 * 1.005f64).sqrt();
    assert!((b.raw - expect).abs() < 1e-13);
    assert!(b.value > 0.0);
}

#[test]
fn bound_grows_as_disorder_shrinks() {
    let base = ModelConfig::default();
    let grid = Grid::for_model(&base).unwrap();
    let spec = BranchSpec::lattice_adaptive(&base, &grid);
    let br = solve_branch_window(Side::Left, 0, &base, &spec, base.gap_window(), 5).unwrap();
    let v = |v0: f64| velocity_lower_bound(1.0, &br, &ModelConfig { v0, ..base.clone() }).unwrap().raw;
    assert!(v(0.001) > v(0.01) && v(0.01) > v(0.05));
    assert!(v(0.001) > 0.0);
}

fn random_state(grid: &Grid, seed: u64) -> Vec<c64> {
    let v = gaussian_vector(grid.len(), seed);
    let n = edgelab_core::linalg::norm(&v);
    v.into_iter().map(|z| z / n).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn masses_partition_unity(seed in 0u64..10_000, l in prop::sample::select(vec![16u32, 25, 36])) {
        let cfg = ModelConfig::default().with_l(l);
        let grid = Grid::for_model(&cfg).unwrap();
        let m = localization_profile(&random_state(&grid, seed), &grid, &build_cutoffs(&cfg).unwrap()).unwrap();
        prop_assert!((m.total() - 1.0).abs() < 1e-12);
        prop_assert!(m.left >= 0.0 && m.bulk >= 0.0 && m.right >= 0.0);
    }

    #[test]
    fn classification_respects_sign(j in -2.0f64..2.0, left in 0.0f64..1.0, bulk in 0.0f64..1.0) {
        let right = (1.0 - left - bulk).max(0.0);
        let mass = SideMass { left, bulk, right };
        let (class, _) = classify(j, &mass, 1.0, &ClassifyRule::default());
        match class {
            EdgeClass::LeftEdge => prop_assert!(j < 0.0),
            EdgeClass::RightEdge => prop_assert!(j > 0.0),
            EdgeClass::Ambiguous => {}
        }
    }

    #[test]
    fn velocity_is_real_and_bounded(seed in 0u64..10_000) {
        let cfg = ModelConfig::default();
        let op = assemble(Variant::Clean(Side::Left), &cfg, None).unwrap();
        let j = average_velocity(&random_state(&op.grid, seed), &op).unwrap();
        prop_assert!(j.is_finite() && j.abs() <= 1.0 / op.grid.hy + 1e-12);
    }
}
