use maxprod_core::kernels::moment_over;
use maxprod_core::signals::PiecewisePolynomial;
use maxprod_core::{
    luxemburg_norm, mean_values, modular, moment, run_convergence, ConvergenceSetup, Domain,
    KantorovichOperator, Kernel, OperatorConfig, PhiFunction, Signal,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn phi_strategy() -> impl Strategy<Value = PhiFunction<f64>> {
    prop_oneof![
        (1.0f64..4.0).prop_map(|p| PhiFunction::power(p).unwrap()),
        (1.0f64..3.0, 0.0f64..2.0).prop_map(|(a, b)| PhiFunction::zygmund(a, b).unwrap()),
        (1.0f64..2.5).prop_map(|g| PhiFunction::exponential(g).unwrap()),
    ]
}

fn kernel_strategy() -> impl Strategy<Value = Kernel<f64>> {
    prop_oneof![
        Just(Kernel::fejer()),
        Just(Kernel::de_la_vallee_poussin()),
        (4u32..=8).prop_map(|n| Kernel::bspline(n).unwrap()),
    ]
}

fn signal(seed: u64) -> Signal<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Signal::piecewise(
        "random",
        PiecewisePolynomial::random(&mut rng, 0.0, 1.0, 3, 3),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_is_a_convex_phi_function(phi in phi_strategy(), u in 0.0f64..5.0, v in 0.0f64..5.0, t in 0.0f64..1.0) {
        prop_assert_eq!(phi.evaluate(0.0), 0.0);
        let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
        prop_assert!(phi.evaluate(lo) <= phi.evaluate(hi));
        prop_assert!(phi.convex());
        let mid = phi.evaluate(t * u + (1.0 - t) * v);
        let chord = t * phi.evaluate(u) + (1.0 - t) * phi.evaluate(v);
        prop_assert!(mid <= chord * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn kernels_are_even(kernel in kernel_strategy(), x in -20.0f64..20.0) {
        prop_assert!((kernel.evaluate(x) - kernel.evaluate(-x)).abs() <= 1e-15);
    }

    #[test]
    fn operator_is_monotone_subadditive_and_homogeneous(
        kernel in kernel_strategy(),
        n in prop::sample::select(vec![4u64, 8, 16, 32]),
        seeds in (any::<u64>(), any::<u64>()),
        lambda in 0.0f64..20.0,
        x in 0.0f64..=1.0,
    ) {
        let cfg = OperatorConfig::new(kernel, n, Domain::unit()).unwrap();
        let (f, h) = (signal(seeds.0), signal(seeds.1));
        let k = |s: &Signal<f64>| KantorovichOperator::new(cfg.clone(), s).unwrap().eval(x).unwrap();
        let (kf, kh) = (k(&f), k(&h));
        prop_assert!(kf <= k(&f.add(&h).unwrap()) + 1e-12);
        prop_assert!(k(&f.add(&h).unwrap()) <= kf + kh + 1e-12);
        prop_assert!((kf - kh).abs() <= k(&f.abs_diff(&h).unwrap()) + 1e-12);
        prop_assert!((k(&f.scale(lambda)) - lambda * kf).abs() <= 1e-12 * (1.0 + lambda * kf));
    }

    #[test]
    fn operator_stays_within_signal_range(kernel in kernel_strategy(), seed in any::<u64>(), x in 0.0f64..=1.0) {
        let f = signal(seed);
        let table = mean_values(&f, 16).unwrap();
        let v = KantorovichOperator::new(OperatorConfig::new(kernel, 16, Domain::unit()).unwrap(), &f)
            .unwrap()
            .eval(x)
            .unwrap();
        prop_assert!(v >= table.min_value() - 1e-12 && v <= table.max_value() + 1e-12);
    }

    #[test]
    fn mean_values_average_the_cells(seed in any::<u64>(), n in 1u64..40) {
        let f = signal(seed);
        let table = mean_values(&f, n).unwrap();
        let total: f64 = (0..n as i64).map(|k| table.get(k)).sum::<f64>() / n as f64;
        let integral = modular(&PhiFunction::power(1.0).unwrap(), &f, None).unwrap().to_real();
        prop_assert!((total - integral).abs() <= 1e-10);
    }

    #[test]
    fn modular_is_monotone_in_scale(phi in phi_strategy(), seed in any::<u64>(), l1 in 0.0f64..3.0, l2 in 0.0f64..3.0) {
        let f = signal(seed);
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let a = modular(&phi, &f.scale(lo), None).unwrap().to_real();
        let b = modular(&phi, &f.scale(hi), None).unwrap().to_real();
        prop_assert!(a <= b * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn unit_ball_has_modular_at_most_one(phi in phi_strategy(), seed in any::<u64>(), scale in 0.1f64..10.0) {
        let f = signal(seed).scale(scale);
        let norm = luxemburg_norm(&phi, &f, None, 1e-10).unwrap();
        prop_assume!(norm > 0.0);
        let unit = f.scale(1.0 / norm);
        prop_assert!(modular(&phi, &unit, None).unwrap().to_real() <= 1.0 + 1e-6);
    }
}

#[test]
fn moment_outer_supremum_is_shift_invariant() {
    for kernel in [
        Kernel::<f64>::fejer(),
        Kernel::de_la_vallee_poussin(),
        Kernel::bspline(4).unwrap(),
    ] {
        for beta in [0.0, 1.0, 2.0] {
            let tol = 1e-8;
            let unit = moment(&kernel, beta, tol).unwrap();
            let wide = moment_over(&kernel, beta, tol, (-5.0, 5.0)).unwrap();
            match (unit.finite(), wide.finite()) {
                (Some(u), Some(w)) => assert!(
                    (u - w).abs() <= 2.0 * tol,
                    "{} beta={beta}: {u} vs {w}",
                    kernel.name()
                ),
                (None, None) => {}
                other => panic!(
                    "{} beta={beta}: finiteness disagrees {other:?}",
                    kernel.name()
                ),
            }
        }
    }
}

#[test]
fn convergence_reports_are_deterministic() {
    let setup = ConvergenceSetup::new(
        Kernel::fejer(),
        PhiFunction::power(2.0).unwrap(),
        1.0,
        vec![8, 16, 32],
    );
    let f = Signal::step(0.0, 1.0, 0.5);
    let a = run_convergence(&f, &setup).unwrap();
    let b = run_convergence(&f, &setup).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
}

#[test]
fn single_precision_operator_reproduces_constants() {
    let cfg = OperatorConfig::<f32>::new(Kernel::fejer(), 16, Domain::unit()).unwrap();
    let op = KantorovichOperator::new(cfg, &Signal::constant(2.5f32)).unwrap();
    for i in 0..=20 {
        let v = op.eval(i as f32 / 20.0).unwrap();
        assert!((v - 2.5).abs() <= 1e-5, "{v}");
    }
    let norm = luxemburg_norm(
        &PhiFunction::<f32>::power(2.0).unwrap(),
        &Signal::ramp(),
        None,
        1e-5,
    )
    .unwrap();
    assert!((norm - (1.0f32 / 3.0).sqrt()).abs() <= 1e-4, "{norm}");
}

#[test]
fn real_line_operator_vanishes_away_from_support() {
    let f = Signal::hat();
    let cfg = OperatorConfig::new(Kernel::bspline(4).unwrap(), 32, Domain::RealLine).unwrap();
    let op = KantorovichOperator::new(cfg, &f).unwrap();
    let far = op.eval(50.0).unwrap();
    assert_eq!(far, 0.0);
    assert!(op.eval(0.0).unwrap() > 0.9);
}
