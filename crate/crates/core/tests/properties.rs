use proptest::prelude::*;
use sdlab::constants::{c_p, conjugate, feller_threshold, interval_i, m_d};
use sdlab::feller::{simulate_paths, SimDrift, SimParams};
use sdlab::fields::{estimate_f, estimate_f_half, truncate, DriftSpec};
use sdlab::fit::loglog_fit;
use sdlab::kernel::{kernel_value, KernelProbe};
use sdlab::linop::{estimate_norm, random_start, NormEstimateOptions};
use sdlab::regularity::{test_functions, weak_identity_residual};
use sdlab::semigroup::{evolve, SemigroupParams};
use sdlab::spectral::{
    apply_multiplier, l2_norm_spectral, laplacian_apply, lp_norm, pairing, MultiplierSymbol,
};
use sdlab::theta::{
    pseudo_resolvent_residual, Factor, NeumannSettings, Representation, ResolventParams,
    ThetaAssembly,
};
use sdlab::{Complex64, Grid, GridFunction, GridVectorField};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn rel(a: &GridFunction, b: &GridFunction) -> f64 {
    lp_norm(&a.sub(b).unwrap(), 2.0).unwrap() / lp_norm(b, 2.0).unwrap()
}

fn zeta_strategy() -> impl Strategy<Value = Complex64> {
    (0.2f64..20.0, -30.0f64..30.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn hardy_assembly(grid: Grid, c: f64, zeta: Complex64) -> ThetaAssembly {
    let b = DriftSpec::Hardy { c }.sample(&grid).unwrap();
    ThetaAssembly::new(
        b,
        ResolventParams::new(2.5, zeta, 0.2, 0.1),
        Representation::Rp,
        NeumannSettings::default(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn parseval(seed in 0u64..1000, n in prop::sample::select(vec![4usize, 8, 16])) {
        let f = random_start(Grid::cube(n, 3.0), seed, 0);
        let a = lp_norm(&f, 2.0).unwrap();
        prop_assert!((a / l2_norm_spectral(&f) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resolvent_powers_compose(zeta in zeta_strategy(), a in 0.05f64..1.5, b in 0.05f64..1.5, seed in 0u64..100) {
        let f = random_start(Grid::cube(8, 2.0), seed, 1);
        let ra = MultiplierSymbol::resolvent_power(zeta, a);
        let rb = MultiplierSymbol::resolvent_power(zeta, b);
        let rab = MultiplierSymbol::resolvent_power(zeta, a + b);
        let two = apply_multiplier(&rb, &apply_multiplier(&ra, &f).unwrap()).unwrap();
        let one = apply_multiplier(&rab, &f).unwrap();
        prop_assert!(rel(&two, &one) < 1e-10);
    }

    #[test]
    fn resolvent_solves_shifted_laplace_equation(zeta in zeta_strategy(), seed in 0u64..100) {
        let f = random_start(Grid::cube(8, 2.0), seed, 2);
        let u = apply_multiplier(&MultiplierSymbol::resolvent_power(zeta, 1.0), &f).unwrap();
        let back = u.scaled(zeta).sub(&laplacian_apply(&u).unwrap()).unwrap();
        prop_assert!(rel(&back, &f) < 1e-10);
    }

    #[test]
    fn admissible_interval_contains_two_and_shrinks(d in 3usize..=10, s1 in 0.01f64..0.98, gap in 0.001f64..0.01, u in 0.001f64..0.999) {
        let md = m_d(d).unwrap();
        let s2 = (s1 + gap).min(0.999);
        let (lo1, hi1) = interval_i(s1 / md, d).unwrap();
        let (lo2, hi2) = interval_i(s2 / md, d).unwrap();
        prop_assert!(lo1 > 1.0 && lo1 < 2.0 && hi1 > 2.0);
        prop_assert!(lo1 <= lo2 && hi2 <= hi1);
        // The endpoints are Hölder conjugate.
        prop_assert!((conjugate(lo1) / hi1 - 1.0).abs() < 1e-9);
        let p = lo1 + u * (hi1 - lo1);
        let delta = s1 / md;
        prop_assert!(md * c_p(p) * delta < 1.0);
    }

    #[test]
    fn truncation_error_is_monotone(c in 0.05f64..1.0, n1 in 0.1f64..20.0, factor in 1.0f64..4.0) {
        let b = DriftSpec::Hardy { c }.sample(&Grid::cube(8, 2.0)).unwrap();
        let l1 = |n: f64| -> f64 {
            let diff = b.add(&truncate(&b, n).scaled(-1.0)).unwrap();
            diff.magnitude().iter().sum()
        };
        let n2 = n1 * factor;
        prop_assert!(l1(n2) <= l1(n1) + 1e-12);
        let bn = truncate(&b, n1);
        prop_assert!(bn.max_magnitude() <= n1 * (1.0 + 1e-12));
        prop_assert_eq!(truncate(&bn, n1), bn.clone());
        prop_assert_eq!(l1(b.max_magnitude() * 1.01), 0.0);
    }

    #[test]
    fn linearity_of_theta(zeta in zeta_strategy(), re in -3.0f64..3.0, im in -3.0f64..3.0, seed in 0u64..100) {
        let g = Grid::cube(8, 2.0);
        let theta = hardy_assembly(g, 0.2, zeta);
        let f = random_start(g, seed, 3);
        let h = random_start(g, seed, 4);
        let alpha = Complex64::new(re, im);
        let lhs = theta.apply_theta(&f.scaled(alpha).add(&h).unwrap()).unwrap();
        let rhs = theta.apply_theta(&f).unwrap().scaled(alpha).add(&theta.apply_theta(&h).unwrap()).unwrap();
        prop_assert!(rel(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn pseudo_resolvent_identity(z in zeta_strategy(), e in zeta_strategy(), seed in 0u64..100) {
        let g = Grid::cube(8, 2.0);
        let theta = hardy_assembly(g, 0.2, z);
        let f = random_start(g, seed, 5);
        prop_assert!(pseudo_resolvent_residual(&theta, z, e, &f).unwrap() < 1e-8);
    }

    #[test]
    fn free_evolution_preserves_mass(t in 0.01f64..2.0, steps in 1usize..16, seed in 0u64..100) {
        let g = Grid::cube(8, 2.0);
        let theta = ThetaAssembly::new(
            GridVectorField::zeros(g),
            ResolventParams::new(2.0, Complex64::new(1.0, 0.0), 0.0, 0.5),
            Representation::Rp,
            NeumannSettings::default(),
        )
        .unwrap();
        let f = random_start(g, seed, 6);
        let one = GridFunction::constant(g, Complex64::new(1.0, 0.0));
        let u = evolve(&theta, &SemigroupParams::new(t, steps), &f).unwrap();
        let (a, b) = (pairing(&u, &one).unwrap(), pairing(&f, &one).unwrap());
        prop_assert!((a - b).norm() <= 1e-10 * b.norm().max(1e-300));
    }

    #[test]
    fn weak_identity_is_scale_invariant(alpha in 0.01f64..100.0) {
        let g = Grid::cube(8, 2.0);
        let theta = hardy_assembly(g, 0.2, Complex64::new(1.0, 0.5));
        let f = random_start(g, 9, 0);
        let tests = test_functions(g, 2);
        let scaled: Vec<GridFunction> = tests.iter().map(|v| v.scaled(Complex64::new(alpha, 0.0))).collect();
        let a = weak_identity_residual(&theta, &f, &tests).unwrap();
        let b = weak_identity_residual(&theta, &f, &scaled).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            prop_assert!(x.residual < 1e-10 && (x.residual - y.residual).abs() < 1e-12);
        }
    }

    #[test]
    fn power_law_fit_recovers_exponent(k in -3.0f64..3.0, c in 0.1f64..10.0) {
        let xs: Vec<f64> = (0..6).map(|i| 10f64.powf(-3.0 + 0.5 * i as f64)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(k)).collect();
        let fit = loglog_fit(&xs, &ys).unwrap();
        prop_assert!((fit.slope - k).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(cfg(8))]

    #[test]
    fn estimator_scaling(s in 0.2f64..3.0) {
        let b = DriftSpec::Hardy { c: 0.3 }.sample(&Grid::cube(8, 2.0)).unwrap();
        let bs = b.scaled(s);
        let lam = [1.5];
        let half = estimate_f_half(&b, &lam).unwrap().delta;
        let half_s = estimate_f_half(&bs, &lam).unwrap().delta;
        prop_assert!((half_s / (s * half) - 1.0).abs() < 1e-6);
        let f = estimate_f(&b, &lam).unwrap().delta;
        let f_s = estimate_f(&bs, &lam).unwrap().delta;
        prop_assert!((f_s / (s * s * f) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn truncation_does_not_increase_class_estimates(n in 0.5f64..10.0) {
        let b = DriftSpec::Hardy { c: 0.3 }.sample(&Grid::cube(8, 2.0)).unwrap();
        let lam = [0.5, 4.0];
        let full = estimate_f_half(&b, &lam).unwrap();
        let cut = estimate_f_half(&truncate(&b, n), &lam).unwrap();
        for (a, c) in full.curve.iter().zip(&cut.curve) {
            prop_assert!(*c <= a * (1.0 + 1e-6));
        }
    }

    #[test]
    fn neumann_ratio_bounded_by_operator_norm(c in 0.05f64..0.3, zre in 0.5f64..4.0) {
        let g = Grid::cube(8, 2.0);
        let theta = hardy_assembly(g, c, Complex64::new(zre, 0.0));
        let out = theta.neumann_inverse(&random_start(g, 1, 7)).unwrap();
        let t = estimate_norm(&theta.factor(Factor::T), 2.5, 2.5, &NormEstimateOptions::default(), &[]).unwrap().value;
        if let Some(r) = out.observed_ratio(5) {
            prop_assert!(r <= t + 1e-3, "ratio {} > ‖T‖ {}", r, t);
        }
    }

    #[test]
    fn kernel_positive_and_decreasing(zeta in 0.05f64..20.0, gamma in 0.2f64..=2.0, r in 0.05f64..5.0) {
        let k1 = kernel_value(&KernelProbe::radial(3, r, Complex64::new(zeta, 0.0), gamma)).unwrap().value;
        let k2 = kernel_value(&KernelProbe::radial(3, 1.3 * r, Complex64::new(zeta, 0.0), gamma)).unwrap().value;
        prop_assert!(k1.re > 0.0 && k2.re > 0.0);
        prop_assert!(k2.re < k1.re);
    }

    #[test]
    fn kernel_conjugate_symmetry(re in 0.1f64..10.0, im in 0.0f64..10.0, r in 0.05f64..3.0) {
        let z = Complex64::new(re, im);
        let a = kernel_value(&KernelProbe::radial(3, r, z, 2.0)).unwrap().value;
        let b = kernel_value(&KernelProbe::radial(3, r, z.conj(), 2.0)).unwrap().value;
        prop_assert!((a - b.conj()).norm() <= 1e-9 * a.norm());
    }

    #[test]
    fn seeded_simulation_is_bitwise_reproducible(seed in 0u64..u64::MAX) {
        let spec = DriftSpec::Hardy { c: 0.2 };
        let drift = SimDrift::Spec { spec: &spec, center: vec![0.01, 0.0, 0.0] };
        let sp = SimParams::new(0.05, 1e-2, 300, seed, 10.0);
        let payoff = |x: &[f64]| x[0] * x[0];
        let a = simulate_paths(&drift, &sp, &[0.3, 0.0, 0.0], &payoff, false).unwrap();
        let b = simulate_paths(&drift, &sp, &[0.3, 0.0, 0.0], &payoff, false).unwrap();
        prop_assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        prop_assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }
}

#[test]
fn feller_threshold_at_most_one_with_equality_only_in_three_dimensions() {
    assert_eq!(feller_threshold(3).unwrap(), 1.0);
    for d in 4..=40 {
        assert!(feller_threshold(d).unwrap() < 1.0);
    }
}
