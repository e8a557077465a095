use delaybound::analysis::{
    build_perturbed_scalar, estimate_scalar_radius, verify_pointwise_ordering, Criterion, RadiusSettings, Series,
};
use delaybound::config::{parse_config, PAPER_6_1, PAPER_6_1_B};
use delaybound::dde::{self, History, ToleranceSettings};
use delaybound::linalg::euclidean_norm;
use delaybound::linear_aux::{cauchy_function, LinearScalarDDE};
use delaybound::majorant::{PolynomialMajorant, PolynomialTerm};
use delaybound::reduction::{c_of_t, compute_fundamental_matrix, reduce_system, CoefficientMode};
use delaybound::system::{ScalarDelaySystem, VectorDelaySystem};
use delaybound::timefn::{MatrixFn, TimeFn};
use proptest::prelude::*;

fn tight() -> ToleranceSettings {
    ToleranceSettings::default().with_rtol(1e-8).with_atol(1e-11)
}

/// `y' = p y + c (a y(t - h) + k y(t - h)^3 + F0 |sin 3t|)`.
fn scalar_form(p: f64, c: f64, a: f64, k: f64, h: f64, f0: f64) -> ScalarDelaySystem {
    let mut l = PolynomialMajorant::zero(2);
    l.push_linear(TimeFn::Const(a), 1);
    l.push_term(PolynomialTerm::new(TimeFn::Const(k), vec![0, 3])).unwrap();
    ScalarDelaySystem::new(TimeFn::Const(p), TimeFn::Const(c), l, vec![TimeFn::Const(h)])
        .with_forcing(f0, TimeFn::from_fn(|t| (3.0 * t).sin().abs()))
}

fn bundled_system(text: &str) -> VectorDelaySystem {
    parse_config(text).unwrap().system.unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solutions_are_monotone_in_constant_history(
        p in -3.0f64..-1.0, c in 1.0f64..2.0, a in 0.0f64..0.4, k in 0.0f64..0.3,
        h in 0.1f64..1.0, f0 in 0.0f64..0.5, q1 in 0.0f64..1.5, dq in 0.0f64..0.5,
    ) {
        let ss = scalar_form(p, c, a, k, h, f0);
        let t_end = 8.0;
        let grid = dde::uniform_grid(0.0, t_end, 801);
        let lo = ss.clone().with_constant_history(q1).integrate(t_end, &tight()).unwrap();
        let hi = ss.with_constant_history(q1 + dq).integrate(t_end, &tight()).unwrap();
        let lo = lo.scalar_on_grid(&grid).unwrap();
        let hi = hi.scalar_on_grid(&grid).unwrap();
        for (y1, y2) in lo.iter().zip(&hi) {
            // +inf past a blow-up of the larger solution dominates.
            prop_assert!(y1 <= &(y2 + 1e-7), "{} > {}", y1, y2);
        }
    }

    #[test]
    fn dominating_right_side_gives_larger_solution(
        p in -3.0f64..-1.0, a in 0.0f64..0.4, k in 0.0f64..0.3, h in 0.1f64..1.0,
        extra in 0.0f64..0.5, q in 0.0f64..1.0, dq in 0.0f64..0.3,
    ) {
        let small = scalar_form(p, 1.0, a, k, h, 0.2).with_constant_history(q);
        let large = scalar_form(p, 1.0, a + extra, k, h, 0.2 + extra).with_constant_history(q + dq);
        let t_end = 8.0;
        let grid = dde::uniform_grid(0.0, t_end, 801);
        let u1 = small.integrate(t_end, &tight()).unwrap().scalar_on_grid(&grid).unwrap();
        let u2 = large.integrate(t_end, &tight()).unwrap().scalar_on_grid(&grid).unwrap();
        for (x, y) in u1.iter().zip(&u2) {
            prop_assert!(x <= &(y + 1e-7));
        }
    }

    #[test]
    fn condition_number_is_at_least_one(entries in proptest::collection::vec(-1.0f64..1.0, 4)) {
        let a = MatrixFn::new(2, entries.into_iter().map(TimeFn::Const).collect());
        let w = compute_fundamental_matrix(&a, 0.0, 2.0, &ToleranceSettings::default()).unwrap();
        for k in 0..=20 {
            let c = c_of_t(&w, 0.1 * k as f64).unwrap();
            prop_assert!(c >= 1.0 - 1e-12, "c = {}", c);
        }
    }

    #[test]
    fn autonomous_bound_dominates_scalar_bound(r in 0.01f64..2.0, phi in 0.0..std::f64::consts::TAU, case_b in any::<bool>()) {
        let vs = bundled_system(if case_b { PAPER_6_1_B } else { PAPER_6_1 })
            .with_constant_history(vec![r * phi.cos(), r * phi.sin()]);
        let t_end = 20.0;
        let tol = ToleranceSettings::default();
        let red = reduce_system(&vs, &CoefficientMode::Auto, t_end, &tol, 1e-3).unwrap();
        let y = red.scalar.integrate(t_end, &tol).unwrap();
        let y_hat = red.autonomous.integrate(t_end, &tol).unwrap();
        let grid = dde::uniform_grid(0.0, t_end, 1000);
        let hist = dde::uniform_grid(-0.5, 0.0, 11);
        let series = vec![
            Series::scalar("y", &y, &red.scalar.history, &grid, &hist).unwrap(),
            Series::scalar("y_hat", &y_hat, &red.autonomous.history, &grid, &hist).unwrap(),
        ];
        let report = verify_pointwise_ordering(series, &grid, 1e-6).unwrap();
        prop_assert!(report.holds, "max violation {}", report.max_violation);
    }

    #[test]
    fn cauchy_function_is_nonnegative(
        rate in -3.0f64..0.0, b in 0.0f64..1.0, h in 0.1f64..1.0, s in 0.0f64..2.0,
    ) {
        let sys = LinearScalarDDE::new(TimeFn::Const(rate), vec![(TimeFn::Const(b), TimeFn::Const(h))]);
        let traj = cauchy_function(&sys, s, s + 10.0, &tight()).unwrap();
        let values = traj.scalar_on_grid(&dde::uniform_grid(s, s + 10.0, 1001)).unwrap();
        prop_assert!(values.iter().all(|&v| v >= -1e-9));
    }

    #[test]
    fn bisection_bracket_reverifies(p in 1.0f64..4.0, k in 0.5f64..3.0) {
        let ss = scalar_form(-p, 1.0, 0.0, k, 0.5, 0.0);
        let settings = RadiusSettings { horizon: 20.0, ..RadiusSettings::default() };
        let r = estimate_scalar_radius(&ss, 20.0, &settings).unwrap();
        let verdict = |q: f64| {
            let traj = ss.clone().with_constant_history(q).integrate(20.0, &settings.tol).unwrap();
            settings.criterion.accepts(&traj, q).unwrap()
        };
        prop_assert!(!r.unbracketed_above);
        prop_assert!(verdict(r.lo));
        prop_assert!(!verdict(r.hi));
        // Delayed cubic at the equilibrium p y = k y^3.
        prop_assert!(r.lo <= (p / k).sqrt() + 1e-9);
    }
}

#[test]
fn scalar_history_is_the_exact_norm_of_the_vector_history() {
    let vs = bundled_system(PAPER_6_1).with_history(History::Expression(vec![
        TimeFn::from_fn(|t| 0.3 * (2.0 * t).cos()),
        TimeFn::from_fn(|t| 0.2 + 0.1 * t),
    ]));
    let red = reduce_system(&vs, &CoefficientMode::Auto, 10.0, &ToleranceSettings::default(), 1e-3).unwrap();
    for t in dde::uniform_grid(-0.5, 0.0, 1000) {
        assert_eq!(red.scalar.history.eval(t)[0], euclidean_norm(&vs.history.eval(t)));
    }
}

#[test]
fn region_inclusion_on_bounded_criterion() {
    let vs = bundled_system(PAPER_6_1).homogeneous();
    let settings = RadiusSettings {
        criterion: Criterion::Bounded,
        horizon: 20.0,
        ..RadiusSettings::default()
    };
    let red = reduce_system(&vs, &CoefficientMode::Auto, 20.0, &settings.tol, 1e-3).unwrap();
    let scalar = estimate_scalar_radius(&red.scalar, 100.0, &settings).unwrap();
    let angles: Vec<f64> = (0..16).map(|k| k as f64 * std::f64::consts::PI / 8.0).collect();
    let region = delaybound::analysis::estimate_vector_region(&vs, 100.0, &angles, &settings).unwrap();
    let min = region.min_radius();
    assert!(scalar.value <= min + 2.0 * settings.bisect_tol * min, "{} vs {min}", scalar.value);
}

fn stable_instance() -> (VectorDelaySystem, ScalarDelaySystem) {
    let vs = bundled_system(PAPER_6_1).homogeneous().with_constant_history(vec![0.04, 0.03]);
    let red = reduce_system(&vs, &CoefficientMode::Auto, 30.0, &ToleranceSettings::default(), 1e-3).unwrap();
    (vs, red.scalar)
}

#[test]
fn small_persistent_perturbation_keeps_solution_small() {
    let (_, ss) = stable_instance();
    let delta = PolynomialMajorant::perturbation(1, vec![PolynomialTerm::new(TimeFn::Const(1e-3), vec![0])]).unwrap();
    let perturbed = build_perturbed_scalar(&ss, &delta, vec![]).unwrap();
    let z = perturbed.integrate(30.0, &ToleranceSettings::default()).unwrap();
    let sup = dde::sup_norm_on_interval(&z, 0.0, 30.0, 3000).unwrap();
    assert!(sup < 0.1, "sup z = {sup}");
    let tail = dde::sup_norm_on_interval(&z, 25.0, 30.0, 500).unwrap();
    assert!(tail > 0.0 && tail < 0.01, "tail = {tail}");
}

#[test]
fn perturbed_delay_run_completes_and_stays_near_the_unperturbed_one() {
    let (_, ss) = stable_instance();
    let mut l_r = PolynomialMajorant::zero(2);
    l_r.push_term(PolynomialTerm::new(TimeFn::Const(0.01), vec![0, 1])).unwrap();
    let perturbed = build_perturbed_scalar(&ss, &l_r, vec![TimeFn::Const(0.51)]).unwrap();
    let tol = ToleranceSettings::default();
    let z = perturbed.integrate(30.0, &tol).unwrap();
    let y = ss.integrate(30.0, &tol).unwrap();
    assert!(!z.blew_up());
    let grid = dde::uniform_grid(0.0, 30.0, 301);
    let z = z.scalar_on_grid(&grid).unwrap();
    let y = y.scalar_on_grid(&grid).unwrap();
    // The extra term is nonnegative, so the perturbed bound sits above.
    assert!(z.iter().zip(&y).all(|(a, b)| a + 1e-7 >= *b));
    assert!(z.iter().zip(&y).all(|(a, b)| a - b < 0.01));
}
