use std::sync::Arc;

use evosemi::dynamics::{DdeEvolution, Diffusion, Drift};
use evosemi::observables::{apply, Observable, TestFunction};
use evosemi::semigroup::*;
use evosemi::{PathKind, SampledPath, StatePoint};

const DT: f64 = 0.01;

fn markov(drift: Drift, sigma: f64, n: usize, seed: u64) -> ExpectationSpec {
    let kind = ExpectationKind::Markov { drift, diffusion: Diffusion::constant(1, sigma) };
    ExpectationSpec::new(kind, MonteCarlo { n_paths: n, seed, dt: DT, horizon: 6.0 }).unwrap()
}

fn delay(sigma: f64, n: usize, seed: u64) -> ExpectationSpec {
    let kind = ExpectationKind::Delay {
        drift: Drift::discrete_delay(1.0, 1.0, |y, o| o[0] = y[0]),
        diffusion: Diffusion::constant(1, sigma),
        h: 1.0,
    };
    ExpectationSpec::new(kind, MonteCarlo { n_paths: n, seed, dt: DT, horizon: 3.0 }).unwrap()
}

fn dde() -> ExpectationSpec {
    let phi = DdeEvolution { drift: Drift::discrete_delay(1.0, 1.0, |y, o| o[0] = -y[0].sin()) };
    ExpectationSpec::new(
        ExpectationKind::Deterministic(Arc::new(phi)),
        MonteCarlo { n_paths: 1, seed: 0, dt: DT, horizon: 3.0 },
    )
    .unwrap()
}

fn wavy() -> SampledPath {
    SampledPath::from_fn(PathKind::Continuous, -2.0, 0.5, DT, 1, |t| vec![0.3 + (2.0 * t).sin()]).unwrap()
}

fn flat_at(v: f64) -> SampledPath {
    SampledPath::constant(PathKind::Continuous, -2.0, 0.0, DT, &[v]).unwrap()
}

fn cos() -> TestFunction {
    TestFunction::cosine(1.0)
}

#[test]
fn heat_expectation_of_cosine() {
    let spec = markov(Drift::zero(), 1.0, 20_000, 1);
    let e = expectation(&spec, &Observable::eval(cos(), 1.0), &flat_at(0.0)).unwrap();
    assert!((e.mean - (-0.5f64).exp()).abs() <= 4.0 * e.stderr + 2.0 * DT, "{e:?}");
}

#[test]
fn heat_semigroup_of_cosine() {
    let spec = markov(Drift::zero(), 1.0, 20_000, 2);
    let x = wavy();
    let f = Observable::eval(cos(), 0.0);
    for t in [0.25, 0.5, 1.0] {
        let e = semigroup_apply(&spec, t, &f, &x).unwrap();
        let exact = (-t / 2.0).exp() * x.evaluate(0.0).0[0].cos();
        assert!((e.mean - exact).abs() <= 4.0 * e.stderr + 2.0 * DT, "t = {t}: {e:?} vs {exact}");
    }
    assert_eq!(semigroup_apply(&spec, 0.0, &f, &x).unwrap().mean, apply(&f, &x));
}

#[test]
fn semigroup_of_old_observable_is_the_shift() {
    let spec = markov(Drift::zero(), 1.0, 10, 3);
    let x = wavy();
    let f = Observable::integral(cos(), -1.5, -0.8);
    for s in [0.1, 0.5, 0.8] {
        let e = semigroup_apply(&spec, s, &f, &x).unwrap();
        assert_eq!(e.mean, apply(&f, &x.shift(s).unwrap()));
        assert_eq!(e.stderr, 0.0);
    }
}

#[test]
fn conditional_expectation_cases() {
    let spec = markov(Drift::zero(), 1.0, 200, 4);
    let x = wavy();
    let f = Observable::eval(cos(), 0.7) * Observable::integral(cos(), -1.0, 0.2);
    let a = conditional_expectation(&spec, &f, &x, 0.0).unwrap();
    assert_eq!(a, expectation(&spec, &f, &x).unwrap());
    let early = Observable::integral(cos(), -1.0, 0.3);
    assert_eq!(conditional_expectation(&spec, &early, &x, 0.4).unwrap().mean, apply(&early, &x));

    let det = dde();
    let g = Observable::integral(cos(), 0.0, 1.2);
    let y = DdeEvolution { drift: Drift::discrete_delay(1.0, 1.0, |y, o| o[0] = -y[0].sin()) };
    let restarted = {
        let k = (0.4 / DT).round() as i64;
        use evosemi::dynamics::EvolutionMap;
        y.apply(&x.shift_steps(k), 0.8).unwrap().shift_steps(-k)
    };
    assert_eq!(conditional_expectation(&det, &g, &x, 0.4).unwrap().mean, apply(&g, &restarted));
}

#[test]
fn expectation_axioms() {
    let obs = vec![
        Observable::integral(cos(), -1.0, -0.1),
        Observable::eval(cos(), 0.5),
        Observable::integral(TestFunction::gaussian(0.0, 1.0), -0.5, 1.0),
        Observable::left_lim(cos(), 0.0) * Observable::eval(cos(), 1.0),
    ];
    let paths = vec![wavy(), flat_at(0.4)];
    let r = check_expectation_axioms(&dde(), &obs, &paths, 1e-14).unwrap();
    assert!(r.passed(), "{r:?}");
    let r = check_expectation_axioms(&markov(Drift::zero(), 1.0, 300, 5), &obs, &paths, 0.0).unwrap();
    assert!(r.passed(), "{r:?}");
    let r = check_expectation_axioms(&delay(1.0, 100, 6), &obs, &paths, 0.0).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn homogeneity() {
    let x = wavy();
    let f = Observable::integral(cos(), -0.5, 1.5);
    let r = check_homogeneity(&dde(), &f, &x, 0.6, NestedBudget::default(), 1e-12).unwrap();
    assert!(r.passed, "{r:?}");
    let budget = NestedBudget { n_outer: 100, n_inner: 100 };
    let r = check_homogeneity(&markov(Drift::zero(), 1.0, 5000, 7), &Observable::eval(cos(), 1.0), &x, 0.5, budget, 0.0)
        .unwrap();
    assert!(r.passed, "{r:?}");
    let r = check_homogeneity(&delay(1.0, 5000, 8), &Observable::eval(cos(), 2.0), &x, 1.0, budget, 0.0).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn semigroup_law() {
    let x = wavy();
    let f = Observable::eval(cos(), 0.0);
    let r = check_semigroup_law(&dde(), &f, &x, 0.3, 0.5, NestedBudget::default(), 1e-12).unwrap();
    assert!(r.passed, "{r:?}");
    let spec = markov(Drift::zero(), 1.0, 5000, 9);
    let budget = NestedBudget { n_outer: 100, n_inner: 100 };
    let r = check_semigroup_law(&spec, &f, &x, 0.4, 0.6, budget, 0.0).unwrap();
    assert!(r.passed, "{r:?}");
    let r = check_semigroup_law(&spec, &f, &x, 0.0, 0.6, budget, 0.0).unwrap();
    assert_eq!(r.difference, 0.0);
}

#[test]
fn markov_reduction_and_delay_sensitivity() {
    let clamp = TestFunction::clamped_coordinate(0, 5.0);
    let zero = flat_at(0.0);
    let ramp = SampledPath::from_fn(PathKind::Continuous, -2.0, 0.0, DT, 1, |t| vec![(-10.0 * t).min(1.0)]).unwrap();
    let r = check_markov_reduction(&markov(Drift::pointwise(1.0, |y, o| o[0] = y[0].tanh()), 1.0, 500, 10), &clamp, 1.5, (&zero, &ramp), 0.0)
        .unwrap();
    assert_eq!(r.difference, 0.0);
    let r = check_markov_reduction(&delay(1.0, 2000, 11), &clamp, 1.5, (&ramp, &zero), 0.0).unwrap();
    assert!(r.difference - Z_BAND * r.stderr > 0.1, "{r:?}");
    let r = check_markov_reduction(&delay(1.0, 20, 11), &clamp, 0.0, (&ramp, &zero), 0.0).unwrap();
    assert_eq!(r.difference, 0.0);
    assert!(check_markov_reduction(&delay(1.0, 2, 1), &clamp, 1.0, (&zero, &flat_at(1.0)), 0.0).is_err());
}

#[test]
fn induced_state_semigroup_closed_forms() {
    let f = cos();
    let x0 = StatePoint::scalar(0.0);
    let heat = markov(Drift::zero(), 1.0, 20_000, 12);
    assert_eq!(induced_state_semigroup(&heat, &f, 0.0, &x0).unwrap().mean, 1.0);
    let e = induced_state_semigroup(&heat, &f, 1.0, &x0).unwrap();
    assert!((e.mean - (-0.5f64).exp()).abs() <= 4.0 * e.stderr + 2.0 * DT);
    let ou = markov(Drift::pointwise(1.0, |y, o| o[0] = -y[0]), 2f64.sqrt(), 5000, 13);
    let e = induced_state_semigroup(&ou, &TestFunction::clamped_coordinate(0, 10.0), 5.0, &StatePoint::scalar(1.0)).unwrap();
    assert!(e.mean.abs() <= 4.0 * e.stderr + (-5f64).exp(), "{e:?}");
    assert!(induced_state_semigroup(&delay(1.0, 2, 0), &f, 1.0, &x0).is_err());
}

#[test]
fn generator_probes() {
    let x = wavy();
    let rows = generator_probe(&dde(), &Observable::Const(2.0), &x, &[0.1, 0.2]).unwrap();
    assert!(rows.iter().all(|r| r.quotient == 0.0));
    // d/dt f(y(t)) at 0 with y' = -sin(y(t - 1))
    let g = TestFunction::gaussian(0.0, 1.0);
    let f = Observable::eval(g.clone(), 0.0);
    let y0 = x.evaluate(0.0).0;
    let slope = g.gradient(&y0).unwrap()[0] * -(x.evaluate(-1.0).0[0]).sin();
    let rows = generator_probe(&dde(), &f, &x, &[0.04, 0.02]).unwrap();
    let extrapolated = 2.0 * rows[1].quotient - rows[0].quotient;
    assert!((extrapolated - slope).abs() < 1e-2, "{extrapolated} vs {slope}");
}

#[test]
fn simplex_generator() {
    let spec = markov(Drift::zero(), 1.0, 20_000, 14);
    let x0 = StatePoint::scalar(0.0);
    let r = simplex_generator_check(&spec, &[cos()], 0.0, 1.0, &x0, 0.05, 0.05).unwrap();
    let image = r.details["image"];
    assert!((image - ((-0.5f64).exp() - 1.0)).abs() <= 4.0 * r.details["image_stderr"] + 2.0 * DT, "{r:?}");
    assert!(r.passed, "{r:?}");
    let one = TestFunction::cosine(0.0);
    let r = simplex_generator_check(&spec.with_paths(5), &[one.clone(), one], 0.5, 1.5, &x0, 0.1, 1e-12).unwrap();
    assert!((r.details["u"] - 0.5).abs() < 1e-12 && r.details["image"].abs() < 1e-12, "{r:?}");
    assert!(simplex_generator_check(&spec, &[cos(), cos(), cos()], 0.0, 1.0, &x0, 0.1, 0.0).is_err());
}

#[test]
fn finite_delay_invariance() {
    let a = wavy();
    let b = SampledPath::from_fn(PathKind::Continuous, -2.0, 0.5, DT, 1, |t| {
        let base = 0.3 + (2.0 * t).sin();
        vec![if t < -1.0 - 1e-9 { base + 3.0 * (t + 1.0) } else { base }]
    })
    .unwrap();
    let f = Observable::integral(cos(), -1.0, -0.2) * Observable::left_lim(cos(), 0.0);
    for t in [0.3, 1.2] {
        let r = check_finite_delay_invariance(&delay(1.0, 200, 15), &f, t, (&a, &b), 0.0).unwrap();
        assert_eq!(r.difference, 0.0);
        assert_eq!(r.details["in_hypothesis"], 1.0);
        let phi = DdeEvolution { drift: Drift::discrete_delay(1.0, 1.0, |y, o| o[0] = -y[0].sin()) };
        let det = ExpectationSpec::new(
            ExpectationKind::Deterministic(Arc::new(phi)),
            MonteCarlo { n_paths: 1, seed: 0, dt: DT, horizon: 3.0 },
        )
        .unwrap();
        assert_eq!(check_finite_delay_invariance(&det, &f, t, (&a, &b), 0.0).unwrap().difference, 0.0);
    }
}

#[test]
fn multiplicativity() {
    let x = flat_at(0.0);
    let c = TestFunction::clamped_coordinate(0, 1.0);
    let f = Observable::eval(c.clone(), 1.0);
    let r = check_multiplicativity(&dde(), &f, &f, &wavy(), 1e-12).unwrap();
    assert!(r.passed && r.difference == 0.0);
    let r = check_multiplicativity(&markov(Drift::zero(), 1.0, 10_000, 16), &f, &f, &x, 0.0).unwrap();
    assert!(r.z_score >= 4.0, "{r:?}");
    let past = Observable::integral(cos(), -1.0, -0.5);
    let r = check_multiplicativity(&markov(Drift::zero(), 1.0, 500, 17), &past, &f, &x, 0.0).unwrap();
    assert_eq!(r.difference, 0.0);
}
