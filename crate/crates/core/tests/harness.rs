use std::path::Path;

use evosemi::harness::{run, sweep, ExperimentConfig, SweepAxis, CSV_HEADER};
use evosemi::Error;

fn config(checks: &str, dynamics: &str, n_paths: usize) -> String {
    format!(
        r#"{{
  "name": "t",
  "seed": 5,
  "paths": {{
    "a": {{"t_min": -2.0, "t_max": 0.0, "shape": {{"type": "sine", "amplitude": 0.5, "frequency": 3.0}}}},
    "b": {{"t_min": -2.0, "t_max": 0.0, "shape": {{"type": "piecewise_linear", "knots": [[-2.0, 1.0], [-0.5, 0.0], [0.0, 0.0]]}}}},
    "c": {{"t_min": -2.0, "t_max": 0.0, "shape": {{"type": "constant", "value": [0.0]}}}},
    "s1": {{"kind": "cadlag", "t_min": 0.0, "t_max": 2.0, "shape": {{"type": "steps", "x0": 0.0, "jumps": [[0.5, 1.0]]}}}},
    "s2": {{"kind": "cadlag", "t_min": 0.0, "t_max": 2.0, "shape": {{"type": "steps", "x0": 0.0, "jumps": [[0.6, 1.0]]}}}}
  }},
  "dynamics": {{
    "brownian": {{"type": "sde", "drift": {{"name": "zero"}}, "diffusion": {{"name": "constant", "sigma": 1.0}}}},
    "delay": {{"type": "sdde", "drift": {{"name": "delay_linear", "a": 1.0, "delay": 1.0}}, "diffusion": {{"name": "constant", "sigma": 1.0}}, "h": 1.0}},
    "levy": {{"type": "levy_delay", "drift": {{"name": "delay_tanh", "a": -0.5, "delay": 0.5}},
              "levy": {{"drift": [0.1], "brownian_cov": [1.0], "jump_rate": 2.0, "jump_law": {{"kind": "normal", "mean": [0.0], "std": 0.5}}}}}},
    "dde": {{"type": "dde", "drift": {{"name": "delay_linear", "a": -1.0, "delay": 1.0}}}}
  }},
  "observables": {{
    "cos0": {{"op": "eval", "f": {{"kind": "cosine", "freq": [1.0]}}, "t": 0.0}},
    "x_future": {{"op": "eval", "f": {{"kind": "coordinate", "index": 0}}, "t": 1.0}},
    "x_now": {{"op": "eval", "f": {{"kind": "coordinate", "index": 0}}, "t": 0.0}}
  }},
  "expectation": {{"dynamics": "{dynamics}", "n_paths": {n_paths}, "dt": 0.01, "horizon": 2.0}},
  "checks": [{checks}],
  "output": {{"csv": "out.csv"}}
}}"#
    )
}

fn parse(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

#[test]
fn unknown_check_pointer() {
    let e = ExperimentConfig::from_json(&config(r#"{"check": "frobnicate", "tol": 1}"#, "brownian", 10)).unwrap_err();
    match e {
        Error::Config { pointer, message } => {
            assert!(pointer.starts_with("/checks/0"), "{pointer}");
            assert!(message.contains("frobnicate"), "{message}");
        }
        other => panic!("{other}"),
    }
}

#[test]
fn unknown_field_pointer() {
    let e = ExperimentConfig::from_json(&config(r#"{"check": "linear_delay", "a": 1, "c": 1, "tau": 1, "t": 1, "tol": 1, "extra": 2}"#, "brownian", 10))
        .unwrap_err();
    assert!(matches!(e, Error::Config { ref message, .. } if message.contains("extra")), "{e}");
}

#[test]
fn missing_seed_rejected() {
    let text = config(r#"{"check": "linear_delay", "a": 1, "c": 1, "tau": 1, "t": 1, "tol": 1}"#, "brownian", 10)
        .replace("\"seed\": 5,", "");
    let e = ExperimentConfig::from_json(&text).unwrap_err();
    assert!(matches!(e, Error::Config { ref message, .. } if message.contains("seed")), "{e}");
}

#[test]
fn unknown_dynamics_pointer() {
    let e = ExperimentConfig::from_json(&config("", "nothing", 10)).unwrap_err();
    assert!(matches!(e, Error::Config { ref pointer, .. } if pointer == "/expectation/dynamics"), "{e}");
}

#[test]
fn report_is_deterministic_apart_from_wall_time() {
    let text = config(r#"{"check": "expectation", "observable": "x_future", "path": "a", "expected": 0.0, "tol": 0.05}"#, "brownian", 500);
    let cfg = parse(&text);
    let r1 = run(&cfg, &text, Path::new(".")).unwrap();
    let r2 = run(&cfg, &text, Path::new(".")).unwrap();
    assert_eq!(r1.to_csv(), r2.to_csv());
    assert_eq!(r1.records, r2.records);
    assert_eq!(r1.config_digest, r2.config_digest);
    assert!(r1.to_csv().starts_with(CSV_HEADER));
    assert!(r1.passed);
}

#[test]
fn inputs_digest_tracks_the_check() {
    let checks = r#"{"check": "expectation", "observable": "x_future", "path": "a", "tol": 0.05},
                    {"check": "expectation", "observable": "x_future", "path": "b", "tol": 0.05}"#;
    let text = config(checks, "brownian", 50);
    let r = run(&parse(&text), &text, Path::new(".")).unwrap();
    assert_ne!(r.records[0].inputs_digest, r.records[1].inputs_digest);
    assert_eq!(r.records[0].inputs_digest.len(), 64);
}

#[test]
fn markov_reduction_both_ways() {
    let same = r#"{"check": "markov_reduction", "f": {"kind": "coordinate", "index": 0}, "t": 0.5, "paths": ["b", "c"], "tol": 0.0}"#;
    let text = config(same, "brownian", 200);
    let r = run(&parse(&text), &text, Path::new(".")).unwrap();
    assert_eq!(r.records[0].value, 0.0);
    assert!(r.passed);

    // delay: E y(t) differs by the integral of the history difference
    let apart = r#"{"check": "markov_reduction", "f": {"kind": "coordinate", "index": 0}, "t": 0.5, "paths": ["b", "c"], "min_difference": 0.05, "tol": 0.0}"#;
    let text = config(apart, "delay", 400);
    let r = run(&parse(&text), &text, Path::new(".")).unwrap();
    assert!(r.passed, "{:?}", r.records[0]);
}

#[test]
fn levy_flow_checks() {
    let checks = r#"{"check": "random_evolution_map", "paths": ["a", "b"], "n_omegas": 3, "t_list": [0.3, 0.75],
                     "c_list": [[1.5], [-0.25]], "horizon": 1.5, "tol": 0.1},
                    {"check": "multiplicativity", "f": "x_future", "g": "x_future", "path": "a", "expect_multiplicative": false, "tol": 0.0},
                    {"check": "multiplicativity", "f": "x_now", "g": "x_future", "path": "a", "tol": 0.0}"#;
    let text = config(checks, "levy", 2000);
    let r = run(&parse(&text), &text, Path::new(".")).unwrap();
    assert!(r.records[0].pass, "{:?}", r.records[0]);
    assert!(r.records[0].value <= 10.0 * 0.01);
    assert!(r.records[1].pass, "{:?}", r.records[1]);
    // a past-determined factor comes out of the expectation
    assert!(r.records[2].value.abs() < 1e-30);
    assert!(r.records[2].pass);
}

#[test]
fn kind_errors_carry_the_check_index() {
    let checks = r#"{"check": "linear_delay", "a": 1, "c": 1, "tau": 1, "t": 1, "tol": 1},
                    {"check": "evolution_map", "paths": ["a"], "t_list": [0.5], "horizon": 1.0, "tol": 0.0}"#;
    let text = config(checks, "brownian", 10);
    match run(&parse(&text), &text, Path::new(".")).unwrap_err() {
        Error::Check { index, name, source } => {
            assert_eq!(index, 1);
            assert_eq!(name, "evolution_map");
            assert!(matches!(*source, Error::KindMismatch(_)));
        }
        other => panic!("{other}"),
    }
}

#[test]
fn j1_distance_check() {
    let checks = r#"{"check": "j1_distance", "paths": ["s1", "s2"], "interval": [0.0, 2.0], "expected": 0.1823215567939546, "tol": 1e-9}"#;
    let text = config(checks, "dde", 1);
    let r = run(&parse(&text), &text, Path::new(".")).unwrap();
    // λ through (0.5, 0.6) and (2, 2): slopes 1.2 and 1.4/1.5
    assert!(r.passed, "{:?}", r.records[0]);
}

#[test]
fn simplex_check_through_config() {
    let checks = r#"{"check": "simplex_generator", "f_list": [{"kind": "cosine", "freq": [1.0]}], "a": 0.0, "b": 1.0,
                     "x0": [0.0], "dt_fd": 0.05, "tol": 0.05}"#;
    let text = config(checks, "brownian", 4000);
    let r = run(&parse(&text), &text, Path::new(".")).unwrap();
    assert!(r.passed, "{:?}", r.records[0]);
    let d = &r.records[0].details;
    assert!((d["image"] - ((-0.5f64).exp() - 1.0)).abs() <= 4.0 * d["image_stderr"], "{d:?}");
}

#[test]
fn sweeps() {
    let checks = r#"{"check": "semigroup", "observable": "cos0", "path": "c", "t": 0.5, "tol": 0.1},
                    {"check": "linear_delay", "a": 1, "c": 1, "tau": 1, "t": 1, "tol": 0.1}"#;
    let text = config(checks, "brownian", 100);
    let cfg = parse(&text);
    let base = Path::new(".");
    let t = sweep(&cfg, &text, base, SweepAxis::T, &[0.25, 1.0]).unwrap();
    assert_eq!(t.records.len(), 4);
    assert_eq!(t.records[1].axis.as_deref(), Some("t"));
    let n = sweep(&cfg, &text, base, SweepAxis::NPaths, &[10.0, 20.0]).unwrap();
    assert!(n.records.iter().all(|r| r.check == "semigroup"));
    assert!(matches!(sweep(&cfg, &text, base, SweepAxis::NPaths, &[2.5]), Err(Error::Config { .. })));
    assert!(sweep(&cfg, &text, base, SweepAxis::Dt, &[]).unwrap().records.is_empty());
}
