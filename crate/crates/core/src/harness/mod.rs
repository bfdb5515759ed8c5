//! Config-driven experiment runner: checks, sweeps, CSV rows and JSON reports.

mod config;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dynamics::{
    check_evolution_map, check_random_evolution_map, linear_delay_exact, mix_seed, sample_levy, solve_dde, AxiomReport,
    DriftSpec, NoiseKey, NoisePath,
};
use crate::error::{Error, Result};
use crate::metrics::{d_ab_j1, d_j1};
pub use crate::path::fmt_f64;
use crate::path::{PastSegment, StatePoint};
use crate::semigroup::{
    check_expectation_axioms, check_finite_delay_invariance, check_homogeneity, check_markov_reduction,
    check_multiplicativity, check_semigroup_law, expectation, generator_probe, semigroup_apply, simplex_generator_check,
    ExpectationKind, LawReport, MCEstimate, NestedBudget, Z_BAND,
};

pub use config::{
    base_dir, parse_json, Built, CheckConfig, DynamicsDef, ExpectationConfig, ExperimentConfig, OutputConfig, PathDef,
    PathShape, SimulateConfig, SolveDdeConfig, SweepAxis, SweepConfig,
};

pub const CSV_HEADER: &str = "index,check,axis,axis_value,value,stderr,z_score,tolerance,pass";

/// One CSV row: a check at one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub index: usize,
    pub check: String,
    pub axis: Option<String>,
    pub axis_value: Option<f64>,
    pub inputs_digest: String,
    pub value: f64,
    pub stderr: f64,
    pub z_score: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub details: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub name: String,
    pub seed: u64,
    pub config_digest: String,
    pub environment_digest: String,
    pub wall_time_s: f64,
    pub passed: bool,
    pub records: Vec<CheckRecord>,
}

impl RunReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.index,
                r.check,
                r.axis.as_deref().unwrap_or("none"),
                r.axis_value.map(fmt_f64).unwrap_or_default(),
                fmt_f64(r.value),
                fmt_f64(r.stderr),
                fmt_f64(r.z_score),
                fmt_f64(r.tolerance),
                r.pass
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn environment_digest() -> String {
    sha256_hex(
        format!("evosemi {} {} {}", env!("CARGO_PKG_VERSION"), std::env::consts::OS, std::env::consts::ARCH).as_bytes(),
    )
}

/// Value, spread and verdict of one evaluated check.
struct Outcome {
    value: f64,
    stderr: f64,
    z_score: f64,
    tol: f64,
    pass: bool,
    details: BTreeMap<String, f64>,
}

impl Outcome {
    fn exact(value: f64, tol: f64, pass: bool) -> Self {
        Self { value, stderr: 0.0, z_score: 0.0, tol, pass, details: BTreeMap::new() }
    }

    fn law(r: LawReport) -> Self {
        Self { value: r.difference, stderr: r.stderr, z_score: r.z_score, tol: r.tol, pass: r.passed, details: r.details }
    }

    fn axioms(r: AxiomReport) -> Self {
        let value = r.conditions.iter().map(|c| c.residual).fold(0.0, f64::max);
        let details = r.conditions.iter().map(|c| (c.condition.clone(), c.residual)).collect();
        Self { value, stderr: 0.0, z_score: 0.0, tol: r.tol, pass: r.passed(), details }
    }

    /// An estimate, compared with `expected` when given.
    fn estimate(e: MCEstimate, expected: Option<f64>, tol: f64) -> Self {
        let mut details = BTreeMap::from([("mean".to_string(), e.mean), ("n".to_string(), e.n as f64)]);
        match expected {
            Some(x) => {
                details.insert("expected".into(), x);
                let d = e.mean - x;
                let z = if e.stderr > 0.0 { d / e.stderr } else { 0.0 };
                Self { value: d, stderr: e.stderr, z_score: z, tol, pass: d.abs() <= tol + Z_BAND * e.stderr, details }
            }
            None => Self { value: e.mean, stderr: e.stderr, z_score: 0.0, tol, pass: true, details },
        }
    }
}

fn evaluate(check: &CheckConfig, b: &Built) -> Result<Outcome> {
    let spec = &b.spec;
    let obs = |n: &String| &b.observables[n];
    let path = |n: &String| &b.paths[n];
    Ok(match check {
        CheckConfig::Expectation { observable, path: p, expected, tol } => {
            Outcome::estimate(expectation(spec, obs(observable), path(p))?, *expected, *tol)
        }
        CheckConfig::Semigroup { observable, path: p, t, expected, tol } => {
            Outcome::estimate(semigroup_apply(spec, *t, obs(observable), path(p))?, *expected, *tol)
        }
        CheckConfig::ExpectationAxioms { observables, paths, tol } => {
            let os: Vec<_> = observables.iter().map(|n| obs(n).clone()).collect();
            let ps: Vec<_> = paths.iter().map(|n| path(n).clone()).collect();
            Outcome::axioms(check_expectation_axioms(spec, &os, &ps, *tol)?)
        }
        CheckConfig::Homogeneity { observable, path: p, t, n_outer, n_inner, tol } => {
            let budget = NestedBudget { n_outer: *n_outer, n_inner: *n_inner };
            Outcome::law(check_homogeneity(spec, obs(observable), path(p), *t, budget, *tol)?)
        }
        CheckConfig::SemigroupLaw { observable, path: p, s, t, n_outer, n_inner, tol } => {
            let budget = NestedBudget { n_outer: *n_outer, n_inner: *n_inner };
            Outcome::law(check_semigroup_law(spec, obs(observable), path(p), *s, *t, budget, *tol)?)
        }
        CheckConfig::MarkovReduction { f, t, paths, min_difference, tol } => {
            let r = check_markov_reduction(spec, &f.build(), *t, (path(&paths[0]), path(&paths[1])), *tol)?;
            let mut o = Outcome::law(r);
            if let Some(m) = min_difference {
                o.pass = o.value.abs() - Z_BAND * o.stderr > *m;
                o.details.insert("min_difference".into(), *m);
            }
            o
        }
        CheckConfig::FiniteDelayInvariance { observable, t, paths, tol } => Outcome::law(check_finite_delay_invariance(
            spec,
            obs(observable),
            *t,
            (path(&paths[0]), path(&paths[1])),
            *tol,
        )?),
        CheckConfig::Multiplicativity { f, g, path: p, expect_multiplicative, tol } => {
            let mut o = Outcome::law(check_multiplicativity(spec, obs(f), obs(g), path(p), *tol)?);
            if !expect_multiplicative {
                o.pass = o.z_score.abs() >= Z_BAND;
            }
            o
        }
        CheckConfig::GeneratorProbe { observable, path: p, t_list, expected, tol } => {
            let mut rows = generator_probe(spec, obs(observable), path(p), t_list)?;
            rows.sort_by(|a, b| a.t.total_cmp(&b.t));
            let (mean, stderr) = match rows.as_slice() {
                [] => return Err(Error::InvalidParameter("generator_probe needs at least one time".into())),
                [r] => (r.quotient, r.stderr),
                [r1, r2, ..] => {
                    let w = r2.t - r1.t;
                    ((r2.t * r1.quotient - r1.t * r2.quotient) / w, (r2.t * r1.stderr).hypot(r1.t * r2.stderr) / w)
                }
            };
            let mut o = Outcome::estimate(MCEstimate { mean, stderr, n: spec.mc.n_paths, seed: spec.mc.seed }, *expected, *tol);
            for r in &rows {
                o.details.insert(format!("quotient@{}", r.t), r.quotient);
            }
            o
        }
        CheckConfig::SimplexGenerator { f_list, a, b: hi, x0, dt_fd, tol } => {
            let fs: Vec<_> = f_list.iter().map(|f| f.build()).collect();
            let x0 = StatePoint::new(x0.clone())?;
            Outcome::law(simplex_generator_check(spec, &fs, *a, *hi, &x0, *dt_fd, *tol)?)
        }
        CheckConfig::EvolutionMap { paths, t_list, horizon, tol } => {
            let ExpectationKind::Deterministic(phi) = &spec.kind else {
                return Err(Error::KindMismatch("evolution_map needs dde dynamics".into()));
            };
            let ps: Vec<_> = paths.iter().map(|n| path(n).clone()).collect();
            Outcome::axioms(check_evolution_map(phi.as_ref(), &ps, t_list, *horizon, *tol)?)
        }
        CheckConfig::RandomEvolutionMap { paths, n_omegas, t_list, c_list, horizon, tol } => {
            let ExpectationKind::LevyFlow { levy, flow } = &spec.kind else {
                return Err(Error::KindMismatch("random_evolution_map needs levy_delay dynamics".into()));
            };
            let seed = mix_seed(spec.mc.seed, 0x0e);
            let omegas = (0..*n_omegas as u64)
                .map(|i| sample_levy(levy, *horizon, spec.mc.dt, &NoiseKey::new(seed, i)))
                .collect::<Result<Vec<NoisePath>>>()?;
            let ps: Vec<_> = paths.iter().map(|n| path(n).clone()).collect();
            Outcome::axioms(check_random_evolution_map(flow.as_ref(), &omegas, &ps, t_list, c_list, *horizon, *tol)?)
        }
        CheckConfig::LinearDelay { a, c, tau, t, tol } => {
            let dt = spec.mc.dt;
            let drift = DriftSpec::DelayLinear { a: *a, delay: *tau }.build();
            let y = solve_dde(&drift, &PastSegment::constant(*tau, dt, &[*c])?, *t, dt)?;
            let n = (t / dt).round() as i64;
            let err = (0..=n)
                .map(|k| (y.node_at_index(k)[0] - linear_delay_exact(*a, *c, *tau, k as f64 * dt)).abs())
                .fold(0.0, f64::max);
            let mut o = Outcome::exact(err, *tol, err <= *tol);
            o.details.insert("dt".into(), dt);
            o
        }
        CheckConfig::J1Distance { paths, interval, budget, expected, tol } => {
            let (x, y) = (path(&paths[0]), path(&paths[1]));
            let m = match interval {
                Some([a, b2]) => d_ab_j1(x, y, *a, *b2, budget)?,
                None => d_j1(x, y, budget.s_max, budget.quad_step, budget)?,
            };
            let mut o = match expected {
                Some(e) => Outcome::exact(m.value - e, *tol, (m.value - e).abs() <= *tol + m.tail_error),
                None => Outcome::exact(m.value, *tol, true),
            };
            o.details.insert("distance".into(), m.value);
            o.details.insert("tail_error".into(), m.tail_error);
            o.details.insert("is_upper_bound".into(), if m.is_upper_bound { 1.0 } else { 0.0 });
            o
        }
    })
}

fn inputs_digest(cfg: &ExperimentConfig, check: &CheckConfig, axis: Option<(SweepAxis, f64)>) -> String {
    let obs: BTreeMap<_, _> =
        check.observable_refs().into_iter().map(|(_, n)| (n.clone(), cfg.observables[n].clone())).collect();
    let paths: BTreeMap<_, _> = check.path_refs().into_iter().map(|(_, n)| (n.clone(), cfg.paths[n].clone())).collect();
    let blob = serde_json::json!({
        "seed": cfg.seed,
        "expectation": cfg.expectation,
        "dynamics": cfg.dynamics[&cfg.expectation.dynamics],
        "check": check,
        "observables": obs,
        "paths": paths,
        "axis": axis.map(|(a, v)| (a.name(), v)),
    });
    sha256_hex(blob.to_string().as_bytes())
}

fn run_checks(
    cfg: &ExperimentConfig,
    checks: &[(usize, CheckConfig)],
    built: &Built,
    axis: Option<(SweepAxis, f64)>,
    out: &mut Vec<CheckRecord>,
) -> Result<()> {
    for (index, check) in checks {
        let o = evaluate(check, built)
            .map_err(|e| Error::Check { index: *index, name: check.name().into(), source: Box::new(e) })?;
        out.push(CheckRecord {
            index: *index,
            check: check.name().into(),
            axis: axis.map(|(a, _)| a.name().into()),
            axis_value: axis.map(|(_, v)| v),
            inputs_digest: inputs_digest(cfg, check, axis),
            value: o.value,
            stderr: o.stderr,
            z_score: o.z_score,
            tolerance: o.tol,
            pass: o.pass,
            details: o.details,
        });
    }
    Ok(())
}

fn sweep_rows(cfg: &ExperimentConfig, base: &Path, axis: SweepAxis, values: &[f64], out: &mut Vec<CheckRecord>) -> Result<()> {
    let indexed: Vec<(usize, CheckConfig)> = cfg.checks.iter().cloned().enumerate().collect();
    let bad = |m: String| Error::Config { pointer: "/sweep".into(), message: m };
    for &v in values {
        let (dt, n_paths) = match axis {
            SweepAxis::Dt => (v, cfg.expectation.n_paths),
            SweepAxis::NPaths => {
                if !(v >= 1.0) || v.fract() != 0.0 {
                    return Err(bad(format!("n_paths value {v} is not a positive integer")));
                }
                (cfg.expectation.dt, v as usize)
            }
            SweepAxis::T => (cfg.expectation.dt, cfg.expectation.n_paths),
        };
        let checks: Vec<(usize, CheckConfig)> = match axis {
            SweepAxis::Dt => indexed.clone(),
            SweepAxis::NPaths => indexed.iter().filter(|(_, c)| c.uses_sampling()).cloned().collect(),
            SweepAxis::T => indexed
                .iter()
                .filter_map(|(i, c)| {
                    let mut c = c.clone();
                    c.set_t(v).then_some((*i, c))
                })
                .collect(),
        };
        if checks.is_empty() {
            return Err(bad(format!("no configured check depends on the axis `{}`", axis.name())));
        }
        let built = Built::new(cfg, base, dt, n_paths)?;
        run_checks(cfg, &checks, &built, Some((axis, v)), out)?;
    }
    Ok(())
}

fn finish(cfg: &ExperimentConfig, raw: &str, start: Instant, records: Vec<CheckRecord>) -> RunReport {
    RunReport {
        name: cfg.name.clone(),
        seed: cfg.seed,
        config_digest: sha256_hex(raw.as_bytes()),
        environment_digest: environment_digest(),
        wall_time_s: start.elapsed().as_secs_f64(),
        passed: records.iter().all(|r| r.pass),
        records,
    }
}

/// Runs every check, then the configured sweep if any. `raw` is the config text.
pub fn run(cfg: &ExperimentConfig, raw: &str, base: &Path) -> Result<RunReport> {
    let start = Instant::now();
    let built = Built::new(cfg, base, cfg.expectation.dt, cfg.expectation.n_paths)?;
    let indexed: Vec<(usize, CheckConfig)> = cfg.checks.iter().cloned().enumerate().collect();
    let mut records = Vec::new();
    run_checks(cfg, &indexed, &built, None, &mut records)?;
    if let Some(s) = &cfg.sweep {
        sweep_rows(cfg, base, s.axis, &s.values, &mut records)?;
    }
    Ok(finish(cfg, raw, start, records))
}

/// Only the rows of a sweep over `axis`.
pub fn sweep(cfg: &ExperimentConfig, raw: &str, base: &Path, axis: SweepAxis, values: &[f64]) -> Result<RunReport> {
    let start = Instant::now();
    let mut records = Vec::new();
    sweep_rows(cfg, base, axis, values, &mut records)?;
    Ok(finish(cfg, raw, start, records))
}

/// Writes the CSV and the JSON report named in the config; returns their paths.
pub fn write_outputs(cfg: &ExperimentConfig, base: &Path, report: &RunReport) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
    let csv = base.join(&cfg.output.csv);
    let json = match &cfg.output.report {
        Some(r) => base.join(r),
        None => csv.with_extension("report.json"),
    };
    for p in [&csv, &json] {
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::File::create(&csv)?.write_all(report.to_csv().as_bytes())?;
    std::fs::File::create(&json)?.write_all(report.to_json().as_bytes())?;
    Ok((csv, json))
}

/// Loads a config file: its text, parsed form and base directory.
pub fn load(path: &Path) -> Result<(String, ExperimentConfig)> {
    let raw = std::fs::read_to_string(path)?;
    let cfg = ExperimentConfig::from_json(&raw)?;
    Ok((raw, cfg))
}
