use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{mix_seed, AxiomReport, ConditionResidual, Violation};
use crate::error::{Error, Result};
use crate::observables::{apply, depends_only_on, is_past_determined, shift_obs, Observable, TestFunction, Window};
use crate::path::{grid_steps, PathKind, SampledPath, StatePoint};

use super::{
    estimate, expectation, sample_rows, semigroup_apply, steps_needed, ExpectationKind, ExpectationSpec, Frame,
    MCEstimate,
};

/// Half-width, in standard errors, of the acceptance band of statistical checks.
pub const Z_BAND: f64 = 4.0;

/// A scalar law check: `passed` iff `|difference| <= tol + Z_BAND * stderr`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LawReport {
    pub check: String,
    pub difference: f64,
    pub stderr: f64,
    pub z_score: f64,
    pub tol: f64,
    pub passed: bool,
    pub details: BTreeMap<String, f64>,
}

impl LawReport {
    fn new(check: &str, difference: f64, stderr: f64, tol: f64) -> Self {
        let z_score = if stderr > 0.0 {
            difference / stderr
        } else if difference == 0.0 {
            0.0
        } else {
            difference.signum() * f64::INFINITY
        };
        Self {
            check: check.into(),
            difference,
            stderr,
            z_score,
            tol,
            passed: difference.abs() <= tol + Z_BAND * stderr,
            details: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }
}

/// Outer and inner sample counts of nested estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NestedBudget {
    pub n_outer: usize,
    pub n_inner: usize,
}

impl Default for NestedBudget {
    fn default() -> Self {
        Self { n_outer: 200, n_inner: 500 }
    }
}

struct Tracker {
    name: &'static str,
    worst: Option<Violation>,
}

impl Tracker {
    fn new(name: &'static str) -> Self {
        Self { name, worst: None }
    }

    fn record(&mut self, sample: usize, residual: f64) {
        let r = self.worst.as_ref().map_or(0.0, |v| v.residual);
        if residual > r || (residual.is_nan() && !r.is_nan()) || self.worst.is_none() {
            self.worst = Some(Violation { condition: self.name.into(), sample, time: 0.0, residual });
        }
    }

    fn finish(self, tol: f64) -> ConditionResidual {
        let residual = self.worst.as_ref().map_or(0.0, |v| v.residual);
        ConditionResidual { condition: self.name.into(), residual, passed: residual <= tol, worst: self.worst }
    }
}

/// Residuals of (A) `𝔼F(x) = 𝔼F(τx)`, (B) `𝔼F = F` for past-determined `F`,
/// (C) `𝔼(PG) = P 𝔼G` for past-determined `P` and (D) `𝔼1 = 1`.
/// Samples are numbered `observable * paths.len() + path`.
pub fn check_expectation_axioms(
    spec: &ExpectationSpec,
    observables: &[Observable],
    paths: &[SampledPath],
    tol: f64,
) -> Result<AxiomReport> {
    let (mut a, mut b, mut c, mut d) = (Tracker::new("A"), Tracker::new("B"), Tracker::new("C"), Tracker::new("D"));
    for (pi, x) in paths.iter().enumerate() {
        let stopped = x.stop()?;
        let one = expectation(spec, &Observable::Const(1.0), x)?;
        d.record(pi, (one.mean - 1.0).abs());
        for (fi, f) in observables.iter().enumerate() {
            let sample = fi * paths.len() + pi;
            let e = expectation(spec, f, x)?;
            a.record(sample, (e.mean - expectation(spec, f, &stopped)?.mean).abs());
            if !is_past_determined(f, 0.0, x.kind()) {
                continue;
            }
            let p = apply(f, x);
            b.record(sample, (e.mean - p).abs());
            for g in observables {
                let lhs = expectation(spec, &(f.clone() * g.clone()), x)?;
                c.record(sample, (lhs.mean - p * expectation(spec, g, x)?.mean).abs());
            }
        }
    }
    Ok(AxiomReport {
        map: format!("{:?}", spec.kind),
        tol,
        conditions: vec![a.finish(tol), b.finish(tol), c.finish(tol), d.finish(tol)],
    })
}

/// Completed futures of `x` up to time `t`, one per outer sample.
fn outer_paths(spec: &ExpectationSpec, x: &SampledPath, t: f64, n_outer: usize) -> Result<Vec<SampledPath>> {
    let outer = spec.with_seed(mix_seed(spec.mc.seed, 1)).with_paths(n_outer);
    let steps = grid_steps(t, spec.mc.dt)?.max(1) as usize;
    if steps as f64 * spec.mc.dt > spec.mc.horizon + 1e-9 && t > 0.0 {
        return Err(Error::HorizonExceeded { needed: t, horizon: spec.mc.horizon });
    }
    let past = x.stop()?;
    (0..outer.mc.n_paths as u64).into_par_iter().map(|j| outer.complete(&past, steps, j)).collect()
}

/// Runs `inner` on every outer path with its own seed and averages.
fn nested(
    spec: &ExpectationSpec,
    x: &SampledPath,
    t: f64,
    budget: NestedBudget,
    inner: impl Fn(&ExpectationSpec, &SampledPath) -> Result<MCEstimate> + Sync,
) -> Result<MCEstimate> {
    let paths = outer_paths(spec, x, t, budget.n_outer)?;
    let means: Vec<f64> = paths
        .par_iter()
        .enumerate()
        .map(|(j, y)| {
            let s = spec.with_seed(mix_seed(spec.mc.seed, 2 + j as u64)).with_paths(budget.n_inner);
            inner(&s, y).map(|e| e.mean)
        })
        .collect::<Result<_>>()?;
    let mut est = MCEstimate::from_samples(&means, spec.mc.seed);
    est.n = paths.len() * if spec.is_deterministic() { 1 } else { budget.n_inner };
    Ok(est)
}

fn difference_report(check: &str, lhs: MCEstimate, rhs: MCEstimate, tol: f64) -> LawReport {
    let se = lhs.stderr.hypot(rhs.stderr);
    LawReport::new(check, lhs.mean - rhs.mean, se, tol)
        .with("lhs", lhs.mean)
        .with("lhs_stderr", lhs.stderr)
        .with("rhs", rhs.mean)
        .with("rhs_stderr", rhs.stderr)
}

/// Flat `𝔼F(x)` against the nested `𝔼𝔼_t F(x)`, whose inner estimates restart
/// from each outer sample's history up to `t`.
pub fn check_homogeneity(
    spec: &ExpectationSpec,
    obs: &Observable,
    x: &SampledPath,
    t: f64,
    budget: NestedBudget,
    tol: f64,
) -> Result<LawReport> {
    let flat = expectation(spec, obs, x)?;
    let inner_frame = Frame::new(t, 0.0, spec.mc.dt)?;
    let nest = nested(spec, x, t, budget, |s, y| estimate(s, obs, y, inner_frame))?;
    Ok(difference_report("homogeneity", flat, nest, tol))
}

/// `𝕋(t + s)F(x)` against `𝕋(t)[𝕋(s)F](x)`.
pub fn check_semigroup_law(
    spec: &ExpectationSpec,
    obs: &Observable,
    x: &SampledPath,
    s: f64,
    t: f64,
    budget: NestedBudget,
    tol: f64,
) -> Result<LawReport> {
    let flat = semigroup_apply(spec, s + t, obs, x)?;
    if s == 0.0 || t == 0.0 {
        // one factor is the identity
        return Ok(difference_report("semigroup_law", flat, flat, tol));
    }
    let k = grid_steps(t, spec.mc.dt)?;
    let nest = nested(spec, x, t, budget, |sp, y| semigroup_apply(sp, s, obs, &y.shift_steps(k)))?;
    Ok(difference_report("semigroup_law", flat, nest, tol))
}

/// Paired mean of `a_i - b_i` over common samples.
fn paired(a: &[f64], b: &[f64], seed: u64) -> MCEstimate {
    let d: Vec<f64> = a.iter().zip(b).map(|(u, v)| u - v).collect();
    MCEstimate::from_samples(&d, seed)
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

fn frozen_value(x: &SampledPath) -> Result<Vec<f64>> {
    Ok(x.stop()?.node_at_index(0).to_vec())
}

/// `𝕋(t)F` on two paths under common random numbers; paired difference.
fn paired_semigroup(
    spec: &ExpectationSpec,
    obs: &Observable,
    t: f64,
    pair: (&SampledPath, &SampledPath),
) -> Result<(MCEstimate, MCEstimate, MCEstimate)> {
    let frame = Frame::new(0.0, t, spec.mc.dt)?;
    let r1 = sample_rows(spec, &[obs], pair.0, frame)?;
    let r2 = sample_rows(spec, &[obs], pair.1, frame)?;
    let (c1, c2) = (column(&r1, 0), column(&r2, 0));
    let seed = spec.mc.seed;
    Ok((paired(&c1, &c2, seed), MCEstimate::from_samples(&c1, seed), MCEstimate::from_samples(&c2, seed)))
}

/// `|𝕋(t)F_{0⋆}(f)(x₁) - 𝕋(t)F_{0⋆}(f)(x₂)|` for paths with equal `x(0⋆)`.
pub fn check_markov_reduction(
    spec: &ExpectationSpec,
    f: &TestFunction,
    t: f64,
    pair: (&SampledPath, &SampledPath),
    tol: f64,
) -> Result<LawReport> {
    let (v1, v2) = (frozen_value(pair.0)?, frozen_value(pair.1)?);
    if v1 != v2 {
        return Err(Error::PathsDisagreeAtZero(v1, v2));
    }
    let obs = Observable::left_lim(f.clone(), 0.0);
    let (d, e1, e2) = paired_semigroup(spec, &obs, t, pair)?;
    Ok(LawReport::new("markov_reduction", d.mean, d.stderr, tol).with("first", e1.mean).with("second", e2.mean))
}

/// `𝕋(t)F` at paths agreeing on `[-h, 0]`; `in_hypothesis` records whether `F` reads only `[-h, 0)`.
pub fn check_finite_delay_invariance(
    spec: &ExpectationSpec,
    obs: &Observable,
    t: f64,
    pair: (&SampledPath, &SampledPath),
    tol: f64,
) -> Result<LawReport> {
    if !is_past_determined(obs, 0.0, pair.0.kind()) {
        return Err(Error::NotPastDetermined(format!("{:?}", obs.window())));
    }
    let h = spec.history();
    let inside = h.is_finite() && depends_only_on(obs, &Window::half_open(-h, 0.0));
    let (d, e1, e2) = paired_semigroup(spec, obs, t, pair)?;
    Ok(LawReport::new("finite_delay_invariance", d.mean, d.stderr, tol)
        .with("first", e1.mean)
        .with("second", e2.mean)
        .with("in_hypothesis", if inside { 1.0 } else { 0.0 }))
}

/// Covariance `𝔼(FG) - 𝔼F 𝔼G` over shared samples, with the standard error of
/// the mean of centred products.
pub fn check_multiplicativity(
    spec: &ExpectationSpec,
    f: &Observable,
    g: &Observable,
    x: &SampledPath,
    tol: f64,
) -> Result<LawReport> {
    let rows = sample_rows(spec, &[f, g], x, Frame::new(0.0, 0.0, spec.mc.dt)?)?;
    let (cf, cg) = (column(&rows, 0), column(&rows, 1));
    let seed = spec.mc.seed;
    let (ef, eg) = (MCEstimate::from_samples(&cf, seed), MCEstimate::from_samples(&cg, seed));
    let n = rows.len();
    let (cov, se) = if n > 1 {
        let prods: Vec<f64> = cf.iter().zip(&cg).map(|(a, b)| (a - ef.mean) * (b - eg.mean)).collect();
        let p = MCEstimate::from_samples(&prods, seed);
        (p.mean * n as f64 / (n - 1) as f64, p.stderr)
    } else {
        (0.0, 0.0)
    };
    Ok(LawReport::new("multiplicativity", cov, se, tol).with("mean_f", ef.mean).with("mean_g", eg.mean))
}

/// `T(t)f(x₀) = 𝕋(t)F_{0⋆}(f)` on the constant path at `x₀`.
pub fn induced_state_semigroup(spec: &ExpectationSpec, f: &TestFunction, t: f64, x0: &StatePoint) -> Result<MCEstimate> {
    if !matches!(spec.kind, ExpectationKind::Markov { .. }) {
        return Err(Error::KindMismatch(format!("induced state semigroup needs a Markov kind, got {:?}", spec.kind)));
    }
    let dt = spec.mc.dt;
    let x = SampledPath::constant(PathKind::Continuous, -dt, 0.0, dt, x0.as_slice())?;
    semigroup_apply(spec, t, &Observable::left_lim(f.clone(), 0.0), &x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeneratorRow {
    pub t: f64,
    pub quotient: f64,
    pub stderr: f64,
}

/// Difference quotients `(𝕋(t)F(x) - F(x)) / t`.
pub fn generator_probe(spec: &ExpectationSpec, obs: &Observable, x: &SampledPath, t_list: &[f64]) -> Result<Vec<GeneratorRow>> {
    let base = apply(obs, x);
    t_list
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!("probe time {t} must be positive")));
            }
            let e = semigroup_apply(spec, t, obs, x)?;
            Ok(GeneratorRow { t, quotient: (e.mean - base) / t, stderr: e.stderr / t })
        })
        .collect()
}

/// `∫_a^b f₂(y(s₂)) ∫_a^{s₂} f₁(y(s₁)) ds₁ ds₂` on grid-aligned `a < b`.
fn simplex2(f1: &TestFunction, f2: &TestFunction, a: f64, b: f64, y: &SampledPath) -> f64 {
    let dt = y.dt();
    let (ka, kb) = ((a / dt).round() as i64, (b / dt).round() as i64);
    let mut inner = 0.0;
    let mut total = 0.0;
    match y.kind() {
        PathKind::Cadlag => {
            for k in ka..kb {
                let node = y.node_at_index(k);
                let (g1, g2) = (f1.eval(node), f2.eval(node));
                total += dt * g2 * inner + 0.5 * dt * dt * g1 * g2;
                inner += dt * g1;
            }
        }
        PathKind::Continuous => {
            let mut prev = (f1.eval(y.node_at_index(ka)), 0.0);
            for k in ka + 1..=kb {
                let node = y.node_at_index(k);
                let g1 = f1.eval(node);
                inner += 0.5 * dt * (prev.0 + g1);
                let h = f2.eval(node) * inner;
                total += 0.5 * dt * (prev.1 + h);
                prev = (g1, h);
            }
        }
    }
    total
}

/// Forward difference `(T(h)u - u)/h` of `u = ∫_{D_n(a,b)} F(s; ·)` against the
/// boundary image, both estimated on common samples started at `x₀`.
pub fn simplex_generator_check(
    spec: &ExpectationSpec,
    f_list: &[TestFunction],
    a: f64,
    b: f64,
    x0: &StatePoint,
    dt_fd: f64,
    tol: f64,
) -> Result<LawReport> {
    if !(0.0 <= a && a < b) {
        return Err(Error::EmptyInterval { a, b });
    }
    let dt = spec.mc.dt;
    let (u, image) = match f_list {
        [f] => (
            Observable::integral(f.clone(), a, b),
            Observable::eval(f.clone(), b) - Observable::eval(f.clone(), a),
        ),
        [f1, f2] => {
            grid_steps(a, dt)?;
            grid_steps(b, dt)?;
            let (g1, g2) = (f1.clone(), f2.clone());
            let u = Observable::closure("simplex", f1.bound() * f2.bound() * (b - a).powi(2) / 2.0, Window::half_open(a, b), move |y| {
                simplex2(&g1, &g2, a, b, y)
            });
            let image = Observable::eval(f2.clone(), b) * Observable::integral(f1.clone(), a, b)
                - Observable::eval(f1.clone(), a) * Observable::integral(f2.clone(), a, b);
            (u, image)
        }
        _ => return Err(Error::Unsupported(format!("simplex dimension {} (only 1 and 2)", f_list.len()))),
    };
    let shifted = shift_obs(&u, dt_fd, dt)?;
    let x = SampledPath::constant(PathKind::Continuous, -dt, 0.0, dt, x0.as_slice())?;
    let frame = Frame::new(0.0, 0.0, dt)?;
    steps_needed(spec, &[&shifted], x.kind(), frame)?;
    let rows = sample_rows(spec, &[&u, &shifted, &image], &x, frame)?;
    let (cu, cs, ci) = (column(&rows, 0), column(&rows, 1), column(&rows, 2));
    let quot: Vec<f64> = cs.iter().zip(&cu).map(|(s, u)| (s - u) / dt_fd).collect();
    let seed = spec.mc.seed;
    let d = paired(&quot, &ci, seed);
    let (eu, eq, ei) =
        (MCEstimate::from_samples(&cu, seed), MCEstimate::from_samples(&quot, seed), MCEstimate::from_samples(&ci, seed));
    Ok(LawReport::new("simplex_generator", d.mean, d.stderr, tol)
        .with("u", eu.mean)
        .with("quotient", eq.mean)
        .with("quotient_stderr", eq.stderr)
        .with("image", ei.mean)
        .with("image_stderr", ei.stderr))
}
