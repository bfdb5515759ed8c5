use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{DdeEvolution, DiffusionSpec, DriftSpec, LevyDelayFlow, LevySpec};
use crate::error::{Error, Result};
use crate::metrics::SearchBudget;
use crate::observables::{Observable, ObservableSpec, TestFunctionSpec};
use crate::path::{PathKind, PathRecord, SampledPath};
use crate::semigroup::{ExpectationKind, ExpectationSpec, MonteCarlo};

fn one() -> usize {
    1
}

fn default_outer() -> usize {
    200
}

fn default_inner() -> usize {
    500
}

fn continuous() -> PathKind {
    PathKind::Continuous
}

/// Values of a path as a function of time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathShape {
    Constant { value: Vec<f64> },
    /// `offset + amplitude sin(frequency t + phase)`.
    Sine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Linear between `[t, v]` knots, constant outside.
    PiecewiseLinear { knots: Vec<[f64; 2]> },
    /// `x0` plus the jumps `[t, h]` that happened at or before `t`.
    Steps { x0: f64, jumps: Vec<[f64; 2]> },
    /// Node values, one row per grid point of the window.
    Inline { values: Vec<Vec<f64>> },
    /// A path record file, relative to the config.
    File { path: String },
}

impl PathShape {
    fn value(&self, t: f64) -> Vec<f64> {
        match self {
            PathShape::Constant { value } => value.clone(),
            PathShape::Sine { amplitude, frequency, phase, offset } => vec![offset + amplitude * (frequency * t + phase).sin()],
            PathShape::PiecewiseLinear { knots } => {
                let (first, last) = (knots[0], knots[knots.len() - 1]);
                if t <= first[0] {
                    return vec![first[1]];
                }
                if t >= last[0] {
                    return vec![last[1]];
                }
                let i = knots.partition_point(|k| k[0] <= t);
                let ([t0, v0], [t1, v1]) = (knots[i - 1], knots[i]);
                vec![v0 + (v1 - v0) * (t - t0) / (t1 - t0)]
            }
            PathShape::Steps { x0, jumps } => {
                vec![x0 + jumps.iter().filter(|j| t >= j[0] - 1e-9).map(|j| j[1]).sum::<f64>()]
            }
            PathShape::Inline { .. } | PathShape::File { .. } => unreachable!("tabulated shapes are not functions"),
        }
    }

    fn dim(&self) -> usize {
        match self {
            PathShape::Constant { value } => value.len(),
            _ => 1,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        match self {
            PathShape::Constant { value } if value.is_empty() => Err("constant value must be non-empty".into()),
            PathShape::PiecewiseLinear { knots } if knots.is_empty() => Err("piecewise_linear needs knots".into()),
            PathShape::PiecewiseLinear { knots } if knots.windows(2).any(|w| !(w[0][0] < w[1][0])) => {
                Err("knot times must increase".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathDef {
    #[serde(default = "continuous")]
    pub kind: PathKind,
    pub t_min: f64,
    pub t_max: f64,
    pub shape: PathShape,
}

impl PathDef {
    pub fn build(&self, dt: f64, base: &Path) -> Result<SampledPath> {
        let rec = match &self.shape {
            PathShape::Inline { values } => PathRecord {
                kind: self.kind,
                t_min: self.t_min,
                t_max: self.t_max,
                dt,
                dim: values.first().map_or(0, Vec::len),
                values: values.clone(),
            },
            PathShape::File { path } => {
                let p = SampledPath::from_json(&std::fs::read_to_string(base.join(path))?)?;
                return p.with_kind(self.kind).rewindow(self.t_min, self.t_max);
            }
            shape => {
                return SampledPath::from_fn(self.kind, self.t_min, self.t_max, dt, shape.dim(), |t| shape.value(t));
            }
        };
        rec.into_path()
    }
}

/// Dynamics by coefficient names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DynamicsDef {
    Dde { drift: DriftSpec },
    Sde {
        drift: DriftSpec,
        diffusion: DiffusionSpec,
        #[serde(default = "one")]
        dim: usize,
    },
    Sdde {
        drift: DriftSpec,
        diffusion: DiffusionSpec,
        h: f64,
        #[serde(default = "one")]
        dim: usize,
    },
    LevyDelay { drift: DriftSpec, levy: LevySpec },
}

impl DynamicsDef {
    pub fn kind(&self) -> ExpectationKind {
        match self {
            DynamicsDef::Dde { drift } => ExpectationKind::Deterministic(Arc::new(DdeEvolution { drift: drift.build() })),
            DynamicsDef::Sde { drift, diffusion, dim } => {
                ExpectationKind::Markov { drift: drift.build(), diffusion: diffusion.build(*dim) }
            }
            DynamicsDef::Sdde { drift, diffusion, h, dim } => {
                ExpectationKind::Delay { drift: drift.build(), diffusion: diffusion.build(*dim), h: *h }
            }
            DynamicsDef::LevyDelay { drift, levy } => {
                ExpectationKind::LevyFlow { levy: levy.clone(), flow: Arc::new(LevyDelayFlow { drift: drift.build() }) }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectationConfig {
    /// Name of an entry of `dynamics`.
    pub dynamics: String,
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: f64,
}

/// One check with its parameters. Observables and paths are referenced by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckConfig {
    /// `𝔼F(x)`, compared with `expected` when given.
    Expectation { observable: String, path: String, expected: Option<f64>, tol: f64 },
    /// `𝕋(t)F(x)`, compared with `expected` when given.
    Semigroup { observable: String, path: String, t: f64, expected: Option<f64>, tol: f64 },
    ExpectationAxioms { observables: Vec<String>, paths: Vec<String>, tol: f64 },
    Homogeneity {
        observable: String,
        path: String,
        t: f64,
        #[serde(default = "default_outer")]
        n_outer: usize,
        #[serde(default = "default_inner")]
        n_inner: usize,
        tol: f64,
    },
    SemigroupLaw {
        observable: String,
        path: String,
        s: f64,
        t: f64,
        #[serde(default = "default_outer")]
        n_outer: usize,
        #[serde(default = "default_inner")]
        n_inner: usize,
        tol: f64,
    },
    /// Passes on equality within `tol`, or, with `min_difference`, when the
    /// difference exceeds it by `Z_BAND` standard errors.
    MarkovReduction { f: TestFunctionSpec, t: f64, paths: [String; 2], min_difference: Option<f64>, tol: f64 },
    FiniteDelayInvariance { observable: String, t: f64, paths: [String; 2], tol: f64 },
    /// With `expect_multiplicative = false` the check passes when the covariance is detected.
    Multiplicativity {
        f: String,
        g: String,
        path: String,
        #[serde(default = "yes")]
        expect_multiplicative: bool,
        tol: f64,
    },
    /// Quotients `(𝕋(t)F - F)/t`, extrapolated linearly to `t = 0` from the two smallest times.
    GeneratorProbe { observable: String, path: String, t_list: Vec<f64>, expected: Option<f64>, tol: f64 },
    SimplexGenerator { f_list: Vec<TestFunctionSpec>, a: f64, b: f64, x0: Vec<f64>, dt_fd: f64, tol: f64 },
    EvolutionMap { paths: Vec<String>, t_list: Vec<f64>, horizon: f64, tol: f64 },
    RandomEvolutionMap {
        paths: Vec<String>,
        n_omegas: usize,
        t_list: Vec<f64>,
        c_list: Vec<Vec<f64>>,
        horizon: f64,
        tol: f64,
    },
    /// Largest error of the DDE solver on `y' = a y(t - tau)`, `y ≡ c` before 0, over `[0, t]`.
    LinearDelay { a: f64, c: f64, tau: f64, t: f64, tol: f64 },
    /// `d_J1`, or `d_a^b` with `interval`, compared with `expected` when given.
    J1Distance {
        paths: [String; 2],
        interval: Option<[f64; 2]>,
        #[serde(default)]
        budget: SearchBudget,
        expected: Option<f64>,
        tol: f64,
    },
}

fn yes() -> bool {
    true
}

impl CheckConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CheckConfig::Expectation { .. } => "expectation",
            CheckConfig::Semigroup { .. } => "semigroup",
            CheckConfig::ExpectationAxioms { .. } => "expectation_axioms",
            CheckConfig::Homogeneity { .. } => "homogeneity",
            CheckConfig::SemigroupLaw { .. } => "semigroup_law",
            CheckConfig::MarkovReduction { .. } => "markov_reduction",
            CheckConfig::FiniteDelayInvariance { .. } => "finite_delay_invariance",
            CheckConfig::Multiplicativity { .. } => "multiplicativity",
            CheckConfig::GeneratorProbe { .. } => "generator_probe",
            CheckConfig::SimplexGenerator { .. } => "simplex_generator",
            CheckConfig::EvolutionMap { .. } => "evolution_map",
            CheckConfig::RandomEvolutionMap { .. } => "random_evolution_map",
            CheckConfig::LinearDelay { .. } => "linear_delay",
            CheckConfig::J1Distance { .. } => "j1_distance",
        }
    }

    /// Sets the time parameter `t`; false when the check has none.
    pub fn set_t(&mut self, value: f64) -> bool {
        match self {
            CheckConfig::Semigroup { t, .. }
            | CheckConfig::Homogeneity { t, .. }
            | CheckConfig::SemigroupLaw { t, .. }
            | CheckConfig::MarkovReduction { t, .. }
            | CheckConfig::FiniteDelayInvariance { t, .. }
            | CheckConfig::LinearDelay { t, .. } => {
                *t = value;
                true
            }
            _ => false,
        }
    }

    /// Whether the check reads the Monte Carlo settings.
    pub fn uses_sampling(&self) -> bool {
        !matches!(self, CheckConfig::LinearDelay { .. } | CheckConfig::J1Distance { .. })
    }

    pub(crate) fn observable_refs(&self) -> Vec<(&'static str, &String)> {
        match self {
            CheckConfig::Expectation { observable, .. }
            | CheckConfig::Semigroup { observable, .. }
            | CheckConfig::Homogeneity { observable, .. }
            | CheckConfig::SemigroupLaw { observable, .. }
            | CheckConfig::FiniteDelayInvariance { observable, .. }
            | CheckConfig::GeneratorProbe { observable, .. } => vec![("observable", observable)],
            CheckConfig::Multiplicativity { f, g, .. } => vec![("f", f), ("g", g)],
            CheckConfig::ExpectationAxioms { observables, .. } => observables.iter().map(|o| ("observables", o)).collect(),
            _ => vec![],
        }
    }

    pub(crate) fn path_refs(&self) -> Vec<(&'static str, &String)> {
        match self {
            CheckConfig::Expectation { path, .. }
            | CheckConfig::Semigroup { path, .. }
            | CheckConfig::Homogeneity { path, .. }
            | CheckConfig::SemigroupLaw { path, .. }
            | CheckConfig::Multiplicativity { path, .. }
            | CheckConfig::GeneratorProbe { path, .. } => vec![("path", path)],
            CheckConfig::MarkovReduction { paths, .. }
            | CheckConfig::FiniteDelayInvariance { paths, .. }
            | CheckConfig::J1Distance { paths, .. } => paths.iter().map(|p| ("paths", p)).collect(),
            CheckConfig::ExpectationAxioms { paths, .. }
            | CheckConfig::EvolutionMap { paths, .. }
            | CheckConfig::RandomEvolutionMap { paths, .. } => paths.iter().map(|p| ("paths", p)).collect(),
            _ => vec![],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Dt,
    NPaths,
    T,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Dt => "dt",
            SweepAxis::NPaths => "n_paths",
            SweepAxis::T => "t",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dt" => Ok(SweepAxis::Dt),
            "n_paths" => Ok(SweepAxis::NPaths),
            "t" => Ok(SweepAxis::T),
            _ => Err(Error::Config { pointer: "/sweep/axis".into(), message: format!("unknown sweep axis `{s}`") }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// CSV rows, relative to the config file.
    pub csv: String,
    /// JSON report; defaults to the CSV path with extension `report.json`.
    pub report: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    #[serde(default)]
    pub paths: BTreeMap<String, PathDef>,
    #[serde(default)]
    pub dynamics: BTreeMap<String, DynamicsDef>,
    #[serde(default)]
    pub observables: BTreeMap<String, ObservableSpec>,
    pub expectation: ExpectationConfig,
    pub checks: Vec<CheckConfig>,
    pub sweep: Option<SweepConfig>,
    pub output: OutputConfig,
}

fn config_error(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { pointer: pointer.into(), message: message.into() }
}

/// Parses JSON, reporting the location of the first error as a JSON pointer.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let mut pointer = String::new();
        for seg in e.path().iter() {
            match seg {
                serde_path_to_error::Segment::Seq { index } => pointer.push_str(&format!("/{index}")),
                serde_path_to_error::Segment::Map { key } => {
                    pointer.push('/');
                    pointer.push_str(&key.replace('~', "~0").replace('/', "~1"));
                }
                serde_path_to_error::Segment::Enum { variant } => pointer.push_str(&format!("/{variant}")),
                serde_path_to_error::Segment::Unknown => {}
            }
        }
        config_error(pointer, e.inner().to_string())
    })
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = parse_json(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Name resolution and simple parameter checks.
    pub fn validate(&self) -> Result<()> {
        if !self.dynamics.contains_key(&self.expectation.dynamics) {
            return Err(config_error(
                "/expectation/dynamics",
                format!("unknown dynamics `{}`", self.expectation.dynamics),
            ));
        }
        for (name, p) in &self.paths {
            p.shape.validate().map_err(|m| config_error(format!("/paths/{name}/shape"), m))?;
        }
        for (i, check) in self.checks.iter().enumerate() {
            for (field, r) in check.observable_refs() {
                if !self.observables.contains_key(r) {
                    return Err(config_error(format!("/checks/{i}/{field}"), format!("unknown observable `{r}`")));
                }
            }
            for (field, r) in check.path_refs() {
                if !self.paths.contains_key(r) {
                    return Err(config_error(format!("/checks/{i}/{field}"), format!("unknown path `{r}`")));
                }
            }
        }
        Ok(())
    }
}

/// Paths, observables and the expectation spec built at one `(dt, n_paths)`.
pub struct Built {
    pub spec: ExpectationSpec,
    pub dynamics: DynamicsDef,
    pub paths: BTreeMap<String, SampledPath>,
    pub observables: BTreeMap<String, Observable>,
}

impl Built {
    pub fn new(cfg: &ExperimentConfig, base: &Path, dt: f64, n_paths: usize) -> Result<Self> {
        let dynamics = cfg.dynamics[&cfg.expectation.dynamics].clone();
        let mc = MonteCarlo { n_paths, seed: cfg.seed, dt, horizon: cfg.expectation.horizon };
        let spec = ExpectationSpec::new(dynamics.kind(), mc)
            .map_err(|e| config_error(format!("/dynamics/{}", cfg.expectation.dynamics), e.to_string()))?;
        let mut paths = BTreeMap::new();
        for (name, def) in &cfg.paths {
            let p = def.build(dt, base).map_err(|e| config_error(format!("/paths/{name}"), e.to_string()))?;
            paths.insert(name.clone(), p);
        }
        let observables = cfg.observables.iter().map(|(k, v)| (k.clone(), v.build())).collect();
        Ok(Self { spec, dynamics, paths, observables })
    }
}

/// Directory against which relative paths of a config file are resolved.
pub fn base_dir(config_path: &Path) -> PathBuf {
    config_path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Input of `solve-dde`: a drift, a history on `[-h, 0]` and a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveDdeConfig {
    pub drift: DriftSpec,
    pub history: PathShape,
    pub h: f64,
    pub dt: f64,
    pub horizon: f64,
    /// CSV file relative to the config; stdout when absent.
    pub output: Option<String>,
}

impl SolveDdeConfig {
    pub fn solve(&self, base: &Path) -> Result<SampledPath> {
        let def = PathDef { kind: PathKind::Continuous, t_min: -self.h, t_max: 0.0, shape: self.history.clone() };
        let xi = def.build(self.dt, base)?.past_segment(0.0, self.h);
        crate::dynamics::solve_dde(&self.drift.build(), &xi, self.horizon, self.dt)
    }
}

/// Input of `simulate`: trajectories of one dynamics from a history path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub dynamics: DynamicsDef,
    pub history: PathDef,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    #[serde(default = "one")]
    pub n_paths: usize,
    /// CSV file relative to the config; stdout when absent.
    pub output: Option<String>,
}

impl SimulateConfig {
    pub fn simulate(&self, base: &Path) -> Result<Vec<SampledPath>> {
        let mc = MonteCarlo { n_paths: self.n_paths, seed: self.seed, dt: self.dt, horizon: self.horizon };
        let spec = ExpectationSpec::new(self.dynamics.kind(), mc)?;
        let x = self.history.build(self.dt, base)?;
        (0..spec.mc.n_paths as u64).map(|i| spec.sample_completion(&x, i)).collect()
    }
}
