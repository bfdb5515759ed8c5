//! Expectation operators `𝔼`, conditional operators `𝔼_t`, the semigroup
//! `𝕋(t) = 𝔼Θ_t` and Monte Carlo checks of the laws they satisfy.

mod checks;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    advance, sample_levy, stopped_past, Diffusion, Drift, EvolutionMap, LevySpec, NoiseKey, RandomEvolutionMap,
};
use crate::error::{Error, Result};
use crate::observables::{apply, is_past_determined, Observable, Upper, Window};
use crate::path::{grid_steps, same_dt, PathKind, SampledPath, GRID_TOL};

pub use checks::{
    check_expectation_axioms, check_finite_delay_invariance, check_homogeneity, check_markov_reduction,
    check_multiplicativity, check_semigroup_law, generator_probe, induced_state_semigroup, simplex_generator_check,
    GeneratorRow, LawReport, NestedBudget, Z_BAND,
};

/// How futures are produced from a stopped past.
#[derive(Clone)]
pub enum ExpectationKind {
    /// `[𝔼F](x) = F(φ(x))`.
    Deterministic(Arc<dyn EvolutionMap>),
    /// `dY = b(Y) dt + σ(Y) dB` started from `x(0⋆)`.
    Markov { drift: Drift, diffusion: Diffusion },
    /// `dY = b(Y_t) dt + σ(Y_t) dB` started from the segment of `x` on `[-h, 0]`.
    Delay { drift: Drift, diffusion: Diffusion, h: f64 },
    /// `φ(ω, x)` with `ω` a Lévy path.
    LevyFlow { levy: LevySpec, flow: Arc<dyn RandomEvolutionMap> },
}

impl fmt::Debug for ExpectationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpectationKind::Deterministic(phi) => write!(f, "Deterministic({})", phi.name()),
            ExpectationKind::Markov { drift, diffusion } => write!(f, "Markov({drift:?}, {diffusion:?})"),
            ExpectationKind::Delay { drift, diffusion, h } => write!(f, "Delay({drift:?}, {diffusion:?}, h = {h})"),
            ExpectationKind::LevyFlow { levy, flow } => write!(f, "LevyFlow({levy:?}, {})", flow.name()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarlo {
    pub n_paths: usize,
    pub seed: u64,
    pub dt: f64,
    pub horizon: f64,
}

#[derive(Clone, Debug)]
pub struct ExpectationSpec {
    pub kind: ExpectationKind,
    pub mc: MonteCarlo,
}

impl ExpectationSpec {
    pub fn new(kind: ExpectationKind, mut mc: MonteCarlo) -> Result<Self> {
        if mc.n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
        }
        if !(mc.dt > 0.0) || !mc.dt.is_finite() {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {}", mc.dt)));
        }
        if !(mc.horizon >= 0.0) {
            return Err(Error::InvalidParameter(format!("horizon must be >= 0, got {}", mc.horizon)));
        }
        match &kind {
            ExpectationKind::Deterministic(_) => mc.n_paths = 1,
            ExpectationKind::Markov { drift, diffusion } => {
                if !matches!(drift, Drift::Pointwise { .. })
                    || matches!(diffusion, Diffusion::History { .. })
                {
                    return Err(Error::InvalidParameter("Markov coefficients must read only y(t)".into()));
                }
            }
            ExpectationKind::Delay { drift, diffusion, h } => {
                if drift.h() > h + GRID_TOL || diffusion.h() > h + GRID_TOL {
                    return Err(Error::InvalidParameter(format!("coefficients read further back than h = {h}")));
                }
            }
            ExpectationKind::LevyFlow { levy, .. } => levy.validate()?,
        }
        Ok(Self { kind, mc })
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.kind, ExpectationKind::Deterministic(_))
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { mc: MonteCarlo { seed, ..self.mc }, ..self.clone() }
    }

    pub fn with_paths(&self, n_paths: usize) -> Self {
        let n_paths = if self.is_deterministic() { 1 } else { n_paths.max(1) };
        Self { mc: MonteCarlo { n_paths, ..self.mc }, ..self.clone() }
    }

    /// Length of history the future reads.
    pub fn history(&self) -> f64 {
        match &self.kind {
            ExpectationKind::Markov { .. } => 0.0,
            ExpectationKind::Delay { h, .. } => *h,
            ExpectationKind::Deterministic(_) | ExpectationKind::LevyFlow { .. } => f64::INFINITY,
        }
    }

    /// Trajectory `trajectory` of the completion of `stop(x)` up to the horizon.
    pub fn sample_completion(&self, x: &SampledPath, trajectory: u64) -> Result<SampledPath> {
        let steps = grid_steps(self.mc.horizon, self.mc.dt)? as usize;
        self.complete(&x.stop()?, steps, trajectory)
    }

    /// The completed path `x ⊕ Y` in the frame of `past`, which must be stopped.
    fn complete(&self, past: &SampledPath, steps: usize, trajectory: u64) -> Result<SampledPath> {
        let dt = self.mc.dt;
        let horizon = steps as f64 * dt;
        let key = NoiseKey::new(self.mc.seed, trajectory);
        match &self.kind {
            ExpectationKind::Deterministic(phi) => phi.apply(past, horizon),
            ExpectationKind::Markov { drift, diffusion } => self.euler(drift, diffusion, 0, past, steps, &key),
            ExpectationKind::Delay { drift, diffusion, h } => {
                let lag = ((h / dt).round() as usize).max(1);
                self.euler(drift, diffusion, lag, past, steps, &key)
            }
            ExpectationKind::LevyFlow { levy, flow } => {
                let omega = sample_levy(levy, horizon, dt, &key)?;
                flow.apply(&omega, past, horizon)
            }
        }
    }

    fn euler(
        &self,
        drift: &Drift,
        diffusion: &Diffusion,
        lag: usize,
        past: &SampledPath,
        steps: usize,
        key: &NoiseKey,
    ) -> Result<SampledPath> {
        let (lo, mut nodes) = stopped_past(past, lag)?;
        advance(drift, diffusion, &mut nodes, past.dim(), self.mc.dt, steps, Some(key))?;
        SampledPath::new(past.kind(), lo as f64 * self.mc.dt, self.mc.dt, past.dim(), nodes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Trajectories simulated; 0 when the value was computed without sampling.
    pub n: usize,
    pub seed: u64,
}

impl MCEstimate {
    pub fn exact(value: f64, seed: u64) -> Self {
        Self { mean: value, stderr: 0.0, n: 0, seed }
    }

    /// Mean and `sd / √n` of samples in trajectory order.
    pub fn from_samples(values: &[f64], seed: u64) -> Self {
        let n = values.len();
        let mean = pairwise_sum(values) / n as f64;
        let stderr = if n > 1 {
            let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
            (pairwise_sum(&dev) / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, n, seed }
    }
}

pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Where the future is conditioned and by how much the observable is shifted,
/// in the time coordinates of the path.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Frame {
    cond_t: f64,
    cond: i64,
    shift_t: f64,
    shift: i64,
}

impl Frame {
    pub fn new(cond_t: f64, shift_t: f64, dt: f64) -> Result<Self> {
        for t in [cond_t, shift_t] {
            if t < 0.0 {
                return Err(Error::InvalidParameter(format!("time {t} must be non-negative")));
            }
        }
        Ok(Self { cond_t, cond: grid_steps(cond_t, dt)?, shift_t, shift: grid_steps(shift_t, dt)? })
    }

    /// The observable, read on `ϑ_shift` of the completed path, only sees the past of `cond`.
    fn is_known(&self, obs: &Observable, kind: PathKind) -> bool {
        is_past_determined(obs, self.cond_t - self.shift_t, kind)
    }
}

enum Plan {
    Known(f64),
    Leaf(usize),
    Scale(f64, Box<Plan>),
    Offset(f64, Box<Plan>),
}

struct Planner<'a> {
    frame: Frame,
    x: &'a SampledPath,
    view: SampledPath,
    leaves: Vec<&'a Observable>,
}

impl<'a> Planner<'a> {
    fn known(&self, obs: &Observable) -> Option<f64> {
        self.frame.is_known(obs, self.x.kind()).then(|| apply(obs, &self.view))
    }

    fn plan(&mut self, obs: &'a Observable) -> Plan {
        if let Some(v) = self.known(obs) {
            return Plan::Known(v);
        }
        match obs {
            Observable::Scale(c, g) => Plan::Scale(*c, Box::new(self.plan(g))),
            Observable::Product(f, g) => {
                if let Some(v) = self.known(f) {
                    return Plan::Scale(v, Box::new(self.plan(g)));
                }
                if let Some(v) = self.known(g) {
                    return Plan::Scale(v, Box::new(self.plan(f)));
                }
                self.leaf(obs)
            }
            Observable::Sum(f, g) => {
                if let Some(v) = self.known(f) {
                    return Plan::Offset(v, Box::new(self.plan(g)));
                }
                if let Some(v) = self.known(g) {
                    return Plan::Offset(v, Box::new(self.plan(f)));
                }
                self.leaf(obs)
            }
            _ => self.leaf(obs),
        }
    }

    fn leaf(&mut self, obs: &'a Observable) -> Plan {
        self.leaves.push(obs);
        Plan::Leaf(self.leaves.len() - 1)
    }
}

fn combine(plan: &Plan, est: &[MCEstimate]) -> (f64, f64) {
    match plan {
        Plan::Known(v) => (*v, 0.0),
        Plan::Leaf(i) => (est[*i].mean, est[*i].stderr),
        Plan::Scale(c, p) => {
            let (m, s) = combine(p, est);
            (c * m, c.abs() * s)
        }
        Plan::Offset(c, p) => {
            let (m, s) = combine(p, est);
            (c + m, s)
        }
    }
}

fn check_inputs(spec: &ExpectationSpec, obs: &[&Observable], x: &SampledPath) -> Result<()> {
    if !same_dt(x.dt(), spec.mc.dt) {
        return Err(Error::GridMismatch(x.dt(), spec.mc.dt));
    }
    if let ExpectationKind::LevyFlow { levy, .. } = &spec.kind {
        if levy.dim() != x.dim() {
            return Err(Error::DimensionMismatch { expected: levy.dim(), got: x.dim() });
        }
    }
    obs.iter().try_for_each(|o| o.validate(x.dim()))
}

/// Steps past the conditioning time that the observables read.
fn steps_needed(spec: &ExpectationSpec, obs: &[&Observable], kind: PathKind, frame: Frame) -> Result<usize> {
    let dt = spec.mc.dt;
    let hull = obs.iter().fold(Window::Empty, |w, o| w.hull(&o.window()));
    let last = match hull {
        Window::Empty => return Ok(1),
        Window::Interval { hi: Upper::PosInf, .. } => {
            return Err(Error::HorizonExceeded { needed: f64::INFINITY, horizon: spec.mc.horizon })
        }
        w => w.node_range(kind, dt).map_or(frame.cond, |r| r.1 + frame.shift),
    };
    let steps = (last - frame.cond).max(1);
    if steps as f64 * dt > spec.mc.horizon + GRID_TOL * spec.mc.horizon.max(1.0) && last > frame.cond {
        return Err(Error::HorizonExceeded { needed: steps as f64 * dt, horizon: spec.mc.horizon });
    }
    Ok(steps as usize)
}

/// Values of every observable on every trajectory, in trajectory order.
pub(crate) fn sample_rows(
    spec: &ExpectationSpec,
    obs: &[&Observable],
    x: &SampledPath,
    frame: Frame,
) -> Result<Vec<Vec<f64>>> {
    check_inputs(spec, obs, x)?;
    let steps = steps_needed(spec, obs, x.kind(), frame)?;
    let past = x.shift_steps(frame.cond).stop()?;
    let back = frame.shift - frame.cond;
    (0..spec.mc.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let w = spec.complete(&past, steps, i)?.shift_steps(back);
            Ok(obs.iter().map(|o| apply(o, &w)).collect())
        })
        .collect()
}

/// `Θ_cond 𝔼 Θ_{shift - cond} F` at `x`, with past-determined factors taken out exactly.
pub(crate) fn estimate(spec: &ExpectationSpec, obs: &Observable, x: &SampledPath, frame: Frame) -> Result<MCEstimate> {
    check_inputs(spec, &[obs], x)?;
    let mut planner = Planner { frame, x, view: x.shift_steps(frame.shift), leaves: Vec::new() };
    let plan = planner.plan(obs);
    if planner.leaves.is_empty() {
        let (m, _) = combine(&plan, &[]);
        return Ok(MCEstimate::exact(m, spec.mc.seed));
    }
    let rows = sample_rows(spec, &planner.leaves, x, frame)?;
    let est: Vec<MCEstimate> = (0..planner.leaves.len())
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            MCEstimate::from_samples(&col, spec.mc.seed)
        })
        .collect();
    let (mean, stderr) = combine(&plan, &est);
    Ok(MCEstimate { mean, stderr, n: rows.len(), seed: spec.mc.seed })
}

/// `[𝔼F](x)`: the average of `F` over pasts `stop(x)` completed by simulated futures.
pub fn expectation(spec: &ExpectationSpec, obs: &Observable, x: &SampledPath) -> Result<MCEstimate> {
    estimate(spec, obs, x, Frame::new(0.0, 0.0, spec.mc.dt)?)
}

/// `[𝔼_t F](x) = [Θ_t 𝔼 Θ_{-t} F](x)`: the future is restarted from the history of `x` up to `t`.
pub fn conditional_expectation(spec: &ExpectationSpec, obs: &Observable, x: &SampledPath, t: f64) -> Result<MCEstimate> {
    estimate(spec, obs, x, Frame::new(t, 0.0, spec.mc.dt)?)
}

/// `[𝕋(t)F](x) = [𝔼Θ_t F](x)` for past-determined `F`.
pub fn semigroup_apply(spec: &ExpectationSpec, t: f64, obs: &Observable, x: &SampledPath) -> Result<MCEstimate> {
    if !is_past_determined(obs, 0.0, x.kind()) {
        return Err(Error::NotPastDetermined(format!("{:?}", obs.window())));
    }
    estimate(spec, obs, x, Frame::new(0.0, t, spec.mc.dt)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DdeEvolution;
    use crate::observables::TestFunction;

    fn heat(n: usize) -> ExpectationSpec {
        let kind = ExpectationKind::Markov { drift: Drift::zero(), diffusion: Diffusion::constant(1, 1.0) };
        ExpectationSpec::new(kind, MonteCarlo { n_paths: n, seed: 7, dt: 0.01, horizon: 2.0 }).unwrap()
    }

    fn ramp() -> SampledPath {
        SampledPath::from_fn(PathKind::Continuous, -1.0, 1.0, 0.01, 1, |t| vec![t.sin()]).unwrap()
    }

    #[test]
    fn projection_and_markovianity() {
        let spec = heat(50);
        let x = ramp();
        let f = Observable::integral(TestFunction::cosine(1.0), -0.7, -0.2);
        let e = expectation(&spec, &f, &x).unwrap();
        assert_eq!(e.mean, apply(&f, &x));
        assert_eq!((e.stderr, e.n), (0.0, 0));
        let one = expectation(&spec, &Observable::Const(1.0), &x).unwrap();
        assert_eq!((one.mean, one.stderr), (1.0, 0.0));
    }

    #[test]
    fn futures_start_at_the_frozen_value() {
        let spec = heat(20);
        let x = ramp();
        let rows = sample_rows(&spec, &[&Observable::eval(TestFunction::Coordinate(0), 0.0)], &x, Frame::new(0.0, 0.0, 0.01).unwrap())
            .unwrap();
        assert!(rows.iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn heat_kernel_mean() {
        let spec = heat(4000);
        let x = SampledPath::constant(PathKind::Continuous, -0.5, 0.0, 0.01, &[0.0]).unwrap();
        let f = Observable::eval(TestFunction::cosine(1.0), 1.0);
        let e = expectation(&spec, &f, &x).unwrap();
        assert!((e.mean - (-0.5f64).exp()).abs() < 4.0 * e.stderr + 0.02, "{e:?}");
    }

    #[test]
    fn horizon_and_window_errors() {
        let spec = heat(2);
        let x = ramp();
        let far = Observable::eval(TestFunction::cosine(1.0), 3.0);
        assert!(matches!(expectation(&spec, &far, &x), Err(Error::HorizonExceeded { .. })));
        let fut = Observable::eval(TestFunction::cosine(1.0), 0.5);
        assert!(matches!(semigroup_apply(&spec, 0.1, &fut, &x), Err(Error::NotPastDetermined(_))));
    }

    #[test]
    fn deterministic_kind_applies_the_map() {
        let drift = Drift::discrete_delay(1.0, 1.0, |y, o| o[0] = -y[0]);
        let phi = DdeEvolution { drift };
        let spec = ExpectationSpec::new(
            ExpectationKind::Deterministic(Arc::new(phi.clone())),
            MonteCarlo { n_paths: 10, seed: 0, dt: 0.01, horizon: 2.0 },
        )
        .unwrap();
        assert_eq!(spec.mc.n_paths, 1);
        let x = ramp();
        let f = Observable::integral(TestFunction::cosine(2.0), -0.5, 1.5);
        let e = expectation(&spec, &f, &x).unwrap();
        assert_eq!(e.mean, apply(&f, &phi.apply(&x, 1.5).unwrap()));
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
    }
}
