use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::{grid_steps, SampledPath};

use super::coeffs::{Diffusion, Drift};
use super::kernel::advance;

/// A deterministic future-completion of paths.
pub trait EvolutionMap: Send + Sync {
    fn name(&self) -> String;

    /// `φ(x)` on `[x.t_min, horizon]`.
    fn apply(&self, x: &SampledPath, horizon: f64) -> Result<SampledPath>;
}

/// Nodes of `stop(x)` up to and including time 0, padded below to cover `steps` delay steps.
pub(crate) fn stopped_past(x: &SampledPath, steps: usize) -> Result<(i64, Vec<f64>)> {
    let s = x.stop()?;
    let lo = s.start_index().min(-(steps as i64));
    let mut nodes = Vec::with_capacity(((-lo) as usize + 1) * s.dim());
    for k in lo..=0 {
        nodes.extend_from_slice(s.node_at_index(k));
    }
    Ok((lo, nodes))
}

/// `φ(x)(t) = x(t)` for `t < 0` and the solution of `y' = b(y_t)` from `x_0` afterwards.
#[derive(Clone, Debug)]
pub struct DdeEvolution {
    pub drift: Drift,
}

impl EvolutionMap for DdeEvolution {
    fn name(&self) -> String {
        format!("dde({:?})", self.drift)
    }

    fn apply(&self, x: &SampledPath, horizon: f64) -> Result<SampledPath> {
        let dt = x.dt();
        let n = grid_steps(horizon, dt)?;
        if n < 0 {
            return Err(Error::InvalidParameter(format!("horizon {horizon} must be non-negative")));
        }
        let steps = ((self.drift.h() / dt).round() as usize).max(1);
        let (lo, mut nodes) = stopped_past(x, steps)?;
        advance(&self.drift, &Diffusion::None, &mut nodes, x.dim(), dt, n as usize, None)?;
        if n == 0 {
            nodes.extend_from_within(nodes.len() - x.dim()..);
        }
        let out = SampledPath::new(x.kind(), lo as f64 * dt, dt, x.dim(), nodes)?;
        out.rewindow(x.t_min().min(0.0), (n.max(1)) as f64 * dt)
    }
}

/// The stopping map `τ` viewed as an evolution map.
#[derive(Clone, Copy, Debug, Default)]
pub struct StopMap;

impl EvolutionMap for StopMap {
    fn name(&self) -> String {
        "stop".into()
    }

    fn apply(&self, x: &SampledPath, horizon: f64) -> Result<SampledPath> {
        let hi = horizon.max(x.dt());
        x.stop()?.rewindow(x.t_min().min(0.0), grid_steps(hi, x.dt())? as f64 * x.dt())
    }
}

/// Where the largest residual of a condition was found.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub condition: String,
    pub sample: usize,
    pub time: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionResidual {
    pub condition: String,
    pub residual: f64,
    pub passed: bool,
    pub worst: Option<Violation>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub map: String,
    pub tol: f64,
    pub conditions: Vec<ConditionResidual>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn residual(&self, condition: &str) -> Option<f64> {
        self.conditions.iter().find(|c| c.condition == condition).map(|c| c.residual)
    }
}

/// Sup-norm distance over the nodes of `[lo, hi]`, with the time of the largest gap.
pub(crate) fn sup_diff(a: &SampledPath, b: &SampledPath, lo: f64, hi: f64) -> (f64, f64) {
    let dt = a.dt();
    let (klo, khi) = ((lo / dt).round() as i64, (hi / dt).round() as i64);
    let mut worst = (0.0, lo);
    for k in klo..=khi {
        let d = a
            .node_at_index(k)
            .iter()
            .zip(b.node_at_index(k))
            .map(|(u, v)| if u == v { 0.0 } else { (u - v).abs() })
            .fold(0.0, f64::max);
        if d > worst.0 || (d.is_nan() && !worst.0.is_nan()) {
            worst = (d, k as f64 * dt);
        }
    }
    worst
}

pub(crate) struct Tracker {
    name: String,
    residual: f64,
    worst: Option<Violation>,
}

impl Tracker {
    pub fn new(name: &str) -> Self {
        Self { name: name.into(), residual: 0.0, worst: None }
    }

    pub fn record(&mut self, sample: usize, (residual, time): (f64, f64)) {
        if residual > self.residual || (residual.is_nan() && !self.residual.is_nan()) {
            self.residual = residual;
            self.worst = Some(Violation { condition: self.name.clone(), sample, time, residual });
        }
    }

    pub fn finish(self, tol: f64) -> ConditionResidual {
        ConditionResidual { passed: self.residual <= tol, condition: self.name, residual: self.residual, worst: self.worst }
    }
}

/// Residuals of (i) `φ(x) = φ(τx)`, (ii) `τφ(x) = τx` and (iii) `φ(ϑ_t φ(x)) = ϑ_t φ(x)`.
pub fn check_evolution_map(
    phi: &dyn EvolutionMap,
    samples: &[SampledPath],
    t_list: &[f64],
    horizon: f64,
    tol: f64,
) -> Result<AxiomReport> {
    let mut c1 = Tracker::new("i");
    let mut c2 = Tracker::new("ii");
    let mut c3 = Tracker::new("iii");
    for (i, x) in samples.iter().enumerate() {
        let y = phi.apply(x, horizon)?;
        let lo = y.t_min();
        c1.record(i, sup_diff(&y, &phi.apply(&x.stop()?, horizon)?, lo, horizon));
        let past = x.stop()?;
        c2.record(i, sup_diff(&y.stop()?, &past, lo.min(x.t_min()), horizon));
        for &t in t_list {
            if t > horizon {
                continue;
            }
            let shifted = y.shift(t)?;
            let again = phi.apply(&shifted, horizon - t)?;
            let (r, at) = sup_diff(&again, &shifted, shifted.t_min(), horizon - t);
            c3.record(i, (r, at + t));
        }
    }
    Ok(AxiomReport { map: phi.name(), tol, conditions: vec![c1.finish(tol), c2.finish(tol), c3.finish(tol)] })
}
