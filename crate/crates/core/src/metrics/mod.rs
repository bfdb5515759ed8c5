//! Metrics on states and paths: the capped state metric, `d_C`, the bounded
//! Skorokhod distance, the whole-line J1 metric and the modulus `ω′`.

mod modulus;
mod skorokhod;
mod time_change;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{PathKind, SampledPath, StatePoint};

pub use modulus::modulus;
pub use skorokhod::{d_ab_j1, objective};
pub use time_change::{lip_cost, TimeChange};

pub(crate) fn dist_capped(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt().min(1.0)
}

/// `min(|x - y|, 1)`.
pub fn d_state(x: &StatePoint, y: &StatePoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    Ok(dist_capped(x.as_slice(), y.as_slice()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub witness: Option<TimeChange>,
    pub is_upper_bound: bool,
    /// Bound on the part of the value not accounted for (series or integral tails).
    pub tail_error: f64,
}

impl MetricValue {
    pub fn exact(value: f64) -> Self {
        Self { value, witness: None, is_upper_bound: false, tail_error: 0.0 }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "value": self.value,
            "is_upper_bound": self.is_upper_bound,
            "tail_error": self.tail_error,
            "witness_knots": self.witness.as_ref().map(|w| serde_json::json!({
                "knots": w.knots(),
                "images": w.images(),
            })),
        })
    }
}

/// Limits for the time-change searches and the integral metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchBudget {
    /// Largest number of (x-piece, y-piece) cells handled by the exact step-path search.
    pub max_matchings: usize,
    /// Slopes of the general search are `dk/di` with `di, dk <= slope_levels`.
    pub slope_levels: usize,
    /// Interior knots kept by the general search.
    pub dp_nodes: usize,
    /// Maximal index offset between knot and image in the general search.
    pub band: usize,
    pub quad_step: f64,
    pub s_max: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { max_matchings: 4096, slope_levels: 4, dp_nodes: 24, band: 8, quad_step: 0.05, s_max: 8.0 }
    }
}

/// `Σ_{n=1}^{n_max} 2^{-n} (1 ∧ sup_{[-n,n]} d(x(t), y(t)))`, tail `2^{-n_max}`.
pub fn d_c(x: &SampledPath, y: &SampledPath, n_max: u32) -> Result<MetricValue> {
    if x.kind() != PathKind::Continuous || y.kind() != PathKind::Continuous {
        return Err(Error::KindMismatch("d_c needs continuous paths".into()));
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    let mut sum = 0.0;
    for n in 1..=n_max {
        let r = n as f64;
        let sup = skorokhod::identity_bound(x, y, -r, r);
        sum += sup * 0.5f64.powi(n as i32);
    }
    Ok(MetricValue { value: sum, witness: None, is_upper_bound: false, tail_error: 0.5f64.powi(n_max as i32) })
}

/// Midpoints and exact `e^{-u}` masses of the cells of `[0, s_max]`.
fn exp_cells(s_max: f64, quad_step: f64) -> Vec<(f64, f64)> {
    let n = (s_max / quad_step).ceil().max(1.0) as usize;
    let h = s_max / n as f64;
    (0..n)
        .map(|i| {
            let (lo, hi) = (i as f64 * h, (i + 1) as f64 * h);
            ((lo + hi) * 0.5, (-lo).exp() - (-hi).exp())
        })
        .collect()
}

/// `d_a^b` for many windows, reusing the jump lists of step paths.
struct WindowMetric<'a> {
    x: &'a SampledPath,
    y: &'a SampledPath,
    steps: Option<(skorokhod::StepIndex, skorokhod::StepIndex)>,
    budget: &'a SearchBudget,
}

impl<'a> WindowMetric<'a> {
    fn new(x: &'a SampledPath, y: &'a SampledPath, lo: f64, hi: f64, budget: &'a SearchBudget) -> Result<Self> {
        if x.kind() != y.kind() {
            return Err(Error::KindMismatch(format!("{} vs {}", x.kind(), y.kind())));
        }
        if x.dim() != y.dim() {
            return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
        }
        let step = |p| skorokhod::StepIndex::is_step_path(p, lo, hi);
        let steps = (step(x) && step(y)).then(|| (skorokhod::StepIndex::new(x), skorokhod::StepIndex::new(y)));
        Ok(Self { x, y, steps, budget })
    }

    fn eval(&self, a: f64, b: f64) -> Result<MetricValue> {
        if let Some((sx, sy)) = &self.steps {
            if let Some(m) = skorokhod::d_ab_steps(sx, sy, a, b, self.budget) {
                return Ok(m);
            }
        }
        d_ab_j1(self.x, self.y, a, b, self.budget)
    }
}

fn check_quadrature(s_max: f64, quad_step: f64) -> Result<()> {
    if !(s_max > 0.0) || !(quad_step > 0.0) {
        return Err(Error::InvalidParameter(format!("need s_max > 0 and quad_step > 0, got {s_max} and {quad_step}")));
    }
    Ok(())
}

/// `∫_{-∞}^0 ∫_0^∞ e^{s-t} d_s^t(x, y) dt ds` by midpoint quadrature on `[-s_max, 0] × [0, s_max]`.
pub fn d_j1(x: &SampledPath, y: &SampledPath, s_max: f64, quad_step: f64, budget: &SearchBudget) -> Result<MetricValue> {
    check_quadrature(s_max, quad_step)?;
    let cells = exp_cells(s_max, quad_step);
    let metric = WindowMetric::new(x, y, -s_max, s_max, budget)?;
    let pairs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|i| (0..cells.len()).map(move |j| (i, j))).collect();
    let terms = pairs
        .par_iter()
        .map(|&(i, j)| {
            let m = metric.eval(-cells[i].0, cells[j].0)?;
            Ok((cells[i].1 * cells[j].1 * m.value, m.is_upper_bound))
        })
        .collect::<Result<Vec<_>>>()?;
    let value = terms.iter().map(|t| t.0).sum::<f64>().min(1.0);
    let is_upper_bound = terms.iter().any(|t| t.1);
    Ok(MetricValue { value, witness: None, is_upper_bound, tail_error: 2.0 * (-s_max).exp() })
}

/// `∫_0^∞ e^{-t} d_{-t}^0(x, y) dt` for stopped paths.
pub fn d_minus_j1(x: &SampledPath, y: &SampledPath, s_max: f64, quad_step: f64, budget: &SearchBudget) -> Result<MetricValue> {
    check_quadrature(s_max, quad_step)?;
    if !x.is_stopped() || !y.is_stopped() {
        return Err(Error::NotStopped);
    }
    let cells = exp_cells(s_max, quad_step);
    let metric = WindowMetric::new(x, y, -s_max, 0.0, budget)?;
    let terms = cells
        .par_iter()
        .map(|&(u, w)| {
            let m = metric.eval(-u, 0.0)?;
            Ok((w * m.value, m.is_upper_bound))
        })
        .collect::<Result<Vec<_>>>()?;
    let value = terms.iter().map(|t| t.0).sum::<f64>().min(1.0);
    let is_upper_bound = terms.iter().any(|t| t.1);
    Ok(MetricValue { value, witness: None, is_upper_bound, tail_error: (-s_max).exp() })
}

/// `max{log(δ/(δ-|t|)), log(1+|t|/δ)}` for `|t| < δ`.
pub fn f_delta_bound(delta: f64, t: f64) -> Result<f64> {
    if !(t.abs() < delta) {
        return Err(Error::OutOfRange { t, delta });
    }
    let a = t.abs();
    Ok((delta / (delta - a)).ln().max((1.0 + a / delta).ln()))
}
