use serde::{Deserialize, Serialize};

use super::coeffs::{Diffusion, Drift, HistoryView};

/// Named drifts, applied coordinate-wise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Zero,
    /// `a y(t)`.
    Linear { a: f64 },
    /// `-θ y(t)`.
    Ou { theta: f64 },
    /// `a tanh(y(t))`.
    Tanh { a: f64 },
    /// `a y(t - delay)`.
    DelayLinear { a: f64, delay: f64 },
    /// `a tanh(y(t - delay))`.
    DelayTanh { a: f64, delay: f64 },
    /// `a sin(y(t - delay))`.
    DelaySin { a: f64, delay: f64 },
    /// `a` times the trapezoid average of `y` over `[t - h, t]`.
    DelayAverage { a: f64, h: f64 },
}

impl DriftSpec {
    pub fn build(&self) -> Drift {
        match *self {
            DriftSpec::Zero => Drift::zero(),
            DriftSpec::Linear { a } => Drift::pointwise(a.abs(), move |y, o| map(y, o, |v| a * v)),
            DriftSpec::Ou { theta } => Drift::pointwise(theta.abs(), move |y, o| map(y, o, |v| -theta * v)),
            DriftSpec::Tanh { a } => Drift::pointwise(a.abs(), move |y, o| map(y, o, |v| a * v.tanh())),
            DriftSpec::DelayLinear { a, delay } => Drift::discrete_delay(delay, a.abs(), move |y, o| map(y, o, |v| a * v)),
            DriftSpec::DelayTanh { a, delay } => {
                Drift::discrete_delay(delay, a.abs(), move |y, o| map(y, o, |v| a * v.tanh()))
            }
            DriftSpec::DelaySin { a, delay } => {
                Drift::discrete_delay(delay, a.abs(), move |y, o| map(y, o, |v| a * v.sin()))
            }
            DriftSpec::DelayAverage { a, h } => Drift::history(h, a.abs(), move |view, o| average(view, h, a, o)),
        }
    }
}

fn map(y: &[f64], out: &mut [f64], f: impl Fn(f64) -> f64) {
    for (o, v) in out.iter_mut().zip(y) {
        *o = f(*v);
    }
}

fn average(view: &HistoryView, h: f64, a: f64, out: &mut [f64]) {
    let steps = view.lag_steps_count(h);
    out.fill(0.0);
    for k in 0..=steps {
        let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
        for (o, v) in out.iter_mut().zip(view.lag_steps(k)) {
            *o += w * v;
        }
    }
    for o in out.iter_mut() {
        *o *= a / steps as f64;
    }
}

/// Named diffusions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusionSpec {
    None,
    /// `σ = sigma I`.
    Constant { sigma: f64 },
    /// `σ = sigma (1 + 0.5 tanh(y(t - delay)))`, bounded with bounded inverse.
    DelayModulated { sigma: f64, delay: f64 },
}

impl DiffusionSpec {
    pub fn build(&self, dim: usize) -> Diffusion {
        match *self {
            DiffusionSpec::None => Diffusion::None,
            DiffusionSpec::Constant { sigma } => Diffusion::constant(dim, sigma),
            DiffusionSpec::DelayModulated { sigma, delay } => Diffusion::history(delay, dim, move |view, out| {
                let k = view.lag_steps_count(delay);
                let y = view.lag_steps(k);
                out.fill(0.0);
                for i in 0..dim {
                    out[i * dim + i] = sigma * (1.0 + 0.5 * y[i].tanh());
                }
            }),
        }
    }
}
