use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::path::GRID_TOL;

use super::rng::{NoiseKey, NoiseStream, LANE_MISC};

/// Read access to a solution's history while stepping: node `idx` is "now".
pub struct HistoryView<'a> {
    nodes: &'a [f64],
    dim: usize,
    idx: usize,
    dt: f64,
}

impl<'a> HistoryView<'a> {
    pub fn new(nodes: &'a [f64], dim: usize, idx: usize, dt: f64) -> Self {
        Self { nodes, dim, idx, dt }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn node(&self, i: usize) -> &'a [f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    /// `y(t)`.
    pub fn current(&self) -> &'a [f64] {
        self.node(self.idx)
    }

    /// Number of grid steps in a lag of length `h`.
    pub fn lag_steps_count(&self, h: f64) -> usize {
        (h / self.dt).round() as usize
    }

    /// `y(t - k dt)`, clamped to the oldest stored node.
    pub fn lag_steps(&self, k: usize) -> &'a [f64] {
        self.node(self.idx.saturating_sub(k))
    }

    /// `y(t + s)` for `s <= 0`, interpolating linearly between nodes.
    pub fn at_into(&self, s: f64, out: &mut [f64]) {
        let u = self.idx as f64 + s / self.dt;
        if u <= 0.0 {
            out.copy_from_slice(self.node(0));
            return;
        }
        let r = u.round();
        if (u - r).abs() <= GRID_TOL * r.max(1.0) {
            out.copy_from_slice(self.node(r as usize));
            return;
        }
        let i = u.floor() as usize;
        let w = u - i as f64;
        let (a, b) = (self.node(i), self.node(i + 1));
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o = x + w * (y - x);
        }
    }
}

pub type VecFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type HistFn = Arc<dyn Fn(&HistoryView, &mut [f64]) + Send + Sync>;

/// The drift `b` of `dY = b dt + σ dB`.
#[derive(Clone)]
pub enum Drift {
    /// `b(y(t))`.
    Pointwise { f: VecFn, lipschitz: f64 },
    /// `b(y_t)` reading the segment on `[t - h, t]`.
    History { f: HistFn, h: f64, lipschitz: f64 },
    /// `b(y(t - delay))`.
    DiscreteDelay { f: VecFn, delay: f64, lipschitz: f64 },
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Pointwise { lipschitz, .. } => write!(f, "Drift::Pointwise(L = {lipschitz})"),
            Drift::History { h, lipschitz, .. } => write!(f, "Drift::History(h = {h}, L = {lipschitz})"),
            Drift::DiscreteDelay { delay, lipschitz, .. } => {
                write!(f, "Drift::DiscreteDelay(delay = {delay}, L = {lipschitz})")
            }
        }
    }
}

impl Drift {
    pub fn pointwise(lipschitz: f64, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        Drift::Pointwise { f: Arc::new(f), lipschitz }
    }

    pub fn history(h: f64, lipschitz: f64, f: impl Fn(&HistoryView, &mut [f64]) + Send + Sync + 'static) -> Self {
        Drift::History { f: Arc::new(f), h, lipschitz }
    }

    pub fn discrete_delay(delay: f64, lipschitz: f64, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        Drift::DiscreteDelay { f: Arc::new(f), delay, lipschitz }
    }

    pub fn zero() -> Self {
        Drift::pointwise(0.0, |_, out| out.fill(0.0))
    }

    /// Length of history the drift reads.
    pub fn h(&self) -> f64 {
        match self {
            Drift::Pointwise { .. } => 0.0,
            Drift::History { h, .. } => *h,
            Drift::DiscreteDelay { delay, .. } => *delay,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Drift::Pointwise { lipschitz, .. }
            | Drift::History { lipschitz, .. }
            | Drift::DiscreteDelay { lipschitz, .. } => *lipschitz,
        }
    }

    pub fn eval(&self, view: &HistoryView, out: &mut [f64]) {
        match self {
            Drift::Pointwise { f, .. } => f(view.current(), out),
            Drift::History { f, .. } => f(view, out),
            Drift::DiscreteDelay { f, delay, .. } => {
                f(view.lag_steps(view.lag_steps_count(*delay)), out)
            }
        }
    }
}

pub type MatFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type HistMatFn = Arc<dyn Fn(&HistoryView, &mut [f64]) + Send + Sync>;

/// The diffusion `σ`, a `d × m` matrix stored row-major.
#[derive(Clone)]
pub enum Diffusion {
    None,
    Pointwise { f: MatFn, m: usize },
    History { f: HistMatFn, h: f64, m: usize },
}

impl fmt::Debug for Diffusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diffusion::None => write!(f, "Diffusion::None"),
            Diffusion::Pointwise { m, .. } => write!(f, "Diffusion::Pointwise(m = {m})"),
            Diffusion::History { h, m, .. } => write!(f, "Diffusion::History(h = {h}, m = {m})"),
        }
    }
}

impl Diffusion {
    pub fn pointwise(m: usize, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        Diffusion::Pointwise { f: Arc::new(f), m }
    }

    pub fn history(h: f64, m: usize, f: impl Fn(&HistoryView, &mut [f64]) + Send + Sync + 'static) -> Self {
        Diffusion::History { f: Arc::new(f), h, m }
    }

    /// `σ = s I_d`.
    pub fn constant(dim: usize, s: f64) -> Self {
        Diffusion::pointwise(dim, move |_, out| {
            out.fill(0.0);
            for i in 0..dim {
                out[i * dim + i] = s;
            }
        })
    }

    pub fn noise_dim(&self) -> usize {
        match self {
            Diffusion::None => 0,
            Diffusion::Pointwise { m, .. } | Diffusion::History { m, .. } => *m,
        }
    }

    pub fn h(&self) -> f64 {
        match self {
            Diffusion::History { h, .. } => *h,
            _ => 0.0,
        }
    }

    pub fn eval(&self, view: &HistoryView, out: &mut [f64]) {
        match self {
            Diffusion::None => out.fill(0.0),
            Diffusion::Pointwise { f, .. } => f(view.current(), out),
            Diffusion::History { f, .. } => f(view, out),
        }
    }
}

/// Largest observed `|b(x) - b(y)| / |x - y|` over random constant-history probe
/// pairs, compared with the declared constant (ratio within 1.1).
pub fn validate_lipschitz(drift: &Drift, dim: usize, dt: f64, probes: usize, seed: u64) -> Result<f64> {
    let steps = ((drift.h() / dt).round() as usize).max(1);
    let mut rng = NoiseStream::new(&NoiseKey::new(seed, 0), LANE_MISC);
    let mut worst: f64 = 0.0;
    let (mut bx, mut by) = (vec![0.0; dim], vec![0.0; dim]);
    for _ in 0..probes {
        let x: Vec<f64> = (0..dim).map(|_| 4.0 * rng.uniform() - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 0.2 * (rng.uniform() - 0.5)).collect();
        let hx: Vec<f64> = (0..=steps).flat_map(|_| x.clone()).collect();
        let hy: Vec<f64> = (0..=steps).flat_map(|_| y.clone()).collect();
        drift.eval(&HistoryView::new(&hx, dim, steps, dt), &mut bx);
        drift.eval(&HistoryView::new(&hy, dim, steps, dt), &mut by);
        let num: f64 = bx.iter().zip(&by).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if den > 0.0 {
            worst = worst.max(num / den);
        }
    }
    if worst > 1.1 * drift.lipschitz() {
        return Err(Error::InvalidParameter(format!(
            "declared Lipschitz constant {} but observed ratio {worst}",
            drift.lipschitz()
        )));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn view_lookups() {
        let nodes = [0.0, 1.0, 2.0, 3.0];
        let v = HistoryView::new(&nodes, 1, 3, 0.5);
        assert_eq!(v.current(), &[3.0]);
        assert_eq!(v.lag_steps(2), &[1.0]);
        assert_eq!(v.lag_steps(9), &[0.0]);
        let mut out = [0.0];
        v.at_into(-0.75, &mut out);
        assert!((out[0] - 1.5).abs() < 1e-15);
        v.at_into(-1.0, &mut out);
        assert_eq!(out[0], 1.0);
    }

    #[test]
    fn delay_drift_reads_lagged_node() {
        let d = Drift::discrete_delay(1.0, 1.0, |y, out| out[0] = y[0]);
        let nodes: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let mut out = [0.0];
        d.eval(&HistoryView::new(&nodes, 1, 10, 0.25), &mut out);
        assert_eq!(out[0], 6.0);
    }

    #[test]
    fn lipschitz_probe() {
        let d = Drift::pointwise(2.0, |y, out| out[0] = 2.0 * y[0].sin());
        assert!(validate_lipschitz(&d, 1, 0.1, 200, 1).unwrap() <= 2.0);
        let lie = Drift::pointwise(0.5, |y, out| out[0] = 3.0 * y[0]);
        assert!(validate_lipschitz(&lie, 1, 0.1, 50, 1).is_err());
    }
}
