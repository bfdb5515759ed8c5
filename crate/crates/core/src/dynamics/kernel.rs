//! The shared stepping kernel for delay equations and (delay) SDEs.
//!
//! One step from node `i` is the predictor
//! `y* = y_i + dt b(y_{t_i}) + σ(y_{t_i}) ΔB_i` followed by two fixed-point
//! passes `y_{i+1} = y_i + dt b(y_{t_{i+1}}) + σ(y_{t_i}) ΔB_i`, which read the
//! candidate through the history view. With zero diffusion this is the DDE
//! solver; with pointwise coefficients it is an SDE scheme.

use crate::error::{Error, Result};
use crate::path::{grid_steps, same_dt, PastSegment, PathKind, SampledPath, StatePoint};

use super::coeffs::{Diffusion, Drift, HistoryView};
use super::rng::{NoiseKey, NoiseStream};

pub const BLOW_UP: f64 = 1e12;
pub const PICARD_ITERATIONS: usize = 2;

fn steps_of(t: f64, dt: f64, what: &str) -> Result<usize> {
    let n = grid_steps(t, dt).map_err(|_| Error::InvalidGrid(format!("{what} = {t} is not a multiple of dt = {dt}")))?;
    if n < 0 {
        return Err(Error::InvalidParameter(format!("{what} = {t} must be non-negative")));
    }
    Ok(n as usize)
}

/// Appends `n` steps to `nodes`, whose last node is the current state.
pub(crate) fn advance(
    drift: &Drift,
    diffusion: &Diffusion,
    nodes: &mut Vec<f64>,
    dim: usize,
    dt: f64,
    n: usize,
    key: Option<&NoiseKey>,
) -> Result<()> {
    let m = diffusion.noise_dim();
    let mut noise = match (m, key) {
        (0, _) => None,
        (_, Some(k)) => Some(NoiseStream::brownian(k, m)),
        (_, None) => return Err(Error::InvalidParameter("a diffusion needs a noise key".into())),
    };
    let delay_steps = match drift {
        Drift::DiscreteDelay { delay, .. } => (delay / dt).round() as usize,
        _ => 0,
    };
    let sqrt_dt = dt.sqrt();
    let mut b = vec![0.0; dim];
    let mut sig = vec![0.0; dim * m];
    let mut z = vec![0.0; m];
    let mut incr = vec![0.0; dim];
    let mut next = vec![0.0; dim];
    nodes.reserve(n * dim);
    for _ in 0..n {
        let i = nodes.len() / dim - 1;
        if let Some(noise) = noise.as_mut() {
            let view = HistoryView::new(nodes, dim, i, dt);
            diffusion.eval(&view, &mut sig);
            noise.normals(&mut z);
            for r in 0..dim {
                incr[r] = (0..m).map(|c| sig[r * m + c] * z[c]).sum::<f64>() * sqrt_dt;
            }
        }
        let yi = i * dim;
        if delay_steps >= 1 {
            // b(y(t_{i+1} - delay)) is already known
            nodes.extend_from_within(yi..yi + dim);
            drift.eval(&HistoryView::new(nodes, dim, i + 1, dt), &mut b);
            for r in 0..dim {
                next[r] = nodes[yi + r] + dt * b[r] + incr[r];
            }
            nodes[yi + dim..].copy_from_slice(&next);
        } else {
            drift.eval(&HistoryView::new(nodes, dim, i, dt), &mut b);
            for r in 0..dim {
                next[r] = nodes[yi + r] + dt * b[r] + incr[r];
            }
            nodes.extend_from_slice(&next);
            for _ in 0..PICARD_ITERATIONS {
                drift.eval(&HistoryView::new(nodes, dim, i + 1, dt), &mut b);
                for r in 0..dim {
                    next[r] = nodes[yi + r] + dt * b[r] + incr[r];
                }
                nodes[yi + dim..].copy_from_slice(&next);
            }
        }
        if next.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP) {
            let step = key.map_or(0, |k| k.start_step) as f64 + (i + 1) as f64;
            return Err(Error::NonFiniteState { t: step * dt });
        }
    }
    Ok(())
}

fn check_segment(xi: &PastSegment, dt: f64) -> Result<()> {
    if !same_dt(xi.dt(), dt) {
        return Err(Error::GridMismatch(xi.dt(), dt));
    }
    Ok(())
}

/// Solves `y'(t) = b(y_t)`, `y_0 = ξ` on `[-h, T]`.
pub fn solve_dde(drift: &Drift, xi: &PastSegment, horizon: f64, dt: f64) -> Result<SampledPath> {
    simulate_sdde(drift, &Diffusion::None, xi, horizon, dt, &NoiseKey::new(0, 0))
}

/// Euler scheme for `dY = b(Y) dt + σ(Y) dB`, `Y(0) = y0`, on `[0, T]`.
pub fn simulate_sde(
    drift: &Drift,
    diffusion: &Diffusion,
    y0: &StatePoint,
    horizon: f64,
    dt: f64,
    key: &NoiseKey,
) -> Result<SampledPath> {
    let n = steps_of(horizon, dt, "horizon")?;
    let dim = y0.dim();
    let mut nodes = y0.as_slice().to_vec();
    advance(drift, diffusion, &mut nodes, dim, dt, n, Some(key))?;
    if n == 0 {
        nodes.extend_from_within(0..dim);
    }
    SampledPath::new(PathKind::Continuous, 0.0, dt, dim, nodes)
}

/// Euler scheme for `dY = b(Y_t) dt + σ(Y_t) dB`, `Y_0 = ξ`, on `[-h, T]`.
///
/// The noise of step `k` is step `key.start_step + k` of the trajectory stream.
pub fn simulate_sdde(
    drift: &Drift,
    diffusion: &Diffusion,
    xi: &PastSegment,
    horizon: f64,
    dt: f64,
    key: &NoiseKey,
) -> Result<SampledPath> {
    check_segment(xi, dt)?;
    let n = steps_of(horizon, dt, "horizon")?;
    let dim = xi.dim();
    let mut nodes = xi.values().to_vec();
    advance(drift, diffusion, &mut nodes, dim, dt, n, Some(key))?;
    SampledPath::new(PathKind::Continuous, -(xi.steps() as f64) * dt, dt, dim, nodes)
}

/// `y(t)` for `y'(t) = a y(t - τ)` with `y ≡ c` on `[-τ, 0]`, by the method of steps.
pub fn linear_delay_exact(a: f64, c: f64, tau: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return c;
    }
    // coefficients in u = t - n τ of the solution on [nτ, (n+1)τ]
    let mut piece = vec![c];
    let mut n = 0usize;
    loop {
        let start = piece.iter().enumerate().map(|(k, p)| p * tau.powi(k as i32)).sum::<f64>();
        let mut next = vec![start];
        next.extend(piece.iter().enumerate().map(|(k, p)| a * p / (k + 1) as f64));
        piece = next;
        let lo = n as f64 * tau;
        if t <= lo + tau {
            let u = t - lo;
            return piece.iter().rev().fold(0.0, |acc, p| acc * u + p);
        }
        n += 1;
    }
}
