//! Compound Poisson plus Brownian Lévy noise and the Lévy-driven delay flow.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{grid_steps, PathKind, SampledPath};

use super::coeffs::{Drift, HistoryView};
use super::evolution::{sup_diff, AxiomReport, Tracker};
use super::rng::{NoiseKey, NoiseStream, LANE_BROWNIAN, LANE_JUMPS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    Fixed { size: Vec<f64> },
    Normal { mean: Vec<f64>, std: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevySpec {
    pub drift: Vec<f64>,
    /// `d × d` row-major covariance of the Brownian part per unit time.
    pub brownian_cov: Vec<f64>,
    pub jump_rate: f64,
    pub jump_law: JumpLaw,
}

impl LevySpec {
    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    pub fn brownian(dim: usize, variance: f64) -> Self {
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            cov[i * dim + i] = variance;
        }
        Self { drift: vec![0.0; dim], brownian_cov: cov, jump_rate: 0.0, jump_law: JumpLaw::Fixed { size: vec![0.0; dim] } }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidParameter("Lévy drift must have at least one coordinate".into()));
        }
        if self.brownian_cov.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: self.brownian_cov.len() });
        }
        if !(self.jump_rate >= 0.0) || !self.jump_rate.is_finite() {
            return Err(Error::InvalidParameter(format!("jump rate {} must be finite and >= 0", self.jump_rate)));
        }
        let len = match &self.jump_law {
            JumpLaw::Fixed { size } => size.len(),
            JumpLaw::Normal { mean, .. } => mean.len(),
        };
        if len != d {
            return Err(Error::DimensionMismatch { expected: d, got: len });
        }
        let sym = (0..d).all(|i| (0..d).all(|j| self.brownian_cov[i * d + j] == self.brownian_cov[j * d + i]));
        if !sym {
            return Err(Error::InvalidParameter("Brownian covariance must be symmetric".into()));
        }
        Ok(())
    }

    /// Symmetric square root of the covariance, negative eigenvalues clipped.
    fn cov_sqrt(&self) -> DMatrix<f64> {
        let d = self.dim();
        let cov = DMatrix::from_row_slice(d, d, &self.brownian_cov);
        let eig = SymmetricEigen::new(cov);
        let vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
    }
}

/// A càdlàg noise path `ω = base + level`. Keeping the constant `level`
/// separate makes `ω + c` change no increment.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePath {
    base: SampledPath,
    level: Vec<f64>,
}

impl NoisePath {
    pub fn new(base: SampledPath) -> Result<Self> {
        if base.kind() != PathKind::Cadlag {
            return Err(Error::KindMismatch("noise paths are càdlàg".into()));
        }
        let level = vec![0.0; base.dim()];
        Ok(Self { base, level })
    }

    pub fn zero(dim: usize, horizon: f64, dt: f64) -> Result<Self> {
        Self::new(SampledPath::constant(PathKind::Cadlag, 0.0, horizon.max(dt), dt, &vec![0.0; dim])?)
    }

    pub fn base(&self) -> &SampledPath {
        &self.base
    }

    pub fn level(&self) -> &[f64] {
        &self.level
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn dt(&self) -> f64 {
        self.base.dt()
    }

    pub fn value(&self, t: f64) -> Vec<f64> {
        self.base.evaluate(t).0.iter().zip(&self.level).map(|(b, c)| b + c).collect()
    }

    /// `ω + c`.
    pub fn add_constant(&self, c: &[f64]) -> Self {
        Self { base: self.base.clone(), level: self.level.iter().zip(c).map(|(a, b)| a + b).collect() }
    }

    /// `ϑ_t ω`.
    pub fn shift(&self, t: f64) -> Result<Self> {
        Ok(Self { base: self.base.shift(t)?, level: self.level.clone() })
    }

    /// Adds `bump` to every node strictly after `t`.
    pub fn perturb_after(&self, t: f64, bump: &[f64]) -> Result<Self> {
        let k0 = grid_steps(t, self.dt())?;
        let hi = self.base.end_index().max(k0 + 1);
        let lo = self.base.start_index();
        let nodes: Vec<Vec<f64>> = (lo..=hi)
            .map(|k| {
                let v = self.base.node_at_index(k);
                if k > k0 {
                    v.iter().zip(bump).map(|(a, b)| a + b).collect()
                } else {
                    v.to_vec()
                }
            })
            .collect();
        let base = SampledPath::from_nodes(PathKind::Cadlag, lo as f64 * self.dt(), self.dt(), &nodes)?;
        Ok(Self { base, level: self.level.clone() })
    }
}

/// Samples the Lévy process on `[0, T]`: drift, Brownian increments from the
/// Brownian lane and compound Poisson jumps whose exponential arrival times
/// are rounded up to the next grid node.
pub fn sample_levy(spec: &LevySpec, horizon: f64, dt: f64, key: &NoiseKey) -> Result<NoisePath> {
    spec.validate()?;
    let d = spec.dim();
    let n = grid_steps(horizon, dt)?.max(1) as usize;
    let sqrt_cov = spec.cov_sqrt();
    let has_brownian = sqrt_cov.iter().any(|v| *v != 0.0);
    let mut brownian = NoiseStream::new(&NoiseKey { start_step: 0, ..*key }, LANE_BROWNIAN);
    let mut z = vec![0.0; d];
    let mut bm = vec![0.0; d];
    let mut jumps = vec![0.0; (n + 1) * d];
    if spec.jump_rate > 0.0 {
        let mut s = NoiseStream::new(key, LANE_JUMPS);
        let mut t = 0.0;
        loop {
            t += s.exponential(spec.jump_rate);
            if t > n as f64 * dt {
                break;
            }
            let k = ((t / dt).ceil() as usize).clamp(1, n);
            let size: Vec<f64> = match &spec.jump_law {
                JumpLaw::Fixed { size } => size.clone(),
                JumpLaw::Normal { mean, std } => {
                    let mut g = vec![0.0; d];
                    s.normals(&mut g);
                    mean.iter().zip(&g).map(|(m, g)| m + std * g).collect()
                }
            };
            for r in 0..d {
                jumps[k * d + r] += size[r];
            }
        }
    }
    let mut values = vec![0.0; (n + 1) * d];
    let mut jump_sum = vec![0.0; d];
    for k in 1..=n {
        if has_brownian {
            brownian.normals(&mut z);
            for r in 0..d {
                bm[r] += dt.sqrt() * (0..d).map(|c| sqrt_cov[(r, c)] * z[c]).sum::<f64>();
            }
        }
        for r in 0..d {
            jump_sum[r] += jumps[k * d + r];
            values[k * d + r] = spec.drift[r] * (k as f64 * dt) + bm[r] + jump_sum[r];
        }
    }
    NoisePath::new(SampledPath::new(PathKind::Cadlag, 0.0, dt, d, values)?)
}

/// A map `(ω, x) ↦ φ(ω, x)` completing a path with the help of noise.
pub trait RandomEvolutionMap: Send + Sync {
    fn name(&self) -> String;

    fn apply(&self, omega: &NoisePath, x: &SampledPath, horizon: f64) -> Result<SampledPath>;
}

/// `y(t) = x(0-) + ∫_0^t b(y(s - δ)) ds + ω(t) - ω(0-)` for `t >= 0`, built node by node.
#[derive(Clone, Debug)]
pub struct LevyDelayFlow {
    pub drift: Drift,
}

impl RandomEvolutionMap for LevyDelayFlow {
    fn name(&self) -> String {
        format!("levy_delay_flow({:?})", self.drift)
    }

    fn apply(&self, omega: &NoisePath, x: &SampledPath, horizon: f64) -> Result<SampledPath> {
        let dt = x.dt();
        if !crate::path::same_dt(dt, omega.dt()) {
            return Err(Error::GridMismatch(dt, omega.dt()));
        }
        if x.dim() != omega.dim() {
            return Err(Error::DimensionMismatch { expected: x.dim(), got: omega.dim() });
        }
        let d = x.dim();
        let n = grid_steps(horizon, dt)?.max(1);
        let steps = ((self.drift.h() / dt).round() as i64).max(1);
        let lo = x.start_index().min(-steps);
        let mut nodes = Vec::with_capacity(((n - lo + 1) as usize) * d);
        for k in lo..0 {
            nodes.extend_from_slice(x.node_at_index(k));
        }
        let w = omega.base();
        let (w0, wm) = (w.node_at_index(0), w.node_at_index(-1));
        let x0m = x.node_at_index(-1);
        for r in 0..d {
            nodes.push(x0m[r] + (w0[r] - wm[r]));
        }
        let mut b = vec![0.0; d];
        for k in 0..n {
            let i = (k - lo) as usize;
            self.drift.eval(&HistoryView::new(&nodes, d, i, dt), &mut b);
            let (wa, wb) = (w.node_at_index(k), w.node_at_index(k + 1));
            for r in 0..d {
                let v = nodes[i * d + r] + dt * b[r] + (wb[r] - wa[r]);
                nodes.push(v);
            }
        }
        SampledPath::new(PathKind::Cadlag, lo as f64 * dt, dt, d, nodes)?.rewindow(x.t_min().min(-dt), n as f64 * dt)
    }
}

/// Residuals of (i) `φ(ω, x) = φ(ω, τx)`, (ii) `τφ(ω, x) = τx`,
/// (iii) `φ(ω + c, x) = φ(ω, x)`, (iv) changing `ω` after `t` leaves
/// `τ^t φ(ω, x)` unchanged, and (v) `φ(ϑ_t ω, ϑ_t φ(ω, x)) = ϑ_t φ(ω, x)`.
pub fn check_random_evolution_map(
    phi: &dyn RandomEvolutionMap,
    omegas: &[NoisePath],
    paths: &[SampledPath],
    t_list: &[f64],
    c_list: &[Vec<f64>],
    horizon: f64,
    tol: f64,
) -> Result<AxiomReport> {
    let mut tr: Vec<Tracker> = ["i", "ii", "iii", "iv", "v"].iter().map(|n| Tracker::new(n)).collect();
    let mut sample = 0;
    for omega in omegas {
        for x in paths {
            let y = phi.apply(omega, x, horizon)?;
            let lo = y.t_min();
            tr[0].record(sample, sup_diff(&y, &phi.apply(omega, &x.stop()?, horizon)?, lo, horizon));
            tr[1].record(sample, sup_diff(&y.stop()?, &x.stop()?, lo, horizon));
            for c in c_list {
                tr[2].record(sample, sup_diff(&y, &phi.apply(&omega.add_constant(c), x, horizon)?, lo, horizon));
            }
            for &t in t_list {
                if t > horizon {
                    continue;
                }
                let bump: Vec<f64> = (0..omega.dim()).map(|r| 0.5 + 0.25 * r as f64).collect();
                let other = phi.apply(&omega.perturb_after(t, &bump)?, x, horizon)?;
                tr[3].record(sample, sup_diff(&y.stop_at(t)?, &other.stop_at(t)?, lo, horizon));
                let shifted = y.shift(t)?;
                let again = phi.apply(&omega.shift(t)?, &shifted, horizon - t)?;
                let (r, at) = sup_diff(&again, &shifted, shifted.t_min(), horizon - t);
                tr[4].record(sample, (r, at + t));
            }
            sample += 1;
        }
    }
    Ok(AxiomReport { map: phi.name(), tol, conditions: tr.into_iter().map(|t| t.finish(tol)).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_drift_is_linear() {
        let spec = LevySpec {
            drift: vec![0.5],
            brownian_cov: vec![0.0],
            jump_rate: 0.0,
            jump_law: JumpLaw::Fixed { size: vec![1.0] },
        };
        let w = sample_levy(&spec, 1.0, 0.1, &NoiseKey::new(1, 0)).unwrap();
        for k in 0..=10 {
            assert!((w.value(k as f64 * 0.1)[0] - 0.05 * k as f64).abs() < 1e-15);
        }
        assert_eq!(w.value(0.0), vec![0.0]);
    }

    #[test]
    fn poisson_mean() {
        let spec = LevySpec {
            drift: vec![0.0],
            brownian_cov: vec![0.0],
            jump_rate: 2.0,
            jump_law: JumpLaw::Fixed { size: vec![1.0] },
        };
        let n = 10_000;
        let mean: f64 =
            (0..n).map(|i| sample_levy(&spec, 1.0, 0.01, &NoiseKey::new(3, i)).unwrap().value(1.0)[0]).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 4.0 * (2.0 / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn covariance_root() {
        let spec = LevySpec {
            drift: vec![0.0, 0.0],
            brownian_cov: vec![2.0, 0.5, 0.5, 1.0],
            jump_rate: 0.0,
            jump_law: JumpLaw::Fixed { size: vec![0.0, 0.0] },
        };
        let r = spec.cov_sqrt();
        let back = &r * &r;
        for (a, b) in back.iter().zip([2.0, 0.5, 0.5, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_shift_is_exact() {
        let dt = 0.01;
        let w = sample_levy(&LevySpec::brownian(1, 1.0), 2.0, dt, &NoiseKey::new(9, 0)).unwrap();
        let x = SampledPath::constant(PathKind::Cadlag, -1.0, 0.0, dt, &[1.0]).unwrap();
        let phi = LevyDelayFlow { drift: Drift::discrete_delay(1.0, 1.0, |y, o| o[0] = y[0].tanh()) };
        let a = phi.apply(&w, &x, 2.0).unwrap();
        let b = phi.apply(&w.add_constant(&[3.7]), &x, 2.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_drift_follows_noise() {
        let dt = 0.01;
        let w = sample_levy(&LevySpec::brownian(1, 1.0), 1.0, dt, &NoiseKey::new(2, 0)).unwrap();
        let x = SampledPath::from_fn(PathKind::Cadlag, -1.0, 0.0, dt, 1, |t| vec![t + 2.0]).unwrap();
        let phi = LevyDelayFlow { drift: Drift::discrete_delay(1.0, 0.0, |_, o| o[0] = 0.0) };
        let y = phi.apply(&w, &x, 1.0).unwrap();
        let x0m = x.left_limit(0.0).0[0];
        for k in 0..=100 {
            let t = k as f64 * dt;
            assert!((y.evaluate(t).0[0] - (x0m + w.value(t)[0] - w.value(0.0)[0])).abs() < 1e-12);
        }
    }
}
