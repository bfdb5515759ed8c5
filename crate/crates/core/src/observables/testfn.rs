use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A user supplied test function with a declared bound.
#[derive(Clone)]
pub struct UserFunction {
    pub name: String,
    pub f: ScalarFn,
    pub bound: f64,
    pub gradient: Option<GradientFn>,
}

impl fmt::Debug for UserFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserFunction").field("name", &self.name).field("bound", &self.bound).finish()
    }
}

impl PartialEq for UserFunction {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && Arc::ptr_eq(&self.f, &other.f)
    }
}

/// Functions `f: R^d -> R` used to build observables.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    /// `x_i`; not bounded.
    Coordinate(usize),
    /// `cos(k · x)`.
    Cosine { freq: Vec<f64> },
    /// `exp(-|x - c|^2 / (2 w^2))`.
    GaussianBump { center: Vec<f64>, width: f64 },
    /// `p(x_i)` clamped to `[-clamp, clamp]`.
    BoundedPolynomial { index: usize, coeffs: Vec<f64>, clamp: f64 },
    User(UserFunction),
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_deriv(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect()
}

impl TestFunction {
    pub fn cosine(freq: f64) -> Self {
        TestFunction::Cosine { freq: vec![freq] }
    }

    pub fn gaussian(center: f64, width: f64) -> Self {
        TestFunction::GaussianBump { center: vec![center], width }
    }

    pub fn clamped_coordinate(index: usize, clamp: f64) -> Self {
        TestFunction::BoundedPolynomial { index, coeffs: vec![0.0, 1.0], clamp }
    }

    pub fn user(
        name: impl Into<String>,
        bound: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction::User(UserFunction { name: name.into(), f: Arc::new(f), bound, gradient: None })
    }

    /// Rejects malformed parameters for a state space of dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            TestFunction::Coordinate(i) | TestFunction::BoundedPolynomial { index: i, .. } if *i >= dim => {
                bad(format!("coordinate {i} out of range for dimension {dim}"))
            }
            TestFunction::Cosine { freq } if freq.len() != dim => {
                Err(Error::DimensionMismatch { expected: dim, got: freq.len() })
            }
            TestFunction::GaussianBump { center, .. } if center.len() != dim => {
                Err(Error::DimensionMismatch { expected: dim, got: center.len() })
            }
            TestFunction::GaussianBump { width, .. } if !(*width > 0.0) => bad(format!("bump width {width} must be positive")),
            TestFunction::BoundedPolynomial { clamp, .. } if !(*clamp > 0.0) => bad(format!("clamp {clamp} must be positive")),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Coordinate(i) => x[*i],
            TestFunction::Cosine { freq } => freq.iter().zip(x).map(|(k, v)| k * v).sum::<f64>().cos(),
            TestFunction::GaussianBump { center, width } => {
                let r2: f64 = center.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum();
                (-r2 / (2.0 * width * width)).exp()
            }
            TestFunction::BoundedPolynomial { index, coeffs, clamp } => poly(coeffs, x[*index]).clamp(-clamp, *clamp),
            TestFunction::User(u) => (u.f)(x),
        }
    }

    pub fn bound(&self) -> f64 {
        match self {
            TestFunction::Coordinate(_) => f64::INFINITY,
            TestFunction::Cosine { .. } | TestFunction::GaussianBump { .. } => 1.0,
            TestFunction::BoundedPolynomial { clamp, .. } => *clamp,
            TestFunction::User(u) => u.bound,
        }
    }

    /// Analytic gradient where available. At the clamp boundary of a polynomial
    /// the one-sided derivative from inside is used.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d = x.len();
        match self {
            TestFunction::Coordinate(i) => {
                let mut g = vec![0.0; d];
                g[*i] = 1.0;
                Some(g)
            }
            TestFunction::Cosine { freq } => {
                let s = -freq.iter().zip(x).map(|(k, v)| k * v).sum::<f64>().sin();
                Some(freq.iter().map(|k| s * k).collect())
            }
            TestFunction::GaussianBump { center, width } => {
                let g = self.eval(x);
                Some(center.iter().zip(x).map(|(c, v)| -g * (v - c) / (width * width)).collect())
            }
            TestFunction::BoundedPolynomial { index, coeffs, clamp } => {
                let mut g = vec![0.0; d];
                if poly(coeffs, x[*index]).abs() < *clamp {
                    g[*index] = poly(&poly_deriv(coeffs), x[*index]);
                }
                Some(g)
            }
            TestFunction::User(u) => u.gradient.as_ref().map(|g| g(x)),
        }
    }

    /// Row-major Hessian where available.
    pub fn hessian(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d = x.len();
        let mut h = vec![0.0; d * d];
        match self {
            TestFunction::Coordinate(_) => {}
            TestFunction::Cosine { freq } => {
                let c = freq.iter().zip(x).map(|(k, v)| k * v).sum::<f64>().cos();
                for i in 0..d {
                    for j in 0..d {
                        h[i * d + j] = -c * freq[i] * freq[j];
                    }
                }
            }
            TestFunction::GaussianBump { center, width } => {
                let g = self.eval(x);
                let w2 = width * width;
                for i in 0..d {
                    for j in 0..d {
                        let diag = if i == j { 1.0 / w2 } else { 0.0 };
                        h[i * d + j] = g * ((x[i] - center[i]) * (x[j] - center[j]) / (w2 * w2) - diag);
                    }
                }
            }
            TestFunction::BoundedPolynomial { index, coeffs, clamp } => {
                if poly(coeffs, x[*index]).abs() < *clamp {
                    h[index * d + index] = poly(&poly_deriv(&poly_deriv(coeffs)), x[*index]);
                }
            }
            TestFunction::User(_) => return None,
        }
        Some(h)
    }

    /// Largest central-difference gradient discrepancy over `probes`.
    pub fn gradient_residual(&self, probes: &[Vec<f64>]) -> Option<f64> {
        let eps = 1e-6;
        let mut worst: f64 = 0.0;
        for p in probes {
            let g = self.gradient(p)?;
            let mut q = p.clone();
            for i in 0..p.len() {
                q[i] = p[i] + eps;
                let up = self.eval(&q);
                q[i] = p[i] - eps;
                let down = self.eval(&q);
                q[i] = p[i];
                worst = worst.max(((up - down) / (2.0 * eps) - g[i]).abs());
            }
        }
        Some(worst)
    }
}

/// Serializable form of the built-in test functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunctionSpec {
    Coordinate { index: usize },
    Cosine { freq: Vec<f64> },
    GaussianBump { center: Vec<f64>, width: f64 },
    BoundedPolynomial { index: usize, coeffs: Vec<f64>, clamp: f64 },
}

impl TestFunctionSpec {
    pub fn build(&self) -> TestFunction {
        match self.clone() {
            TestFunctionSpec::Coordinate { index } => TestFunction::Coordinate(index),
            TestFunctionSpec::Cosine { freq } => TestFunction::Cosine { freq },
            TestFunctionSpec::GaussianBump { center, width } => TestFunction::GaussianBump { center, width },
            TestFunctionSpec::BoundedPolynomial { index, coeffs, clamp } => {
                TestFunction::BoundedPolynomial { index, coeffs, clamp }
            }
        }
    }
}
