use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A piecewise-linear increasing bijection of `[a, b]` onto itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeChange {
    knots: Vec<f64>,
    images: Vec<f64>,
}

impl TimeChange {
    pub fn new(knots: Vec<f64>, images: Vec<f64>) -> Result<Self> {
        if knots.len() != images.len() || knots.len() < 2 {
            return Err(Error::InvalidParameter("time change needs matching knot and image lists of length >= 2".into()));
        }
        let (a, b) = (knots[0], knots[knots.len() - 1]);
        if images[0] != a || images[images.len() - 1] != b {
            return Err(Error::InvalidParameter(format!("time change must fix the endpoints {a} and {b}")));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&knots) || !increasing(&images) {
            return Err(Error::InvalidParameter("time change knots and images must be strictly increasing".into()));
        }
        Ok(Self { knots, images })
    }

    pub fn identity(a: f64, b: f64) -> Self {
        Self { knots: vec![a, b], images: vec![a, b] }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn images(&self) -> &[f64] {
        &self.images
    }

    pub fn apply(&self, t: f64) -> f64 {
        let n = self.knots.len();
        if t <= self.knots[0] {
            return self.images[0];
        }
        if t >= self.knots[n - 1] {
            return self.images[n - 1];
        }
        let i = self.knots.partition_point(|&k| k <= t) - 1;
        let w = (t - self.knots[i]) / (self.knots[i + 1] - self.knots[i]);
        self.images[i] + w * (self.images[i + 1] - self.images[i])
    }

    pub fn slopes(&self) -> impl Iterator<Item = f64> + '_ {
        self.knots
            .windows(2)
            .zip(self.images.windows(2))
            .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
    }
}

/// `sup |log((λ(t) - λ(s)) / (t - s))|`, attained on a single linear piece.
pub fn lip_cost(lambda: &TimeChange) -> f64 {
    lambda.slopes().map(|s| s.ln().abs()).fold(0.0, f64::max)
}
