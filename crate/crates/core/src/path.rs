//! Sampled paths on a uniform grid anchored at time 0.
//!
//! A [`SampledPath`] stores node values at times `(start + i) * dt` and is
//! extended by constants outside its window, so evaluation, shift and the
//! stopping maps are total. Continuous paths interpolate linearly between
//! nodes; càdlàg paths hold the value of the node at or before `t`, so every
//! jump sits on a grid node.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance (in units of `dt`) for deciding that a time is a grid node.
pub const GRID_TOL: f64 = 1e-9;

/// A point of the state space `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatePoint(pub Vec<f64>);

impl StatePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidGrid("state dimension must be at least 1".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite state {coords:?}")));
        }
        Ok(Self(coords))
    }

    pub fn scalar(v: f64) -> Self {
        Self(vec![v])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for StatePoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Continuous,
    Cadlag,
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathKind::Continuous => f.write_str("continuous"),
            PathKind::Cadlag => f.write_str("cadlag"),
        }
    }
}

/// Number of grid steps represented by `t`, or `NonGridShift`.
pub fn grid_steps(t: f64, dt: f64) -> Result<i64> {
    let u = t / dt;
    let r = u.round();
    if !u.is_finite() || (u - r).abs() > GRID_TOL * r.abs().max(1.0) {
        return Err(Error::NonGridShift { shift: t, dt });
    }
    Ok(r as i64)
}

pub(crate) fn same_dt(a: f64, b: f64) -> bool {
    (a - b).abs() <= GRID_TOL * a.abs().max(b.abs())
}

#[derive(Clone, Copy, Debug)]
enum Loc {
    Node(usize),
    Between(usize, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledPath {
    kind: PathKind,
    /// Absolute grid index of the first node.
    start: i64,
    dt: f64,
    dim: usize,
    /// Row-major node values, `len() * dim` entries.
    values: Vec<f64>,
}

impl SampledPath {
    /// Builds a path from flattened node values starting at `t_min`.
    pub fn new(kind: PathKind, t_min: f64, dt: f64, dim: usize, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {dt}")));
        }
        if dim == 0 {
            return Err(Error::InvalidGrid("state dimension must be at least 1".into()));
        }
        if values.len() % dim != 0 {
            return Err(Error::InvalidGrid(format!(
                "{} values do not split into rows of dimension {dim}",
                values.len()
            )));
        }
        if values.len() / dim < 2 {
            return Err(Error::InvalidGrid("window must contain at least two nodes".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite node value".into()));
        }
        let start = grid_steps(t_min, dt)
            .map_err(|_| Error::InvalidGrid(format!("t_min = {t_min} is not a multiple of dt = {dt}")))?;
        Ok(Self { kind, start, dt, dim, values })
    }

    pub fn from_nodes(kind: PathKind, t_min: f64, dt: f64, nodes: &[Vec<f64>]) -> Result<Self> {
        let dim = nodes.first().map(|n| n.len()).unwrap_or(0);
        if nodes.iter().any(|n| n.len() != dim) {
            return Err(Error::InvalidGrid("ragged node rows".into()));
        }
        Self::new(kind, t_min, dt, dim, nodes.concat())
    }

    /// Samples `f` at every node of `[t_min, t_max]`.
    pub fn from_fn(
        kind: PathKind,
        t_min: f64,
        t_max: f64,
        dt: f64,
        dim: usize,
        f: impl Fn(f64) -> Vec<f64>,
    ) -> Result<Self> {
        let n = Self::node_count(t_min, t_max, dt)?;
        let start = grid_steps(t_min, dt)
            .map_err(|_| Error::InvalidGrid(format!("t_min = {t_min} is not a multiple of dt = {dt}")))?;
        let mut values = Vec::with_capacity(n * dim);
        for i in 0..n {
            let v = f((start + i as i64) as f64 * dt);
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            values.extend_from_slice(&v);
        }
        Self::new(kind, t_min, dt, dim, values)
    }

    pub fn constant(kind: PathKind, t_min: f64, t_max: f64, dt: f64, value: &[f64]) -> Result<Self> {
        Self::from_fn(kind, t_min, t_max, dt, value.len(), |_| value.to_vec())
    }

    fn node_count(t_min: f64, t_max: f64, dt: f64) -> Result<usize> {
        if !(t_min < t_max) {
            return Err(Error::InvalidGrid(format!("empty window [{t_min}, {t_max}]")));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {dt}")));
        }
        Ok(((t_max - t_min) / dt + GRID_TOL).floor() as usize + 1)
    }

    pub(crate) fn from_parts(kind: PathKind, start: i64, dt: f64, dim: usize, values: Vec<f64>) -> Self {
        debug_assert!(values.len() % dim == 0 && values.len() >= dim);
        Self { kind, start, dt, dim, values }
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of grid nodes.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Absolute grid index of the first node.
    pub fn start_index(&self) -> i64 {
        self.start
    }

    pub fn end_index(&self) -> i64 {
        self.start + self.len() as i64 - 1
    }

    pub fn t_min(&self) -> f64 {
        self.start as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.end_index() as f64 * self.dt
    }

    /// Time of the `i`-th stored node.
    pub fn time(&self, i: usize) -> f64 {
        (self.start + i as i64) as f64 * self.dt
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Node at absolute grid index `k`, clamped to the window.
    pub fn node_at_index(&self, k: i64) -> &[f64] {
        let i = (k - self.start).clamp(0, self.len() as i64 - 1) as usize;
        self.node(i)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn with_kind(mut self, kind: PathKind) -> Self {
        self.kind = kind;
        self
    }

    fn locate(&self, t: f64) -> Loc {
        let n = self.len();
        let u = t / self.dt - self.start as f64;
        if u <= 0.0 {
            return Loc::Node(0);
        }
        if u >= (n - 1) as f64 {
            return Loc::Node(n - 1);
        }
        let r = u.round();
        if (u - r).abs() <= GRID_TOL * r.abs().max(1.0) {
            return Loc::Node(r as usize);
        }
        let i = u.floor() as usize;
        Loc::Between(i, u - i as f64)
    }

    /// Writes `x(t)` into `out` (length `dim`).
    pub fn evaluate_into(&self, t: f64, out: &mut [f64]) {
        match self.locate(t) {
            Loc::Node(i) => out.copy_from_slice(self.node(i)),
            Loc::Between(i, frac) => match self.kind {
                PathKind::Cadlag => out.copy_from_slice(self.node(i)),
                PathKind::Continuous => {
                    let (a, b) = (self.node(i), self.node(i + 1));
                    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                        *o = x + frac * (y - x);
                    }
                }
            },
        }
    }

    /// `x(t)`: right-continuous, constant outside the window.
    pub fn evaluate(&self, t: f64) -> StatePoint {
        let mut out = vec![0.0; self.dim];
        self.evaluate_into(t, &mut out);
        StatePoint(out)
    }

    pub fn left_limit_into(&self, t: f64, out: &mut [f64]) {
        match (self.kind, self.locate(t)) {
            (PathKind::Cadlag, Loc::Node(i)) => {
                let u = t / self.dt - self.start as f64;
                // Beyond the last node the path is constant, so no jump there.
                if u > (self.len() - 1) as f64 + GRID_TOL || i == 0 {
                    out.copy_from_slice(self.node(i));
                } else {
                    out.copy_from_slice(self.node(i - 1));
                }
            }
            _ => self.evaluate_into(t, out),
        }
    }

    /// `x(t-)`.
    pub fn left_limit(&self, t: f64) -> StatePoint {
        let mut out = vec![0.0; self.dim];
        self.left_limit_into(t, &mut out);
        StatePoint(out)
    }

    /// Shift by a whole number of grid steps: `[shift(k)](s) = x(s + k dt)`.
    pub fn shift_steps(&self, k: i64) -> SampledPath {
        let mut out = self.clone();
        out.start -= k;
        out
    }

    /// The shift `ϑ_t`: `[ϑ_t x](s) = x(t + s)`.
    pub fn shift(&self, t: f64) -> Result<SampledPath> {
        Ok(self.shift_steps(grid_steps(t, self.dt)?))
    }

    fn zero_offset(&self) -> Result<usize> {
        if self.start > 0 || self.end_index() < 0 {
            return Err(Error::WindowExcludesZero { t_min: self.t_min(), t_max: self.t_max() });
        }
        Ok((-self.start) as usize)
    }

    /// Value the stopping map freezes at: `x(0)` or `x(0-)`.
    fn frozen_value(&self, i0: usize) -> &[f64] {
        match self.kind {
            PathKind::Continuous => self.node(i0),
            PathKind::Cadlag => self.node(i0.saturating_sub(1)),
        }
    }

    /// The stopping map `τ`: unchanged before 0, frozen afterwards.
    pub fn stop(&self) -> Result<SampledPath> {
        let i0 = self.zero_offset()?;
        let frozen = self.frozen_value(i0).to_vec();
        let mut out = self.clone();
        for row in out.values[i0 * self.dim..].chunks_exact_mut(self.dim) {
            row.copy_from_slice(&frozen);
        }
        Ok(out)
    }

    /// `τ^t = ϑ_{-t} ∘ τ ∘ ϑ_t`.
    pub fn stop_at(&self, t: f64) -> Result<SampledPath> {
        let k = grid_steps(t, self.dt)?;
        Ok(self.shift_steps(k).stop()?.shift_steps(-k))
    }

    /// True when `stop(self)` equals `self` node for node.
    pub fn is_stopped(&self) -> bool {
        match self.zero_offset() {
            Ok(i0) => {
                let frozen = self.frozen_value(i0);
                self.values[i0 * self.dim..].chunks_exact(self.dim).all(|r| r == frozen)
            }
            Err(_) => false,
        }
    }

    /// Glues a stopped past to a future: past values for `t <= 0`,
    /// `future(t) - future(0) + past(0)` for `t >= 0`.
    pub fn concat(past: &SampledPath, future: &SampledPath) -> Result<SampledPath> {
        if past.kind != future.kind {
            return Err(Error::KindMismatch(format!("past is {}, future is {}", past.kind, future.kind)));
        }
        if past.dim != future.dim {
            return Err(Error::DimensionMismatch { expected: past.dim, got: future.dim });
        }
        if !same_dt(past.dt, future.dt) {
            return Err(Error::GridMismatch(past.dt, future.dt));
        }
        if !past.is_stopped() {
            return Err(Error::PastNotStopped);
        }
        let p0 = past.zero_offset()?;
        let f0 = future.zero_offset()?;
        let d = past.dim;
        let end = future.end_index().max(0) as usize;
        let mut values = Vec::with_capacity((p0 + end + 1) * d);
        values.extend_from_slice(&past.values[..(p0 + 1) * d]);
        let anchor = past.node(p0);
        let base = future.node(f0);
        for k in 1..=end {
            let row = future.node(f0 + k);
            for j in 0..d {
                values.push(row[j] - base[j] + anchor[j]);
            }
        }
        if values.len() < 2 * d {
            values.extend_from_slice(anchor);
        }
        Ok(SampledPath::from_parts(past.kind, past.start, past.dt, d, values))
    }

    /// The segment `s -> x(t + s)` on `[-h, 0]`.
    pub fn past_segment(&self, t: f64, h: f64) -> PastSegment {
        let steps = ((h / self.dt).round() as usize).max(1);
        let mut values = Vec::with_capacity((steps + 1) * self.dim);
        let mut buf = vec![0.0; self.dim];
        match grid_steps(t, self.dt) {
            Ok(k) => {
                for i in 0..=steps {
                    values.extend_from_slice(self.node_at_index(k - (steps - i) as i64));
                }
            }
            Err(_) => {
                for i in 0..=steps {
                    self.evaluate_into(t - (steps - i) as f64 * self.dt, &mut buf);
                    values.extend_from_slice(&buf);
                }
            }
        }
        PastSegment { h: steps as f64 * self.dt, dt: self.dt, dim: self.dim, values }
    }

    /// Restricts or extends (by constants) the window to `[t_lo, t_hi]`.
    pub fn rewindow(&self, t_lo: f64, t_hi: f64) -> Result<SampledPath> {
        let lo = grid_steps(t_lo, self.dt)?;
        let hi = grid_steps(t_hi, self.dt)?;
        if hi <= lo {
            return Err(Error::InvalidGrid(format!("empty window [{t_lo}, {t_hi}]")));
        }
        let mut values = Vec::with_capacity(((hi - lo + 1) as usize) * self.dim);
        for k in lo..=hi {
            values.extend_from_slice(self.node_at_index(k));
        }
        Ok(SampledPath::from_parts(self.kind, lo, self.dt, self.dim, values))
    }

    /// Nodes where a càdlàg reading of the path changes value, as `(time, new value)`.
    pub fn jumps(&self) -> Vec<(f64, &[f64])> {
        (1..self.len())
            .filter(|&i| self.node(i) != self.node(i - 1))
            .map(|i| (self.time(i), self.node(i)))
            .collect()
    }

    pub fn to_record(&self) -> PathRecord {
        PathRecord {
            kind: self.kind,
            t_min: self.t_min(),
            t_max: self.t_max(),
            dt: self.dt,
            dim: self.dim,
            values: self.nodes().map(|r| r.to_vec()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("path records always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: PathRecord =
            serde_json::from_str(s).map_err(|e| Error::Config { pointer: String::new(), message: e.to_string() })?;
        rec.into_path()
    }

    /// CSV with columns `time,coord_0,...`; floats use 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("time".to_string())
            .chain((0..self.dim).map(|j| format!("coord_{j}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (i, row) in self.nodes().enumerate() {
            write!(w, "{}", fmt_f64(self.time(i)))?;
            for v in row {
                write!(w, ",{}", fmt_f64(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON wire format of a sampled path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub kind: PathKind,
    pub t_min: f64,
    pub t_max: f64,
    pub dt: f64,
    pub dim: usize,
    pub values: Vec<Vec<f64>>,
}

impl PathRecord {
    pub fn into_path(self) -> Result<SampledPath> {
        let expected = SampledPath::node_count(self.t_min, self.t_max, self.dt)?;
        if self.values.len() != expected {
            return Err(Error::InvalidGrid(format!(
                "expected {expected} nodes for [{}, {}] with dt {}, got {}",
                self.t_min,
                self.t_max,
                self.dt,
                self.values.len()
            )));
        }
        if let Some(row) = self.values.iter().find(|r| r.len() != self.dim) {
            return Err(Error::DimensionMismatch { expected: self.dim, got: row.len() });
        }
        SampledPath::from_nodes(self.kind, self.t_min, self.dt, &self.values)
    }
}

/// A history segment `ξ` on `[-h, 0]`; the last node is the time-0 value.
#[derive(Clone, Debug, PartialEq)]
pub struct PastSegment {
    h: f64,
    dt: f64,
    dim: usize,
    values: Vec<f64>,
}

impl PastSegment {
    pub fn from_fn(h: f64, dt: f64, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("delay horizon must be positive, got {h}")));
        }
        let steps = grid_steps(h, dt).map_err(|_| Error::InvalidGrid(format!("h = {h} is not a multiple of dt = {dt}")))?;
        let path = SampledPath::from_fn(PathKind::Continuous, -(steps as f64) * dt, 0.0, dt, dim, f)?;
        Ok(path.past_segment(0.0, h))
    }

    pub fn constant(h: f64, dt: f64, value: &[f64]) -> Result<Self> {
        Self::from_fn(h, dt, value.len(), |_| value.to_vec())
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of delay steps `h / dt`.
    pub fn steps(&self) -> usize {
        self.values.len() / self.dim - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Node `i` counted from `-h`.
    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// `ξ(0)`.
    pub fn last(&self) -> &[f64] {
        self.node(self.steps())
    }

    /// `ξ(s)` for grid `s` in `[-h, 0]`, clamped.
    pub fn at(&self, s: f64) -> &[f64] {
        let k = (s / self.dt).round() as i64 + self.steps() as i64;
        self.node(k.clamp(0, self.steps() as i64) as usize)
    }

    pub fn to_path(&self, kind: PathKind) -> SampledPath {
        SampledPath::from_parts(kind, -(self.steps() as i64), self.dt, self.dim, self.values.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> SampledPath {
        SampledPath::from_fn(PathKind::Continuous, -2.0, 2.0, 0.25, 1, |t| vec![t]).unwrap()
    }

    fn unit_step() -> SampledPath {
        SampledPath::from_fn(PathKind::Cadlag, -1.0, 1.0, 0.25, 1, |t| vec![if t >= 0.0 { 1.0 } else { 0.0 }]).unwrap()
    }

    #[test]
    fn evaluate_interpolates_and_extrapolates() {
        assert_eq!(ramp().evaluate(0.5).0, vec![0.5]);
        assert!((ramp().evaluate(0.3).0[0] - 0.3).abs() < 1e-15);
        assert_eq!(ramp().evaluate(7.0).0, vec![2.0]);
        assert_eq!(ramp().evaluate(-9.0).0, vec![-2.0]);
        assert_eq!(unit_step().evaluate(0.0).0, vec![1.0]);
        assert_eq!(unit_step().evaluate(-0.1).0, vec![0.0]);
    }

    #[test]
    fn left_limits() {
        assert_eq!(unit_step().left_limit(0.0).0, vec![0.0]);
        assert_eq!(unit_step().left_limit(0.5).0, vec![1.0]);
        assert_eq!(ramp().left_limit(0.0).0, vec![0.0]);
        assert_eq!(unit_step().left_limit(5.0).0, vec![1.0]);
    }

    #[test]
    fn shift_and_group_law() {
        let x = ramp();
        assert_eq!(x.shift(1.0).unwrap().evaluate(0.0).0, vec![1.0]);
        let ab = x.shift(0.5).unwrap().shift(0.75).unwrap();
        assert_eq!(ab, x.shift(1.25).unwrap());
        assert!(matches!(x.shift(0.1), Err(Error::NonGridShift { .. })));
    }

    #[test]
    fn step_shift_moves_jump() {
        let s = unit_step().shift(0.5).unwrap();
        assert_eq!(s.evaluate(-0.5).0, vec![1.0]);
        assert_eq!(s.evaluate(-0.75).0, vec![0.0]);
    }

    #[test]
    fn stop_freezes_at_zero() {
        assert_eq!(ramp().stop().unwrap().evaluate(2.0).0, vec![0.0]);
        assert_eq!(unit_step().stop().unwrap().evaluate(1.0).0, vec![0.0]);
        let s = ramp().stop().unwrap();
        assert_eq!(s.stop().unwrap(), s);
        let far = SampledPath::constant(PathKind::Continuous, 1.0, 2.0, 0.5, &[1.0]).unwrap();
        assert!(matches!(far.stop(), Err(Error::WindowExcludesZero { .. })));
    }

    #[test]
    fn stop_at_examples() {
        let x = ramp();
        assert_eq!(x.stop_at(0.0).unwrap(), x.stop().unwrap());
        assert_eq!(x.stop_at(1.0).unwrap().evaluate(2.0).0, vec![1.0]);
        let once = x.stop_at(0.5).unwrap();
        assert_eq!(once.stop_at(0.5).unwrap(), once);
    }

    #[test]
    fn concat_examples() {
        let past = SampledPath::constant(PathKind::Continuous, -1.0, 1.0, 0.5, &[0.0]).unwrap();
        let fut = SampledPath::from_fn(PathKind::Continuous, 0.0, 2.0, 0.5, 1, |t| vec![t]).unwrap();
        let g = SampledPath::concat(&past, &fut).unwrap();
        assert_eq!(g.evaluate(-1.0).0, vec![0.0]);
        assert_eq!(g.evaluate(1.5).0, vec![1.5]);

        let past3 = SampledPath::constant(PathKind::Continuous, -1.0, 0.0, 0.5, &[3.0]).unwrap();
        let ones = SampledPath::constant(PathKind::Continuous, 0.0, 1.0, 0.5, &[1.0]).unwrap();
        let g = SampledPath::concat(&past3, &ones).unwrap();
        assert_eq!(g.evaluate(1.0).0, vec![3.0]);

        let x = ramp();
        let fwd = x.rewindow(0.0, 2.0).unwrap();
        assert_eq!(SampledPath::concat(&x.stop().unwrap(), &fwd).unwrap(), x);
        assert_eq!(SampledPath::concat(&x, &fwd), Err(Error::PastNotStopped));
    }

    #[test]
    fn cadlag_concat_is_continuous_at_zero() {
        let x = unit_step();
        let fut = SampledPath::from_fn(PathKind::Cadlag, 0.0, 1.0, 0.25, 1, |t| vec![5.0 + t]).unwrap();
        let g = SampledPath::concat(&x.stop().unwrap(), &fut).unwrap();
        assert_eq!(g.left_limit(0.0), g.evaluate(0.0));
    }

    #[test]
    fn past_segment_examples() {
        let x = ramp();
        let seg = x.past_segment(0.0, 1.0);
        assert_eq!(seg.steps(), 4);
        assert_eq!(seg.node(0), &[-1.0]);
        assert_eq!(seg.last(), &[0.0]);
        let sh = x.shift(0.5).unwrap();
        assert_eq!(sh.past_segment(0.25, 1.0), x.past_segment(0.75, 1.0));
        let c = SampledPath::constant(PathKind::Cadlag, -2.0, 0.0, 0.5, &[4.0]).unwrap();
        assert!(c.past_segment(0.0, 1.0).values().iter().all(|v| *v == 4.0));
    }

    #[test]
    fn json_roundtrip_and_rejects_degenerate() {
        let x = unit_step();
        assert_eq!(SampledPath::from_json(&x.to_json()).unwrap(), x);
        assert!(SampledPath::constant(PathKind::Cadlag, 0.0, 0.0, 0.5, &[1.0]).is_err());
        assert!(SampledPath::new(PathKind::Cadlag, 0.0, 0.5, 0, vec![]).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut buf = Vec::new();
        unit_step().write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("time,coord_0\n"));
        assert_eq!(s.lines().count(), 1 + unit_step().len());
    }
}
