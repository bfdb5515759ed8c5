//! The bounded Skorokhod distance `d_a^b` on `D([a, b]; R^d)`.
//!
//! For càdlàg grid paths (piecewise constant with jumps on nodes) the value
//! is computed exactly. The search runs over interleavings of the two jump
//! sequences: a candidate level `v` is feasible when some monotone lattice
//! path through the cells `{(i, j) : d(x_i, y_j) <= v}` can be realised by a
//! piecewise-linear time change whose slopes stay in `[e^-v, e^v]`.
//! Feasibility is decided by propagating the reachable images of every
//! x-jump, and the smallest feasible `v` is found by bisection.
//!
//! Everything else gets an upper bound from a bottleneck dynamic program
//! over time changes with knots on the merged node grid.

use crate::error::{Error, Result};
use crate::path::{PathKind, SampledPath, GRID_TOL};

use super::time_change::{lip_cost, TimeChange};
use super::{dist_capped, MetricValue, SearchBudget};

/// A path restricted to `[a, b]` as piece values and jump times in `(a, b]`.
#[derive(Clone, Debug)]
pub(crate) struct Steps {
    pub values: Vec<Vec<f64>>,
    pub jumps: Vec<f64>,
}

/// All jumps of a step path, for repeated restriction to subintervals.
#[derive(Clone, Debug)]
pub(crate) struct StepIndex {
    values: Vec<Vec<f64>>,
    jumps: Vec<f64>,
    tol: f64,
}

impl StepIndex {
    pub fn new(x: &SampledPath) -> Self {
        let mut values = vec![x.node(0).to_vec()];
        let mut jumps = Vec::new();
        for (t, v) in x.jumps() {
            values.push(v.to_vec());
            jumps.push(t);
        }
        Self { values, jumps, tol: GRID_TOL * x.dt() }
    }

    pub fn restrict(&self, a: f64, b: f64) -> Steps {
        let first = self.jumps.partition_point(|&t| t <= a + self.tol);
        let last = self.jumps.partition_point(|&t| t <= b + self.tol);
        Steps {
            values: self.values[first..=last].to_vec(),
            jumps: self.jumps[first..last].to_vec(),
        }
    }

    /// True when the path is piecewise constant in the càdlàg sense on `[a, b]`.
    pub fn is_step_path(x: &SampledPath, a: f64, b: f64) -> bool {
        match x.kind() {
            PathKind::Cadlag => true,
            PathKind::Continuous => {
                let dt = x.dt();
                let lo = (a / dt).floor() as i64;
                let hi = (b / dt).ceil() as i64;
                let first = x.node_at_index(lo);
                (lo..=hi).all(|k| x.node_at_index(k) == first)
            }
        }
    }
}

impl Steps {
    /// `sup_{[a, b]} d(x(t), y(t))` from the merged jump lists.
    fn identity_sup(&self, other: &Steps) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut worst = dist_capped(&self.values[0], &other.values[0]);
        while i < self.jumps.len() || j < other.jumps.len() {
            let tx = self.jumps.get(i).copied().unwrap_or(f64::INFINITY);
            let ty = other.jumps.get(j).copied().unwrap_or(f64::INFINITY);
            let t = tx.min(ty);
            if tx <= t {
                i += 1;
            }
            if ty <= t {
                j += 1;
            }
            worst = worst.max(dist_capped(&self.values[i], &other.values[j]));
        }
        worst
    }
}

/// `sup_{t in [a,b]} d(x(t), y(t))`.
pub(crate) fn identity_bound(x: &SampledPath, y: &SampledPath, a: f64, b: f64) -> f64 {
    let mut times = vec![a, b];
    for p in [x, y] {
        let dt = p.dt();
        let lo = ((a / dt).ceil() as i64).max(p.start_index());
        let hi = ((b / dt).floor() as i64).min(p.end_index());
        times.extend((lo..=hi).map(|k| k as f64 * dt).filter(|t| *t >= a && *t <= b));
    }
    let (mut bx, mut by) = (vec![0.0; x.dim()], vec![0.0; y.dim()]);
    times
        .into_iter()
        .map(|t| {
            x.evaluate_into(t, &mut bx);
            y.evaluate_into(t, &mut by);
            dist_capped(&bx, &by)
        })
        .fold(0.0, f64::max)
}

struct StepProblem {
    a: f64,
    b: f64,
    /// `r[0] = a`, then the x-jumps.
    r: Vec<f64>,
    /// `s[0] = a`, the y-jumps, then `s[q + 1] = b`.
    s: Vec<f64>,
    dist: Vec<Vec<f64>>,
    eps: f64,
}

type Reach = Vec<Vec<Vec<(f64, f64)>>>;

fn push_interval(set: &mut Vec<(f64, f64)>, lo: f64, hi: f64) {
    if lo <= hi {
        set.push((lo, hi));
    }
}

fn normalize(set: &mut Vec<(f64, f64)>) {
    set.sort_by(|u, v| u.0.total_cmp(&v.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(set.len());
    for &(lo, hi) in set.iter() {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    *set = out;
}

impl StepProblem {
    fn new(x: &Steps, y: &Steps, a: f64, b: f64) -> Self {
        let mut r = vec![a];
        r.extend_from_slice(&x.jumps);
        let mut s = vec![a];
        s.extend_from_slice(&y.jumps);
        s.push(b);
        let dist = x.values.iter().map(|xv| y.values.iter().map(|yv| dist_capped(xv, yv)).collect()).collect();
        Self { a, b, r, s, dist, eps: 1e-12 * (b - a).max(1.0) }
    }

    fn p(&self) -> usize {
        self.r.len() - 1
    }

    /// The optimum is a state distance or the log-ratio of two knot gaps; moves
    /// a bisection result onto the smallest such level that is still feasible.
    fn snap(&self, v: f64) -> f64 {
        let near = |c: f64| (c - v).abs() <= 1e-9;
        let mut cands: Vec<f64> = self.dist.iter().flatten().copied().filter(|&c| near(c)).collect();
        let mut xs = self.r.clone();
        xs.push(self.b);
        for (i, &t0) in xs.iter().enumerate() {
            for &t1 in &xs[i + 1..] {
                for (j, &u0) in self.s.iter().enumerate() {
                    for &u1 in &self.s[j + 1..] {
                        let (g, h) = (t1 - t0, u1 - u0);
                        let c = (g.max(h) / g.min(h)).ln();
                        if near(c) {
                            cands.push(c);
                        }
                    }
                }
            }
        }
        cands.sort_by(f64::total_cmp);
        cands.into_iter().find(|&c| self.reach(c).is_some()).unwrap_or(v)
    }

    fn q(&self) -> usize {
        self.s.len() - 2
    }

    fn ok(&self, i: usize, j: usize, v: f64) -> bool {
        self.dist[i][j] <= v
    }

    fn band(&self, delta: f64, v: f64) -> (f64, f64) {
        (delta * (-v).exp() - self.eps, delta * v.exp() + self.eps)
    }

    /// Reachable images of every x-jump at level `v`, if the level is feasible.
    fn reach(&self, v: f64) -> Option<Reach> {
        let (p, q) = (self.p(), self.q());
        if !self.ok(0, 0, v) {
            return None;
        }
        let mut reach: Reach = vec![vec![Vec::new(); q + 1]; p + 1];
        reach[0][0].push((self.a, self.a));
        for i in 1..=p {
            let (blo, bhi) = self.band(self.r[i] - self.r[i - 1], v);
            let (prev, cur) = reach.split_at_mut(i);
            let prev = &prev[i - 1];
            let cur = &mut cur[0];
            for j0 in 0..=q {
                for &(lo, hi) in &prev[j0] {
                    let (clo, chi) = (lo + blo, hi + bhi);
                    for j in j0..=q {
                        if j > j0 && !self.ok(i - 1, j, v) {
                            break;
                        }
                        if self.ok(i, j, v) {
                            push_interval(&mut cur[j], clo.max(self.s[j]), chi.min(self.s[j + 1]));
                        }
                        if j < q && self.ok(i, j + 1, v) && clo <= self.s[j + 1] && self.s[j + 1] <= chi {
                            cur[j + 1].push((self.s[j + 1], self.s[j + 1]));
                        }
                    }
                }
            }
            for set in cur.iter_mut() {
                normalize(set);
            }
            if cur.iter().all(|s| s.is_empty()) {
                return None;
            }
        }
        if self.final_state(&reach, v).is_some() {
            Some(reach)
        } else {
            None
        }
    }

    /// A terminal `(j, image of the last x-jump)` that reaches `λ(b) = b`.
    fn final_state(&self, reach: &Reach, v: f64) -> Option<(usize, f64)> {
        let (p, q) = (self.p(), self.q());
        let (blo, bhi) = self.band(self.b - self.r[p], v);
        for j0 in 0..=q {
            if !((j0 + 1)..=q).all(|j| self.ok(p, j, v)) {
                continue;
            }
            for &(lo, hi) in &reach[p][j0] {
                // need b - image in [blo, bhi]
                let (ilo, ihi) = (lo.max(self.b - bhi), hi.min(self.b - blo));
                if ilo <= ihi {
                    return Some((j0, 0.5 * (ilo + ihi)));
                }
            }
        }
        None
    }

    fn witness(&self, reach: &Reach, v: f64) -> Option<TimeChange> {
        let p = self.p();
        let (mut j, mut img) = self.final_state(reach, v)?;
        let mut images = vec![0.0; p + 1];
        images[p] = img;
        for i in (1..=p).rev() {
            let (blo, bhi) = self.band(self.r[i] - self.r[i - 1], v);
            let diagonal = (img - self.s[j]).abs() <= self.eps && j > 0;
            let mut found = None;
            'search: for j0 in 0..=j {
                let top = if diagonal { j - 1 } else { j };
                if j0 > top || !((j0 + 1)..=top).all(|jj| self.ok(i - 1, jj, v)) {
                    continue;
                }
                for &(lo, hi) in &reach[i - 1][j0] {
                    let (ilo, ihi) = (lo.max(img - bhi), hi.min(img - blo));
                    if ilo <= ihi {
                        found = Some((j0, 0.5 * (ilo + ihi)));
                        break 'search;
                    }
                }
            }
            let (j0, prev) = found?;
            j = j0;
            img = prev;
            images[i - 1] = img;
        }
        let mut knots = Vec::with_capacity(p + 2);
        let mut imgs = Vec::with_capacity(p + 2);
        for i in 0..=p {
            if i == 0 || self.r[i] < self.b {
                knots.push(self.r[i]);
                imgs.push(if i == 0 { self.a } else { images[i] });
            }
        }
        knots.push(self.b);
        imgs.push(self.b);
        TimeChange::new(knots, imgs).ok()
    }
}

/// Exact `d_a^b` for step paths; `upper` must be a feasible level.
pub(crate) fn exact_steps(x: &Steps, y: &Steps, a: f64, b: f64, upper: f64) -> (f64, Option<TimeChange>) {
    let prob = StepProblem::new(x, y, a, b);
    let mut hi = upper;
    if prob.reach(hi).is_none() {
        hi = 1.0;
        while prob.reach(hi).is_none() {
            hi *= 2.0;
        }
    }
    if prob.reach(0.0).is_some() {
        hi = 0.0;
    } else {
        let mut lo = 0.0;
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if prob.reach(mid).is_some() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    if hi > 0.0 {
        hi = prob.snap(hi);
    }
    let witness = prob.reach(hi).and_then(|r| prob.witness(&r, hi));
    (hi, witness)
}

/// Interior grid nodes of `p` strictly inside `(a, b)`.
fn interior_nodes(p: &SampledPath, a: f64, b: f64, out: &mut Vec<f64>) {
    let dt = p.dt();
    let lo = ((a / dt).floor() as i64 + 1).max(p.start_index());
    let hi = ((b / dt).ceil() as i64 - 1).min(p.end_index());
    out.extend((lo..=hi).map(|k| k as f64 * dt).filter(|t| *t > a && *t < b));
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Bottleneck DP over piecewise-linear time changes with knots mapped node to node.
pub(crate) fn dp_upper_bound(
    x: &SampledPath,
    y: &SampledPath,
    a: f64,
    b: f64,
    budget: &SearchBudget,
) -> (f64, Option<TimeChange>) {
    const MAX_LOG_SLOPE: f64 = 2.0;
    let mut pts = Vec::new();
    interior_nodes(x, a, b, &mut pts);
    interior_nodes(y, a, b, &mut pts);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|u, v| (*u - *v).abs() <= 1e-12);
    let max_interior = budget.dp_nodes.max(1);
    if pts.len() > max_interior {
        let stride = pts.len().div_ceil(max_interior);
        pts = pts.into_iter().step_by(stride).collect();
    }
    let mut grid = vec![a];
    grid.extend(pts);
    grid.push(b);
    let n = grid.len() - 1;
    let band = budget.band.max(1);
    let steps: Vec<(usize, usize)> = (1..=budget.slope_levels.max(1))
        .flat_map(|di| (1..=budget.slope_levels.max(1)).map(move |dk| (di, dk)))
        .filter(|&(di, dk)| gcd(di, dk) == 1)
        .collect();

    let mut node_buf = Vec::new();
    let (mut sx, mut sy) = (vec![0.0; x.dim()], vec![0.0; y.dim()]);
    let mut seg_sup = |i: usize, i2: usize, k: usize, k2: usize| -> f64 {
        let (t0, t1, u0, u1) = (grid[i], grid[i2], grid[k], grid[k2]);
        let slope = (u1 - u0) / (t1 - t0);
        node_buf.clear();
        let mut xs = Vec::new();
        interior_nodes(x, t0, t1, &mut xs);
        node_buf.extend(xs.into_iter().map(|t| (t, u0 + slope * (t - t0))));
        let mut ys = Vec::new();
        interior_nodes(y, u0, u1, &mut ys);
        node_buf.extend(ys.into_iter().map(|u| (t0 + (u - u0) / slope, u)));
        node_buf.push((t1, u1));
        let mut worst: f64 = 0.0;
        for &(t, u) in node_buf.iter() {
            x.evaluate_into(t, &mut sx);
            y.evaluate_into(u, &mut sy);
            worst = worst.max(dist_capped(&sx, &sy));
        }
        worst
    };

    let idx = |i: usize, k: usize| i * (n + 1) + k;
    let mut val = vec![f64::INFINITY; (n + 1) * (n + 1)];
    let (mut bx, mut by) = (vec![0.0; x.dim()], vec![0.0; y.dim()]);
    let mut back = vec![usize::MAX; (n + 1) * (n + 1)];
    x.evaluate_into(a, &mut bx);
    y.evaluate_into(a, &mut by);
    val[0] = dist_capped(&bx, &by);
    for i in 0..n {
        let klo = i.saturating_sub(band);
        let khi = (i + band).min(n - 1);
        for k in klo..=khi {
            let here = val[idx(i, k)];
            if !here.is_finite() {
                continue;
            }
            for &(di, dk) in &steps {
                let (i2, k2) = (i + di, k + dk);
                if i2 > n || k2 > n || i2.abs_diff(k2) > band {
                    continue;
                }
                if (i2 == n) != (k2 == n) {
                    continue;
                }
                let slope = (grid[k2] - grid[k]) / (grid[i2] - grid[i]);
                let lc = slope.ln().abs();
                if lc > MAX_LOG_SLOPE || here.max(lc) >= val[idx(i2, k2)] {
                    continue;
                }
                let c = here.max(lc).max(seg_sup(i, i2, k, k2));
                if c < val[idx(i2, k2)] {
                    val[idx(i2, k2)] = c;
                    back[idx(i2, k2)] = idx(i, k);
                }
            }
        }
    }
    let best = val[idx(n, n)];
    if !best.is_finite() {
        return (f64::INFINITY, None);
    }
    let mut knots = vec![b];
    let mut images = vec![b];
    let mut cur = idx(n, n);
    while back[cur] != usize::MAX {
        cur = back[cur];
        let (i, k) = (cur / (n + 1), cur % (n + 1));
        knots.push(grid[i]);
        images.push(grid[k]);
    }
    knots.reverse();
    images.reverse();
    (best, TimeChange::new(knots, images).ok())
}

/// Exact `d_a^b` for step paths, or `None` when the search exceeds the budget.
pub(crate) fn d_ab_steps(x: &StepIndex, y: &StepIndex, a: f64, b: f64, budget: &SearchBudget) -> Option<MetricValue> {
    let (sx, sy) = (x.restrict(a, b), y.restrict(a, b));
    if sx.values.len() * sy.values.len() > budget.max_matchings {
        return None;
    }
    let ident = sx.identity_sup(&sy);
    let exact = |value, witness| MetricValue { value, witness, is_upper_bound: false, tail_error: 0.0 };
    if ident == 0.0 {
        return Some(exact(0.0, Some(TimeChange::identity(a, b))));
    }
    let (value, witness) = exact_steps(&sx, &sy, a, b, ident);
    if value < ident {
        Some(exact(value, witness))
    } else {
        Some(exact(ident, Some(TimeChange::identity(a, b))))
    }
}

/// `d_a^b(x, y) = inf_λ max(‖λ‖_L, sup_{t∈[a,b]} d(x(t), y(λ(t))))`.
pub fn d_ab_j1(x: &SampledPath, y: &SampledPath, a: f64, b: f64, budget: &SearchBudget) -> Result<MetricValue> {
    if !(a < b) {
        return Err(Error::EmptyInterval { a, b });
    }
    if x.kind() != y.kind() {
        return Err(Error::KindMismatch(format!("{} vs {}", x.kind(), y.kind())));
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    if StepIndex::is_step_path(x, a, b) && StepIndex::is_step_path(y, a, b) {
        let (sx, sy) = (StepIndex::new(x), StepIndex::new(y));
        if let Some(m) = d_ab_steps(&sx, &sy, a, b, budget) {
            return Ok(m);
        }
    }
    let ident = identity_bound(x, y, a, b);
    if ident == 0.0 {
        return Ok(MetricValue { value: 0.0, witness: Some(TimeChange::identity(a, b)), is_upper_bound: false, tail_error: 0.0 });
    }
    let identity = MetricValue {
        value: ident,
        witness: Some(TimeChange::identity(a, b)),
        is_upper_bound: true,
        tail_error: 0.0,
    };
    let (dp, witness) = dp_upper_bound(x, y, a, b, budget);
    if dp < ident {
        Ok(MetricValue { value: dp, witness, is_upper_bound: true, tail_error: 0.0 })
    } else {
        Ok(identity)
    }
}

/// Evaluates the objective of a given time change exactly on the merged breakpoints.
pub fn objective(x: &SampledPath, y: &SampledPath, lambda: &TimeChange) -> f64 {
    let knots = lambda.knots();
    let (a, b) = (knots[0], knots[knots.len() - 1]);
    let mut pairs: Vec<(f64, f64)> = vec![(a, a), (b, b)];
    let mut xs = Vec::new();
    interior_nodes(x, a, b, &mut xs);
    pairs.extend(xs.into_iter().map(|t| (t, lambda.apply(t))));
    let mut ys = Vec::new();
    interior_nodes(y, a, b, &mut ys);
    let inv = TimeChange::new(lambda.images().to_vec(), knots.to_vec()).expect("inverse of a time change");
    pairs.extend(ys.into_iter().map(|u| (inv.apply(u), u)));
    pairs.extend(knots.iter().zip(lambda.images()).map(|(t, u)| (*t, *u)));
    let (mut bx, mut by) = (vec![0.0; x.dim()], vec![0.0; y.dim()]);
    let sup = pairs
        .into_iter()
        .map(|(t, u)| {
            x.evaluate_into(t, &mut bx);
            y.evaluate_into(u, &mut by);
            dist_capped(&bx, &by)
        })
        .fold(0.0, f64::max);
    sup.max(lip_cost(lambda))
}
