#![allow(dead_code)]

use evosemi::{PathKind, SampledPath};
use rand::Rng;

/// A scalar càdlàg step path on `[t_min, t_max]` with the given jumps.
pub fn step_path(dt: f64, t_min: f64, t_max: f64, x0: f64, jumps: &[(f64, f64)]) -> SampledPath {
    let jumps = jumps.to_vec();
    SampledPath::from_fn(PathKind::Cadlag, t_min, t_max, dt, 1, move |t| {
        vec![x0 + jumps.iter().filter(|(r, _)| t >= r - 1e-9).map(|(_, h)| h).sum::<f64>()]
    })
    .unwrap()
}

/// Jump times on the `dt` grid inside `(lo, hi)`, pairwise at least `gap` apart.
pub fn random_jumps(rng: &mut impl Rng, n: usize, lo: f64, hi: f64, gap: f64, dt: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let (klo, khi) = ((lo / dt).ceil() as i64 + 1, (hi / dt).floor() as i64 - 1);
    let mut tries = 0;
    while out.len() < n && tries < 1000 {
        tries += 1;
        let r = rng.random_range(klo..=khi) as f64 * dt;
        if out.iter().all(|(s, _)| (s - r).abs() >= gap - 1e-9) {
            let h = rng.random_range(-1.2..1.2);
            out.push((r, h));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn capped(a: f64, b: f64) -> f64 {
    (a - b).abs().min(1.0)
}

/// Brute force `d_a^b` for scalar step paths: the images of the x-jumps range
/// over the grid `a + k h` and `λ` is linear between them.
pub fn brute_force_d_ab(x: &SampledPath, y: &SampledPath, a: f64, b: f64, h: f64) -> f64 {
    let n = ((b - a) / h).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| a + k as f64 * h).collect();
    let yv: Vec<f64> = grid.iter().map(|&u| y.evaluate(u).0[0]).collect();
    let mut knots = vec![a];
    let mut xv = vec![x.evaluate(a).0[0]];
    for (t, v) in x.jumps() {
        if t > a + 1e-12 && t < b - 1e-12 {
            knots.push(t);
            xv.push(v[0]);
        }
    }
    // cost[k]: best value with the current knot mapped to grid[k]
    let mut cost = vec![f64::INFINITY; n + 1];
    cost[0] = 0.0;
    for i in 1..=knots.len() {
        let last = i == knots.len();
        let len = if last { b - knots[i - 1] } else { knots[i] - knots[i - 1] };
        let xval = xv[i - 1];
        let mut next = vec![f64::INFINITY; n + 1];
        for k0 in 0..n {
            if !cost[k0].is_finite() {
                continue;
            }
            let mut run = cost[k0];
            let targets = if last { n..=n } else { (k0 + 1)..=(n - 1) };
            let mut k = k0;
            for k1 in targets {
                while k < k1 {
                    run = run.max(capped(xval, yv[k]));
                    k += 1;
                }
                let mut c = run.max(((grid[k1] - grid[k0]) / len).ln().abs());
                if last {
                    c = c.max(capped(xval, yv[n]));
                }
                if c < next[k1] {
                    next[k1] = c;
                }
            }
        }
        cost = next;
    }
    cost[n]
}
