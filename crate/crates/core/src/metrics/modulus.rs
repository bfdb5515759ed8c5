use crate::path::{grid_steps, SampledPath};

use super::dist_capped;

/// `ω′(x, δ, T)` over grid-aligned partitions of `[-T, T]` with cells of length `>= δ`.
///
/// The oscillation of a cell `[t_{j-1}, t_j)` is the diameter of the node values
/// `t_{j-1}, ..., t_j - dt`.
pub fn modulus(x: &SampledPath, delta: f64, t_end: f64) -> f64 {
    let dt = x.dt();
    let hi = grid_steps(t_end, dt).unwrap_or_else(|_| (t_end / dt).floor() as i64);
    let lo = -hi;
    let n = (hi - lo) as usize;
    if n == 0 {
        return 0.0;
    }
    let min_cells = ((delta / dt) - 1e-9).ceil().max(1.0) as usize;
    if min_cells > n {
        return f64::INFINITY;
    }
    let nodes: Vec<&[f64]> = (lo..hi).map(|k| x.node_at_index(k)).collect();
    let mut best = vec![f64::INFINITY; n + 1];
    best[0] = 0.0;
    for i in 0..n {
        if !best[i].is_finite() {
            continue;
        }
        let mut diam: f64 = 0.0;
        for j in (i + 1)..=n {
            let new = nodes[j - 1];
            for node in &nodes[i..j - 1] {
                diam = diam.max(dist_capped(node, new));
            }
            if j - i >= min_cells {
                let c = best[i].max(diam);
                if c < best[j] {
                    best[j] = c;
                }
            }
        }
    }
    best[n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::PathKind;

    #[test]
    fn isolated_jump_costs_nothing() {
        let x = SampledPath::from_fn(PathKind::Cadlag, -2.0, 2.0, 0.1, 1, |t| vec![if t >= 0.0 { 0.5 } else { 0.0 }]).unwrap();
        assert_eq!(modulus(&x, 0.5, 1.0), 0.0);
    }

    #[test]
    fn identity_path_oracle() {
        let dt = 0.1;
        let x = SampledPath::from_fn(PathKind::Continuous, -2.0, 2.0, dt, 1, |t| vec![t * 0.1]).unwrap();
        let n = 20;
        for m in 1..=12 {
            // smallest L such that n splits into parts of length in [m, L]
            let l = (m..=n).find(|&l| (1..=n / m).any(|k| k * m <= n && n <= k * l)).unwrap();
            let v = modulus(&x, m as f64 * dt, 1.0);
            assert!((v - 0.1 * dt * (l - 1) as f64).abs() < 1e-12, "m = {m}: {v}");
        }
    }

    #[test]
    fn monotone_in_delta() {
        let x = SampledPath::from_fn(PathKind::Cadlag, -2.0, 2.0, 0.05, 1, |t| vec![(5.0 * t).sin().signum() * 0.2 + 0.1 * t]).unwrap();
        let mut last = 0.0;
        for d in [0.05, 0.1, 0.2, 0.4, 0.8] {
            let v = modulus(&x, d, 1.0);
            assert!(v >= last);
            last = v;
        }
    }
}
