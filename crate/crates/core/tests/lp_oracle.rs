//! Curvature against an exhaustive search over integer 1-Lipschitz potentials.
//!
//! The dual constraints `f(u) − f(v) ≤ d(u, v)` form a network matrix, so an
//! integral optimum exists and it is enough to enumerate `f` on
//! `B₁(x) ∪ B₁(y)` with values within one step of `f(x) = 0` or `f(y) = d`.

mod common;

use curvlab::{kappa, Graph};

fn brute_force_kappa(g: &Graph, x: usize, y: usize) -> f64 {
    let d = g.dist(x, y) as i64;
    let mut support: Vec<usize> = g.ball(x, 1).into_iter().chain(g.ball(y, 1)).collect();
    support.sort_unstable();
    support.dedup();
    let free: Vec<usize> = support.iter().copied().filter(|&u| u != x && u != y).collect();
    let choices: Vec<Vec<i64>> = free
        .iter()
        .map(|&u| {
            let (dx, dy) = (g.dist(u, x) as i64, g.dist(u, y) as i64);
            ((-dx)..=(d + dy)).filter(|v| v.abs() <= dx && (v - d).abs() <= dy).collect()
        })
        .collect();
    let mut f = vec![0i64; g.n()];
    f[y] = d;
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; free.len()];
    loop {
        for (k, &u) in free.iter().enumerate() {
            f[u] = choices[k][idx[k]];
        }
        let lipschitz = support
            .iter()
            .all(|&u| support.iter().all(|&v| (f[u] - f[v]).abs() <= g.dist(u, v) as i64));
        if lipschitz {
            let lap = |z: usize| g.neighbors(z).iter().map(|&w| g.rate(z, w) * (f[w] - f[z]) as f64).sum::<f64>();
            best = best.min((lap(x) - lap(y)) / d as f64);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn simplex_matches_exhaustive_potentials() {
    for (name, g) in common::corpus() {
        if g.n() > 16 {
            continue;
        }
        for x in 0..g.n() {
            for y in (x + 1)..g.n() {
                let k = kappa(&g, x, y).unwrap();
                let oracle = brute_force_kappa(&g, x, y);
                assert!((k - oracle).abs() < 1e-9, "{name} {x}-{y}: simplex {k}, enumeration {oracle}");
            }
        }
    }
}
