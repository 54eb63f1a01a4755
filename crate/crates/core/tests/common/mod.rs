#![allow(dead_code)]

use curvlab::{generate, Graph};

pub const FIXED: [&str; 11] = [
    "complete(2)",
    "complete(3)",
    "complete(5)",
    "cycle(4)",
    "cycle(5)",
    "cycle(6)",
    "cycle(8)",
    "path(4)",
    "hypercube(3)",
    "hypercube(4)",
    "torus2d(4,4)",
];

/// Random reversible graphs on 4..=10 vertices, one per seed.
pub fn random_specs() -> Vec<String> {
    (0..20u64).map(|s| format!("random({},0.4,{s})", 4 + s % 7)).collect()
}

pub fn corpus() -> Vec<(String, Graph)> {
    FIXED
        .iter()
        .map(|s| s.to_string())
        .chain(random_specs())
        .map(|s| {
            let g = generate(&s).unwrap();
            (s, g)
        })
        .collect()
}

pub fn small_corpus() -> Vec<(String, Graph)> {
    corpus().into_iter().filter(|(_, g)| g.n() <= 10).collect()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
