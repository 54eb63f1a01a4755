//! Ollivier curvature and Bakry–Émery calculus.
//!
//! `κ(x, y)` is computed two ways: as the optimal transport cost divided by
//! `d(x, y)` ([`kappa`]), and as the minimum of `(Δf(x) − Δf(y)) / d(x, y)`
//! over 1-Lipschitz `f` with `f(y) − f(x) = d(x, y)` ([`kappa_dual`]).

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{symmetric_eigen, Matrix};
use crate::lp::{lp_maximize, LinearProgram};
use crate::transport::optimal_plan;

/// `min κ ≥ −NONNEG_TOL` certifies non-negative curvature.
pub const NONNEG_TOL: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-9;

pub fn kappa(g: &Graph, x: usize, y: usize) -> Result<f64> {
    let (_, value) = optimal_plan(g, x, y)?;
    Ok(value / g.dist(x, y) as f64)
}

/// `(Δf(x) − Δf(y)) / d(x, y)`.
pub fn laplacian_gradient(g: &Graph, f: &[f64], x: usize, y: usize) -> f64 {
    let lap = |z: usize| g.neighbors(z).iter().map(|&w| g.rate(z, w) * (f[w] - f[z])).sum::<f64>();
    (lap(x) - lap(y)) / g.dist(x, y) as f64
}

/// Curvature from the potential LP. Returns `κ` and an optimal potential on
/// `B₁(x) ∪ B₁(y)` normalized to `f(x) = 0`.
pub fn kappa_dual_with_potential(g: &Graph, x: usize, y: usize) -> Result<(f64, Vec<(usize, f64)>)> {
    if x == y {
        return Err(Error::EqualEndpoints);
    }
    let mut dom: Vec<usize> = g.ball(x, 1);
    dom.extend(g.ball(y, 1));
    dom.sort_unstable();
    dom.dedup();
    let k = dom.len();
    let pos = |v: usize| dom.binary_search(&v).unwrap();
    let d = g.dist(x, y) as f64;

    // Δf(x) − Δf(y) = Σ c_u f(u)
    let mut c = vec![0.0; k];
    for &u in g.neighbors(x) {
        c[pos(u)] += g.rate(x, u);
    }
    c[pos(x)] -= g.degree(x);
    for &u in g.neighbors(y) {
        c[pos(u)] -= g.rate(y, u);
    }
    c[pos(y)] += g.degree(y);

    // Shifted potentials g_u = f(u) + d(u, x) are non-negative for 1-Lipschitz
    // f with f(x) = 0. One slack per ordered pair.
    let dx: Vec<f64> = dom.iter().map(|&u| g.dist(u, x) as f64).collect();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let nvars = k + pairs.len();
    let mut objective = vec![0.0; nvars];
    for i in 0..k {
        objective[i] = -c[i];
    }
    let mut rows: Vec<Vec<(usize, f64)>> = vec![vec![(pos(x), 1.0)], vec![(pos(y), 1.0)]];
    let mut rhs = vec![0.0, 2.0 * d];
    for (p, &(i, j)) in pairs.iter().enumerate() {
        rows.push(vec![(i, 1.0), (j, -1.0), (k + p, 1.0)]);
        rhs.push(g.dist(dom[i], dom[j]) as f64 + dx[i] - dx[j]);
    }
    let sol = lp_maximize(&LinearProgram::from_rows(objective, &rows, rhs))?;
    let shift: f64 = c.iter().zip(&dx).map(|(a, b)| a * b).sum();
    let kappa = (-sol.value - shift) / d;
    let potential = dom.iter().enumerate().map(|(i, &u)| (u, sol.primal[i] - dx[i])).collect();
    Ok((kappa, potential))
}

pub fn kappa_dual(g: &Graph, x: usize, y: usize) -> Result<f64> {
    kappa_dual_with_potential(g, x, y).map(|(k, _)| k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairSelection {
    Edges,
    #[default]
    All,
}

impl std::str::FromStr for PairSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edges" => Ok(Self::Edges),
            "all" => Ok(Self::All),
            other => Err(Error::BadParams(format!("pairs must be `edges` or `all`, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureMap {
    /// Keyed by `(x, y)` with `x < y`.
    pub kappa: BTreeMap<(usize, usize), f64>,
    pub min_kappa: f64,
    pub argmin: (usize, usize),
    pub nonneg: bool,
}

impl CurvatureMap {
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.kappa.get(&(x.min(y), x.max(y))).copied()
    }

    /// Error describing the most negative pair, if the map is not certified.
    pub fn certify(&self, g: &Graph) -> Result<()> {
        if self.nonneg {
            Ok(())
        } else {
            Err(Error::CurvatureNotCertified {
                min_kappa: self.min_kappa,
                x: g.label(self.argmin.0).to_string(),
                y: g.label(self.argmin.1).to_string(),
            })
        }
    }
}

/// Curvature of every requested pair, computed in both orders.
pub fn curvature_all(g: &Graph, pairs: PairSelection) -> Result<CurvatureMap> {
    let list: Vec<(usize, usize)> = match pairs {
        PairSelection::Edges => g.edges(),
        PairSelection::All => (0..g.n()).flat_map(|x| ((x + 1)..g.n()).map(move |y| (x, y))).collect(),
    };
    let values: Vec<f64> = list
        .par_iter()
        .map(|&(x, y)| {
            let a = kappa(g, x, y)?;
            let b = kappa(g, y, x)?;
            if (a - b).abs() > SYMMETRY_TOL {
                return Err(Error::ConstructionViolation(format!(
                    "kappa({0},{1}) = {a} but kappa({1},{0}) = {b}",
                    g.label(x),
                    g.label(y)
                )));
            }
            Ok(0.5 * (a + b))
        })
        .collect::<Result<_>>()?;
    let mut min_kappa = f64::INFINITY;
    let mut argmin = list[0];
    for (&p, &k) in list.iter().zip(&values) {
        if k < min_kappa {
            min_kappa = k;
            argmin = p;
        }
    }
    Ok(CurvatureMap {
        kappa: list.into_iter().zip(values).collect(),
        min_kappa,
        argmin,
        nonneg: min_kappa >= -NONNEG_TOL,
    })
}

/// `Γ_k(f, h)` from `Γ₀(f, h) = f h` and
/// `2Γ_{k+1}(f, h) = ΔΓ_k(f, h) − Γ_k(f, Δh) − Γ_k(Δf, h)`.
pub fn gamma(g: &Graph, k: u32, f: &[f64], h: &[f64]) -> Vec<f64> {
    if k == 0 {
        return f.iter().zip(h).map(|(a, b)| a * b).collect();
    }
    let lf = g.laplacian(f);
    let lh = g.laplacian(h);
    let base = gamma(g, k - 1, f, h);
    let lbase = g.laplacian(&base);
    let a = gamma(g, k - 1, f, &lh);
    let b = gamma(g, k - 1, &lf, h);
    (0..g.n()).map(|x| 0.5 * (lbase[x] - a[x] - b[x])).collect()
}

/// `Γf` (order 1) or `Γ₂f` (order 2).
pub fn carre_du_champ(g: &Graph, f: &[f64], order: u32) -> Result<Vec<f64>> {
    if !(1..=2).contains(&order) {
        return Err(Error::BadParams(format!("order must be 1 or 2, got {order}")));
    }
    Ok(gamma(g, order, f, f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdVerdict {
    pub k: f64,
    /// `None` for `n = ∞`.
    pub n: Option<f64>,
    /// Minimal eigenvalue of the local quadratic form at each vertex.
    pub per_vertex: Vec<f64>,
    pub holds: bool,
}

/// Minimal eigenvalue of `f ↦ Γ₂f(x) − KΓf(x) − (Δf(x))²/n` over `f` supported
/// on `B₂(x)`.
pub fn cd_check_vertex(g: &Graph, x: usize, k: f64, n: Option<f64>) -> Result<f64> {
    let ball = g.ball(x, 2);
    let basis: Vec<Vec<f64>> = ball
        .iter()
        .map(|&v| {
            let mut e = vec![0.0; g.n()];
            e[v] = 1.0;
            e
        })
        .collect();
    let lap_x: Vec<f64> = basis.iter().map(|e| g.laplacian(e)[x]).collect();
    let m = ball.len();
    let mut q = Matrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let mut v = gamma(g, 2, &basis[i], &basis[j])[x] - k * gamma(g, 1, &basis[i], &basis[j])[x];
            if let Some(n) = n {
                v -= lap_x[i] * lap_x[j] / n;
            }
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    let eig = symmetric_eigen(&q).ok_or_else(|| Error::EigensolverFailure(format!("local form at {}", g.label(x))))?;
    Ok(eig.values[0])
}

/// Checks `CD(K, n)` vertex by vertex; `n = None` means `n = ∞`.
pub fn cd_check(g: &Graph, k: f64, n: Option<f64>) -> Result<CdVerdict> {
    if let Some(n) = n {
        if !(n > 0.0) {
            return Err(Error::BadParams(format!("dimension must be positive, got {n}")));
        }
    }
    let per_vertex: Vec<f64> = (0..g.n()).into_par_iter().map(|x| cd_check_vertex(g, x, k, n)).collect::<Result<_>>()?;
    let holds = per_vertex.iter().all(|&e| e >= -NONNEG_TOL);
    Ok(CdVerdict { k, n, per_vertex, holds })
}
