//! Spectrum of `−Δ` and the exact Cheeger constant.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{symmetric_eigen, Matrix};

pub const RESIDUAL_TOL: f64 = 1e-8;
/// Largest vertex count for the exhaustive Cheeger search.
pub const CHEEGER_MAX_N: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Ascending, `λ₀ = 0`.
    pub eigenvalues: Vec<f64>,
    /// `eigenfunctions[k]` solves `Δf = −λ_k f`; the family is orthonormal in
    /// `ℓ²(m)`.
    pub eigenfunctions: Vec<Vec<f64>>,
}

impl Spectrum {
    /// Smallest non-zero eigenvalue.
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[1]
    }
}

/// Diagonalizes `M^{1/2}(−L)M^{−1/2}` and maps the eigenvectors back.
pub fn spectrum(g: &Graph) -> Result<Spectrum> {
    let n = g.n();
    let sq: Vec<f64> = g.measure().iter().map(|m| m.sqrt()).collect();
    let a = Matrix::from_fn(n, n, |x, y| {
        if x == y {
            g.degree(x)
        } else {
            // symmetric by detailed balance; average to remove rounding
            -0.5 * (sq[x] / sq[y] * g.rate(x, y) + sq[y] / sq[x] * g.rate(y, x))
        }
    });
    let eig = symmetric_eigen(&a).ok_or_else(|| Error::EigensolverFailure("Jacobi sweeps did not converge".into()))?;
    let mut eigenfunctions = Vec::with_capacity(n);
    for k in 0..n {
        let mut f: Vec<f64> = (0..n).map(|x| eig.vectors[(x, k)] / sq[x]).collect();
        // fix the sign: first entry of largest modulus is positive
        let lead = f.iter().copied().fold(0.0f64, |b, v| if v.abs() > b.abs() + 1e-12 { v } else { b });
        if lead < 0.0 {
            f.iter_mut().for_each(|v| *v = -*v);
        }
        let lf = g.laplacian(&f);
        let sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let res = lf.iter().zip(&f).fold(0.0f64, |m, (a, b)| m.max((a + eig.values[k] * b).abs()));
        if res > RESIDUAL_TOL * sup {
            return Err(Error::EigensolverFailure(format!("residual {res:e} for eigenpair {k}")));
        }
        eigenfunctions.push(f);
    }
    let mut eigenvalues = eig.values;
    eigenvalues[0] = eigenvalues[0].max(0.0);
    Ok(Spectrum { eigenvalues, eigenfunctions })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheegerResult {
    pub h: f64,
    /// Minimizing set with `2 m(A) ≤ m(V)`, ascending vertex indices.
    pub witness: Vec<usize>,
    /// `|∂A| = Σ_{x∈A, y∉A} m(x) q(x, y)`.
    pub boundary: f64,
    pub mass: f64,
}

/// `|∂A|` for a membership mask.
pub fn boundary_measure(g: &Graph, inside: &[bool]) -> f64 {
    let mut b = 0.0;
    for x in 0..g.n() {
        if inside[x] {
            for &y in g.neighbors(x) {
                if !inside[y] {
                    b += g.weight(x, y);
                }
            }
        }
    }
    b
}

/// Exhaustive minimization of `|∂A| / m(A)` over `2 m(A) ≤ m(V)`.
///
/// Subsets avoiding the last vertex are visited in Gray-code order; each one
/// and its complement are candidates.
pub fn cheeger(g: &Graph) -> Result<CheegerResult> {
    let n = g.n();
    if n > CHEEGER_MAX_N {
        return Err(Error::TooLargeForExact { n, max: CHEEGER_MAX_N });
    }
    let total = g.total_mass();
    let half = 0.5 * total * (1.0 + 1e-12);
    let mut inside = vec![false; n];
    let (mut boundary, mut mass) = (0.0f64, 0.0f64);
    let mut best: Option<(f64, u32, bool)> = None;
    let mut code: u32 = 0;
    for i in 1u32..(1u32 << (n - 1)) {
        let v = i.trailing_zeros() as usize;
        code ^= 1 << v;
        inside[v] = !inside[v];
        let sign = if inside[v] { 1.0 } else { -1.0 };
        mass += sign * g.mass(v);
        for &u in g.neighbors(v) {
            let w = g.weight(v, u);
            boundary += if inside[u] { -sign * w } else { sign * w };
        }
        for (complement, m) in [(false, mass), (true, total - mass)] {
            if m > 0.0 && m <= half {
                let ratio = boundary / m;
                if best.is_none_or(|(b, _, _)| ratio < b * (1.0 - 1e-12)) {
                    best = Some((ratio, code, complement));
                }
            }
        }
    }
    let (_, code, complement) = best.ok_or_else(|| Error::BadParams("graph needs at least two vertices".into()))?;
    let mask: Vec<bool> = (0..n).map(|x| (x < n - 1 && code >> x & 1 == 1) != complement).collect();
    let boundary = boundary_measure(g, &mask);
    let mass: f64 = (0..n).filter(|&x| mask[x]).map(|x| g.mass(x)).sum();
    Ok(CheegerResult { h: boundary / mass, witness: (0..n).filter(|&x| mask[x]).collect(), boundary, mass })
}
