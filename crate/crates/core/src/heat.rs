//! Heat semigroups `e^{tL}` of finite generators by uniformization.
//!
//! With `λ ≥ max Deg` and `P = I + L/λ` (entrywise non-negative, row sums at
//! most 1),
//!
//! ```text
//! e^{tL} f = Σ_k e^{−λt} (λt)^k / k! · P^k f
//! ```
//!
//! The series is cut once the Poisson tail drops below the tolerance, so the
//! result is within `tolerance · ‖f‖∞` of the semigroup.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::report::{worst, CheckEntry};
use crate::scalar::Scalar;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Tolerance used for the comparison function `φ`.
pub const PHI_TOLERANCE: f64 = 1e-14;
const UNIFORMIZATION_FACTOR: f64 = 1.01;

/// Sparse generator: off-diagonal rates per row plus a killing rate.
/// `Lf(x) = Σ_y q(x,y)(f(y) − f(x)) − k(x) f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator<T> {
    rows: Vec<Vec<(usize, T)>>,
    killing: Vec<T>,
}

impl<T: Scalar> Generator<T> {
    pub fn new(n: usize) -> Self {
        Self { rows: vec![Vec::new(); n], killing: vec![T::zero(); n] }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Adds rate `r` from `x` to `y`. Self-loops and zero rates are ignored.
    pub fn add_rate(&mut self, x: usize, y: usize, r: T) {
        if x == y || r == T::zero() {
            return;
        }
        match self.rows[x].iter_mut().find(|(z, _)| *z == y) {
            Some((_, v)) => *v += r,
            None => self.rows[x].push((y, r)),
        }
    }

    pub fn set_killing(&mut self, x: usize, k: T) {
        self.killing[x] = k;
    }

    pub fn killing(&self, x: usize) -> T {
        self.killing[x]
    }

    pub fn row(&self, x: usize) -> &[(usize, T)] {
        &self.rows[x]
    }

    pub fn rate(&self, x: usize, y: usize) -> T {
        self.rows[x].iter().find(|(z, _)| *z == y).map_or(T::zero(), |&(_, r)| r)
    }

    /// Total outgoing rate, killing included.
    pub fn degree(&self, x: usize) -> T {
        self.rows[x].iter().fold(self.killing[x], |acc, &(_, r)| acc + r)
    }

    pub fn max_degree(&self) -> T {
        (0..self.n()).fold(T::zero(), |m, x| m.max(self.degree(x)))
    }

    pub fn is_conservative(&self) -> bool {
        self.killing.iter().all(|k| *k == T::zero())
    }

    pub fn apply(&self, f: &[T]) -> Vec<T> {
        (0..self.n())
            .map(|x| self.rows[x].iter().fold(-self.killing[x] * f[x], |acc, &(y, r)| acc + r * (f[y] - f[x])))
            .collect()
    }

    /// Dirichlet restriction: every row outside `keep` is zeroed, so those
    /// vertices are frozen.
    pub fn restricted(&self, keep: &[bool]) -> Self {
        let mut g = self.clone();
        for x in 0..self.n() {
            if !keep[x] {
                g.rows[x].clear();
                g.killing[x] = T::zero();
            }
        }
        g
    }

    /// Mutable access to a rate, for fault injection in tests.
    #[doc(hidden)]
    pub fn rate_mut(&mut self, x: usize, y: usize) -> Option<&mut T> {
        self.rows[x].iter_mut().find(|(z, _)| *z == y).map(|(_, r)| r)
    }
}

impl From<&Graph> for Generator<f64> {
    fn from(g: &Graph) -> Self {
        let mut gen = Generator::new(g.n());
        for x in 0..g.n() {
            for &y in g.neighbors(x) {
                gen.add_rate(x, y, g.rate(x, y));
            }
        }
        gen
    }
}

/// Constant-rate chain on `{0, …, n−1}`; with `absorbing`, state 0 has no
/// outgoing rates.
pub fn birth_death_generator<T: Scalar>(n: usize, rate: T, absorbing: bool) -> Generator<T> {
    let mut gen = Generator::new(n);
    for x in 0..n {
        if x == 0 && absorbing {
            continue;
        }
        if x > 0 {
            gen.add_rate(x, x - 1, rate);
        }
        if x + 1 < n {
            gen.add_rate(x, x + 1, rate);
        }
    }
    gen
}

#[derive(Debug, Clone)]
pub struct HeatOperator<T> {
    generator: Generator<T>,
    rate: T,
    tolerance: T,
    diag: Vec<T>,
}

impl<T: Scalar> HeatOperator<T> {
    pub fn new(generator: Generator<T>) -> Self {
        Self::with_tolerance(generator, T::lit(DEFAULT_TOLERANCE))
    }

    pub fn with_tolerance(generator: Generator<T>, tolerance: T) -> Self {
        let max_deg = generator.max_degree();
        let rate = if max_deg > T::zero() { T::lit(UNIFORMIZATION_FACTOR) * max_deg } else { T::one() };
        let diag = (0..generator.n()).map(|x| T::one() - generator.degree(x) / rate).collect();
        Self { generator, rate, tolerance, diag }
    }

    pub fn generator(&self) -> &Generator<T> {
        &self.generator
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn tolerance(&self) -> T {
        self.tolerance
    }

    fn step(&self, v: &[T]) -> Vec<T> {
        let inv = T::one() / self.rate;
        (0..v.len())
            .map(|x| {
                self.generator.rows[x].iter().fold(self.diag[x] * v[x], |acc, &(y, r)| acc + r * inv * v[y])
            })
            .collect()
    }

    /// Number of powers `P^k`, `k ≥ 1`, needed at time `t`.
    pub fn terms_needed(&self, t: T) -> usize {
        let lam = self.rate * t;
        if lam <= T::zero() {
            return 0;
        }
        let ln_lam = lam.ln();
        let mut log_w = -lam;
        let mut k = 0usize;
        loop {
            let kk = T::from_usize(k).unwrap();
            let log_next = log_w + ln_lam - (kk + T::one()).ln();
            let ratio = lam / (kk + T::lit(2.0));
            if ratio < T::one() && log_next.exp() / (T::one() - ratio) <= self.tolerance {
                return k;
            }
            log_w = log_next;
            k += 1;
        }
    }

    /// The uniformized series cut after `terms` powers.
    pub fn apply_truncated(&self, f: &[T], t: T, terms: usize) -> Vec<T> {
        let lam = self.rate * t;
        if lam <= T::zero() {
            return f.to_vec();
        }
        let ln_lam = lam.ln();
        let mut log_w = -lam;
        let mut acc: Vec<T> = f.iter().map(|&v| log_w.exp() * v).collect();
        let mut v = f.to_vec();
        for k in 1..=terms {
            v = self.step(&v);
            log_w += ln_lam - T::from_usize(k).unwrap().ln();
            let w = log_w.exp();
            if w > T::zero() {
                for (a, b) in acc.iter_mut().zip(&v) {
                    *a += w * *b;
                }
            }
        }
        acc
    }

    pub fn apply(&self, f: &[T], t: T) -> Result<Vec<T>> {
        if t < T::zero() || !t.is_finite() {
            return Err(Error::NegativeTime(t.to_f64().unwrap_or(f64::NAN)));
        }
        if f.len() != self.generator.n() {
            return Err(Error::BadParams(format!("function has {} entries for {} states", f.len(), self.generator.n())));
        }
        if t == T::zero() {
            return Ok(f.to_vec());
        }
        Ok(self.apply_truncated(f, t, self.terms_needed(t)))
    }

    pub fn apply_many(&self, fs: &[Vec<T>], t: T) -> Result<Vec<Vec<T>>> {
        fs.par_iter().map(|f| self.apply(f, t)).collect()
    }

    /// Dense kernel: entry `(x, y)` is `(e^{tL} 1_y)(x)`.
    pub fn kernel(&self, t: T) -> Result<Matrix<T>> {
        let n = self.generator.n();
        let basis: Vec<Vec<T>> = (0..n)
            .map(|y| (0..n).map(|x| if x == y { T::one() } else { T::zero() }).collect())
            .collect();
        let cols = self.apply_many(&basis, t)?;
        Ok(Matrix::from_fn(n, n, |x, y| cols[y][x]))
    }
}

impl From<&Graph> for HeatOperator<f64> {
    fn from(g: &Graph) -> Self {
        HeatOperator::new(Generator::from(g))
    }
}

/// `P_t f` on a graph with the default tolerance.
pub fn heat_apply(g: &Graph, f: &[f64], t: f64) -> Result<Vec<f64>> {
    HeatOperator::from(g).apply(f, t)
}

/// `P_t^S f`: the semigroup with all rates out of `V ∖ S` removed, applied to
/// `f · 1_S`.
pub fn dirichlet_heat(g: &Graph, s: &[usize], f: &[f64], t: f64) -> Result<Vec<f64>> {
    let mut keep = vec![false; g.n()];
    for &x in s {
        if x >= g.n() {
            return Err(Error::BadParams(format!("vertex index {x} out of range")));
        }
        keep[x] = true;
    }
    let masked: Vec<f64> = f.iter().zip(&keep).map(|(&v, &k)| if k { v } else { 0.0 }).collect();
    HeatOperator::new(Generator::from(g).restricted(&keep)).apply(&masked, t)
}

/// `φ_t(r)` for `r = 0..=r_max`: survival at level `r` of the chain on `ℕ₀`
/// with rate `2 q_min` to both neighbors, absorbed at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthDeathSolution {
    pub q_min: f64,
    pub t: f64,
    pub phi: Vec<f64>,
    /// Number of states in the truncated chain.
    pub truncation_level: usize,
}

impl BirthDeathSolution {
    pub fn at(&self, r: usize) -> f64 {
        self.phi[r]
    }
}

/// Evaluates `φ_t` on `0..=r_max`.
///
/// `k` uniformization steps move at most `k` levels, so a chain cut at
/// `r_max + K + 2` states, with the missing upward rate at the top turned
/// into killing, reproduces the first `K` terms exactly.
pub fn phi_profile(q_min: f64, t: f64, r_max: usize, tolerance: f64) -> Result<BirthDeathSolution> {
    if !(q_min > 0.0 && q_min.is_finite()) {
        return Err(Error::BadParams(format!("q_min must be positive, got {q_min}")));
    }
    if t < 0.0 || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    let rate = 2.0 * q_min;
    let probe = HeatOperator::with_tolerance(birth_death_generator(3, rate, false), tolerance);
    // max degree of the truncated chain equals that of the 3-state probe
    let terms = probe.terms_needed(t);
    let levels = r_max + terms + 2;
    let mut gen = birth_death_generator(levels, rate, true);
    gen.set_killing(levels - 1, rate);
    let op = HeatOperator::with_tolerance(gen, tolerance);
    let f: Vec<f64> = (0..levels).map(|r| if r == 0 { 0.0 } else { 1.0 }).collect();
    let u = op.apply_truncated(&f, t, terms);
    Ok(BirthDeathSolution { q_min, t, phi: u[..=r_max].to_vec(), truncation_level: levels })
}

pub fn phi(q_min: f64, t: f64, r: usize) -> Result<f64> {
    Ok(phi_profile(q_min, t, r, PHI_TOLERANCE)?.at(r))
}

/// Discrete concavity, monotonicity in `r` and the `r / (2√(t q_min))` bound
/// of `φ_t` on the grid, one worst-case entry per property and time.
pub fn phi_properties_check(q_min: f64, t_grid: &[f64], r_max: usize, tolerance: f64) -> Result<Vec<CheckEntry>> {
    let mut out = Vec::new();
    for &t in t_grid {
        let sol = phi_profile(q_min, t, r_max + 1, PHI_TOLERANCE)?;
        let p = &sol.phi;
        let tag = |r: usize| format!("q_min={q_min} t={t} r={r}");
        out.extend(worst((1..=r_max).map(|r| {
            let lhs = 2.0 * q_min * (p[r + 1] + p[r - 1] - 2.0 * p[r]);
            CheckEntry::bound("phi_concavity", "phi concave in r", lhs, 0.0, tolerance).with_detail(tag(r))
        })));
        out.extend(worst((0..r_max).map(|r| {
            CheckEntry::bound("phi_monotone", "phi nondecreasing in r", p[r] - p[r + 1], 0.0, tolerance).with_detail(tag(r))
        })));
        if t > 0.0 {
            out.extend(worst((0..=r_max).map(|r| {
                let rhs = r as f64 / (2.0 * (t * q_min).sqrt());
                CheckEntry::bound("phi_sqrt_bound", "phi_t(r) <= r/(2 sqrt(t q_min))", p[r], rhs, tolerance)
                    .with_detail(tag(r))
            })));
        }
    }
    Ok(out)
}
