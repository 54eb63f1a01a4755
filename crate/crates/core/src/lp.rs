//! Dense two-phase primal simplex for `max cᵀx  s.t.  Ax = b, x ≥ 0`.
//!
//! Pivoting follows Bland's rule (lowest eligible index enters, ties in the
//! ratio test leave by lowest basic index), so the returned basic solution is
//! a deterministic function of the input. Every optimum comes with the dual
//! multipliers `y = c_B B⁻¹`, read off the artificial columns.

use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("numerical failure in simplex: {0}")]
    NumericalFailure(String),
    #[error("malformed linear program: {0}")]
    Shape(String),
}

/// `max objective·x  s.t.  a x = b, x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub a: Matrix<T>,
    pub b: Vec<T>,
}

/// Optimal basic solution with its dual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub value: T,
    pub primal: Vec<T>,
    /// One multiplier per equality row.
    pub dual: Vec<T>,
    pub iterations: usize,
}

impl<T: Scalar> LpSolution<T> {
    /// `bᵀy`; equals `value` up to the duality-gap tolerance.
    pub fn dual_value(&self, lp: &LinearProgram<T>) -> T {
        lp.b.iter().zip(&self.dual).fold(T::zero(), |acc, (&b, &y)| acc + b * y)
    }
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(objective: Vec<T>, a: Matrix<T>, b: Vec<T>) -> Self {
        Self { objective, a, b }
    }

    /// Sparse-friendly builder: `rows[i]` lists `(variable, coefficient)`.
    pub fn from_rows(objective: Vec<T>, rows: &[Vec<(usize, T)>], b: Vec<T>) -> Self {
        let mut a = Matrix::zeros(rows.len(), objective.len());
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                a[(i, j)] += v;
            }
        }
        Self { objective, a, b }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }
}

struct Tableau<T> {
    m: usize,
    width: usize,
    cells: Vec<T>,
    basis: Vec<usize>,
}

impl<T: Scalar> Tableau<T> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.cells[i * (self.width + 1) + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> T {
        self.cells[i * (self.width + 1) + self.width]
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width + 1;
        let p = self.at(r, e);
        for j in 0..w {
            self.cells[r * w + j] /= p;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.cells[i * w + e];
            if f == T::zero() {
                continue;
            }
            for j in 0..w {
                let v = self.cells[r * w + j];
                self.cells[i * w + j] -= f * v;
            }
            self.cells[i * w + e] = T::zero();
        }
        let floor = T::lp_tolerance();
        for i in 0..self.m {
            let k = i * w + self.width;
            if self.cells[k] < T::zero() && self.cells[k] > -floor {
                self.cells[k] = T::zero();
            }
        }
        self.basis[r] = e;
    }

    fn reduced_cost(&self, cost: &[T], j: usize) -> T {
        (0..self.m).fold(cost[j], |acc, i| acc - cost[self.basis[i]] * self.at(i, j))
    }

    /// Bland-rule simplex iterations over columns flagged in `allowed`.
    fn optimize(&mut self, cost: &[T], allowed: &[bool], budget: &mut usize) -> Result<(), LpError> {
        let tol = T::lp_tolerance();
        let floor = T::pivot_floor();
        loop {
            let mut in_basis = vec![false; self.width];
            for &b in &self.basis {
                in_basis[b] = true;
            }
            let entering = (0..self.width).find(|&j| allowed[j] && !in_basis[j] && self.reduced_cost(cost, j) > tol);
            let Some(e) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.m {
                let a = self.at(i, e);
                if a <= floor {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        let slack = tol * (T::one() + lr.abs());
                        if ratio < lr - slack || (ratio <= lr + slack && self.basis[i] < self.basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            if *budget == 0 {
                return Err(LpError::NumericalFailure("iteration budget exhausted".into()));
            }
            *budget -= 1;
            self.pivot(r, e);
        }
    }
}

/// Solves `max cᵀx  s.t.  Ax = b, x ≥ 0` to optimality.
pub fn lp_maximize<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>, LpError> {
    let n = lp.num_vars();
    let m = lp.num_rows();
    if n == 0 {
        return Err(LpError::Shape("no variables".into()));
    }
    if lp.a.rows() != m || lp.a.cols() != n {
        return Err(LpError::Shape(format!(
            "constraint matrix is {}x{}, expected {m}x{n}",
            lp.a.rows(),
            lp.a.cols()
        )));
    }
    let finite = lp.objective.iter().chain(lp.b.iter()).all(|v| v.is_finite())
        && (0..m).all(|i| lp.a.row(i).iter().all(|v| v.is_finite()));
    if !finite {
        return Err(LpError::Shape("non-finite coefficient".into()));
    }

    let width = n + m;
    let mut cells = vec![T::zero(); m * (width + 1)];
    let mut sign = vec![T::one(); m];
    for i in 0..m {
        if lp.b[i] < T::zero() {
            sign[i] = -T::one();
        }
        let row = &mut cells[i * (width + 1)..(i + 1) * (width + 1)];
        for j in 0..n {
            row[j] = sign[i] * lp.a[(i, j)];
        }
        row[n + i] = T::one();
        row[width] = sign[i] * lp.b[i];
    }
    let mut tab = Tableau { m, width, cells, basis: (n..n + m).collect() };
    let mut budget = 100 * (m + n) + 1000;
    let iterations_at_start = budget;

    // Phase 1: drive the artificial variables to zero.
    let mut phase1 = vec![T::zero(); width];
    phase1[n..].iter_mut().for_each(|c| *c = -T::one());
    let all = vec![true; width];
    tab.optimize(&phase1, &all, &mut budget)?;

    let b_norm = lp.b.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let feas_tol = T::lp_tolerance() * T::lit(100.0) * (T::one() + b_norm);
    let infeasibility = (0..m).filter(|&i| tab.basis[i] >= n).fold(T::zero(), |acc, i| acc + tab.rhs(i));
    if infeasibility > feas_tol {
        return Err(LpError::Infeasible);
    }

    // Pivot remaining (zero-level) artificials out where possible; rows
    // without an eligible entry are redundant and stay inert.
    for i in 0..m {
        if tab.basis[i] < n {
            continue;
        }
        let mut best: Option<(usize, T)> = None;
        for j in 0..n {
            let a = tab.at(i, j).abs();
            if a > T::pivot_floor() && !tab.basis.contains(&j) && best.is_none_or(|(_, b)| a > b) {
                best = Some((j, a));
            }
        }
        if let Some((j, _)) = best {
            tab.pivot(i, j);
        }
    }

    // Phase 2 on the original objective.
    let mut cost = vec![T::zero(); width];
    cost[..n].copy_from_slice(&lp.objective);
    let originals: Vec<bool> = (0..width).map(|j| j < n).collect();
    tab.optimize(&cost, &originals, &mut budget)?;

    let mut primal = vec![T::zero(); n];
    for i in 0..m {
        if tab.basis[i] < n {
            primal[tab.basis[i]] = tab.rhs(i).max(T::zero());
        }
    }
    let dual: Vec<T> = (0..m)
        .map(|i| {
            let y = (0..m).fold(T::zero(), |acc, r| acc + cost[tab.basis[r]] * tab.at(r, n + i));
            sign[i] * y
        })
        .collect();
    let value = lp.objective.iter().zip(&primal).fold(T::zero(), |acc, (&c, &x)| acc + c * x);
    let solution = LpSolution { value, primal, dual, iterations: iterations_at_start - budget };

    let residual = (0..m).fold(T::zero(), |acc, i| {
        let ax = lp.a.row(i).iter().zip(&solution.primal).fold(T::zero(), |s, (&a, &x)| s + a * x);
        acc.max((ax - lp.b[i]).abs())
    });
    if residual > feas_tol {
        return Err(LpError::NumericalFailure(format!("primal residual {residual:e}")));
    }
    let gap = (solution.value - solution.dual_value(lp)).abs();
    if gap > T::lp_tolerance() * T::lit(1000.0) * (T::one() + value.abs()) {
        return Err(LpError::NumericalFailure(format!("duality gap {gap:e}")));
    }
    Ok(solution)
}
