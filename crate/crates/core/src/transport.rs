//! Transport plans between unit balls, their cost and mass profile, the
//! optimal-plan LP, the surgery that turns an optimal plan into a perfect one,
//! and the Wasserstein-1 distance between measures on a graph.
//!
//! A plan `ρ` from `x₀` to `y₀` moves the outgoing rate mass of `x₀` onto that
//! of `y₀`:
//!
//! ```text
//! Σ_y ρ(x, y) = q(x₀, x)   for x ≠ x₀
//! Σ_x ρ(x, y) = q(y₀, y)   for y ≠ y₀
//! ```
//!
//! Row `x₀` and column `y₀` are unconstrained. The cost is
//! `Σ ρ(x, y)(d(x₀, y₀) − d(x, y))`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::lp::{lp_maximize, LinearProgram};

/// Absolute tolerance on plan marginals.
pub const MARGINAL_TOL: f64 = 1e-9;
/// Entries below this are dropped after surgery.
pub const CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub x0: usize,
    pub y0: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl TransportPlan {
    pub fn new(x0: usize, y0: usize) -> Self {
        Self { x0, y0, entries: BTreeMap::new() }
    }

    /// Builds a plan from raw entries, dropping zeros.
    pub fn from_entries(x0: usize, y0: usize, entries: impl IntoIterator<Item = ((usize, usize), f64)>) -> Self {
        let mut plan = Self::new(x0, y0);
        for (k, v) in entries {
            plan.add(k.0, k.1, v);
        }
        plan
    }

    /// Adds `mass` at `(x, y)`.
    pub fn add(&mut self, x: usize, y: usize, mass: f64) {
        if mass == 0.0 {
            return;
        }
        *self.entries.entry((x, y)).or_insert(0.0) += mass;
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries.get(&(x, y)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Largest violation of the marginal constraints, over all vertices.
    pub fn marginal_error(&self, g: &Graph) -> f64 {
        let n = g.n();
        let mut rows = vec![0.0; n];
        let mut cols = vec![0.0; n];
        for ((x, y), v) in self.iter() {
            rows[x] += v;
            cols[y] += v;
        }
        let mut worst = 0.0f64;
        for v in 0..n {
            if v != self.x0 {
                worst = worst.max((rows[v] - g.rate(self.x0, v)).abs());
            }
            if v != self.y0 {
                worst = worst.max((cols[v] - g.rate(self.y0, v)).abs());
            }
        }
        worst
    }

    /// Smallest entry (0 for an empty plan).
    pub fn min_entry(&self) -> f64 {
        self.entries.values().copied().fold(0.0, f64::min)
    }

    /// Whether all mass lies in `B₁(x₀) × B₁(y₀)`.
    pub fn supported_on_balls(&self, g: &Graph) -> bool {
        self.entries.keys().all(|&(x, y)| g.dist(self.x0, x) <= 1 && g.dist(self.y0, y) <= 1)
    }
}

/// `μ(k)`: mass moved over distance `d(x₀, y₀) + k`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MassProfile {
    pub mu: BTreeMap<i64, f64>,
}

impl MassProfile {
    pub fn get(&self, k: i64) -> f64 {
        self.mu.get(&k).copied().unwrap_or(0.0)
    }

    /// `−Σ_k k μ(k)`.
    pub fn cost(&self) -> f64 {
        -self.mu.iter().map(|(&k, &m)| k as f64 * m).sum::<f64>()
    }

    pub fn total(&self) -> f64 {
        self.mu.values().sum()
    }

    /// Mass moved by more than one step away from the base distance.
    pub fn far_mass(&self) -> f64 {
        self.mu.iter().filter(|(k, _)| k.abs() > 1).map(|(_, m)| m.abs()).sum()
    }
}

#[inline]
fn offset(g: &Graph, x0: usize, y0: usize, x: usize, y: usize) -> i64 {
    g.dist(x, y) as i64 - g.dist(x0, y0) as i64
}

/// `Σ ρ(x, y)(d(x₀, y₀) − d(x, y))`.
pub fn plan_cost(plan: &TransportPlan, g: &Graph) -> f64 {
    plan.iter().map(|((x, y), v)| -(offset(g, plan.x0, plan.y0, x, y) as f64) * v).sum()
}

pub fn mass_profile(plan: &TransportPlan, g: &Graph) -> MassProfile {
    let mut mu = BTreeMap::new();
    for ((x, y), v) in plan.iter() {
        *mu.entry(offset(g, plan.x0, plan.y0, x, y)).or_insert(0.0) += v;
    }
    MassProfile { mu }
}

/// The plan from `x₀` to itself that keeps every unit of mass in place.
pub fn diagonal_plan(g: &Graph, x0: usize) -> TransportPlan {
    TransportPlan::from_entries(x0, x0, g.neighbors(x0).iter().map(|&x| ((x, x), g.rate(x0, x))))
}

/// Maximizes the transport cost over all plans from `x₀` to `y₀`.
///
/// The LP ranges over every pair in `B₁(x₀) × B₁(y₀)`, centers included; the
/// returned plan is the simplex basic optimum.
pub fn optimal_plan(g: &Graph, x0: usize, y0: usize) -> Result<(TransportPlan, f64)> {
    if x0 == y0 {
        return Err(Error::EqualEndpoints);
    }
    let bx = g.ball(x0, 1);
    let by = g.ball(y0, 1);
    let var = |i: usize, j: usize| i * by.len() + j;
    let d0 = g.dist(x0, y0) as f64;

    let mut objective = Vec::with_capacity(bx.len() * by.len());
    for &x in &bx {
        for &y in &by {
            objective.push(d0 - g.dist(x, y) as f64);
        }
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (i, &x) in bx.iter().enumerate() {
        if x != x0 {
            rows.push((0..by.len()).map(|j| (var(i, j), 1.0)).collect());
            rhs.push(g.rate(x0, x));
        }
    }
    for (j, &y) in by.iter().enumerate() {
        if y != y0 {
            rows.push((0..bx.len()).map(|i| (var(i, j), 1.0)).collect());
            rhs.push(g.rate(y0, y));
        }
    }
    let lp = LinearProgram::from_rows(objective, &rows, rhs);
    let sol = lp_maximize(&lp)?;

    let mut plan = TransportPlan::new(x0, y0);
    for (i, &x) in bx.iter().enumerate() {
        for (j, &y) in by.iter().enumerate() {
            let v = sol.primal[var(i, j)];
            if v > CLAMP_TOL {
                plan.add(x, y, v);
            }
        }
    }
    Ok((plan, sol.value))
}

/// Pair sets and the signed correction `π` of the plan surgery.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanCorrection {
    /// Pairs moved two steps further apart.
    pub h: Vec<(usize, usize)>,
    /// Pairs moved two steps closer.
    pub l: Vec<(usize, usize)>,
    /// `d(x, y₀) < d(x₀, y₀)` but `d(x, y) ≥ d(x₀, y₀)`.
    pub x: Vec<(usize, usize)>,
    /// `d(x₀, y) < d(x₀, y₀)` but `d(x, y) ≥ d(x₀, y₀)`.
    pub y: Vec<(usize, usize)>,
    pub pi: BTreeMap<(usize, usize), f64>,
}

impl PlanCorrection {
    /// `A = H ∪ L ∪ X ∪ Y` (X and Y may overlap).
    pub fn a(&self) -> BTreeSet<(usize, usize)> {
        self.h.iter().chain(&self.l).chain(&self.x).chain(&self.y).copied().collect()
    }

    pub fn cost(&self, g: &Graph, x0: usize, y0: usize) -> f64 {
        self.pi.iter().map(|(&(x, y), &v)| -(offset(g, x0, y0, x, y) as f64) * v).sum()
    }
}

/// Classifies `B₁(x₀) × B₁(y₀)` into the sets `H`, `L`, `X`, `Y`.
pub fn correction_sets(g: &Graph, x0: usize, y0: usize) -> PlanCorrection {
    let d0 = g.dist(x0, y0);
    let mut c = PlanCorrection::default();
    for x in g.ball(x0, 1) {
        for y in g.ball(y0, 1) {
            let dxy = g.dist(x, y);
            if dxy >= d0 + 2 {
                c.h.push((x, y));
            }
            if dxy + 2 <= d0 {
                c.l.push((x, y));
            }
            if g.dist(x, y0) < d0 && dxy >= d0 {
                c.x.push((x, y));
            }
            if g.dist(x0, y) < d0 && dxy >= d0 {
                c.y.push((x, y));
            }
        }
    }
    c
}

/// Applies the surgery to an optimal plan `rho0`: zero the plan on `A`, and
/// reroute each removed unit of mass to `(x, y₀)` and `(x₀, y)`.
pub fn apply_correction(g: &Graph, rho0: &TransportPlan) -> Result<(TransportPlan, PlanCorrection)> {
    let (x0, y0) = (rho0.x0, rho0.y0);
    if x0 == y0 {
        return Err(Error::EqualEndpoints);
    }
    let d0 = g.dist(x0, y0) as i64;
    let mut corr = correction_sets(g, x0, y0);

    let xy: BTreeSet<_> = corr.x.iter().chain(&corr.y).copied().collect();
    let disjoint = corr.h.iter().all(|p| !corr.l.contains(p) && !xy.contains(p))
        && corr.l.iter().all(|p| !xy.contains(p));
    if !disjoint {
        return Err(Error::ConstructionViolation("H, L and X ∪ Y are not pairwise disjoint".into()));
    }
    let offsets_ok = corr.h.iter().all(|&(x, y)| g.dist(x, y) as i64 - d0 == 2)
        && corr.l.iter().all(|&(x, y)| g.dist(x, y) as i64 - d0 == -2)
        && xy.iter().all(|&(x, y)| g.dist(x, y) as i64 == d0);
    if !offsets_ok {
        return Err(Error::ConstructionViolation("distance offsets on H, L, X, Y".into()));
    }

    let a = corr.a();
    let mut pi: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(x, y) in &a {
        let m = rho0.get(x, y);
        if m == 0.0 {
            continue;
        }
        *pi.entry((x, y)).or_insert(0.0) -= m;
        *pi.entry((x, y0)).or_insert(0.0) += m;
        *pi.entry((x0, y)).or_insert(0.0) += m;
    }

    let mut rho = TransportPlan::new(x0, y0);
    for ((x, y), v) in rho0.iter() {
        if !a.contains(&(x, y)) {
            rho.add(x, y, v);
        }
    }
    for (&(x, y), &v) in &pi {
        if !a.contains(&(x, y)) {
            rho.add(x, y, v);
        }
    }
    if rho.min_entry() < -CLAMP_TOL {
        return Err(Error::ConstructionViolation(format!("negative entry {}", rho.min_entry())));
    }
    rho.entries.retain(|_, v| *v > CLAMP_TOL);
    pi.retain(|_, v| *v != 0.0);
    corr.pi = pi;
    let gain = corr.cost(g, x0, y0);
    if gain < -1e-9 {
        return Err(Error::ConstructionViolation(format!("correction lowers the cost by {}", -gain)));
    }
    Ok((rho, corr))
}

/// Optimal plan with `μ(k) = 0` for `|k| > 1` and `μ(−1) ≥ 2 q_min`.
///
/// Every postcondition is checked; a violation is reported as
/// [`Error::ConstructionViolation`].
pub fn perfect_plan(g: &Graph, x0: usize, y0: usize) -> Result<(TransportPlan, PlanCorrection)> {
    let (rho0, value) = optimal_plan(g, x0, y0)?;
    let (rho, corr) = apply_correction(g, &rho0)?;
    check_perfect(g, &rho, value)?;
    Ok((rho, corr))
}

/// Checks marginals, optimality against `optimum`, and the mass profile.
pub fn check_perfect(g: &Graph, rho: &TransportPlan, optimum: f64) -> Result<()> {
    let marg = rho.marginal_error(g);
    if marg > MARGINAL_TOL {
        return Err(Error::ConstructionViolation(format!("marginal error {marg:e}")));
    }
    let cost = plan_cost(rho, g);
    if (cost - optimum).abs() > 1e-8 {
        return Err(Error::ConstructionViolation(format!("cost {cost} differs from optimum {optimum}")));
    }
    let profile = mass_profile(rho, g);
    if profile.far_mass() > 1e-10 {
        return Err(Error::ConstructionViolation(format!("far mass {:e}", profile.far_mass())));
    }
    if profile.get(-1) < 2.0 * g.q_min() - 1e-9 {
        return Err(Error::ConstructionViolation(format!(
            "mu(-1) = {} < 2 q_min = {}",
            profile.get(-1),
            2.0 * g.q_min()
        )));
    }
    Ok(())
}

fn masses(g: &Graph, density: &[f64], name: &str) -> Result<Vec<f64>> {
    if density.len() != g.n() {
        return Err(Error::BadParams(format!("{name} has {} entries for {} vertices", density.len(), g.n())));
    }
    density
        .iter()
        .enumerate()
        .map(|(x, &d)| {
            if !(d.is_finite() && d >= 0.0) {
                Err(Error::BadParams(format!("{name} density at {} is {d}", g.label(x))))
            } else {
                Ok(d * g.mass(x))
            }
        })
        .collect()
}

fn balanced_masses(g: &Graph, mu: &[f64], nu: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let a = masses(g, mu, "mu")?;
    let b = masses(g, nu, "nu")?;
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > 1e-9 {
        return Err(Error::MassMismatch { left: sa, right: sb });
    }
    Ok((a, b))
}

/// Earth mover's distance between the measures `μ·m` and `ν·m` with the hop
/// metric as ground cost. Densities are taken with respect to `m`.
pub fn wasserstein1(g: &Graph, mu: &[f64], nu: &[f64]) -> Result<f64> {
    let (a, b) = balanced_masses(g, mu, nu)?;
    let sources: Vec<usize> = (0..g.n()).filter(|&x| a[x] > 0.0).collect();
    let sinks: Vec<usize> = (0..g.n()).filter(|&y| b[y] > 0.0).collect();
    if sources.is_empty() || sinks.is_empty() {
        return Ok(0.0);
    }
    let var = |i: usize, j: usize| i * sinks.len() + j;
    let mut objective = Vec::with_capacity(sources.len() * sinks.len());
    for &x in &sources {
        for &y in &sinks {
            objective.push(-(g.dist(x, y) as f64));
        }
    }
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs = Vec::new();
    for (i, &x) in sources.iter().enumerate() {
        rows.push((0..sinks.len()).map(|j| (var(i, j), 1.0)).collect());
        rhs.push(a[x]);
    }
    // The last column constraint is implied by the others.
    for (j, &y) in sinks.iter().enumerate().take(sinks.len() - 1) {
        rows.push((0..sources.len()).map(|i| (var(i, j), 1.0)).collect());
        rhs.push(b[y]);
    }
    let sol = lp_maximize(&LinearProgram::from_rows(objective, &rows, rhs))?;
    Ok(-sol.value)
}

/// Kantorovich dual of [`wasserstein1`]:
/// `sup { Σ_x m(x)(μ − ν)(x) f(x) : |f(u) − f(v)| ≤ 1 for u ∼ v }`.
pub fn wasserstein1_dual(g: &Graph, mu: &[f64], nu: &[f64]) -> Result<f64> {
    let (a, b) = balanced_masses(g, mu, nu)?;
    let n = g.n();
    let arcs: Vec<(usize, usize)> = (0..n).flat_map(|u| g.neighbors(u).iter().map(move |&v| (u, v))).collect();
    // f = p − q with p, q ≥ 0, then one slack per arc.
    let nvars = 2 * n + arcs.len();
    let mut objective = vec![0.0; nvars];
    for x in 0..n {
        objective[x] = a[x] - b[x];
        objective[n + x] = -(a[x] - b[x]);
    }
    let rows: Vec<Vec<(usize, f64)>> = arcs
        .iter()
        .enumerate()
        .map(|(k, &(u, v))| vec![(u, 1.0), (n + u, -1.0), (v, -1.0), (n + v, 1.0), (2 * n + k, 1.0)])
        .collect();
    let sol = lp_maximize(&LinearProgram::from_rows(objective, &rows, vec![1.0; arcs.len()]))?;
    Ok(sol.value)
}
