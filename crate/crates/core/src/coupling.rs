//! Perfect coupling graphs on `V × V`.
//!
//! State `(x, y)` is stored at index `x·n + y`. Off-diagonal states jump
//! according to a perfect transport plan from `x` to `y`; diagonal states
//! `(x, x)` move to `(v, v)` at rate `q(x, v)`, so the diagonal is closed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::curvature::CurvatureMap;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::heat::{phi_profile, Generator, HeatOperator, DEFAULT_TOLERANCE, PHI_TOLERANCE};
use crate::report::{worst, CheckEntry};
use crate::transport::{perfect_plan, TransportPlan};

pub const MARGINAL_CHECK_TOL: f64 = 1e-10;
pub const BOUND_TOL: f64 = 1e-8;
/// Threshold for `P̃_t 1_W` at the late time `10·diam²/q_min`.
pub const LIOUVILLE_THRESHOLD: f64 = 1e-2;
/// Two-sided 99% normal quantile.
const Z99: f64 = 2.5758293035489004;

#[derive(Debug, Clone)]
pub struct CouplingGraph {
    n: usize,
    generator: Generator<f64>,
    plans: Vec<Option<TransportPlan>>,
}

impl CouplingGraph {
    /// Number of base vertices.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn state(&self, x: usize, y: usize) -> usize {
        x * self.n + y
    }

    #[inline]
    pub fn coords(&self, s: usize) -> (usize, usize) {
        (s / self.n, s % self.n)
    }

    pub fn generator(&self) -> &Generator<f64> {
        &self.generator
    }

    pub fn rate(&self, from: (usize, usize), to: (usize, usize)) -> f64 {
        self.generator.rate(self.state(from.0, from.1), self.state(to.0, to.1))
    }

    /// The perfect plan behind state `(x, y)`, `x ≠ y`.
    pub fn plan(&self, x: usize, y: usize) -> Option<&TransportPlan> {
        self.plans[self.state(x, y)].as_ref()
    }

    pub fn heat_operator(&self) -> HeatOperator<f64> {
        HeatOperator::new(self.generator.clone())
    }

    /// `1_W`, the indicator of the off-diagonal states.
    pub fn off_diagonal(&self) -> Vec<f64> {
        (0..self.states()).map(|s| if s / self.n != s % self.n { 1.0 } else { 0.0 }).collect()
    }

    /// Copy with one rate shifted by `delta`.
    #[doc(hidden)]
    pub fn with_perturbed_rate(&self, from: (usize, usize), to: (usize, usize), delta: f64) -> Self {
        let mut c = self.clone();
        let (s, t) = (self.state(from.0, from.1), self.state(to.0, to.1));
        match c.generator.rate_mut(s, t) {
            Some(r) => *r += delta,
            None => c.generator.add_rate(s, t, delta),
        }
        c
    }
}

/// Builds the perfect coupling graph and checks that no coupling edge changes
/// the distance by more than one.
pub fn build_perfect_coupling(g: &Graph) -> Result<CouplingGraph> {
    let n = g.n();
    let plans: Vec<Option<TransportPlan>> = (0..n * n)
        .into_par_iter()
        .map(|s| {
            let (x, y) = (s / n, s % n);
            if x == y {
                Ok(None)
            } else {
                perfect_plan(g, x, y).map(|(rho, _)| Some(rho))
            }
        })
        .collect::<Result<_>>()?;

    let mut generator = Generator::new(n * n);
    for x in 0..n {
        for &v in g.neighbors(x) {
            generator.add_rate(x * n + x, v * n + v, g.rate(x, v));
        }
    }
    for (s, plan) in plans.iter().enumerate() {
        let Some(plan) = plan else { continue };
        let d0 = g.dist(plan.x0, plan.y0) as i64;
        for ((x, y), r) in plan.iter() {
            if (g.dist(x, y) as i64 - d0).abs() > 1 {
                return Err(Error::ConstructionViolation(format!(
                    "coupling edge ({},{}) -> ({},{}) jumps in distance",
                    g.label(plan.x0),
                    g.label(plan.y0),
                    g.label(x),
                    g.label(y)
                )));
            }
            generator.add_rate(s, x * n + y, r);
        }
    }
    Ok(CouplingGraph { n, generator, plans })
}

fn pair_label(g: &Graph, x: usize, y: usize) -> String {
    format!("({},{})", g.label(x), g.label(y))
}

/// Checks `Δ̃(1_v ⊗ 1) = Δ1_v ⊗ 1` and `Δ̃(1 ⊗ 1_v) = 1 ⊗ Δ1_v` at every state
/// and every `v`. Returns one entry per identity with the worst location.
pub fn coupling_marginal_check(g: &Graph, cg: &CouplingGraph) -> Vec<CheckEntry> {
    let n = g.n();
    let per_state: Vec<[(f64, usize); 2]> = (0..cg.states())
        .into_par_iter()
        .map(|s| {
            let (x0, y0) = cg.coords(s);
            let mut rows = vec![0.0; n];
            let mut cols = vec![0.0; n];
            let mut total = 0.0;
            for &(t, r) in cg.generator.row(s) {
                let (x, y) = cg.coords(t);
                rows[x] += r;
                cols[y] += r;
                total += r;
            }
            let mut out = [(0.0f64, 0usize); 2];
            for (k, (marg, base)) in [(&rows, x0), (&cols, y0)].into_iter().enumerate() {
                for v in 0..n {
                    let got = marg[v] - if v == base { total } else { 0.0 };
                    let want = if v == base { -g.degree(base) } else { g.rate(base, v) };
                    let err = (got - want).abs();
                    if err > out[k].0 {
                        out[k] = (err, v);
                    }
                }
            }
            out
        })
        .collect();
    let names = ["coupling_marginal_first", "coupling_marginal_second"];
    let refs = ["coupling identity on f (x) 1", "coupling identity on 1 (x) f"];
    (0..2)
        .map(|k| {
            let (s, &(err, v)) = per_state
                .iter()
                .map(|p| &p[k])
                .enumerate()
                .fold((0, &(0.0, 0)), |best, cur| if cur.1 .0 > best.1 .0 { cur } else { best });
            let (x, y) = cg.coords(s);
            CheckEntry::bound(names[k], refs[k], err, 0.0, MARGINAL_CHECK_TOL)
                .with_detail(format!("state {} basis {}", pair_label(g, x, y), g.label(v)))
        })
        .collect()
}

/// Checks `P̃_t(f ⊗ 1) = P_t f ⊗ 1` and `P̃_t(1 ⊗ f) = 1 ⊗ P_t f`.
pub fn tensorization_check(g: &Graph, cg: &CouplingGraph, f: &[f64], t: f64) -> Result<Vec<CheckEntry>> {
    let n = g.n();
    let base = HeatOperator::from(g);
    let pf = base.apply(f, t)?;
    let op = cg.heat_operator();
    let left: Vec<f64> = (0..cg.states()).map(|s| f[s / n]).collect();
    let right: Vec<f64> = (0..cg.states()).map(|s| f[s % n]).collect();
    let out = op.apply_many(&[left, right], t)?;
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 2.0 * DEFAULT_TOLERANCE * scale;
    let names = ["tensorization_first", "tensorization_second"];
    let refs = ["semigroup tensorization on f (x) 1", "semigroup tensorization on 1 (x) f"];
    Ok((0..2)
        .map(|k| {
            let (mut err, mut at) = (0.0f64, 0usize);
            for s in 0..cg.states() {
                let want = if k == 0 { pf[s / n] } else { pf[s % n] };
                let e = (out[k][s] - want).abs();
                if e > err {
                    err = e;
                    at = s;
                }
            }
            let (x, y) = cg.coords(at);
            CheckEntry::bound(names[k], refs[k], err, 0.0, tol).with_detail(format!("t={t} state {}", pair_label(g, x, y)))
        })
        .collect())
}

/// `P̃_t 1_W` at time `t`.
pub fn non_coalescence(cg: &CouplingGraph, t: f64) -> Result<Vec<f64>> {
    cg.heat_operator().apply(&cg.off_diagonal(), t)
}

fn comparison_entries(g: &Graph, cg: &CouplingGraph, t_grid: &[f64]) -> Result<Vec<CheckEntry>> {
    let q = g.q_min();
    let diam = g.diameter();
    let mut out = Vec::new();
    let mut prev: Option<(f64, Vec<f64>)> = None;
    for &t in t_grid {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::BadParams(format!("times must be positive, got {t}")));
        }
        if prev.as_ref().is_some_and(|(t0, _)| t <= *t0) {
            return Err(Error::BadParams("times must be strictly increasing".into()));
        }
        let u = non_coalescence(cg, t)?;
        let phi = phi_profile(q, t, diam, PHI_TOLERANCE)?;
        let rhs_sqrt = |d: usize| d as f64 / (2.0 * (t * q).sqrt());
        out.extend(worst((0..cg.states()).map(|s| {
            let (x, y) = cg.coords(s);
            CheckEntry::bound("coupling_vs_phi", "coupled non-coalescence <= phi_t(d)", u[s], phi.at(g.dist(x, y)), BOUND_TOL)
                .with_detail(format!("t={t} state {}", pair_label(g, x, y)))
        })));
        out.extend(worst((0..=diam).map(|d| {
            CheckEntry::bound("phi_vs_sqrt", "phi_t(d) <= d/(2 sqrt(t q_min))", phi.at(d), rhs_sqrt(d), BOUND_TOL)
                .with_detail(format!("t={t} d={d}"))
        })));
        if let Some((t0, u0)) = &prev {
            out.extend(worst((0..cg.states()).map(|s| {
                let (x, y) = cg.coords(s);
                CheckEntry::bound("coupling_monotone", "coupled non-coalescence nonincreasing in t", u[s], u0[s], BOUND_TOL)
                    .with_detail(format!("t={t0}->{t} state {}", pair_label(g, x, y)))
            })));
        }
        prev = Some((t, u));
    }
    let t_late = 10.0 * (diam * diam) as f64 / q;
    let u = non_coalescence(cg, t_late)?;
    let (at, &m) = u.iter().enumerate().fold((0, &0.0), |b, c| if c.1 > b.1 { c } else { b });
    let (x, y) = cg.coords(at);
    out.push(
        CheckEntry::bound("coupling_decay", "coupled non-coalescence vanishes for large t", m, LIOUVILLE_THRESHOLD, 0.0)
            .with_detail(format!("t={t_late} state {}", pair_label(g, x, y))),
    );
    Ok(out)
}

/// The coupling estimate on a certified non-negatively curved graph, plus
/// monotonicity in `t` and decay at `t = 10·diam²/q_min`.
pub fn coupling_heat_bound(g: &Graph, cg: &CouplingGraph, curvature: &CurvatureMap, t_grid: &[f64]) -> Result<Vec<CheckEntry>> {
    curvature.certify(g)?;
    comparison_entries(g, cg, t_grid)
}

/// The same comparison without the curvature hypothesis; every entry is
/// informational.
pub fn coupling_comparison(g: &Graph, cg: &CouplingGraph, t_grid: &[f64]) -> Result<Vec<CheckEntry>> {
    Ok(comparison_entries(g, cg, t_grid)?
        .into_iter()
        .map(|e| {
            let mut i = CheckEntry::informational(&format!("{}_informational", e.check_id), &e.reference, e.lhs, e.rhs);
            i.detail = e.detail;
            i
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub samples: usize,
    /// Fraction of runs with `X_t ≠ Y_t`.
    pub p_hat: f64,
    pub std_err: f64,
    /// 99% Wilson interval.
    pub ci: (f64, f64),
    /// `d(x₀, y₀) / (2√(t q_min))`.
    pub bound: f64,
    /// Lower end of the interval respects the bound.
    pub pass: bool,
}

pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn run_once(cg: &CouplingGraph, start: usize, t: f64, rng: &mut ChaCha8Rng) -> bool {
    let gen = cg.generator();
    let mut s = start;
    let mut clock = 0.0;
    loop {
        let (x, y) = cg.coords(s);
        if x == y {
            return false;
        }
        let total = gen.degree(s);
        if total <= 0.0 {
            return true;
        }
        let u: f64 = rng.gen();
        clock += -(1.0 - u).ln() / total;
        if clock > t {
            return true;
        }
        let mut pick = rng.gen::<f64>() * total;
        let row = gen.row(s);
        let mut next = row[row.len() - 1].0;
        for &(z, r) in row {
            if pick < r {
                next = z;
                break;
            }
            pick -= r;
        }
        s = next;
    }
}

/// Gillespie simulation of the coupled walks from `(x₀, y₀)` up to time `t`.
/// Sample `i` uses stream `i` of a ChaCha8 generator seeded with `seed`, so
/// the estimate does not depend on the worker count.
pub fn simulate_coupled_walks(
    g: &Graph,
    cg: &CouplingGraph,
    x0: usize,
    y0: usize,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples == 0 {
        return Err(Error::BadParams("need at least one sample".into()));
    }
    if t < 0.0 || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    let start = cg.state(x0, y0);
    let apart = (0..n_samples)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            run_once(cg, start, t, &mut rng)
        })
        .count();
    let nf = n_samples as f64;
    let p_hat = apart as f64 / nf;
    let ci = wilson_interval(apart, n_samples, Z99);
    let bound = if t > 0.0 { g.dist(x0, y0) as f64 / (2.0 * (t * g.q_min()).sqrt()) } else { f64::INFINITY };
    Ok(McEstimate {
        samples: n_samples,
        p_hat,
        std_err: (p_hat * (1.0 - p_hat) / nf).sqrt(),
        ci,
        bound,
        pass: ci.0 <= bound + BOUND_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{curvature_all, PairSelection};
    use crate::generate::generate;

    #[test]
    fn k2_chain() {
        let g = generate("complete(2)").unwrap();
        let cg = build_perfect_coupling(&g).unwrap();
        assert_eq!(cg.states(), 4);
        assert!((cg.rate((0, 1), (0, 0)) - 1.0).abs() < 1e-12);
        assert!((cg.rate((0, 1), (1, 1)) - 1.0).abs() < 1e-12);
        assert!((cg.rate((0, 0), (1, 1)) - 1.0).abs() < 1e-12);
        let u = non_coalescence(&cg, 1.0).unwrap();
        assert!((u[1] - (-2.0f64).exp()).abs() < 1e-10);
        assert_eq!(u[0], 0.0);
    }

    #[test]
    fn marginals_and_fault() {
        let g = generate("cycle(6)").unwrap();
        let cg = build_perfect_coupling(&g).unwrap();
        assert!(coupling_marginal_check(&g, &cg).iter().all(|e| e.pass));
        let bad = cg.with_perturbed_rate((0, 2), (1, 2), 0.1);
        let entries = coupling_marginal_check(&g, &bad);
        assert!(!entries[0].pass);
        assert!(entries[0].detail.contains("(0,2)"), "{}", entries[0].detail);
    }

    #[test]
    fn diagonal_rates() {
        let g = generate("cycle(5)").unwrap();
        let cg = build_perfect_coupling(&g).unwrap();
        for x in 0..5 {
            assert!((cg.generator().degree(cg.state(x, x)) - g.degree(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn heat_bound_and_negative_refusal() {
        let g = generate("cycle(6)").unwrap();
        let cg = build_perfect_coupling(&g).unwrap();
        let map = curvature_all(&g, PairSelection::All).unwrap();
        let entries = coupling_heat_bound(&g, &cg, &map, &[0.5, 2.0, 8.0]).unwrap();
        assert!(entries.iter().all(|e| e.pass), "{entries:?}");
        let mut neg = map.clone();
        neg.nonneg = false;
        neg.min_kappa = -0.5;
        assert!(matches!(coupling_heat_bound(&g, &cg, &neg, &[1.0]), Err(Error::CurvatureNotCertified { .. })));
    }

    #[test]
    fn monte_carlo_edge_cases() {
        let g = generate("complete(2)").unwrap();
        let cg = build_perfect_coupling(&g).unwrap();
        let mc = simulate_coupled_walks(&g, &cg, 0, 1, 0.0, 100, 3).unwrap();
        assert_eq!(mc.p_hat, 1.0);
        let a = simulate_coupled_walks(&g, &cg, 0, 1, 1.0, 2000, 3).unwrap();
        let b = simulate_coupled_walks(&g, &cg, 0, 1, 1.0, 2000, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.pass);
    }
}
