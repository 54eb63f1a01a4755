//! The inequality harness: runs every check on one graph and collects the
//! results in a [`VerificationReport`].

use std::collections::BTreeMap;
use std::f64::consts::{E, LN_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::coupling::{
    build_perfect_coupling, coupling_comparison, coupling_heat_bound, coupling_marginal_check, simulate_coupled_walks,
    tensorization_check,
};
use crate::curvature::{curvature_all, PairSelection, NONNEG_TOL};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::heat::{phi_properties_check, HeatOperator};
use crate::io::GraphFile;
use crate::linalg::Matrix;
use crate::report::{worst, CheckEntry, Provenance, VerificationReport};
use crate::spectral::{boundary_measure, cheeger, spectrum, CHEEGER_MAX_N};
use crate::transport::wasserstein1;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub t_grid: Vec<f64>,
    pub seed: u64,
    /// Random functions, density pairs and subsets per graph.
    pub n_family: usize,
    /// Monte Carlo samples per time; 0 disables the simulation.
    pub samples: usize,
    pub pairs: PairSelection,
    pub tolerance: f64,
    /// Run the checks even when curvature is not certified non-negative.
    pub force: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            t_grid: vec![0.25, 1.0, 4.0, 16.0],
            seed: 0,
            n_family: 32,
            samples: 0,
            pairs: PairSelection::All,
            tolerance: 1e-8,
            force: false,
        }
    }
}

impl VerifyConfig {
    pub fn to_parameters(&self) -> BTreeMap<String, Value> {
        let mut p = BTreeMap::new();
        p.insert("t".into(), json!(self.t_grid));
        p.insert("seed".into(), json!(self.seed));
        p.insert("n_family".into(), json!(self.n_family));
        p.insert("samples".into(), json!(self.samples));
        p.insert("pairs".into(), json!(if self.pairs == PairSelection::All { "all" } else { "edges" }));
        p.insert("tolerance".into(), json!(self.tolerance));
        p.insert("force".into(), json!(self.force));
        p
    }

    pub fn from_parameters(p: &BTreeMap<String, Value>) -> Result<Self> {
        let bad = |k: &str| Error::BadParams(format!("report parameter {k:?} missing or malformed"));
        let get = |k: &str| p.get(k).ok_or_else(|| bad(k));
        Ok(Self {
            t_grid: serde_json::from_value(get("t")?.clone()).map_err(|_| bad("t"))?,
            seed: get("seed")?.as_u64().ok_or_else(|| bad("seed"))?,
            n_family: get("n_family")?.as_u64().ok_or_else(|| bad("n_family"))? as usize,
            samples: get("samples")?.as_u64().ok_or_else(|| bad("samples"))? as usize,
            pairs: get("pairs")?.as_str().ok_or_else(|| bad("pairs"))?.parse()?,
            tolerance: get("tolerance")?.as_f64().ok_or_else(|| bad("tolerance"))?,
            force: get("force")?.as_bool().ok_or_else(|| bad("force"))?,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() || self.t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::BadParams("time grid must be non-empty and positive".into()));
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadParams("time grid must be strictly increasing".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::BadParams(format!("tolerance must be non-negative, got {}", self.tolerance)));
        }
        Ok(())
    }
}

// RNG stream ids, one per random family.
const STREAM_FUNCTIONS: u64 = 1;
const STREAM_DENSITIES: u64 = 2;
const STREAM_SUBSETS: u64 = 3;
const STREAM_TENSOR: u64 = 4;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn sup_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn normalized(f: Vec<f64>) -> Option<Vec<f64>> {
    let s = sup_norm(&f);
    (s > 0.0).then(|| f.into_iter().map(|v| v / s).collect())
}

fn sign_vector(f: impl Iterator<Item = f64>) -> Vec<f64> {
    f.map(|v| if v >= 0.0 { 1.0 } else { -1.0 }).collect()
}

/// Named test functions with `‖f‖∞ = 1`.
fn function_family(g: &Graph, eigenfunctions: &[Vec<f64>], kernels: &[Matrix<f64>], cfg: &VerifyConfig) -> Vec<(String, Vec<f64>)> {
    let n = g.n();
    let mut out = Vec::new();
    let mut r = rng(cfg.seed, STREAM_FUNCTIONS);
    for i in 0..cfg.n_family {
        let f: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..=1.0)).collect();
        if let Some(f) = normalized(f) {
            out.push((format!("random {i}"), f));
        }
    }
    for v in 0..n {
        out.push((format!("indicator {}", g.label(v)), (0..n).map(|x| if x == v { 1.0 } else { 0.0 }).collect()));
    }
    for (k, f) in eigenfunctions.iter().enumerate().skip(1) {
        if let Some(f) = normalized(f.clone()) {
            out.push((format!("eigenfunction {k}"), f.clone()));
            out.push((format!("eigenfunction sign {k}"), sign_vector(f.into_iter())));
        }
    }
    // sign(K_t(x, ·) − K_t(y, ·)) maximizes P_t f(x) − P_t f(y) over ‖f‖∞ ≤ 1
    for (i, k) in kernels.iter().enumerate() {
        for x in 0..n {
            for y in (x + 1)..n {
                out.push((
                    format!("extremal t#{i} {}-{}", g.label(x), g.label(y)),
                    sign_vector((0..n).map(|z| k[(x, z)] - k[(y, z)])),
                ));
            }
        }
    }
    out
}

fn random_density(g: &Graph, r: &mut ChaCha8Rng) -> Vec<f64> {
    let mut raw: Vec<f64> = (0..g.n()).map(|_| if r.gen_bool(0.3) { 0.0 } else { r.gen::<f64>() }).collect();
    if raw.iter().all(|&v| v == 0.0) {
        raw[r.gen_range(0..g.n())] = 1.0;
    }
    let mass: f64 = raw.iter().zip(g.measure()).map(|(a, m)| a * m).sum();
    raw.into_iter().map(|v| v / mass).collect()
}

fn subset_family(g: &Graph, cfg: &VerifyConfig, cheeger_witness: Option<&[usize]>) -> Vec<(String, Vec<bool>)> {
    let n = g.n();
    let mut out = Vec::new();
    for v in 0..n {
        out.push((format!("singleton {}", g.label(v)), (0..n).map(|x| x == v).collect()));
    }
    for v in 0..n {
        for rad in 1..g.diameter() {
            out.push((format!("ball {} r={rad}", g.label(v)), (0..n).map(|x| g.dist(v, x) <= rad).collect()));
        }
    }
    if let Some(w) = cheeger_witness {
        out.push(("cheeger witness".into(), (0..n).map(|x| w.contains(&x)).collect()));
    }
    let mut r = rng(cfg.seed, STREAM_SUBSETS);
    for i in 0..cfg.n_family {
        let mut mask: Vec<bool> = (0..n).map(|_| r.gen_bool(0.5)).collect();
        if mask.iter().all(|&b| b) || mask.iter().all(|&b| !b) {
            let v = r.gen_range(0..n);
            mask = (0..n).map(|x| x == v).collect();
        }
        out.push((format!("random subset {i}"), mask));
    }
    out
}

fn mul(k: &Matrix<f64>, f: &[f64]) -> Vec<f64> {
    k.mul_vec(f)
}

/// Runs every check. Without `force`, a graph that is not certified
/// non-negatively curved is rejected with [`Error::CurvatureNotCertified`];
/// with `force` the checks run and entries that rely on the curvature
/// hypothesis are marked precondition-not-met.
pub fn verify_inequalities(g: &Graph, cfg: &VerifyConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let tol = cfg.tolerance;
    let q = g.q_min();
    let n = g.n();
    let map = curvature_all(g, cfg.pairs)?;
    if !map.nonneg && !cfg.force {
        map.certify(g)?;
    }
    let certified = map.nonneg;
    let mut report = VerificationReport::new(Provenance {
        graph: GraphFile::from_graph(g),
        parameters: cfg.to_parameters(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    });
    let (ax, ay) = map.argmin;
    report.push(
        CheckEntry::bound("curvature_nonnegative", "non-negative Ollivier curvature", 0.0, map.min_kappa, NONNEG_TOL)
            .with_detail(format!("min at {}-{} over {} pairs", g.label(ax), g.label(ay), map.kappa.len())),
    );

    let mut conditional: Vec<CheckEntry> = Vec::new();
    let mut free: Vec<CheckEntry> = Vec::new();

    let op = HeatOperator::from(g);
    let kernels: Vec<Matrix<f64>> = cfg.t_grid.par_iter().map(|&t| op.kernel(t)).collect::<Result<_>>()?;
    let spec = spectrum(g)?;

    // reverse Poincaré
    let family = function_family(g, &spec.eigenfunctions, &kernels, cfg);
    for (&t, k) in cfg.t_grid.iter().zip(&kernels) {
        let rhs = 1.0 / (t * q).sqrt();
        let entries: Vec<CheckEntry> = family
            .par_iter()
            .map(|(name, f)| {
                CheckEntry::bound("reverse_poincare", "reverse Poincare inequality", g.lipschitz(&mul(k, f)), rhs * sup_norm(f), tol)
                    .with_detail(format!("t={t} {name}"))
            })
            .collect();
        conditional.extend(worst(entries));
    }

    // total variation estimate on random density pairs
    let mut r = rng(cfg.seed, STREAM_DENSITIES);
    let densities: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.n_family).map(|_| (random_density(g, &mut r), random_density(g, &mut r))).collect();
    let w1: Vec<f64> = densities.par_iter().map(|(a, b)| wasserstein1(g, a, b)).collect::<Result<_>>()?;
    let mut prev_tv: Option<(f64, Vec<f64>)> = None;
    for (&t, k) in cfg.t_grid.iter().zip(&kernels) {
        let rhs = 1.0 / (t * q).sqrt();
        let tv: Vec<f64> = densities
            .iter()
            .map(|(a, b)| {
                let (pa, pb) = (mul(k, a), mul(k, b));
                g.l1_norm(&pa.iter().zip(&pb).map(|(x, y)| x - y).collect::<Vec<_>>())
            })
            .collect();
        conditional.extend(worst((0..densities.len()).map(|i| {
            CheckEntry::bound("tv_estimate", "total variation estimate", tv[i], w1[i] * rhs, tol)
                .with_detail(format!("t={t} density pair {i}"))
        })));
        if let Some((t0, tv0)) = &prev_tv {
            free.extend(worst((0..densities.len()).map(|i| {
                CheckEntry::bound("tv_contraction", "l1 contraction of the heat semigroup", tv[i], tv0[i], tol)
                    .with_detail(format!("t={t0}->{t} density pair {i}"))
            })));
        }
        prev_tv = Some((t, tv));
    }

    // gradient form against total variation form on point masses
    for (&t, k) in cfg.t_grid.iter().zip(&kernels) {
        let rhs = 1.0 / (t * q).sqrt();
        let mut gap = CheckEntry::bound("tv_gradient_equivalence", "gradient and total variation forms agree", 0.0, 0.0, tol);
        let mut point = Vec::new();
        for x in 0..n {
            for y in (x + 1)..n {
                let d = g.dist(x, y) as f64;
                let grad: f64 = (0..n).map(|z| (k[(x, z)] - k[(y, z)]).abs()).sum();
                let tv: f64 = (0..n).map(|z| g.mass(z) * (k[(z, x)] / g.mass(x) - k[(z, y)] / g.mass(y)).abs()).sum();
                let diff = (grad - tv).abs() / d;
                if diff > gap.lhs {
                    gap = CheckEntry::bound("tv_gradient_equivalence", "gradient and total variation forms agree", diff, 0.0, tol);
                    gap.detail = format!("t={t} {}-{}", g.label(x), g.label(y));
                }
                point.push(
                    CheckEntry::bound("tv_point_masses", "total variation estimate for point masses", tv, d * rhs, tol)
                        .with_detail(format!("t={t} {}-{}", g.label(x), g.label(y))),
                );
            }
        }
        if gap.detail.is_empty() {
            gap.detail = format!("t={t}");
        }
        free.push(gap);
        conditional.extend(worst(point));
    }

    // Buser lemma and Buser inequality
    let ch = if n <= CHEEGER_MAX_N { Some(cheeger(g)?) } else { None };
    let subsets = subset_family(g, cfg, ch.as_ref().map(|c| c.witness.as_slice()));
    for (&t, k) in cfg.t_grid.iter().zip(&kernels) {
        let entries: Vec<CheckEntry> = subsets
            .par_iter()
            .map(|(name, mask)| {
                let ind: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                let diff: Vec<f64> = mul(k, &ind).iter().zip(&ind).map(|(a, b)| a - b).collect();
                let rhs = 2.0 * boundary_measure(g, mask) * (t / q).sqrt();
                CheckEntry::bound("buser_lemma", "heat flow of indicators", g.l1_norm(&diff), rhs, tol)
                    .with_detail(format!("t={t} {name}"))
            })
            .collect();
        conditional.extend(worst(entries));
    }
    let lambda1 = spec.lambda1();
    match &ch {
        Some(c) => conditional.push(
            CheckEntry::bound("buser", "Buser inequality", lambda1, 16.0 * LN_2 / q * c.h * c.h, tol)
                .with_detail(format!("h={} |A|={}", c.h, c.witness.len())),
        ),
        None => conditional.push(CheckEntry::skipped(
            "buser",
            "Buser inequality",
            &format!("exact Cheeger constant needs n <= {CHEEGER_MAX_N}"),
        )),
    }

    // Harnack inequality for eigenfunctions, eigenvalue and diameter
    conditional.extend(worst(spec.eigenfunctions.iter().enumerate().skip(1).map(|(k, f)| {
        let s = sup_norm(f);
        let grad = g.lipschitz(f) / s;
        CheckEntry::bound("harnack", "Harnack inequality", grad * grad, 2.0 * E * spec.eigenvalues[k] / q, tol)
            .with_detail(format!("eigenpair {k} lambda={}", spec.eigenvalues[k]))
    })));
    let diam = g.diameter() as f64;
    conditional.push(
        CheckEntry::bound("eigenvalue_diameter", "eigenvalue and diameter", LN_2 * q / (diam * diam), lambda1, tol)
            .with_detail(format!("diam={diam}")),
    );

    // comparison function
    free.extend(phi_properties_check(q, &cfg.t_grid, g.diameter().max(1), 1e-9)?);

    // coupling
    let cg = build_perfect_coupling(g)?;
    free.extend(coupling_marginal_check(g, &cg));
    let mut r = rng(cfg.seed, STREAM_TENSOR);
    let f: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..=1.0)).collect();
    for &t in &cfg.t_grid {
        free.extend(tensorization_check(g, &cg, &f, t)?);
    }
    let coupling_entries = if certified {
        coupling_heat_bound(g, &cg, &map, &cfg.t_grid)?
    } else {
        coupling_comparison(g, &cg, &cfg.t_grid)?
    };

    if cfg.samples > 0 {
        let (x0, y0) = g.edges()[0];
        for &t in &cfg.t_grid {
            let mc = simulate_coupled_walks(g, &cg, x0, y0, t, cfg.samples, cfg.seed)?;
            conditional.push(
                CheckEntry::bound("coupled_walks", "coupled walks meet", mc.ci.0, mc.bound, tol).with_detail(format!(
                    "t={t} {}-{} p_hat={} ci=[{}, {}] n={}",
                    g.label(x0),
                    g.label(y0),
                    mc.p_hat,
                    mc.ci.0,
                    mc.ci.1,
                    mc.samples
                )),
            );
        }
    }

    let mark = |e: CheckEntry| if certified { e } else { e.precondition_not_met() };
    report.extend(conditional.into_iter().map(mark));
    report.extend(coupling_entries);
    report.extend(free);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::generate;

    #[test]
    fn k2_passes() {
        let g = generate("complete(2)").unwrap();
        let r = verify_inequalities(&g, &VerifyConfig::default()).unwrap();
        assert!(r.all_pass(), "{}", r.to_table());
        let buser = r.entries.iter().find(|e| e.check_id == "buser").unwrap();
        assert!((buser.lhs - 2.0).abs() < 1e-12);
        assert!((buser.rhs - 16.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn parameters_round_trip() {
        let cfg = VerifyConfig { seed: 9, samples: 10, pairs: PairSelection::Edges, ..Default::default() };
        assert_eq!(VerifyConfig::from_parameters(&cfg.to_parameters()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_grid() {
        let g = generate("complete(2)").unwrap();
        let cfg = VerifyConfig { t_grid: vec![0.0], ..Default::default() };
        assert!(matches!(verify_inequalities(&g, &cfg), Err(Error::BadParams(_))));
        let cfg = VerifyConfig { t_grid: vec![1.0, 0.5], ..Default::default() };
        assert!(matches!(verify_inequalities(&g, &cfg), Err(Error::BadParams(_))));
    }
}
