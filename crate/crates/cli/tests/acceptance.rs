//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any of them fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use curvlab::coupling::{
    build_perfect_coupling, coupling_marginal_check, non_coalescence, simulate_coupled_walks, tensorization_check,
};
use curvlab::heat::{phi_profile, phi_properties_check, PHI_TOLERANCE};
use curvlab::report::Status;
use curvlab::transport::{mass_profile, optimal_plan, perfect_plan, plan_cost};
use curvlab::{curvature_all, generate, kappa, kappa_dual, verify_inequalities, Graph, PairSelection};
use curvlab::{VerificationReport, VerifyConfig};

const T_GRID: [f64; 4] = [0.25, 1.0, 4.0, 16.0];
const FIXED: [&str; 11] = [
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

type Criterion<'a> = (&'static str, Box<dyn Fn() + 'a>);

struct Case {
    name: String,
    g: Graph,
    nonneg: bool,
    report: VerificationReport,
}

fn corpus() -> Vec<Case> {
    let randoms = (0..20u64).map(|s| format!("random({},0.4,{s})", 4 + s % 7));
    FIXED
        .iter()
        .map(|s| s.to_string())
        .chain(randoms)
        .map(|name| {
            let g = generate(&name).unwrap();
            let nonneg = curvature_all(&g, PairSelection::All).unwrap().nonneg;
            let cfg = VerifyConfig { t_grid: T_GRID.to_vec(), force: true, ..VerifyConfig::default() };
            let report = verify_inequalities(&g, &cfg).unwrap();
            Case { name, g, nonneg, report }
        })
        .collect()
}

fn ordered_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |x| (0..n).filter(move |&y| y != x).map(move |y| (x, y)))
}

/// Every entry named `id` must exist and have slack at least `-tol`.
fn entries_hold(case: &Case, id: &str, expected: usize, tol: f64) {
    let found: Vec<_> = case.report.entries.iter().filter(|e| e.check_id == id).collect();
    assert_eq!(found.len(), expected, "{}: {} entries for {id}", case.name, found.len());
    for e in found {
        assert!(e.slack >= -tol, "{}: {id} slack {} ({})", case.name, e.slack, e.detail);
    }
}

fn duality(corpus: &[Case]) {
    for c in corpus {
        for (x, y) in ordered_pairs(c.g.n()) {
            let (p, d) = (kappa(&c.g, x, y).unwrap(), kappa_dual(&c.g, x, y).unwrap());
            assert!((p - d).abs() <= 1e-7, "{} {x}-{y}: {p} vs {d}", c.name);
        }
    }
}

fn transport_mass(corpus: &[Case]) {
    for c in corpus {
        for (x, y) in ordered_pairs(c.g.n()) {
            let (_, opt) = optimal_plan(&c.g, x, y).unwrap();
            let (rho, _) = perfect_plan(&c.g, x, y).unwrap();
            let mu = mass_profile(&rho, &c.g);
            assert!(mu.far_mass() <= 1e-10, "{} {x}-{y}: far mass {}", c.name, mu.far_mass());
            assert!(mu.get(-1) >= 2.0 * c.g.q_min() - 1e-9, "{} {x}-{y}: mu(-1) {}", c.name, mu.get(-1));
            let cost = plan_cost(&rho, &c.g);
            assert!((cost - opt).abs() <= 1e-8, "{} {x}-{y}: cost {cost} vs {opt}", c.name);
        }
    }
}

fn coupling_correctness(corpus: &[Case]) {
    for c in corpus {
        let n = c.g.n();
        let cg = build_perfect_coupling(&c.g).unwrap();
        assert!(cg.states() <= 4096);
        for e in coupling_marginal_check(&c.g, &cg) {
            assert!(e.pass && e.lhs <= 1e-9, "{}: {} error {}", c.name, e.check_id, e.lhs);
        }
        let mut fs: Vec<Vec<f64>> = (0..n).map(|v| (0..n).map(|u| f64::from(u == v)).collect()).collect();
        fs.push((0..n).map(|u| ((u * 37 + 11) % 17) as f64 / 8.0 - 1.0).collect());
        for f in &fs {
            for &t in &T_GRID {
                for e in tensorization_check(&c.g, &cg, f, t).unwrap() {
                    assert!(e.pass && e.lhs <= 1e-8, "{}: {} t={t} error {}", c.name, e.check_id, e.lhs);
                }
            }
        }
    }
}

fn coupling_estimate(corpus: &[Case]) {
    for c in corpus.iter().filter(|c| c.nonneg) {
        let g = &c.g;
        let cg = build_perfect_coupling(g).unwrap();
        for &t in &T_GRID {
            let w = non_coalescence(&cg, t).unwrap();
            let phi = phi_profile(g.q_min(), t, g.diameter(), PHI_TOLERANCE).unwrap();
            for (x, y) in ordered_pairs(g.n()) {
                let d = g.dist(x, y);
                let p = w[cg.state(x, y)];
                let sqrt_bound = d as f64 / (2.0 * (t * g.q_min()).sqrt());
                assert!(p <= phi.at(d) + 1e-8, "{} t={t} {x}-{y}: {p} > phi {}", c.name, phi.at(d));
                assert!(phi.at(d) <= sqrt_bound + 1e-8, "{} t={t} d={d}: phi {} > {sqrt_bound}", c.name, phi.at(d));
            }
        }
        let coupling_entries = ["coupling_vs_phi", "phi_vs_sqrt"];
        for id in coupling_entries {
            entries_hold(c, id, T_GRID.len(), 1e-8);
        }
    }
}

fn phi_properties() {
    for q in [0.5, 1.0, 2.0] {
        let entries = phi_properties_check(q, &[0.1, 1.0, 10.0, 100.0], 20, 1e-9).unwrap();
        assert_eq!(entries.len(), 12);
        for e in entries {
            assert!(e.pass && e.slack >= -1e-9, "q_min={q}: {} slack {} ({})", e.check_id, e.slack, e.detail);
        }
    }
}

fn reverse_poincare(corpus: &[Case]) {
    for c in corpus.iter().filter(|c| c.nonneg) {
        entries_hold(c, "reverse_poincare", T_GRID.len(), 1e-8);
    }
}

fn tv_estimate(corpus: &[Case]) {
    for c in corpus {
        entries_hold(c, "tv_estimate", T_GRID.len(), 1e-8);
    }
}

fn buser(corpus: &[Case]) {
    for c in corpus.iter().filter(|c| c.g.n() <= 20) {
        entries_hold(c, "buser_lemma", T_GRID.len(), 1e-8);
        entries_hold(c, "buser", 1, 1e-8);
        let e = c.report.entries.iter().find(|e| e.check_id == "buser").unwrap();
        let h: f64 = e.detail.split_whitespace().next().unwrap().trim_start_matches("h=").parse().unwrap();
        let want = 16.0 * 2f64.ln() * h * h / c.g.q_min();
        assert!((e.rhs - want).abs() <= 1e-12 * want.max(1.0), "{}: buser rhs {} vs {want}", c.name, e.rhs);
    }
    assert!((16.0 * 2f64.ln() - 11.090355).abs() < 1e-6);
}

fn harnack_and_diameter(corpus: &[Case]) {
    for c in corpus.iter().filter(|c| c.nonneg) {
        entries_hold(c, "harnack", 1, 1e-8);
        entries_hold(c, "eigenvalue_diameter", 1, 1e-8);
        let q = c.g.q_min();
        let find = |id: &str| c.report.entries.iter().find(|e| e.check_id == id).unwrap();
        let h = find("harnack");
        let lambda: f64 = h.detail.rsplit("lambda=").next().unwrap().parse().unwrap();
        assert!((h.rhs * q / lambda - 2.0 * std::f64::consts::E).abs() < 1e-9, "{}: harnack constant", c.name);
        let ed = find("eigenvalue_diameter");
        let diam = c.g.diameter() as f64;
        assert!((ed.lhs * diam * diam / q - std::f64::consts::LN_2).abs() < 1e-12, "{}: diameter constant", c.name);
    }
}

fn monte_carlo() {
    let samples = 100_000;
    for name in ["complete(2)", "cycle(6)"] {
        let g = generate(name).unwrap();
        let cg = build_perfect_coupling(&g).unwrap();
        let (x, y) = g.edges()[0];
        for (k, t) in [1.0, 4.0].into_iter().enumerate() {
            let exact = non_coalescence(&cg, t).unwrap()[cg.state(x, y)];
            let est = simulate_coupled_walks(&g, &cg, x, y, t, samples, 2024 + k as u64).unwrap();
            let band = 4.0 * (est.p_hat * (1.0 - est.p_hat) / samples as f64).sqrt();
            assert!((est.p_hat - exact).abs() <= band, "{name} t={t}: p_hat {} exact {exact} band {band}", est.p_hat);
        }
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_curvlab"))
}

fn determinism() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("g.json");
    let status = bin().args(["gen", "--family", "random(7,0.5,3)", "--out"]).arg(&input).status().unwrap();
    assert!(status.success());
    let run = |workers: &str| {
        let out = bin()
            .env("CURVLAB_WORKERS", workers)
            .args(["verify", "--force", "--samples", "2000", "--seed", "9", "--input"])
            .arg(&input)
            .output()
            .unwrap();
        assert!(out.status.code().is_some());
        out.stdout
    };
    let first = run("1");
    assert!(!first.is_empty());
    for workers in ["1", "3", "8"] {
        assert!(run(workers) == first, "report differs with {workers} workers");
    }
}

fn negative_control() {
    let name = "dumbbell(4,0.5)";
    let g = generate(name).unwrap();
    let (l0, r0) = (g.vertex("L0").unwrap(), g.vertex("R0").unwrap());
    let k = kappa(&g, l0, r0).unwrap();
    assert!(k < -1e-8 && (k - kappa_dual(&g, l0, r0).unwrap()).abs() <= 1e-7, "bridge curvature {k}");

    let plain = bin().args(["verify", "--family", name]).output().unwrap();
    assert_eq!(plain.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&plain.stderr);
    assert!(stderr.contains("not certified"), "{stderr}");
    assert!(plain.stdout.is_empty());

    let forced = bin().args(["verify", "--family", name, "--force"]).output().unwrap();
    let report = VerificationReport::from_json(&String::from_utf8(forced.stdout).unwrap()).unwrap();
    let informational = report.entries.iter().filter(|e| e.status == Status::Informational).count();
    assert!(informational >= 1);
    assert!(report
        .entries
        .iter()
        .any(|e| e.check_id == "curvature_nonnegative" && e.status == Status::Fail));
}

fn main() {
    let start = Instant::now();
    let corpus = corpus();
    let nonneg = corpus.iter().filter(|c| c.nonneg).count();
    println!("corpus: {} graphs, {nonneg} with non-negative curvature ({:.1?})", corpus.len(), start.elapsed());

    let criteria: Vec<Criterion> = vec![
        ("duality of kappa and kappa_dual", Box::new(|| duality(&corpus))),
        ("perfect transport plans", Box::new(|| transport_mass(&corpus))),
        ("coupling marginals and tensorization", Box::new(|| coupling_correctness(&corpus))),
        ("semigroup coupling estimate", Box::new(|| coupling_estimate(&corpus))),
        ("phi properties", Box::new(phi_properties)),
        ("reverse Poincare", Box::new(|| reverse_poincare(&corpus))),
        ("total variation estimate", Box::new(|| tv_estimate(&corpus))),
        ("Buser lemma and inequality", Box::new(|| buser(&corpus))),
        ("Harnack and eigenvalue-diameter", Box::new(|| harnack_and_diameter(&corpus))),
        ("Monte Carlo consistency", Box::new(monte_carlo)),
        ("deterministic reports", Box::new(determinism)),
        ("negative control", Box::new(negative_control)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(check)).is_ok();
        failed += usize::from(!ok);
        println!("criterion {:>2} {:<40} {} ({:.1?})", i + 1, name, if ok { "PASS" } else { "FAIL" }, t0.elapsed());
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
