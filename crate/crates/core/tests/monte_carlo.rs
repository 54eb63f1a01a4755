use curvlab::coupling::{build_perfect_coupling, non_coalescence, simulate_coupled_walks, wilson_interval};
use curvlab::generate;

#[test]
fn k2_matches_exact_survival() {
    let g = generate("complete(2)").unwrap();
    let cg = build_perfect_coupling(&g).unwrap();
    let est = simulate_coupled_walks(&g, &cg, 0, 1, 1.0, 20_000, 3).unwrap();
    let exact = (-2.0f64).exp();
    assert!((est.p_hat - exact).abs() <= 4.0 * est.std_err, "{est:?}");
    assert!(est.ci.0 <= exact && exact <= est.ci.1);
    assert!(est.pass);
}

#[test]
fn c6_matches_coupling_semigroup() {
    let g = generate("cycle(6)").unwrap();
    let cg = build_perfect_coupling(&g).unwrap();
    let exact = non_coalescence(&cg, 2.0).unwrap()[cg.state(0, 1)];
    let est = simulate_coupled_walks(&g, &cg, 0, 1, 2.0, 20_000, 11).unwrap();
    assert!((est.p_hat - exact).abs() <= 4.0 * est.std_err, "{est:?} vs {exact}");
}

#[test]
fn seeded_runs_repeat() {
    let g = generate("cycle(5)").unwrap();
    let cg = build_perfect_coupling(&g).unwrap();
    let a = simulate_coupled_walks(&g, &cg, 0, 2, 1.0, 3_000, 42).unwrap();
    let b = simulate_coupled_walks(&g, &cg, 0, 2, 1.0, 3_000, 42).unwrap();
    assert_eq!(a, b);
}

#[test]
fn wilson_interval_edges() {
    let (lo, hi) = wilson_interval(0, 100, 2.5758293035489004);
    assert_eq!(lo, 0.0);
    assert!(hi > 0.0 && hi < 0.1);
    let (lo, hi) = wilson_interval(50, 100, 2.5758293035489004);
    assert!((lo + hi - 1.0).abs() < 1e-12);
}
