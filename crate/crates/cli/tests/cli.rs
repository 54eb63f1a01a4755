use std::path::Path;
use std::process::{Command, Output};

use curvlab::{VerificationReport, Status};
use serde_json::Value;

fn curvlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvlab")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn gen_then_curvature_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let c6 = dir.path().join("c6.json");
    let out = curvlab(&["gen", "--family", "cycle", "--params", "n=6", "--out", path(&c6)]);
    assert_eq!(out.status.code(), Some(0));
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&c6).unwrap()).unwrap();
    assert_eq!(file["vertices"].as_array().unwrap().len(), 6);
    assert_eq!(file["edges"].as_array().unwrap().len(), 6);

    let out = curvlab(&["curvature", "--input", path(&c6), "--pairs", "all", "--format", "table"]);
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("min kappa = 0.000000000000"), "{table}");

    let out = curvlab(&["curvature", "--input", path(&c6), "--pairs", "all"]);
    let v = json(&out);
    assert_eq!(v["min_kappa"].as_f64(), Some(0.0));
    assert_eq!(v["pairs"].as_array().unwrap().len(), 15);

    let out = curvlab(&["verify", "--input", path(&c6), "--t", "0.5,2,8", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let report = VerificationReport::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert!(report.all_pass());
    assert!(report.entries.iter().all(|e| e.status == Status::Pass));
}

#[test]
fn single_pair_and_edges() {
    let out = curvlab(&["curvature", "--family", "hypercube(3)", "--x", "000", "--y", "001"]);
    let v = json(&out);
    assert!((v["kappa"].as_f64().unwrap() - v["kappa_dual"].as_f64().unwrap()).abs() < 1e-9);
    let out = curvlab(&["curvature", "--family", "cycle(5)", "--pairs", "edges"]);
    assert_eq!(json(&out)["pairs"].as_array().unwrap().len(), 5);
}

#[test]
fn tsv_and_json_reports_agree() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("c5.tsv");
    std::fs::write(&tsv, "0\t1\t1\n1\t2\t1\n2\t3\t1\n3\t4\t1\n4\t0\t1\n").unwrap();
    let js = dir.path().join("c5.json");
    assert!(curvlab(&["gen", "--family", "cycle(5)", "--out", path(&js)]).status.success());
    let a = curvlab(&["verify", "--input", path(&tsv), "--seed", "3"]);
    let b = curvlab(&["verify", "--input", path(&js), "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn heat_phi_spectrum_cheeger_wasserstein() {
    let v = json(&curvlab(&["heat", "--family", "complete(2)", "--t", "1", "--f", "0=1"]));
    let u = v["results"][0]["values"]["0"].as_f64().unwrap();
    assert!((u - ((-2.0f64).exp() + 1.0) / 2.0).abs() < 1e-10);

    let v = json(&curvlab(&["heat", "--family", "path(3)", "--t", "1", "--f", "1=1", "--dirichlet", "1"]));
    assert!((v["results"][0]["values"]["1"].as_f64().unwrap() - (-2.0f64).exp()).abs() < 1e-10);

    let v = json(&curvlab(&["heat", "--phi", "--q-min", "1", "--t", "1", "--r-max", "3"]));
    let phi = v["phi"].as_array().unwrap();
    assert_eq!(phi.len(), 4);
    assert!(phi[1].as_f64().unwrap() <= 0.5);

    let v = json(&curvlab(&["spectrum", "--family", "cycle(4)"]));
    let ev: Vec<f64> = v["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(ev.iter().zip([0.0, 2.0, 2.0, 4.0]).all(|(a, b)| (a - b).abs() < 1e-12));

    let v = json(&curvlab(&["cheeger", "--family", "cycle(6)"]));
    assert!((v["h"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);

    let v = json(&curvlab(&["wasserstein", "--family", "cycle(4)", "--mu", "0=1", "--nu", "2=1"]));
    assert!((v["w1"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn coupling_subcommand() {
    let out = curvlab(&["coupling", "--family", "complete(2)", "--t", "1", "--samples", "5000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["states"].as_u64(), Some(4));
    assert_eq!(v["monte_carlo"][0]["pass"], Value::Bool(true));
}

#[test]
fn per_component_runs_each_part() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("two.tsv");
    std::fs::write(&tsv, "a\tb\t1\nc\td\t1\nd\te\t1\ne\tc\t1\n").unwrap();
    let out = curvlab(&["curvature", "--input", path(&tsv)]);
    assert_eq!(out.status.code(), Some(2));
    let out = curvlab(&["curvature", "--input", path(&tsv), "--per-component"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out).as_array().unwrap().len(), 2);
}

#[test]
fn usage_and_input_errors_exit_two() {
    assert_eq!(curvlab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(curvlab(&["spectrum"]).status.code(), Some(2));
    assert_eq!(curvlab(&["spectrum", "--family", "cycle(2)"]).status.code(), Some(2));
    assert_eq!(curvlab(&["spectrum", "--family", "cycle", "--params", "m=4"]).status.code(), Some(2));
    assert_eq!(curvlab(&["heat", "--family", "cycle(4)", "--f", "9=1"]).status.code(), Some(2));
    assert_eq!(curvlab(&["heat", "--family", "cycle(4)", "--f", "0=1", "--t", "-1"]).status.code(), Some(2));
    assert_eq!(curvlab(&["verify", "--family", "cycle(4)", "--t", "1,0.5"]).status.code(), Some(2));
    assert_eq!(curvlab(&["coupling", "--family", "cycle(4)", "--t", "2,2"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tsv");
    std::fs::write(&bad, "0\t1\t1\n1\t2\tfast\n").unwrap();
    let out = curvlab(&["spectrum", "--input", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");

    let out = Command::new(env!("CARGO_BIN_EXE_curvlab"))
        .env("CURVLAB_WORKERS", "many")
        .args(["spectrum", "--family", "cycle(4)"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn forced_negative_curvature_still_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let out = curvlab(&["verify", "--family", "dumbbell(4,0.5)", "--force", "--out", path(&out_path)]);
    assert_eq!(out.status.code(), Some(1));
    let report = VerificationReport::from_json(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(report.entries.iter().any(|e| e.status == Status::PreconditionNotMet));
    let table = curvlab(&["verify", "--family", "dumbbell(4,0.5)", "--force", "--format", "table"]);
    assert!(String::from_utf8_lossy(&table.stdout).contains("informational"));
}
