//! Runs the installed binary and checks its JSON contract.

use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finslervol")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn berwald_moor_ht_volume() {
    let out = run(&["volume", "--metric", "berwald-moor", "--form", "ht", "--point", "0,0,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["command"], "volume");
    assert!((v["result"]["sigma"].as_f64().unwrap() - 0.0625).abs() < 1e-10);
    assert_eq!(v["diagnostics"]["singular_nodes"], 0);
    assert!(v["version"].is_string());
}

#[test]
fn minkowski_validates() {
    let out = run(&["validate", "--metric", "minkowski4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["result"]["passed"], true);
    assert!(v["result"]["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn bogoslovsky_orientation() {
    let out = run(&["orient", "--metric", "bogoslovsky-toy", "--point", "0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &stdout_json(&out)["result"];
    let d: Vec<f64> = r["direction"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((d[0] - 1.0).abs() < 1e-10 && d[1].abs() < 1e-6);
    assert!((r["critical_value"].as_f64().unwrap() - 0.5).abs() < 1e-10);
}

#[test]
fn spec_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.toml");
    std::fs::write(
        &path,
        "[metric]\nname = \"scaled-minkowski\"\ndim = 2\n\n[lagrangian]\nexpr = \"4*y0^2 - y1^2\"\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let out = run(&["volume", "--metric", p, "--form", "bh", "--point", "0.5,0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!((stdout_json(&out)["result"]["sigma"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let out = run(&["integrate", "--metric", p, "--form", "ht", "--domain", "0,2;0,1", "--res", "2,1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((stdout_json(&out)["result"]["value"].as_f64().unwrap() - 4.0).abs() < 1e-10);
}

#[test]
fn action_with_fields() {
    let out = run(&[
        "action", "--metric", "bogoslovsky-toy", "--density", "w", "--field", "w=1", "--domain", "0,1;0,1", "--res",
        "1", "--weighting", "fallback",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out)["result"]["value"].as_f64().unwrap();
    assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
}

#[test]
fn errors_are_structured() {
    let out = run(&["volume", "--metric", "no-such-metric", "--point", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["code"], "UnknownMetric");

    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["code"], "UsageError");

    // computational failure: HT is not available for the Bogoslovsky toy
    let out = run(&["volume", "--metric", "bogoslovsky-toy", "--form", "ht", "--point", "0,0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["code"], "DetNotProlongable");
}

#[test]
fn output_is_deterministic_for_a_seed() {
    let args = ["--rng-seed", "7", "orient", "--metric", "riemannian-diag", "--point", "0.1,0.2,0.3,0.4"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn catalog_lists_builtins() {
    let out = run(&["catalog"]);
    assert_eq!(out.status.code(), Some(0));
    let names: Vec<String> = stdout_json(&out)["result"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap().to_string())
        .collect();
    for n in ["minkowski4", "berwald-moor", "bogoslovsky-toy", "linearized-quartic", "pd-quartic"] {
        assert!(names.iter().any(|m| m == n), "{n} missing from {names:?}");
    }
}
