use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suffreg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn num(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

const TWO_GROUPS: &str = "treat,y\n0,1\n0,3\n1,3\n1,5\n0,2\n1,4\n";

#[test]
fn two_group_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "two.csv", TWO_GROUPS);
    let doc = json(&run(&["fit", "--input", &input, "--features", "treat", "--outcomes", "y"]));
    let coef = &doc["coefficients"]["y"];
    assert!((num(&coef["intercept"]) - 2.0).abs() < 1e-12);
    assert!((num(&coef["treat"]) - 2.0).abs() < 1e-12);
    assert_eq!(doc["n"], 6);
    assert_eq!(doc["G"], 2);
    assert_eq!(doc["covariance_spec"], "ols");
    assert!(doc["timing_ms"].is_number());
    let keys: Vec<&str> = doc.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(&keys[..3], ["coefficients", "std_errors", "covariance"]);
}

#[test]
fn cluster_without_column_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "two.csv", TWO_GROUPS);
    let out = run(&["fit", "--input", &input, "--features", "treat", "--outcomes", "y", "--cov", "cluster"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn collinear_design_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "c.csv", "a,b,y\n1,2,1\n2,4,2\n3,6,2\n");
    let out = run(&["fit", "--input", &input, "--features", "a,b", "--outcomes", "y"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rank deficient"));
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "bad.csv", "x,y\n1,2\nfoo,3\n");
    let out = run(&["fit", "--input", &input, "--features", "x", "--outcomes", "y"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = run(&["fit", "--input", &input, "--features", "nope", "--outcomes", "y"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["fit", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compress_then_fit_precompressed_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "d.csv",
        "user,x,y,z\na,0,1.5,0\na,1,2.25,1\nb,0,0.5,1\nb,1,3,0\nc,1,2.75,1\nc,0,1,0\na,1,4,1\n",
    );
    let packed = dir.path().join("packed.csv");
    let packed = packed.to_str().unwrap();
    let c = run(&[
        "compress", "--input", &input, "--features", "x", "--outcomes", "y,z", "--cluster-col", "user", "--by-cluster",
        "--output", packed,
    ]);
    assert!(c.status.success());
    let raw = run(&[
        "fit", "--input", &input, "--features", "x", "--outcomes", "y,z", "--cluster-col", "user", "--cov", "cluster",
        "--no-timing",
    ]);
    let pre = run(&["fit", "--input", packed, "--precompressed", "--cov", "cluster", "--no-timing"]);
    assert!(raw.status.success() && pre.status.success());
    assert_eq!(raw.stdout, pre.stdout);

    let summary = json(&run(&["summarize", "--input", packed]));
    assert_eq!(summary["n"], 7);
    assert_eq!(summary["C"], 3);
}

#[test]
fn between_and_panel_strategies_agree_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("panel.csv");
    let input = input.to_str().unwrap();
    let g = run(&["gen-panel", "--nu", "30", "--t", "4", "--p-static", "1", "--seed", "5", "--output", input]);
    assert!(g.status.success());
    let fit_with = |strategy: &str| {
        let mut args = vec![
            "fit", "--input", input, "--features", "s1,time", "--outcomes", "y", "--cov", "cluster",
            "--cluster-col", "user", "--order-col", "time", "--cluster-strategy", strategy,
        ];
        if matches!(strategy, "static-dynamic" | "balanced") {
            args.extend(["--static-cols", "s1"]);
        }
        json(&run(&args))
    };
    let docs: Vec<Value> = ["within", "between", "static-dynamic", "balanced"].into_iter().map(fit_with).collect();
    let cov = |d: &Value| -> Vec<f64> {
        d["covariance"]["y"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap().iter().map(num)).collect()
    };
    let se = |d: &Value, k: &str| num(&d["std_errors"]["y"][k]);
    let base = cov(&docs[0]);
    let scale = base.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for d in &docs[1..] {
        // columns come out in the same order: intercept, s1, time
        let other = cov(d);
        let diff = base.iter().zip(&other).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff <= 1e-9 * scale, "{diff} vs {scale}");
        assert!((se(d, "time") - se(&docs[0], "time")).abs() <= 1e-9 * se(&docs[0], "time"));
    }
}

#[test]
fn logistic_family() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "l.csv", "y\n1\n1\n1\n0\n0\n0\n0\n0\n0\n0\n");
    let doc = json(&run(&["fit", "--input", &input, "--outcomes", "y", "--family", "logistic"]));
    assert!((num(&doc["coefficients"]["y"]["intercept"]) - (3.0f64 / 7.0).ln()).abs() < 1e-12);
    assert_eq!(doc["converged"], true);
    assert_eq!(doc["covariance_spec"], "information");
}

#[test]
fn bench_single_rep_has_no_spread() {
    let doc = json(&run(&["bench", "--nu", "200", "--t", "5", "--reps", "1", "--cov", "hc"]));
    let fit = doc["timing_ms"]["fit"].as_object().unwrap();
    assert!(fit.contains_key("median"));
    assert!(!fit.contains_key("min") && !fit.contains_key("max"));
    assert!(doc["speedup_fit"].is_number());
}

#[test]
fn gen_panel_is_deterministic() {
    let a = run(&["gen-panel", "--nu", "3", "--t", "2", "--seed", "9"]);
    let b = run(&["gen-panel", "--nu", "3", "--t", "2", "--seed", "9"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("user,s1,s2,time,y"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn binning_flag_reduces_groups() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("x,y\n");
    for i in 0..200 {
        let x = f64::from(i) * 0.37;
        text.push_str(&format!("{x},{}\n", x.sin() + 0.01 * x));
    }
    let input = write(dir.path(), "b.csv", &text);
    let doc = json(&run(&["fit", "--input", &input, "--features", "x", "--outcomes", "y", "--bin", "x:5", "--cov", "hc"]));
    assert_eq!(doc["G"], 5);
    assert!(doc["coefficients"]["y"].get("x_bin4").is_some());
}
