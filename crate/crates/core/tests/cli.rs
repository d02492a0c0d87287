use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cardinal-mra"))
        .args(args)
        .output()
        .expect("binary should start")
}

fn json(args: &[&str]) -> Value {
    let out = cli(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout should be JSON")
}

fn assert_usage_error(args: &[&str]) {
    let out = cli(args);
    assert_eq!(out.status.code(), Some(2), "{args:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.trim_end().lines().count(), 1, "{stderr}");
}

#[test]
fn symbol_of_a_multiquadric() {
    let v = json(&["symbol", "--family", "gmq", "--alpha", "0.5", "--c", "1", "--dim", "1", "--xi", "1.0"]);
    assert!((v["value"].as_f64().unwrap() - 0.601_907_2).abs() < 1e-7);
    let at_origin = json(&["symbol", "--family", "polyharmonic", "--k", "1", "--xi", "0"]);
    assert!(at_origin["value"].is_null());
}

#[test]
fn symbol_grid_as_csv() {
    let out = cli(&["symbol", "--family", "gaussian", "--alpha", "1", "--dim", "2", "--grid", "4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("xi_1,xi_2,value"));
    assert_eq!(lines.count(), 16);
}

#[test]
fn periodize_matches_the_cotangent_sum() {
    let v = json(&["periodize", "--family", "polyharmonic", "--k", "1", "--xi", "1.0"]);
    let want = 1.0 / (4.0 * 0.5f64.sin().powi(2));
    assert!((v["value"].as_f64().unwrap() / want - 1.0).abs() < 1e-10);
    assert_eq!(v["singular"], Value::Bool(false));
}

#[test]
fn derived_symbols_at_the_cell_edge() {
    let pi = PI.to_string();
    let base = ["--family", "polyharmonic", "--k", "1", "--xi", pi.as_str()];
    let run = |cmd: &str| {
        let mut args = vec![cmd];
        args.extend(base);
        json(&args)["value"].as_f64().unwrap()
    };
    assert!((run("fundamental") - 4.0 / (PI * PI)).abs() < 1e-12);
    assert!((run("scaling") - 4.0 * 3f64.sqrt() / (PI * PI)).abs() < 1e-9);
    assert!((run("riesz") - 3f64.sqrt()).abs() < 1e-9);
}

#[test]
fn synthesize_writes_a_csv_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hat.csv");
    let out = cli(&[
        "synthesize", "--family", "polyharmonic", "--k", "1", "--format", "csv",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("x_1,value"));
    assert_eq!(text.lines().count(), 1 + 2 * 16 * 16 + 1);
    let half = text.lines().find(|l| l.starts_with("0.5,")).unwrap();
    let v: f64 = half[4..].parse().unwrap();
    assert!((v - 0.5).abs() < 1e-3);
}

#[test]
fn synthesize_json_schema() {
    let v = json(&["synthesize", "--family", "polyharmonic", "--k", "2", "--which", "scaling", "--halfwidth", "4"]);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["generator"], "scaling");
    assert_eq!(v["values"].as_array().unwrap().len(), 2 * 4 * 16 + 1);
}

#[test]
fn interpolate_reads_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("a.json");
    std::fs::write(
        &data,
        r#"{"dimension":1,"entries":[{"index":[0],"value":1.0},{"index":[1],"value":1.0}]}"#,
    )
    .unwrap();
    let v = json(&[
        "interpolate", "--family", "polyharmonic", "--k", "1",
        "--data", data.to_str().unwrap(), "--points", "0.5;0;1",
    ]);
    let values: Vec<f64> = v["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((values[0] - 1.0).abs() < 2e-3);
    assert!((values[1] - 1.0).abs() < 1e-6 && (values[2] - 1.0).abs() < 1e-6);
    assert_usage_error(&["interpolate", "--family", "polyharmonic", "--k", "1", "--points", "0.01"]);
}

#[test]
fn gram_is_the_identity() {
    let v = json(&["gram", "--family", "gmq", "--alpha", "0.5", "--c", "1", "--shifts", "-1;0;1", "--grid", "64"]);
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 9);
    for (i, e) in entries.iter().enumerate() {
        let want = if i % 4 == 0 { 1.0 } else { 0.0 };
        assert!((e.as_f64().unwrap() - want).abs() < 1e-6);
    }
}

#[test]
fn refinement_probe_output() {
    let v = json(&["probe-refinement", "--family", "polyharmonic", "--k", "2", "--grid", "512"]);
    assert!(v["deviation"].as_f64().unwrap() <= 1e-8);
    assert_usage_error(&["probe-refinement", "--family", "polyharmonic", "--k", "2", "--grid", "600"]);
}

#[test]
fn verify_gates_on_the_verdict() {
    assert_eq!(cli(&["verify", "--family", "polyharmonic", "--k", "1"]).status.code(), Some(0));
    assert_eq!(cli(&["verify", "--family", "gaussian", "--alpha", "1"]).status.code(), Some(1));
}

#[test]
fn report_never_fails_on_a_verdict() {
    let v = json(&["report", "--family", "gaussian", "--alpha", "1", "--dim", "1"]);
    assert_eq!(v["verdict_density"], "fails");
    let log = v["density_deficiency_log"].as_f64().unwrap();
    assert!((log + 8.0 * PI * PI).abs() < 0.01 * 8.0 * PI * PI);
    assert!(v.get("runtimes").is_none());

    let v = json(&["report", "--family", "polyharmonic", "--k", "1", "--dim", "1"]);
    assert_eq!(v["verdict_density"], "passes");
    assert_eq!(v["density_deficiency_log"], "-inf");
    assert!(v["gram_deviation"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn report_path_table_as_csv() {
    let out = cli(&[
        "report", "--family", "polyharmonic", "--k", "1", "--path-axis", "polyharmonic-order",
        "--path-values", "1,2,3", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("j_1,xi_1,parameter,ratio"));
    assert!(text.lines().any(|l| l.starts_with("1,1.5707963267948966,2,")));
}

#[test]
fn inconsistent_flags_are_usage_errors() {
    assert_usage_error(&["symbol", "--family", "gmq", "--alpha", "0.5", "--c", "1", "--k", "2", "--xi", "1"]);
    assert_usage_error(&["symbol", "--family", "polyharmonic", "--alpha", "0.5", "--xi", "1"]);
    assert_usage_error(&["symbol", "--family", "gaussian", "--alpha", "1", "--c", "1", "--xi", "1"]);
    assert_usage_error(&["symbol", "--family", "gaussian", "--xi", "1"]);
    assert_usage_error(&["symbol", "--xi", "1"]);
    assert_usage_error(&["symbol", "--family", "polyharmonic", "--k", "1", "--dim", "4", "--xi", "1,1,1,1"]);
    assert_usage_error(&["periodize", "--family", "polyharmonic", "--k", "1", "--xi", "abc"]);
    assert_usage_error(&["frobnicate"]);
    assert_usage_error(&[]);
}

#[test]
fn unreachable_tolerance_is_a_numerical_failure() {
    let out = cli(&["periodize", "--family", "polyharmonic", "--k", "2", "--dim", "3", "--xi", "1,1,1", "--tol", "1e-9"]);
    assert_eq!(out.status.code(), Some(3));
    let out = cli(&["synthesize", "--family", "gmq", "--alpha", "0.5", "--c", "1", "--bandlimit", "1000"]);
    assert_eq!(out.status.code(), Some(2), "a bandlimit off the grid is bad input");
    let huge = (131072.0 * PI).to_string();
    let out = cli(&["synthesize", "--family", "gmq", "--alpha", "0.5", "--c", "1", "--bandlimit", &huge]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn help_succeeds() {
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
    assert_eq!(cli(&["report", "--help"]).status.code(), Some(0));
}
