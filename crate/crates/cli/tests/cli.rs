use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn driftgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftgap")).args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn sl_gap_prints_closed_form_at_zero_sigma() {
    let output = driftgap(&["sl", "gap", "--sigma", "0", "--diameter", "1"]);
    assert!(output.status.success());
    let text = stdout(&output);
    let gap: f64 = text.lines().find_map(|l| l.strip_prefix("gap = ")).unwrap().parse().unwrap();
    let exact = 3.0 * std::f64::consts::PI.powi(2);
    assert!((gap - exact).abs() <= 1e-9 * exact, "{gap} vs {exact}");
}

#[test]
fn sl_solve_writes_eigenfunction_tables() {
    let dir = tempfile::tempdir().unwrap();
    let output = driftgap(&["sl", "solve", "--sigma", "10", "--modes", "3", "--out", dir.path().to_str().unwrap()]);
    assert!(output.status.success());
    assert_eq!(stdout(&output).lines().count(), 4);
    assert!(dir.path().join("eigenvalues.csv").exists());
    let mut reader = csv::Reader::from_path(dir.path().join("eigenpairs.csv")).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["s", "w0", "w0p", "w1", "w1p", "w2", "w2p"]);
    assert_eq!(reader.records().count(), 2048);
}

#[test]
fn experiment_writes_summary_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let output = driftgap(&["experiment", "sl-spectrum", "--out", dir.path().to_str().unwrap()]);
    assert!(output.status.success(), "{}", stdout(&output));
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.lines().filter(|l| l.starts_with("PASS")).count() >= 4);
    assert!(!summary.contains("FAIL"));
    let svg = fs::read_to_string(dir.path().join("sl_eigenfunctions_0.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    let mut reader = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["criterion", "description", "value", "tolerance", "h", "pass"]);
    assert!(reader.records().all(|r| &r.unwrap()[5] == "true"));
}

#[test]
fn failing_check_gives_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let output = driftgap(&["experiment", "sigma-ladder", "--out", dir.path().to_str().unwrap()]);
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(output.status.success(), !summary.contains("FAIL"));
    assert!(summary.contains("criterion 13"));
}

#[test]
fn modulus_writes_profile_columns() {
    let dir = tempfile::tempdir().unwrap();
    let output = driftgap(&["modulus", "--lambda", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(output.status.success());
    let mut reader = csv::Reader::from_path(dir.path().join("modulus.csv")).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["s", "v", "omega", "psi", "ratio"]);
    let eta: f64 = stdout(&output).lines().find_map(|l| l.strip_prefix("eta = ")).unwrap().parse().unwrap();
    let first = reader.records().next().unwrap().unwrap();
    let value = |i: usize| first[i].parse::<f64>().unwrap();
    assert_eq!(value(0), 0.0);
    assert!((value(2) + eta * value(1)).abs() <= 1e-9 * value(2).abs(), "omega = -eta v");
    assert!((value(2) + value(3)).abs() < 1e-12);
    assert!(value(4) > 0.0);
}

#[test]
fn unknown_experiment_is_an_error() {
    let output = driftgap(&["experiment", "no-such-thing"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("unknown experiment"));
}

#[test]
fn certify_json_has_trace_and_soundness() {
    let output = driftgap(&["certify", "--operator", "interval", "--format", "json"]);
    assert!(output.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(value["certificate"]["branch"], "convex");
    assert_eq!(value["certificate"]["rigorous"], true);
    assert_eq!(value["soundness"]["pass"], true);
    let trace = value["certificate"]["trace"].as_array().unwrap();
    assert!(trace.iter().any(|s| s["quantity"] == "alpha"));
}

#[test]
fn certify_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("cutoff-disk.toml");
    let output = driftgap(&["certify", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(output.status.success(), "{}", stdout(&output));
    let text = stdout(&output);
    assert!(text.contains("general branch"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("certificate_cutoff-disk.json")).unwrap()).unwrap();
    assert!(json["alpha"].as_f64().unwrap() > json["quarter_bound"].as_f64().unwrap());
}

#[test]
fn spectrum_exports_matrix_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let output = driftgap(&["spectrum", "--operator", "interval", "--grid", "0.015625", "--modes", "3", "--matrix", "--out", dir.path().to_str().unwrap()]);
    assert!(output.status.success());
    let spectrum = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 4);
    let matrix = fs::read_to_string(dir.path().join("matrix.coo")).unwrap();
    let nodes = 63;
    assert_eq!(matrix.lines().count(), 3 * nodes - 2);
}

#[test]
fn config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "gridz = [0.1, 0.05]\n").unwrap();
    let output = driftgap(&["experiment", "certify", "--config", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
}
