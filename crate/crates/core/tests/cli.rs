use std::path::Path;
use std::process::{Command, Output};

use lopsim::cli::output::{from_json, parse_csv};

const SMALL: [&str; 8] = [
    "--set", "ensemble=4", "--set", "horizon=0.02", "--set", "samples=20", "--seed", "9",
];

fn lopsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lopsim"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn unknown_key_is_a_config_error() {
    let out = lopsim(&["simulate", "--set", "no_such_key=1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
}

#[test]
fn malformed_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.cfg");
    std::fs::write(&p, "n = three\n").unwrap();
    assert_eq!(code(&lopsim(&["simulate", "--config", p.to_str().unwrap()])), 2);
}

#[test]
fn oversized_step_is_a_stability_error() {
    let out = lopsim(&["simulate", "--set", "dt=0.01"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn unsatisfied_bound_exits_with_verification_code() {
    // The qutrit cost curve is first order in Δ; a noise-free ensemble
    // resolves its error, so those reports fail.
    let mut args = vec!["bounds", "--format", "csv"];
    args.extend(SMALL);
    let out = lopsim(&args);
    assert_eq!(code(&out), 4);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("qutrit_cost") && l.contains(",false,")));
    assert!(text.lines().any(|l| l.starts_with("decay_bound") && l.contains(",true,")));
}

#[test]
fn verify_theorem1_passes() {
    let out = lopsim(&["verify-theorem1", "--n", "4", "--trials", "200"]);
    assert_eq!(code(&out), 0);
    let reports: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 3);
}

#[test]
fn verify_hjb_small_grid() {
    let out = lopsim(&[
        "verify-hjb", "--zeta-points", "3", "--eta-points", "3", "--restarts", "8", "--format", "csv",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 10);
}

#[test]
fn rates_reports_closed_forms() {
    let out = lopsim(&["rates", "--set", "n=4", "--set", "v_policy=unbiased_pair", "--set", "spectrum=2,1,-1,-2"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let (g, r) = (v["n4_averaged"][0].as_f64().unwrap(), v["n4_averaged"][1].as_f64().unwrap());
    assert!((g - 40.0 / 3.0).abs() < 1e-12 && (r - 2.5).abs() < 1e-12);
    assert_eq!(v["n4_printed"][0].as_f64().unwrap(), 8.0);
}

fn simulate_to(dir: &Path, format: &str) -> String {
    let p = dir.join(format!("run.{format}"));
    let mut args = vec!["simulate", "--format", format, "--output", p.to_str().unwrap()];
    args.extend(SMALL);
    assert_eq!(code(&lopsim(&args)), 0);
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn csv_and_json_carry_identical_values() {
    let dir = tempfile::tempdir().unwrap();
    let rows = parse_csv(&simulate_to(dir.path(), "csv")).unwrap();
    let summary = from_json(&simulate_to(dir.path(), "json")).unwrap();
    assert_eq!(rows.len(), summary.times.len());
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.t, summary.times[i]);
        assert_eq!(row.mean_delta, summary.mean_delta[i]);
        assert_eq!(row.stderr_delta, summary.stderr_delta[i]);
        assert_eq!(row.lambdas, summary.mean_lambdas[i]);
        assert_eq!(row.phase, summary.phases[i]);
    }
    assert_eq!(summary.manifest.seed, 9);
}

#[test]
fn seed_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate_to(dir.path(), "csv");
    let p = dir.path().join("other.csv");
    let mut args = vec!["simulate", "--output", p.to_str().unwrap(), "--set", "ensemble=4"];
    args.extend(["--set", "horizon=0.02", "--set", "samples=20", "--seed", "10", "--set", "noise=isotropic", "--set", "beta=0.1"]);
    assert_eq!(code(&lopsim(&args)), 0);
    assert_ne!(a, std::fs::read_to_string(p).unwrap());
}
