use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hankel-tw")).args(args).output().expect("spawn")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn bessel_report_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&["bessel", "--theta", "1", "--size", "32", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = read_json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["pass"], true);
    assert!(v["result"]["tolerances"]["factorization_offdiag"].is_number());
    assert!(v["result"]["resolved_signs"].is_object());
    assert!(v.get("timestamp_unix").is_some());
}

#[test]
fn invalid_input_exits_two() {
    let o = run(&["mathieu", "--beta", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beta must be nonzero"));
    assert_eq!(run(&["bessel", "--theta", "x"]).status.code(), Some(2));
    assert_eq!(run(&["bessel", "--size", "1"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--model", "nope"]).status.code(), Some(2));
}

#[test]
fn check_failure_exits_one_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.json");
    let o = run(&["factorize", "--system", "identity", "--size", "8", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v = read_json(&out);
    assert_eq!(v["pass"], false);
    assert!(v["result"]["rejection"].as_str().unwrap().contains("rank one"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# bessel run\ntheta = 4\nsize = 12\ndeterministic = true\n").unwrap();
    let out = dir.path().join("r.json");
    let o = run(&["bessel", "--config", cfg.to_str().unwrap(), "--size", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = read_json(&out);
    assert_eq!(v["config"]["theta"], 4.0);
    assert_eq!(v["config"]["size"], 10);
    assert!(v.get("timestamp_unix").is_none());

    std::fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(run(&["bessel", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn csv_outputs() {
    let o = run(&["dpp-sample", "--theta", "4", "--trials", "20", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("trial,points\n"));
    assert_eq!(text.lines().count(), 21);
    let again = run(&["dpp-sample", "--theta", "4", "--trials", "20", "--seed", "3"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);

    let o = run(&["bessel", "--size", "8", "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("dim,8,provenance,bessel,N=8"));

    let o = run(&["dpp-verify", "--size", "16", "--trials", "2000", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spectrum_round_trips_a_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("k.csv");
    let o = run(&["mathieu", "--size", "12", "--format", "csv", "--out", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = dir.path().join("s.json");
    let o = run(&["spectrum", "--input", m.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = read_json(&out);
    assert_eq!(v["result"]["dim"], 12);
    assert_eq!(v["result"]["eigenvalues"].as_array().unwrap().len(), 12);
}

#[test]
fn quick_suite_passes() {
    let o = run(&["verify-all", "--quick", "--deterministic"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"]["criteria"].as_array().unwrap().len(), 9);
    assert!(!String::from_utf8_lossy(&o.stdout).contains("runtime_s"));
}
