use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hecke-sphere"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join(format!("{name}.json"))).unwrap()).unwrap()
}

#[test]
fn shells_lists_the_units() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["shells", "--k", "1", "--parity", "integral"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("shells.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# config: "));
    assert_eq!(lines[1], "d1,d2,d3,d4,nr,tr");
    assert_eq!(lines.len() - 2, 8);
}

#[test]
fn hecke_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["hecke-check", "--n", "2", "--primes", "3,5,7"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(dir.path(), "hecke-check");
    assert_eq!(doc["schema"], "hecke-sphere/1");
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["config"]["primes"], serde_json::json!([3, 5, 7]));
}

#[test]
fn pretrace_check_residual() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["pretrace-check", "--n", "4", "--pairs", "100", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(dir.path(), "pretrace-check");
    assert!(doc["result"][0]["max_residual"].as_f64().unwrap() < 1e-8 * 25.0);
    assert_eq!(doc["config"]["seed"], 7);
}

#[test]
fn failing_assertion_exits_one() {
    // at n = 8 the A(X) slope is still far below its asymptotic range
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["counting", "--cutoff", "16", "--n", "8"]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(dir.path(), "counting");
    assert_eq!(doc["passed"], false);
    assert!(!doc["failures"].as_array().unwrap().is_empty());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["spectral", "--n", "3"][..],
        &["shells"],
        &["hecke-check", "--primes", "9"],
        &["moments", "--n-range", "8:2"],
        &["petersson", "--n", "8", "--cutoff", "20"],
        &["frobnicate"],
        &["spectral", "--precision", "quad"],
    ] {
        assert_eq!(run(dir.path(), args).status.code(), Some(2), "{args:?}");
    }
}
