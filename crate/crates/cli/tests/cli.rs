use std::process::{Command, Output};

use fibconn_cli::bundled;
use serde_json::Value;

fn fibconn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fibconn")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn bundled_scenarios_honor_exit_codes() {
    for name in bundled::names() {
        let out = fibconn(&["run", name]);
        let expected = if bundled::NEGATIVE_CONTROLS.contains(&name) { 1 } else { 0 };
        assert_eq!(code(&out), expected, "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn list_is_stable_and_complete() {
    let first = fibconn(&["list"]);
    let second = fibconn(&["list"]);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    for name in [
        "vector-bundle-linear",
        "affine-connection",
        "heisenberg-genconn",
        "standard-reduction",
        "lgfb-invariance",
        "genconn-invariance",
        "transport-homomorphism",
        "negative-nonadditive",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = ["a.json", "b.json"].iter().map(|f| dir.path().join(f)).collect();
    for p in &paths {
        let out = fibconn(&["--seed", "42", "--samples", "50", "--report", p.to_str().unwrap(), "run", "genconn-invariance"]);
        assert_eq!(code(&out), 0);
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
}

#[test]
fn negative_control_report_names_the_failing_condition() {
    let out = fibconn(&["--json-only", "run", "negative-nonadditive"]);
    assert_eq!(code(&out), 1);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], Value::Bool(false));
    let conditions = report["suites"][0]["report"]["conditions"].as_array().unwrap();
    let failing: Vec<_> = conditions.iter().filter(|c| c["passed"] == Value::Bool(false)).collect();
    assert_eq!(failing.len(), 1);
    assert_eq!(failing[0]["name"], "multiplicativity");
    assert!(failing[0]["stats"]["worst_point"].as_array().is_some_and(|p| !p.is_empty()));
}

#[test]
fn flags_override_scenario_values() {
    let out = fibconn(&["--json-only", "--seed", "7", "--samples", "12", "--tol", "1e-3", "run", "vector-bundle-linear"]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["config"]["sampling"]["seed"], 7);
    assert_eq!(report["config"]["sampling"]["count"], 12);
    assert_eq!(report["config"]["tolerances"]["abs_tol"], 1e-3);
}

#[test]
fn malformed_and_invalid_inputs_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("truncated.json", "{ \"name\": \"x\", ".to_string()),
        (
            "unknown-eta.json",
            bundled::source("negative-nonadditive").unwrap().replace("\"square\"", "\"cubic\""),
        ),
        (
            "bad-dims.json",
            bundled::source("negative-nonadditive").unwrap().replace("\"l\": 2", "\"l\": 3"),
        ),
    ];
    for (file, text) in cases {
        let path = dir.path().join(file);
        std::fs::write(&path, text).unwrap();
        let out = fibconn(&["run", path.to_str().unwrap()]);
        assert_eq!(code(&out), 2, "{file}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{file}");
    }
    assert_eq!(code(&fibconn(&["run", "no-such-scenario"])), 2);
}

#[test]
fn summary_table_shows_every_condition() {
    let out = fibconn(&["run", "standard-reduction"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("direct/right_equivariance"));
    assert!(text.contains("overall: PASS"));
}
