use std::path::{Path, PathBuf};
use std::process::Command;

use forge_cli::{parse_weights, run, EXIT_FAILED, EXIT_OK, EXIT_USAGE};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn forge(args: &[&str]) -> i32 {
    let mut argv = vec!["forge"];
    argv.extend_from_slice(args);
    run(argv)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(forge(&["--help"]), EXIT_OK);
    assert_eq!(forge(&[]), EXIT_USAGE);
    assert_eq!(forge(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(forge(&["--config", "/nonexistent/forge.toml", "pipeline"]), EXIT_USAGE);
    assert_eq!(forge(&["validate", "/nonexistent/model.json"]), EXIT_USAGE);
    assert_eq!(forge(&["--weights", "1,2", "allocate", path(&fixture("alloc_mini.json"))]), EXIT_USAGE);
}

#[test]
fn malformed_model_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{\"functions\": [").unwrap();
    let out = tmp.path().join("out");
    assert_eq!(forge(&["--out", path(&out), "validate", path(&bad)]), EXIT_USAGE);
}

#[test]
fn weights_parse() {
    assert_eq!(parse_weights("1,0.5,2").unwrap(), [1.0, 0.5, 2.0]);
    assert!(parse_weights("1,x,2").is_err());
    assert!(parse_weights("1,2,3,4").is_err());
}

#[test]
fn allocate_writes_front_and_enhanced_model() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(forge(&["--out", path(&out), "allocate", path(&fixture("alloc_mini.json"))]), EXIT_OK);
    for f in ["front.json", "allocation.csv", "enhanced_model.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(out.join("allocation.csv")).unwrap();
    assert!(csv.lines().count() > 1);
}

#[test]
fn allocate_infeasible_exits_failed_with_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(forge(&["--out", path(&out), "allocate", path(&fixture("demo_brake.json"))]), EXIT_FAILED);
    let v = std::fs::read_to_string(out.join("violations.json")).unwrap();
    assert!(v.contains("brake_ctrl"));
    assert!(!out.join("front.json").exists());
}

#[test]
fn nsga2_flag_forces_heuristic_solver() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let code = forge(&[
        "--out",
        path(&out),
        "--nsga2",
        "--pop",
        "16",
        "--gens",
        "20",
        "allocate",
        path(&fixture("alloc_mini.json")),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.join("front.json").exists());
}

#[test]
fn infeasible_pipeline_stops_at_allocate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = fixture("demo/forge_infeasible.toml");
    assert_eq!(forge(&["--config", path(&config), "--out", path(&out), "pipeline"]), EXIT_FAILED);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("pipeline.json")).unwrap()).unwrap();
    let stages = summary["stages"].as_array().unwrap();
    assert_eq!(stages.last().unwrap()["stage"], "allocate");
    assert_eq!(summary["exit"], EXIT_FAILED);
    assert!(!out.join("deploy").exists());
}

#[test]
fn stages_run_individually() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = fixture("demo/forge.toml");
    let base = ["--config", path(&config), "--out", path(&out)];
    let with = |extra: &[&str]| {
        let mut v = base.to_vec();
        v.extend_from_slice(extra);
        forge(&v)
    };
    assert_eq!(with(&["gen-model"]), EXIT_OK);
    let model = out.join("model.json");
    let constraints = out.join("constraints.ocl");
    assert_eq!(with(&["validate", path(&model), path(&constraints)]), EXIT_OK);
    assert_eq!(with(&["allocate", path(&model)]), EXIT_OK);
    let enhanced = out.join("enhanced_model.json");
    let criteria = fixture("demo/criteria.json");
    assert_eq!(with(&["codegen", path(&enhanced), "--criteria", path(&criteria)]), EXIT_OK);
    assert!(out.join("tests/suite.json").exists());
    assert_eq!(with(&["simulate", "--model", path(&enhanced)]), EXIT_OK);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn simulate_without_codegen_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let model = fixture("redundancy_hot_standby.json");
    assert_eq!(forge(&["--out", path(&out), "simulate", "--model", path(&model)]), EXIT_USAGE);
}

#[test]
fn binary_runs_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_forge"))
        .args(["--config", path(&fixture("demo/forge.toml")), "--out", path(&out), "pipeline"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(out.join("report.json").exists());

    let status = Command::new(env!("CARGO_BIN_EXE_forge")).arg("bogus").output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_USAGE));
}
