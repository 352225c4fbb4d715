use std::process::{Command, Output};

use conleylab::constructions::catalog_flow;
use conleylab::{AttractorReport, IsolatingBlock};
use serde_json::Value;

fn conleylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conleylab")).args(args).env_remove("CONLEYLAB_CATALOG").output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn analyze_report_round_trips() {
    let v = stdout_json(&conleylab(&["analyze", "catalog:hypersurface-genus2-two"]));
    assert_eq!(v["schema"], "1");
    let rep: AttractorReport = serde_json::from_value(v["report"].clone()).unwrap();
    let block: IsolatingBlock = serde_json::from_value(v["block"].clone()).unwrap();
    let cf = catalog_flow("hypersurface-genus2-two", 8).unwrap();
    assert_eq!(rep, conleylab::attractor::analyze(&cf.k, &cf.flow).unwrap());
    assert!(block.regular);
    assert_eq!(v["sections"], serde_json::json!([2, 2]));
    assert_eq!(v["conley_euler"], -2);
}

#[test]
fn analyze_is_deterministic() {
    let a = conleylab(&["analyze", "homoclinic-sphere"]);
    let b = conleylab(&["analyze", "homoclinic-sphere"]);
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert_eq!(v["report"]["classification"], "ExternalExplosions");
    assert!(v["block_error"].is_null());
}

#[test]
fn csv_has_one_row_per_top_cell() {
    let out = conleylab(&["plot", "north-south", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("cell_id,role"));
    let rows: Vec<&str> = lines.collect();
    let tops = catalog_flow("north-south", 8).unwrap().flow.top_cells().len();
    assert_eq!(rows.len(), tops);
    assert!(rows.iter().any(|r| r.ends_with(",K")));
    assert!(rows.iter().any(|r| r.ends_with(",outside")));
}

#[test]
fn svg_needs_a_surface() {
    let out = conleylab(&["plot", "hypersurface-genus2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("<svg") && text.contains("data-role=\"nminus\""));
    let out = conleylab(&["plot", "example22-circle"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn constructed_flow_files_reload() {
    let dir = std::env::temp_dir().join(format!("conleylab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("klein.json");
    let p = path.to_str().unwrap();
    assert!(conleylab(&["construct", "example22-klein", "--out", p]).status.success());
    let from_file = stdout_json(&conleylab(&["analyze", p]));
    let from_catalog = stdout_json(&conleylab(&["analyze", "example22-klein"]));
    assert_eq!(from_file["report"], from_catalog["report"]);

    // the override directory is searched before the built-in catalog
    let out = Command::new(env!("CARGO_BIN_EXE_conleylab")).args(["analyze", "klein"]).env("CONLEYLAB_CATALOG", &dir).output().unwrap();
    assert_eq!(stdout_json(&out)["report"], from_catalog["report"]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn homology_output() {
    let v = stdout_json(&conleylab(&["homology", "klein", "--ring", "z"]));
    assert_eq!(v["ranks"], serde_json::json!([1, 1, 0]));
    assert_eq!(v["torsion"][1], serde_json::json!([2]));
    assert_eq!(v["euler"], 0);
    let v = stdout_json(&conleylab(&["homology", "s2xs1"]));
    assert_eq!(v["poincare"], "t^3 + t^2 + t + 1");
}

#[test]
fn usage_errors() {
    assert_eq!(conleylab(&["analyze", "no-such-flow"]).status.code(), Some(2));
    assert!(!conleylab(&["analyze", "north-south", "--resolution", "0"]).status.success());
    assert!(!conleylab(&["homology", "torus", "--ring", "q"]).status.success());
    assert_eq!(conleylab(&["verify", "--only", "thm9.9"]).status.code(), Some(2));
}

#[test]
fn verify_single_id() {
    let out = conleylab(&["verify", "--only", "lem7.2"]);
    let v = stdout_json(&out);
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("3 of 3 records pass"));
}
