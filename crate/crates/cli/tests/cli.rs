use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = "[mesh]\nh = 0.1\nrefinements = 0\n";

fn singlab(dir: &Path, config: &str, args: &[&str], env: &[(&str, &str)]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_singlab"));
    cmd.args(args).arg("--config").arg(&cfg).arg("--out").arg(dir.join("out"));
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

fn error_of(out: &Output) -> Value {
    serde_json::from_slice::<Value>(&out.stderr).unwrap()["error"].clone()
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = singlab(dir.path(), "[mesh]\nspacing = 0.1\n", &["solve"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_of(&out);
    assert_eq!(e["kind"], "config");
    assert!(e["message"].as_str().unwrap().contains("spacing"));
}

#[test]
fn oversized_mesh_is_a_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = singlab(dir.path(), "[mesh]\nh = 5.0\nrefinements = 0\n", &["singular"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["kind"], "precondition");
}

#[test]
fn zero_probe_gives_zero_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = singlab(dir.path(), &format!("probes = [[0.0, 0.0]]\n{SMALL}"), &["solve"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(dir.path(), "solve.json");
    let level = &r["probes"][0]["levels"][0];
    assert_eq!(level["max_abs"], 0.0);
    assert_eq!(level["kappa"], 0.0);
    assert!(dir.path().join("out/field_a0_b0.csv").exists());
    assert!(dir.path().join("out/mesh_triangles.csv").exists());
}

#[test]
fn square_zero_set_is_reported_as_diagonals() {
    let dir = tempfile::tempdir().unwrap();
    let out = singlab(dir.path(), SMALL, &["levelset", "--level", "0"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(dir.path(), "levelset.json");
    assert_eq!(r["topology"], "Diagonals");
    assert_eq!(r["mesh_level"], 0);
    let svg = std::fs::read_to_string(dir.path().join("out/contours.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
}

#[test]
fn level_above_range_gives_empty_contours() {
    let dir = tempfile::tempdir().unwrap();
    let out = singlab(dir.path(), SMALL, &["levelset", "--level", "1e6"], &[]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/contours.csv")).unwrap();
    assert_eq!(csv.trim(), "chain,index,x,y");
    assert_eq!(json(dir.path(), "levelset.json")["chains"].as_array().unwrap().len(), 0);
}

#[test]
fn environment_overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = singlab(dir.path(), SMALL, &["singular"], &[("SINGLAB_DOMAIN_R2", "0.5")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(dir.path(), "singular.json");
    let l = &r["levels"][0];
    assert!((l["l2_norm"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert_eq!(l["symmetry_residual"], serde_json::json!([0.0, 0.0, 0.0]));
    assert_eq!(l["swap_antisymmetry"], Value::Null);
}

#[test]
fn square_regularity_line_is_the_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let out = singlab(dir.path(), "[mesh]\nh = 0.1\nrefinements = 1\n", &["regline"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(dir.path(), "regline.json");
    let d = r["direction"].as_array().unwrap();
    assert!((d[0].as_f64().unwrap() - d[1].as_f64().unwrap()).abs() < 1e-12);
    assert_eq!(r["alpha_nonpositive"], true);
    assert_eq!(r["inconclusive"], false);
    assert!(r["square"]["angle_deg"].as_f64().unwrap() < 1.5);
}
