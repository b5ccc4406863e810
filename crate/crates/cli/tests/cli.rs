//! End-to-end runs of the `diffuse` binary.

use std::path::Path;
use std::process::Command;

use diffuse_core::ingest::{serialize_fred_csv, RawDataset};
use diffuse_core::simulation::{synthetic_macro_panel, SyntheticMacroConfig};

fn diffuse(cwd: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_diffuse")).args(args).current_dir(cwd).env_remove("DIFFUSE_THREADS").output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

const DIAGNOSE: &str = r#"{"schema_version": 1, "command": "diagnose", "master_seed": 3, "t": 12, "n": 8,
    "singular_values": [3.0, 2.0, 1.5, 1.0, 0.8, 0.5, 0.3, 0.2], "k": 3, "draws": 4000}"#;

#[test]
fn diagnose_writes_profiles_checks_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("diag.json"), DIAGNOSE).unwrap();
    let (code, err) = diffuse(dir.path(), &["diagnose", "--config", "diag.json", "--out-dir", "out"]);
    assert_eq!(code, 0, "{err}");
    let out = dir.path().join("out");
    let profiles = std::fs::read_to_string(out.join("profiles.csv")).unwrap();
    assert_eq!(profiles.lines().count(), 1 + 8);
    assert!(profiles.lines().skip(1).all(|l| l.ends_with(",analytic,true")));
    let checks = json(&out.join("checks.json"));
    assert_eq!(checks["passed"], true);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["command"], "diagnose");
    assert_eq!(manifest["outputs"], serde_json::json!(["profiles.csv", "checks.json"]));
}

#[test]
fn command_must_match_the_configuration() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("diag.json"), DIAGNOSE).unwrap();
    let (code, err) = diffuse(dir.path(), &["mc", "--config", "diag.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("diagnose configuration"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn manifests_rerun_with_overrides_recorded() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("mc.json"),
        r#"{"schema_version": 1, "command": "mc", "master_seed": 1, "reps": 10, "cells": [{"n": 15, "t": 15, "alpha": 1.0}], "rp_draws": 5}"#,
    )
    .unwrap();
    let (code, err) = diffuse(dir.path(), &["mc", "--config", "mc.json", "--seed", "77", "--reps", "12", "--out-dir", "a", "--threads", "2"]);
    assert_eq!(code, 0, "{err}");
    let first = json(&dir.path().join("a/manifest.json"));
    assert_eq!(first["master_seed"], 77);
    assert_eq!(first["config"]["reps"], 12);
    assert!(first["config"].get("threads").is_none());

    let (code, err) = diffuse(dir.path(), &["mc", "--config", "a/manifest.json", "--out-dir", "b"]);
    assert_eq!(code, 0, "{err}");
    for file in ["mc_results.csv", "mc_grid.csv", "manifest.json"] {
        assert_eq!(std::fs::read(dir.path().join("a").join(file)).unwrap(), std::fs::read(dir.path().join("b").join(file)).unwrap(), "{file}");
    }

    let (code, _) = diffuse(dir.path(), &["mc", "--config", "mc.json", "--out-dir", "c"]);
    assert_eq!(code, 0);
    assert_ne!(json(&dir.path().join("c/manifest.json"))["config_digest"], first["config_digest"]);
}

#[test]
fn failing_targets_make_a_partial_run() {
    let dir = tempfile::tempdir().unwrap();
    let panel = synthetic_macro_panel(&SyntheticMacroConfig { n_series: 8, months: 84, ..SyntheticMacroConfig::default() }).unwrap();
    let mut series = panel.series().to_vec();
    // A gap in S002 breaks its own lag structure at every origin.
    for v in &mut series[1].values[60..] {
        *v = None;
    }
    let broken = RawDataset::new(panel.frequency(), panel.dates().to_vec(), series).unwrap();
    std::fs::create_dir(dir.path().join("data")).unwrap();
    std::fs::write(dir.path().join("data/panel.csv"), serialize_fred_csv(&broken).unwrap()).unwrap();
    std::fs::create_dir(dir.path().join("cfg")).unwrap();
    std::fs::write(
        dir.path().join("cfg/emp.json"),
        r#"{"schema_version": 1, "command": "empirical", "master_seed": 4, "data": "../data/panel.csv",
            "targets": ["S001", "S002", "S003"], "forecast_start": "2005-01", "evaluation_start": "2005-06",
            "window_multiples": [3.0], "methods": ["pca", "ridge"], "max_dimension": 6,
            "ridge_log_penalty": {"start": -4.0, "step": 1.0, "points": 8}}"#,
    )
    .unwrap();
    let (code, err) = diffuse(dir.path(), &["empirical", "--config", "cfg/emp.json", "--out-dir", "out"]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("S002"), "{err}");
    let manifest = json(&dir.path().join("out/manifest.json"));
    assert_eq!(manifest["status"], "partial");
    let data = manifest["config"]["data"].as_str().unwrap();
    assert!(Path::new(data).is_absolute() && data.ends_with("panel.csv"));
    let msfe = std::fs::read_to_string(dir.path().join("out/msfe_T27.csv")).unwrap();
    assert!(msfe.contains("S001") && msfe.contains("S003") && !msfe.contains("S002"));
}
