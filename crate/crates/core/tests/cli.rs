use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use horizon_core::mpc::RunSummary;
use serde_json::json;

fn horizon(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_horizon"));
    cmd.args(args).env_remove("HORIZON_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_plan(dir: &Path) -> String {
    let plan = json!({
        "dataset_ids": ["sine"],
        "battery_ids": ["li-ion-2h"],
        "uncertainty_factors": [1.0],
        "horizon_grid": [3, 6],
        "stride_hours": 3,
        "publication_interval_hours": 3,
        "seeds": [7],
        "output_dir": "results"
    });
    let path = dir.join("plan.json");
    fs::write(&path, serde_json::to_vec_pretty(&plan).unwrap()).unwrap();
    path.display().to_string()
}

#[test]
fn validate_accepts_shipped_catalogs() {
    let out = horizon(&["validate"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn single_run_prints_a_summary() {
    let out = horizon(
        &["run", "--dataset", "sine", "--battery", "li-ion-1h", "--uf", "0", "--horizon", "24"],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: RunSummary = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((summary.horizon, summary.stride), (24, 3));
    assert!(summary.realized_revenue_eur > 1000.0);
}

#[test]
fn sweep_report_and_generate_under_out_root() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path());
    let root = dir.path().join("root");

    let out = horizon(&["validate", "--plan", &plan], &[]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("1 sweeps"));

    let out = horizon(&["sweep", "--plan", &plan, "--report"], &[("HORIZON_OUT", &root)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = root.join("results");
    for file in ["summary.csv", "manifest.json", "sweeps/sine__seed7.csv", "plots/revenue_sine__li-ion-2h.csv"] {
        assert!(results.join(file).is_file(), "missing {file}");
    }

    let out = horizon(&["report", "--out", results.to_str().unwrap(), "--aggregate", "median"], &[]);
    assert!(out.status.success());

    let generated = dir.path().join("gen");
    let out = horizon(&["generate", "--plan", &plan, "--out", generated.to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let gt = fs::read_to_string(generated.join("datasets/sine.csv")).unwrap();
    assert!(gt.starts_with("t_hours,value_eur_mwh"));
    assert_eq!(gt.lines().count(), 337);
    assert!(fs::read_to_string(generated.join("forecasts/sine__uf1__seed7.csv"))
        .unwrap()
        .starts_with("issue_step,lead_hours,value_eur_mwh"));
}

#[test]
fn bad_input_exits_with_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"dataset_ids": ["sine"], "horizon_grid": "x"}"#).unwrap();
    let out = horizon(&["sweep", "--plan", path.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = horizon(&["run", "--dataset", "nope", "--battery", "li-ion-1h", "--horizon", "3"], &[]);
    assert_eq!(out.status.code(), Some(2));
}
