//! Experiment lattice execution and result files.
//!
//! Layout of an output directory:
//!
//! ```text
//! sweeps/<dataset>__seed<seed>.csv   dataset_id,instance,battery_id,uf,horizon_h,revenue_eur
//! summary.csv                        dataset_id,instance,battery_id,uf,h_opt,h_eff,gap_h,loss_pct,epsilon,seed
//! manifest.json
//! plots/revenue_<dataset>__<battery>.csv
//! plots/needle_<dataset>[__<battery>].csv
//! ```
//!
//! Sweep files always contain the `uf = 0` reference rows from which `h_eff`
//! is taken. CSV bodies carry no timestamps, so identical plans produce
//! identical bytes.

mod plan;
mod report;
mod run;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use plan::ExperimentPlan;
pub use report::{emit_plot_data, Aggregate, ReportOptions, ReportOutput};
pub use run::{run_plan, CellFailure, CellRef, Manifest, ManifestFlags, PlanOutcome, RunOptions};

pub const SWEEP_HEADER: [&str; 6] = ["dataset_id", "instance", "battery_id", "uf", "horizon_h", "revenue_eur"];
pub const SUMMARY_HEADER: [&str; 10] = [
    "dataset_id",
    "instance",
    "battery_id",
    "uf",
    "h_opt",
    "h_eff",
    "gap_h",
    "loss_pct",
    "epsilon",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SweepRow {
    pub dataset_id: String,
    pub instance: String,
    pub battery_id: String,
    pub uf: f64,
    pub horizon_h: usize,
    pub revenue_eur: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SummaryRow {
    pub dataset_id: String,
    pub instance: String,
    pub battery_id: String,
    pub uf: f64,
    pub h_opt: usize,
    pub h_eff: usize,
    pub gap_h: i64,
    /// Empty in the file when undefined.
    pub loss_pct: Option<f64>,
    pub epsilon: f64,
    pub seed: u64,
}

pub fn sweep_file_name(dataset_id: &str, seed: u64) -> String {
    format!("{dataset_id}__seed{seed}.csv")
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    read_rows(path)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    read_rows(path)
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Schema {
        file: path.display().to_string(),
        field: "<file>".into(),
        reason: e.to_string(),
    })?;
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::Schema {
            file: path.display().to_string(),
            field: e
                .position()
                .map(|p| format!("line {}", p.line()))
                .unwrap_or_else(|| "<row>".into()),
            reason: e.to_string(),
        })
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = PathBuf::from(path);
    tmp.as_mut_os_string().push(".tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub(crate) struct BatteryInfo {
    pub id: String,
    pub name: String,
    pub cycle_hours: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub(crate) struct DatasetInfo {
    pub id: String,
    pub family: String,
    pub instance: String,
}
