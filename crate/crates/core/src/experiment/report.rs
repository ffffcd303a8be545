use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use super::run::Manifest;
use super::{read_sweep_csv, sweep_file_name, write_atomic};
use crate::error::{Error, Result};
use crate::horizon::{optimal_horizon, Curve};
use crate::series::format_number;

/// Needle rows of one battery.
type NeedleRows = (String, Vec<Vec<String>>);

/// How revenues of several seeds are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    Mean,
    Median,
}

impl Aggregate {
    fn apply(self, values: &mut [f64]) -> f64 {
        match self {
            Aggregate::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregate::Median => {
                values.sort_by(f64::total_cmp);
                let n = values.len();
                if n % 2 == 1 {
                    values[n / 2]
                } else {
                    0.5 * (values[n / 2 - 1] + values[n / 2])
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReportOptions {
    pub aggregate: Aggregate,
    /// One needle file per battery instead of one per dataset.
    pub split_needles: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ReportOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Seed-aggregated revenue per horizon for one (dataset, battery, u.f.).
fn aggregated_curve(samples: &BTreeMap<usize, Vec<f64>>, grid: &[usize], how: Aggregate) -> Vec<Option<f64>> {
    grid.iter()
        .map(|h| samples.get(h).map(|v| how.apply(&mut v.clone())))
        .collect()
}

/// Writes revenue-versus-horizon and needle-plot CSVs from a finished run directory.
pub fn emit_plot_data(out_dir: &Path, options: ReportOptions) -> Result<ReportOutput> {
    let manifest_path = out_dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let plan = &manifest.plan;
    let ufs = plan.sorted_ufs();
    let mut output = ReportOutput::default();
    let mut warn_missing = |msg: String| {
        warn!("{msg}");
        output.warnings.push(msg);
    };

    // (dataset, battery, uf index) -> horizon -> revenues over seeds
    let mut samples: BTreeMap<(String, String, usize), BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for dataset in &plan.dataset_ids {
        for &seed in &plan.seeds {
            let path = out_dir.join("sweeps").join(sweep_file_name(dataset, seed));
            if !path.exists() {
                warn_missing(format!("missing sweep file {}", path.display()));
                continue;
            }
            for row in read_sweep_csv(&path)? {
                if let Some(ui) = ufs.iter().position(|&u| u == row.uf) {
                    samples
                        .entry((row.dataset_id, row.battery_id, ui))
                        .or_default()
                        .entry(row.horizon_h)
                        .or_default()
                        .push(row.revenue_eur);
                }
            }
        }
    }

    let mut files = Vec::new();
    for dataset in &plan.dataset_ids {
        let mut needles: Vec<(String, Vec<Vec<String>>)> = Vec::new();
        for battery in &plan.battery_ids {
            let cycle = manifest
                .batteries
                .iter()
                .find(|b| &b.id == battery)
                .map(|b| b.cycle_hours)
                .ok_or_else(|| Error::UnknownId {
                    kind: "battery",
                    id: battery.clone(),
                })?;
            let columns: Vec<Vec<Option<f64>>> = (0..ufs.len())
                .map(|ui| match samples.get(&(dataset.clone(), battery.clone(), ui)) {
                    Some(s) => aggregated_curve(s, &plan.horizon_grid, options.aggregate),
                    None => vec![None; plan.horizon_grid.len()],
                })
                .collect();

            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["horizon_h".to_string()];
            header.extend(ufs.iter().map(|u| format!("uf_{}", format_number(*u))));
            w.write_record(&header)?;
            for (i, h) in plan.horizon_grid.iter().enumerate() {
                if columns.iter().all(|c| c[i].is_none()) {
                    warn_missing(format!("{dataset}/{battery}: no results at horizon {h}"));
                    continue;
                }
                let mut record = vec![h.to_string()];
                record.extend(columns.iter().map(|c| c[i].map(format_number).unwrap_or_default()));
                w.write_record(&record)?;
            }
            let path = out_dir.join("plots").join(format!("revenue_{dataset}__{battery}.csv"));
            write_atomic(&path, &w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?)?;
            files.push(path);

            let mut rows = Vec::new();
            for (ui, uf) in ufs.iter().enumerate() {
                let points: Vec<(usize, f64)> = plan
                    .horizon_grid
                    .iter()
                    .zip(&columns[ui])
                    .filter_map(|(h, r)| r.map(|r| (*h, r)))
                    .collect();
                if points.is_empty() {
                    warn_missing(format!("{dataset}/{battery}/uf {uf}: no results, needle row omitted"));
                    continue;
                }
                let curve = Curve::new(points.iter().map(|p| p.0).collect(), points.iter().map(|p| p.1).collect())?;
                rows.push(vec![
                    format_number(cycle),
                    format_number(*uf),
                    optimal_horizon(&curve).to_string(),
                    format_number(curve.max_revenue()),
                ]);
            }
            needles.push((battery.clone(), rows));
        }

        let groups: Vec<(String, Vec<&NeedleRows>)> = if options.split_needles {
            needles
                .iter()
                .map(|n| (format!("needle_{dataset}__{}.csv", n.0), vec![n]))
                .collect()
        } else {
            vec![(format!("needle_{dataset}.csv"), needles.iter().collect())]
        };
        for (name, group) in groups {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["battery_cycle_h", "uf", "h_opt", "revenue_eur"])?;
            for (_, rows) in group {
                for row in rows {
                    w.write_record(row)?;
                }
            }
            let path = out_dir.join("plots").join(name);
            write_atomic(&path, &w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?)?;
            files.push(path);
        }
    }
    output.files = files;
    Ok(output)
}
