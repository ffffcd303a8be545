use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::plan::ExperimentPlan;
use super::{sweep_file_name, write_atomic, BatteryInfo, DatasetInfo, SUMMARY_HEADER, SWEEP_HEADER};
use crate::catalog::Catalogs;
use crate::error::{Error, Result};
use crate::forecast::issue_forecasts;
use crate::horizon::{sweep_horizons, Curve, SweepInputs, SweepResult};
use crate::rng::derive_seed;
use crate::series::{format_number, Series};
use crate::signal::compose_ground_truth;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses one per core.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRef {
    pub dataset_id: String,
    pub battery_id: String,
    pub uf: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    #[serde(flatten)]
    pub cell: CellRef,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestFlags {
    pub negative_gaps: Vec<CellRef>,
    pub undefined_losses: Vec<CellRef>,
    pub nonpositive_max: Vec<CellRef>,
    /// Forecast error sigma was clamped at zero somewhere in these forecast sets.
    pub sigma_clamped: Vec<CellRef>,
    /// Grid horizons shorter than the stride; their blocks end with idle steps.
    pub horizons_below_stride: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub plan: ExperimentPlan,
    pub seeds: Vec<u64>,
    pub rng: String,
    pub forecast_errors: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub jobs: usize,
    pub sweeps_total: usize,
    pub sweeps_failed: usize,
    pub mpc_runs: usize,
    pub failures: Vec<CellFailure>,
    pub flags: ManifestFlags,
    pub(crate) datasets: Vec<DatasetInfo>,
    pub(crate) batteries: Vec<BatteryInfo>,
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

impl PlanOutcome {
    pub fn succeeded(&self) -> bool {
        self.manifest.failures.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Key {
    dataset: usize,
    battery: usize,
    uf: f64,
    seed: u64,
}

struct Computed {
    curve: Curve,
    sigma_clamped: bool,
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// SHA-256 over the plan (minus output location) and every catalog entry it uses.
pub(crate) fn config_hash(plan: &ExperimentPlan, catalogs: &Catalogs) -> Result<String> {
    let datasets = plan
        .dataset_ids
        .iter()
        .map(|id| catalogs.dataset(id))
        .collect::<Result<Vec<_>>>()?;
    let batteries = plan
        .battery_ids
        .iter()
        .map(|id| catalogs.battery(id))
        .collect::<Result<Vec<_>>>()?;
    let view = serde_json::json!({
        "plan": plan.hashed_view(),
        "datasets": datasets,
        "batteries": batteries,
        "market": catalogs.market,
        "error_model": catalogs.error_model(&plan.error_model_id)?,
    });
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(&view)?)))
}

/// Runs every sweep of the plan and writes the result files into `out_dir`.
///
/// Cell failures are recorded in the manifest and never abort the lattice.
pub fn run_plan(plan: &ExperimentPlan, catalogs: &Catalogs, out_dir: &Path, options: RunOptions) -> Result<PlanOutcome> {
    plan.validate(catalogs)?;
    let started_unix = now_unix();
    let datasets: Vec<_> = plan.dataset_ids.iter().map(|id| catalogs.dataset(id)).collect::<Result<_>>()?;
    let batteries: Vec<_> = plan.battery_ids.iter().map(|id| catalogs.battery(id)).collect::<Result<_>>()?;
    let error_model = catalogs.error_model(&plan.error_model_id)?.model;
    let ufs = plan.sorted_ufs();
    let mut curve_ufs = ufs.clone();
    if curve_ufs[0] != 0.0 {
        curve_ufs.insert(0, 0.0);
    }

    let mut keys = Vec::new();
    for dataset in 0..datasets.len() {
        for &seed in &plan.seeds {
            for battery in 0..batteries.len() {
                for &uf in &curve_ufs {
                    keys.push(Key { dataset, battery, uf, seed });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let jobs = pool.current_num_threads();
    info!("running {} sweeps on {jobs} threads", keys.len());

    let ground_truths: Vec<Result<Series>> =
        pool.install(|| datasets.par_iter().map(|d| compose_ground_truth(&d.spec)).collect());

    let results: Vec<Result<Computed>> = pool.install(|| {
        keys.par_iter()
            .map(|k| {
                let gt = ground_truths[k.dataset].as_ref().map_err(|e| Error::invalid(e.to_string()))?;
                let dataset = datasets[k.dataset];
                let forecasts = issue_forecasts(
                    gt,
                    &error_model.with_uncertainty_factor(k.uf),
                    plan.publication_interval_hours,
                    plan.forecast_horizon_hours,
                    derive_seed(k.seed, &dataset.id),
                )?;
                let inputs = SweepInputs {
                    ground_truth: gt,
                    forecasts: &forecasts,
                    battery: &batteries[k.battery].spec,
                    market: &catalogs.market,
                    stride_hours: plan.stride_hours,
                };
                let curve = sweep_horizons(&inputs, &plan.horizon_grid)?;
                Ok(Computed {
                    curve,
                    sigma_clamped: forecasts.sigma_clamped,
                })
            })
            .collect()
    });

    let cell = |k: &Key| CellRef {
        dataset_id: datasets[k.dataset].id.clone(),
        battery_id: batteries[k.battery].id.clone(),
        uf: k.uf,
        seed: k.seed,
    };
    let lookup = |dataset: usize, battery: usize, uf: f64, seed: u64| {
        keys.iter()
            .position(|k| k.dataset == dataset && k.battery == battery && k.uf == uf && k.seed == seed)
            .map(|i| &results[i])
    };

    let mut failures = Vec::new();
    let mut flags = ManifestFlags {
        horizons_below_stride: plan.horizon_grid.iter().copied().filter(|&h| h < plan.stride_hours).collect(),
        ..Default::default()
    };
    for (k, r) in keys.iter().zip(&results) {
        match r {
            Err(e) => {
                warn!("sweep {:?} failed: {e}", cell(k));
                failures.push(CellFailure { cell: cell(k), error: e.to_string() });
            }
            Ok(c) if c.sigma_clamped && k.battery == 0 => flags.sigma_clamped.push(cell(k)),
            Ok(_) => {}
        }
    }

    // Sweep files: one per (dataset, seed), batteries in plan order, u.f. ascending.
    for (di, dataset) in datasets.iter().enumerate() {
        for &seed in &plan.seeds {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(SWEEP_HEADER)?;
            for (bi, battery) in batteries.iter().enumerate() {
                for &uf in &curve_ufs {
                    if let Some(Ok(c)) = lookup(di, bi, uf, seed) {
                        for (h, r) in c.curve.horizons().iter().zip(c.curve.revenues()) {
                            w.write_record([
                                dataset.id.as_str(),
                                dataset.instance.as_str(),
                                battery.id.as_str(),
                                &format_number(uf),
                                &h.to_string(),
                                &format_number(*r),
                            ])?;
                        }
                    }
                }
            }
            let bytes = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
            write_atomic(&out_dir.join("sweeps").join(sweep_file_name(&dataset.id, seed)), &bytes)?;
        }
    }

    // Summary: one row per forecast sweep, derived against the reference curve.
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    for (di, dataset) in datasets.iter().enumerate() {
        for (bi, battery) in batteries.iter().enumerate() {
            for &uf in &ufs {
                for &seed in &plan.seeds {
                    let k = Key { dataset: di, battery: bi, uf, seed };
                    let (Some(Ok(c)), Some(Ok(reference))) = (lookup(di, bi, uf, seed), lookup(di, bi, 0.0, seed)) else {
                        if uf != 0.0 && matches!(lookup(di, bi, uf, seed), Some(Ok(_))) {
                            failures.push(CellFailure {
                                cell: cell(&k),
                                error: "reference sweep failed".into(),
                            });
                        }
                        continue;
                    };
                    let r = SweepResult::derive(c.curve.clone(), &reference.curve, plan.epsilon)?;
                    if r.gap.negative {
                        flags.negative_gaps.push(cell(&k));
                    }
                    if r.loss_percent.is_none() {
                        flags.undefined_losses.push(cell(&k));
                    }
                    if r.nonpositive_max {
                        flags.nonpositive_max.push(cell(&k));
                    }
                    w.write_record([
                        dataset.id.clone(),
                        dataset.instance.clone(),
                        battery.id.clone(),
                        format_number(uf),
                        r.h_opt.to_string(),
                        r.h_eff.to_string(),
                        r.gap.hours.to_string(),
                        r.loss_percent.map(format_number).unwrap_or_default(),
                        format_number(plan.epsilon),
                        seed.to_string(),
                    ])?;
                }
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
    write_atomic(&out_dir.join("summary.csv"), &bytes)?;

    let manifest = Manifest {
        tool: "horizon".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config_hash(plan, catalogs)?,
        plan: plan.clone(),
        seeds: plan.seeds.clone(),
        rng: "chacha8; forecast stream seed = sha256(seed, dataset_id), stream = issuance index".into(),
        forecast_errors: "independent AR(1) path per issuance, shared across u.f. and batteries".into(),
        started_unix,
        finished_unix: now_unix(),
        jobs,
        sweeps_total: plan.sweep_count(),
        sweeps_failed: failures.len(),
        mpc_runs: plan.mpc_run_count(),
        failures,
        flags,
        datasets: datasets
            .iter()
            .map(|d| DatasetInfo {
                id: d.id.clone(),
                family: d.family.clone(),
                instance: d.instance.clone(),
            })
            .collect(),
        batteries: batteries
            .iter()
            .map(|b| BatteryInfo {
                id: b.id.clone(),
                name: b.name.clone(),
                cycle_hours: b.spec.cycle_hours(),
            })
            .collect(),
    };
    write_atomic(&out_dir.join("manifest.json"), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(PlanOutcome {
        out_dir: out_dir.to_path_buf(),
        manifest,
    })
}
