use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use horizon_core::catalog::{load_catalogs, CatalogPaths, Catalogs};
use horizon_core::experiment::{emit_plot_data, run_plan, Aggregate, ExperimentPlan, ReportOptions, RunOptions};
use horizon_core::forecast::issue_forecasts;
use horizon_core::mpc::{run_mpc, MpcConfig, RunSummary};
use horizon_core::rng::derive_seed;
use horizon_core::series::Series;
use horizon_core::signal::compose_ground_truth;

/// Planning-horizon experiments for battery arbitrage under forecast uncertainty.
#[derive(Parser, Debug)]
#[command(name = "horizon", version)]
struct Cli {
    /// Root for relative plan output directories.
    #[arg(long, global = true, env = "HORIZON_OUT")]
    out_root: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write ground-truth series and forecast sets for every dataset, u.f. and seed of a plan.
    Generate {
        #[arg(long)]
        plan: PathBuf,
        /// Use this single seed instead of the plan's seeds.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the plan's.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every horizon sweep of a plan.
    Sweep {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: one per core).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plateau tolerance for the effective horizon.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Also write plot data when the sweep finishes.
        #[arg(long)]
        report: bool,
    },
    /// Write plot-ready CSVs from a finished sweep directory.
    Report {
        /// Sweep output directory.
        #[arg(long, required_unless_present = "plan")]
        out: Option<PathBuf>,
        /// Take the output directory from this plan.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = AggregateArg::Mean)]
        aggregate: AggregateArg,
        /// One needle-plot file per battery.
        #[arg(long)]
        split_needles: bool,
    },
    /// Check catalog files (and optionally a plan) against their schemas.
    Validate {
        /// Directory with datasets.json, batteries.json and error_models.json.
        #[arg(long)]
        catalog_dir: Option<PathBuf>,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Run one MPC simulation and print its JSON summary.
    Run {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        battery: String,
        #[arg(long, default_value_t = 1.0)]
        uf: f64,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 3)]
        stride: usize,
        /// Forecast publication interval, hours (defaults to the stride).
        #[arg(long)]
        interval: Option<usize>,
        #[arg(long, default_value_t = 72)]
        forecast_horizon: usize,
        #[arg(long, default_value = "linear")]
        error_model: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        catalog_dir: Option<PathBuf>,
        /// Write the committed schedule here.
        #[arg(long)]
        schedule_csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AggregateArg {
    Mean,
    Median,
}

fn catalogs_from(dir: Option<&Path>) -> Result<Catalogs> {
    match dir {
        Some(dir) => load_catalogs(&CatalogPaths::in_dir(dir)).with_context(|| format!("loading catalogs from {}", dir.display())),
        None => Ok(Catalogs::shipped()),
    }
}

/// Loads a plan with its catalogs; a relative `catalog_dir` is resolved against the plan file.
fn load_plan(path: &Path) -> Result<(ExperimentPlan, Catalogs)> {
    let plan = ExperimentPlan::load(path)?;
    let dir = plan.catalog_dir.as_ref().map(|d| match path.parent() {
        Some(parent) if d.is_relative() => parent.join(d),
        _ => d.clone(),
    });
    let catalogs = catalogs_from(dir.as_deref())?;
    plan.validate(&catalogs).with_context(|| format!("invalid plan {}", path.display()))?;
    Ok((plan, catalogs))
}

fn resolve_out(out: Option<PathBuf>, root: Option<&Path>, plan: &ExperimentPlan) -> PathBuf {
    match (out, root) {
        (Some(out), _) => out,
        (None, Some(root)) if plan.output_dir.is_relative() => root.join(&plan.output_dir),
        (None, _) => plan.output_dir.clone(),
    }
}

fn write_series(path: &Path, series: &Series) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    series.write_csv(BufWriter::new(File::create(path)?))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { plan, seed, out } => {
            let (mut plan, catalogs) = load_plan(&plan)?;
            if let Some(seed) = seed {
                plan.seeds = vec![seed];
            }
            let out = resolve_out(out, cli.out_root.as_deref(), &plan);
            let model = catalogs.error_model(&plan.error_model_id)?.model;
            for id in &plan.dataset_ids {
                let dataset = catalogs.dataset(id)?;
                let gt = compose_ground_truth(&dataset.spec)?;
                write_series(&out.join("datasets").join(format!("{id}.csv")), &gt)?;
                for &seed in &plan.seeds {
                    for uf in plan.sorted_ufs() {
                        let set = issue_forecasts(
                            &gt,
                            &model.with_uncertainty_factor(uf),
                            plan.publication_interval_hours,
                            plan.forecast_horizon_hours,
                            derive_seed(seed, id),
                        )?;
                        let path = out.join("forecasts").join(format!("{id}__uf{uf}__seed{seed}.csv"));
                        std::fs::create_dir_all(path.parent().expect("joined path"))?;
                        set.write_csv(BufWriter::new(File::create(&path)?))?;
                    }
                }
            }
            info!("wrote datasets and forecasts to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { plan, seed, jobs, out, epsilon, report } => {
            let (mut plan, catalogs) = load_plan(&plan)?;
            if let Some(seed) = seed {
                plan.seeds = vec![seed];
            }
            if let Some(eps) = epsilon {
                plan.epsilon = eps;
            }
            if jobs == Some(0) {
                bail!("--jobs must be >= 1");
            }
            let out = resolve_out(out, cli.out_root.as_deref(), &plan);
            info!(
                "{} sweeps x {} horizons = {} MPC runs -> {}",
                plan.sweep_count(),
                plan.horizon_grid.len(),
                plan.mpc_run_count(),
                out.display()
            );
            let outcome = run_plan(&plan, &catalogs, &out, RunOptions { jobs })?;
            let m = &outcome.manifest;
            info!(
                "done: {} sweeps, {} failed, {} negative gaps, {} undefined losses",
                m.sweeps_total,
                m.sweeps_failed,
                m.flags.negative_gaps.len(),
                m.flags.undefined_losses.len()
            );
            if report {
                emit_plot_data(&out, ReportOptions::default())?;
            }
            for f in &m.failures {
                eprintln!("failed: {}/{}/uf {}/seed {}: {}", f.cell.dataset_id, f.cell.battery_id, f.cell.uf, f.cell.seed, f.error);
            }
            Ok(if outcome.succeeded() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Report { out, plan, aggregate, split_needles } => {
            let out = match (out, plan) {
                (Some(out), _) => out,
                (None, Some(plan)) => {
                    let (plan, _) = load_plan(&plan)?;
                    resolve_out(None, cli.out_root.as_deref(), &plan)
                }
                (None, None) => unreachable!("clap requires one of --out/--plan"),
            };
            let aggregate = match aggregate {
                AggregateArg::Mean => Aggregate::Mean,
                AggregateArg::Median => Aggregate::Median,
            };
            let written = emit_plot_data(&out, ReportOptions { aggregate, split_needles })?;
            info!("wrote {} plot files ({} warnings)", written.files.len(), written.warnings.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { catalog_dir, plan } => {
            let catalogs = catalogs_from(catalog_dir.as_deref())?;
            println!(
                "catalogs ok: {} datasets, {} batteries, {} error models",
                catalogs.datasets.len(),
                catalogs.batteries.len(),
                catalogs.error_models.len()
            );
            if let Some(path) = plan {
                let (plan, _) = load_plan(&path)?;
                println!("plan ok: {} sweeps, {} MPC runs", plan.sweep_count(), plan.mpc_run_count());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            dataset,
            battery,
            uf,
            horizon,
            stride,
            interval,
            forecast_horizon,
            error_model,
            seed,
            catalog_dir,
            schedule_csv,
        } => {
            let catalogs = catalogs_from(catalog_dir.as_deref())?;
            let entry = catalogs.dataset(&dataset)?;
            let bat = catalogs.battery(&battery)?;
            let model = catalogs.error_model(&error_model)?.model.with_uncertainty_factor(uf);
            let interval = interval.unwrap_or(stride);
            let gt = compose_ground_truth(&entry.spec)?;
            let forecasts = issue_forecasts(&gt, &model, interval, forecast_horizon, derive_seed(seed, &dataset))?;
            let run = run_mpc(&gt, &forecasts, &bat.spec, &catalogs.market, &MpcConfig::new(horizon, stride, interval))?;
            if let Some(path) = schedule_csv {
                run.committed.write_csv(BufWriter::new(File::create(&path)?))?;
            }
            let summary = RunSummary {
                dataset_id: dataset,
                battery_id: battery,
                uf,
                horizon,
                stride,
                realized_revenue_eur: run.realized_revenue,
            };
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
