//! Rolling-horizon dispatch.
//!
//! Windows start every `stride` steps. Each window optimizes
//! `min(horizon, remaining)` steps on the newest forecast issued at or before
//! its start, and only the first `stride` actions are committed. When the
//! horizon is shorter than the stride, the uncovered tail of the block is
//! left idle. State of charge is carried from one block to the next.

use serde::{Deserialize, Serialize};

use crate::battery::{
    split_prices, solve_window, BatterySpec, MarketParams, Schedule, ScheduleStep, SolverStats,
};
use crate::error::{Error, Result};
use crate::forecast::{hours_to_steps, ForecastSet};
use crate::series::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpcConfig {
    pub horizon_hours: usize,
    pub stride_hours: usize,
    pub publication_interval_hours: usize,
}

impl MpcConfig {
    pub fn new(horizon_hours: usize, stride_hours: usize, publication_interval_hours: usize) -> Self {
        Self {
            horizon_hours,
            stride_hours,
            publication_interval_hours,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon_hours == 0 || self.stride_hours == 0 || self.publication_interval_hours == 0 {
            return Err(Error::invalid("horizon, stride and publication interval must be >= 1"));
        }
        Ok(())
    }

    /// True when windows are shorter than the stride and blocks contain idle steps.
    pub fn leaves_gaps(&self) -> bool {
        self.horizon_hours < self.stride_hours
    }
}

/// One committed block of actions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub start: usize,
    pub len: usize,
    /// Index of the forecast issuance the window was solved on.
    pub issuance: usize,
    pub soc_start: f64,
    pub soc_end: f64,
    /// Steps at the end of the block not covered by the window.
    pub idle: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcRun {
    /// Concatenated committed actions; `objective` is the realized revenue.
    pub committed: Schedule,
    pub realized_revenue: f64,
    /// Window objectives priced on the forecasts they were solved with.
    pub per_window_objectives: Vec<f64>,
    pub blocks: Vec<Block>,
    pub config: MpcConfig,
}

/// Committed flows priced at the ground-truth buy/sell prices.
pub fn realized_revenue(committed: &Schedule, ground_truth_spot: &Series, market: &MarketParams) -> Result<f64> {
    if committed.len() != ground_truth_spot.len() {
        return Err(Error::LengthMismatch {
            expected: committed.len(),
            actual: ground_truth_spot.len(),
        });
    }
    let (buy, sell) = split_prices(ground_truth_spot, market)?;
    committed.revenue_at(buy.values(), sell.values())
}

pub fn run_mpc(
    ground_truth_spot: &Series,
    forecasts: &ForecastSet,
    battery: &BatterySpec,
    market: &MarketParams,
    config: &MpcConfig,
) -> Result<MpcRun> {
    config.validate()?;
    battery.validate()?;
    if forecasts.publication_interval_hours != config.publication_interval_hours {
        return Err(Error::invalid(format!(
            "forecast publication interval {} h differs from the configured {} h",
            forecasts.publication_interval_hours, config.publication_interval_hours
        )));
    }
    let step_hours = ground_truth_spot.step_hours();
    if (forecasts.step_hours - step_hours).abs() > 1e-12 {
        return Err(Error::invalid("forecast and ground-truth steps differ"));
    }
    let horizon = hours_to_steps(config.horizon_hours, step_hours, "horizon")?;
    let stride = hours_to_steps(config.stride_hours, step_hours, "stride")?;
    let interval = forecasts.interval_steps();
    let n = ground_truth_spot.len();

    let mut steps: Vec<ScheduleStep> = Vec::with_capacity(n);
    let mut per_window = Vec::new();
    let mut blocks = Vec::new();
    let mut stats = SolverStats::default();
    let mut soc = battery.soc_initial;

    let mut start = 0;
    while start < n {
        let issuance = start / interval;
        let forecast = forecasts
            .forecasts
            .get(issuance)
            .filter(|f| f.issue_step == issuance * interval)
            .ok_or_else(|| Error::CoverageGap {
                step: start,
                reason: format!("no forecast issued at step {}", issuance * interval),
            })?;
        let lead = start - forecast.issue_step;
        let window = horizon.min(n - start);
        if lead + window > forecast.values.len() {
            return Err(Error::CoverageGap {
                step: start,
                reason: format!(
                    "forecast issued at {} covers {} steps, window needs {}",
                    forecast.issue_step,
                    forecast.values.len(),
                    lead + window
                ),
            });
        }
        let spot = forecast.values.slice(lead, lead + window)?;
        let (buy, sell) = split_prices(&spot, market)?;
        let schedule = solve_window(&buy, &sell, battery, market, soc).map_err(|e| Error::Window {
            issuance,
            source: Box::new(e),
        })?;
        stats.lp_iterations += schedule.stats.lp_iterations;
        stats.nodes += schedule.stats.nodes;
        stats.wall_time += schedule.stats.wall_time;
        per_window.push(schedule.objective);

        let block_len = stride.min(n - start);
        let active = block_len.min(window);
        let soc_start = soc;
        steps.extend_from_slice(&schedule.steps[..active]);
        if active > 0 {
            soc = schedule.steps[active - 1].soc;
        }
        for _ in active..block_len {
            steps.push(ScheduleStep { soc, ..ScheduleStep::IDLE });
        }
        blocks.push(Block {
            start,
            len: block_len,
            issuance,
            soc_start,
            soc_end: soc,
            idle: block_len - active,
        });
        start += block_len;
    }

    let mut committed = Schedule {
        steps,
        objective: 0.0,
        step_hours,
        stats,
    };
    let realized = realized_revenue(&committed, ground_truth_spot, market)?;
    committed.objective = realized;
    Ok(MpcRun {
        committed,
        realized_revenue: realized,
        per_window_objectives: per_window,
        blocks,
        config: *config,
    })
}

/// Record written by `horizon run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub dataset_id: String,
    pub battery_id: String,
    pub uf: f64,
    pub horizon: usize,
    pub stride: usize,
    pub realized_revenue_eur: f64,
}
