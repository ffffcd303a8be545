//! Battery arbitrage over one optimization window.

mod milp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Series;

pub use milp::{
    lp_relaxation_solve, solve_window, RelaxedSolution, Schedule, ScheduleStep, SolverStats,
    WindowModel,
};

/// Physical storage parameters. Energy in MWh, power in MW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySpec {
    pub capacity: f64,
    pub p_charge_max: f64,
    pub p_discharge_max: f64,
    /// Charge-side efficiency in `(0, 1]`; discharge is lossless.
    pub efficiency: f64,
    pub soc_initial: f64,
}

impl BatterySpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("capacity", self.capacity)?;
        positive("p_charge_max", self.p_charge_max)?;
        positive("p_discharge_max", self.p_discharge_max)?;
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::invalid(format!(
                "efficiency must lie in (0, 1], got {}",
                self.efficiency
            )));
        }
        if !(0.0..=self.capacity).contains(&self.soc_initial) {
            return Err(Error::invalid(format!(
                "soc_initial {} outside [0, {}]",
                self.soc_initial, self.capacity
            )));
        }
        Ok(())
    }

    /// Hours needed to fully discharge at rated power.
    pub fn cycle_hours(&self) -> f64 {
        self.capacity / self.p_discharge_max
    }
}

/// Buy/sell spread and grid connection limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    #[serde(default = "MarketParams::default_buy_multiplier")]
    pub buy_multiplier: f64,
    #[serde(default = "MarketParams::default_buy_offset")]
    pub buy_offset: f64,
    #[serde(default = "MarketParams::default_sell_offset")]
    pub sell_offset: f64,
    /// MW; `None` means `max(P_c, P_d)` of the battery being scheduled.
    #[serde(default)]
    pub grid_import_cap: Option<f64>,
    #[serde(default)]
    pub grid_export_cap: Option<f64>,
}

impl Default for MarketParams {
    fn default() -> Self {
        Self {
            buy_multiplier: Self::default_buy_multiplier(),
            buy_offset: Self::default_buy_offset(),
            sell_offset: Self::default_sell_offset(),
            grid_import_cap: None,
            grid_export_cap: None,
        }
    }
}

impl MarketParams {
    fn default_buy_multiplier() -> f64 {
        1.2
    }
    fn default_buy_offset() -> f64 {
        0.07
    }
    fn default_sell_offset() -> f64 {
        0.01
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.buy_multiplier.is_finite() && self.buy_multiplier >= 1.0) {
            return Err(Error::invalid("buy_multiplier must be >= 1"));
        }
        if !(self.buy_offset.is_finite() && self.sell_offset.is_finite()) {
            return Err(Error::invalid("price offsets must be finite"));
        }
        for cap in [self.grid_import_cap, self.grid_export_cap].into_iter().flatten() {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(Error::invalid(format!("grid caps must be > 0, got {cap}")));
            }
        }
        Ok(())
    }

    /// (import, export) caps in MW for `battery`.
    pub fn grid_caps(&self, battery: &BatterySpec) -> (f64, f64) {
        let default = battery.p_charge_max.max(battery.p_discharge_max);
        (
            self.grid_import_cap.unwrap_or(default),
            self.grid_export_cap.unwrap_or(default),
        )
    }

    pub fn buy_price(&self, spot: f64) -> f64 {
        self.buy_multiplier * spot + self.buy_offset
    }

    pub fn sell_price(&self, spot: f64) -> f64 {
        spot - self.sell_offset
    }
}

/// Pointwise `buy = multiplier * spot + buy_offset`, `sell = spot - sell_offset`.
pub fn split_prices(spot: &Series, market: &MarketParams) -> Result<(Series, Series)> {
    let buy = spot.values().iter().map(|&p| market.buy_price(p)).collect();
    let sell = spot.values().iter().map(|&p| market.sell_price(p)).collect();
    Ok((
        Series::new(spot.step_hours(), buy)?,
        Series::new(spot.step_hours(), sell)?,
    ))
}
