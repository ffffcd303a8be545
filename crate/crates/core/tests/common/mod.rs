//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use horizon_core::battery::{BatterySpec, MarketParams, Schedule};
use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;

/// Exact optimum of the window MILP by dynamic programming over a SoC grid
/// of `cells + 1` points. Exact when `soc_start`, `eta * P_c * dt` and
/// `P_d * dt` are all multiples of `capacity / cells`.
pub fn dp_oracle(
    buy: &[f64],
    sell: &[f64],
    battery: &BatterySpec,
    market: &MarketParams,
    soc_start: f64,
    step_hours: f64,
    cells: usize,
) -> f64 {
    let (gin, gout) = market.grid_caps(battery);
    let unit = battery.capacity / cells as f64;
    let start = (soc_start / unit).round() as usize;
    let up = ((battery.efficiency * battery.p_charge_max.min(gin) * step_hours) / unit + 1e-9).floor() as usize;
    let down = ((battery.p_discharge_max.min(gout) * step_hours) / unit + 1e-9).floor() as usize;
    let mut value = vec![f64::NEG_INFINITY; cells + 1];
    value[start] = 0.0;
    for t in 0..buy.len() {
        let mut next = vec![f64::NEG_INFINITY; cells + 1];
        for (k, &v) in value.iter().enumerate() {
            if v == f64::NEG_INFINITY {
                continue;
            }
            for k2 in k.saturating_sub(down)..=(k + up).min(cells) {
                let delta = (k2 as f64 - k as f64) * unit;
                let gain = if delta >= 0.0 {
                    -buy[t] * delta / battery.efficiency
                } else {
                    sell[t] * -delta
                };
                if v + gain > next[k2] {
                    next[k2] = v + gain;
                }
            }
        }
        value = next;
    }
    value.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Largest violation of the schedule's physical and accounting invariants.
pub fn feasibility_violation(
    schedule: &Schedule,
    buy: &[f64],
    sell: &[f64],
    battery: &BatterySpec,
    market: &MarketParams,
    soc_start: f64,
) -> f64 {
    let (gin_cap, gout_cap) = market.grid_caps(battery);
    let dt = schedule.step_hours;
    let mut worst = 0.0f64;
    let mut prev = soc_start;
    let mut revenue = 0.0;
    for (t, s) in schedule.steps.iter().enumerate() {
        let below = |v: f64| (-v).max(0.0);
        let above = |v: f64, ub: f64| (v - ub).max(0.0);
        worst = worst
            .max(below(s.charge))
            .max(below(s.discharge))
            .max(below(s.grid_in))
            .max(below(s.grid_out))
            .max(below(s.soc))
            .max(above(s.charge, battery.p_charge_max))
            .max(above(s.discharge, battery.p_discharge_max))
            .max(above(s.grid_in, gin_cap))
            .max(above(s.grid_out, gout_cap))
            .max(above(s.soc, battery.capacity))
            .max((s.grid_in + s.discharge - s.grid_out - s.charge).abs())
            .max((s.soc - prev - (battery.efficiency * s.charge - s.discharge) * dt).abs())
            .max(s.charge.min(s.discharge))
            .max(s.grid_in.min(s.grid_out));
        prev = s.soc;
        revenue += (sell[t] * s.grid_out - buy[t] * s.grid_in) * dt;
    }
    worst.max((revenue - schedule.objective).abs())
}

/// Random battery whose SoC steps fall on a grid of 100 cells.
pub fn grid_battery(rng: &mut StdRng) -> BatterySpec {
    let capacity = [1.0, 2.0][rng.random_range(0..2)];
    let efficiency = [1.0, 0.9, 0.8, 0.6, 0.5][rng.random_range(0..5)];
    let unit = capacity / 100.0;
    let up = rng.random_range(10..=100) as f64 * unit;
    let down = rng.random_range(10..=100) as f64 * unit;
    BatterySpec {
        capacity,
        p_charge_max: up / efficiency,
        p_discharge_max: down,
        efficiency,
        soc_initial: rng.random_range(0..=100) as f64 * unit,
    }
}

/// Straightforward SARIMA(1,0,0)(1,0,0,s) recursion with its own generator:
/// `z_t = a z_{t-1} + b z_{t-s} - a b z_{t-s-1} + e_t`.
pub fn seasonal_ar1_reference(a: f64, b: f64, s: usize, variance: f64, length: usize, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let burn = 50 * s;
    let sd = variance.sqrt();
    let mut z = vec![0.0; burn + length];
    for t in 0..z.len() {
        let e = sd * box_muller(&mut rng);
        let lag = |k: usize| if t >= k { z[t - k] } else { 0.0 };
        z[t] = a * lag(1) + b * lag(s) - a * b * lag(s + 1) + e;
    }
    z.split_off(burn)
}

/// Standard normal draw from two uniforms.
pub fn box_muller(rng: &mut StdRng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Sample autocorrelation at `lag`.
pub fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    let m = mean(x);
    let den: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    let num: f64 = x.windows(lag + 1).map(|w| (w[0] - m) * (w[lag] - m)).sum();
    num / den
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
