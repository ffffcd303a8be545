//! Rolling synthetic forecasts.
//!
//! A forecast issued at step `t` covers steps `t..t+horizon` (truncated at
//! the end of the ground truth). Its value at lead `l` is
//! `GT(t+l) + mean_bias + sigma(l) * e_l`, where `e` is a unit-variance
//! stationary AR(1) path drawn from a stream dedicated to that issuance.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::series::{format_number, Series};

/// How the error standard deviation grows with lead time (hours).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaGrowth {
    /// `sigma_base + slope * lead`
    Linear { slope: f64 },
    /// `sigma_base * exp(rate * lead)`
    Exponential { rate: f64 },
    /// `(sigma_base + slope * lead) * (1 + modulation * sin(2 pi lead / period_hours))`
    Seasonal {
        slope: f64,
        modulation: f64,
        period_hours: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorModel {
    /// AR(1) autocorrelation of the error path, in `[0, 1)`.
    pub rho: f64,
    #[serde(default)]
    pub mean_bias: f64,
    /// Standard deviation at lead 0, EUR/MWh.
    pub sigma_base: f64,
    pub growth: SigmaGrowth,
    #[serde(default = "one")]
    pub uncertainty_factor: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ErrorModel {
    fn default() -> Self {
        Self {
            rho: 0.7,
            mean_bias: 0.0,
            sigma_base: 2.0,
            growth: SigmaGrowth::Linear { slope: 0.2 },
            uncertainty_factor: 1.0,
        }
    }
}

impl ErrorModel {
    pub fn with_uncertainty_factor(mut self, uf: f64) -> Self {
        self.uncertainty_factor = uf;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_rho(self.rho)?;
        let finite_nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        finite_nonneg("sigma_base", self.sigma_base)?;
        finite_nonneg("uncertainty_factor", self.uncertainty_factor)?;
        if !self.mean_bias.is_finite() {
            return Err(Error::invalid("mean_bias must be finite"));
        }
        match self.growth {
            SigmaGrowth::Linear { slope } => finite_nonneg("slope", slope),
            SigmaGrowth::Exponential { rate } => finite_nonneg("rate", rate),
            SigmaGrowth::Seasonal {
                slope,
                modulation,
                period_hours,
            } => {
                finite_nonneg("slope", slope)?;
                finite_nonneg("modulation", modulation)?;
                if period_hours.is_finite() && period_hours > 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid("period_hours must be > 0"))
                }
            }
        }
    }

    /// Unclamped sigma; negative only for seasonal growth with modulation > 1.
    fn raw_sigma(&self, lead_hours: f64) -> f64 {
        let uf = self.uncertainty_factor;
        match self.growth {
            SigmaGrowth::Linear { slope } => uf * (self.sigma_base + slope * lead_hours),
            SigmaGrowth::Exponential { rate } => uf * self.sigma_base * (rate * lead_hours).exp(),
            SigmaGrowth::Seasonal {
                slope,
                modulation,
                period_hours,
            } => {
                uf * (self.sigma_base + slope * lead_hours)
                    * (1.0 + modulation * (2.0 * PI * lead_hours / period_hours).sin())
            }
        }
    }

    /// Whether `sigma_profile` clamps any lead in `0..steps` to zero.
    pub fn clamps_within(&self, steps: usize, step_hours: f64) -> bool {
        (0..steps).any(|l| self.raw_sigma(l as f64 * step_hours) < 0.0)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::invalid(format!("rho must lie in [0, 1), got {rho}")))
    }
}

/// Forecast error standard deviation at `lead_hours`, clamped at zero.
pub fn sigma_profile(model: &ErrorModel, lead_hours: f64) -> Result<f64> {
    if !(lead_hours.is_finite() && lead_hours >= 0.0) {
        return Err(Error::invalid(format!("lead must be >= 0, got {lead_hours}")));
    }
    Ok(model.raw_sigma(lead_hours).max(0.0))
}

fn ar1_from(rng: &mut Rng, rho: f64, length: usize) -> Vec<f64> {
    let innovation_scale = (1.0 - rho * rho).sqrt();
    let mut path = Vec::with_capacity(length);
    let mut prev: f64 = StandardNormal.sample(rng);
    if length > 0 {
        path.push(prev);
    }
    for _ in 1..length {
        let eta: f64 = StandardNormal.sample(rng);
        prev = rho * prev + innovation_scale * eta;
        path.push(prev);
    }
    path
}

/// Stationary unit-variance AR(1) path `e_t = rho e_{t-1} + sqrt(1-rho^2) n_t`,
/// `e_0 ~ N(0, 1)`.
pub fn ar1_error_path(rho: f64, length: usize, seed: u64) -> Result<Series> {
    check_rho(rho)?;
    if length == 0 {
        return Err(Error::invalid("length must be >= 1"));
    }
    Series::hourly(ar1_from(&mut rng::stream(seed, 0), rho, length))
}

/// One forecast issuance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub issue_step: usize,
    pub values: Series,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSet {
    pub publication_interval_hours: usize,
    pub forecast_horizon_hours: usize,
    pub step_hours: f64,
    pub forecasts: Vec<Forecast>,
    /// Set when the sigma profile had to be clamped at zero somewhere.
    #[serde(default)]
    pub sigma_clamped: bool,
}

pub(crate) fn hours_to_steps(hours: usize, step_hours: f64, what: &str) -> Result<usize> {
    let steps = hours as f64 / step_hours;
    if hours == 0 || (steps - steps.round()).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "{what} of {hours} h is not a positive multiple of the {step_hours} h step"
        )));
    }
    Ok(steps.round() as usize)
}

impl ForecastSet {
    pub fn interval_steps(&self) -> usize {
        (self.publication_interval_hours as f64 / self.step_hours).round() as usize
    }

    /// The forecast issued at `step`, if any.
    pub fn issued_at(&self, step: usize) -> Option<&Forecast> {
        let interval = self.interval_steps();
        if interval == 0 || !step.is_multiple_of(interval) {
            return None;
        }
        self.forecasts
            .get(step / interval)
            .filter(|f| f.issue_step == step)
    }

    /// Writes `issue_step,lead_hours,value_eur_mwh` CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["issue_step", "lead_hours", "value_eur_mwh"])?;
        for f in &self.forecasts {
            for (lead, v) in f.values.values().iter().enumerate() {
                w.write_record([
                    f.issue_step.to_string(),
                    format_number(lead as f64 * self.step_hours),
                    format_number(*v),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Reads the CSV written by [`ForecastSet::write_csv`]. Interval and
    /// horizon are supplied by the caller since the file does not carry them.
    pub fn read_csv<R: Read>(
        reader: R,
        publication_interval_hours: usize,
        forecast_horizon_hours: usize,
        step_hours: f64,
    ) -> Result<ForecastSet> {
        let mut r = csv::Reader::from_reader(reader);
        let mut forecasts: Vec<(usize, Vec<f64>)> = Vec::new();
        for record in r.records() {
            let record = record?;
            let field = |i: usize, name: &str| -> Result<f64> {
                record
                    .get(i)
                    .ok_or_else(|| schema(name, "missing column"))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| schema(name, &e.to_string()))
            };
            let issue = field(0, "issue_step")? as usize;
            let value = field(2, "value_eur_mwh")?;
            match forecasts.last_mut() {
                Some((step, values)) if *step == issue => values.push(value),
                _ => forecasts.push((issue, vec![value])),
            }
        }
        let forecasts = forecasts
            .into_iter()
            .map(|(issue_step, values)| {
                Ok(Forecast {
                    issue_step,
                    values: Series::new(step_hours, values)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ForecastSet {
            publication_interval_hours,
            forecast_horizon_hours,
            step_hours,
            forecasts,
            sigma_clamped: false,
        })
    }
}

fn schema(field: &str, reason: &str) -> Error {
    Error::Schema {
        file: "<forecast csv>".into(),
        field: field.into(),
        reason: reason.into(),
    }
}

/// Issues a forecast every `publication_interval_hours`, starting at step 0,
/// for as long as the issuance step lies inside the ground truth.
pub fn issue_forecasts(
    ground_truth: &Series,
    model: &ErrorModel,
    publication_interval_hours: usize,
    horizon_hours: usize,
    seed: u64,
) -> Result<ForecastSet> {
    model.validate()?;
    let step_hours = ground_truth.step_hours();
    let interval = hours_to_steps(publication_interval_hours, step_hours, "publication interval")?;
    let horizon = hours_to_steps(horizon_hours, step_hours, "forecast horizon")?;
    // Unit-factor profile scaled last, so the error at u.f. = k is exactly k
    // times the error at u.f. = 1 for the same draws.
    let unit = model.with_uncertainty_factor(1.0);
    let sigmas = (0..horizon)
        .map(|l| sigma_profile(&unit, l as f64 * step_hours))
        .collect::<Result<Vec<_>>>()?;
    let uf = model.uncertainty_factor;

    let gt = ground_truth.values();
    let forecasts = (0..gt.len())
        .step_by(interval)
        .enumerate()
        .map(|(index, issue_step)| {
            let end = (issue_step + horizon).min(gt.len());
            let len = end - issue_step;
            let errors = ar1_from(&mut rng::stream(seed, index as u64), model.rho, len);
            let values = gt[issue_step..end]
                .iter()
                .zip(&errors)
                .zip(&sigmas)
                .map(|((truth, e), sigma)| truth + model.mean_bias + uf * (sigma * e))
                .collect();
            Ok(Forecast {
                issue_step,
                values: Series::new(step_hours, values)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ForecastSet {
        publication_interval_hours,
        forecast_horizon_hours: horizon_hours,
        step_hours,
        forecasts,
        sigma_clamped: model.clamps_within(horizon, step_hours),
    })
}
