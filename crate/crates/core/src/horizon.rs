//! Revenue-versus-horizon curves and the quantities derived from them.
//!
//! All derived quantities are pure functions of a stored [`Curve`]; the
//! plateau test uses `max - epsilon * |max|`, which equals `(1 - epsilon) * max`
//! whenever the maximum is positive.

use rayon::prelude::*;
use serde::Serialize;

use crate::battery::{BatterySpec, MarketParams};
use crate::error::{Error, Result};
use crate::forecast::ForecastSet;
use crate::mpc::{run_mpc, MpcConfig};
use crate::series::Series;

pub const DEFAULT_EPSILON: f64 = 0.001;

/// Revenue per horizon; horizons strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    horizons: Vec<usize>,
    revenues: Vec<f64>,
}

impl Curve {
    pub fn new(horizons: Vec<usize>, revenues: Vec<f64>) -> Result<Self> {
        if horizons.is_empty() {
            return Err(Error::invalid("curve is empty"));
        }
        if horizons.len() != revenues.len() {
            return Err(Error::LengthMismatch {
                expected: horizons.len(),
                actual: revenues.len(),
            });
        }
        if horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("curve horizons must be strictly increasing"));
        }
        if revenues.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("curve revenues must be finite"));
        }
        Ok(Self { horizons, revenues })
    }

    pub fn horizons(&self) -> &[usize] {
        &self.horizons
    }

    pub fn revenues(&self) -> &[f64] {
        &self.revenues
    }

    pub fn len(&self) -> usize {
        self.horizons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.horizons.is_empty()
    }

    /// Index of the first maximum.
    fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &r) in self.revenues.iter().enumerate() {
            if r > self.revenues[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_revenue(&self) -> f64 {
        self.revenues[self.argmax()]
    }
}

/// Smallest horizon whose revenue reaches `max - epsilon * |max|`.
pub fn effective_horizon(curve: &Curve, epsilon: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("epsilon {epsilon} outside [0, 1)")));
    }
    let max = curve.max_revenue();
    let threshold = max - epsilon * max.abs();
    let i = curve
        .revenues
        .iter()
        .position(|&r| r >= threshold)
        .expect("the maximum always meets its own threshold");
    Ok(curve.horizons[i])
}

/// Horizon of the maximum revenue; ties go to the smallest horizon.
pub fn optimal_horizon(curve: &Curve) -> usize {
    curve.horizons[curve.argmax()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Gap {
    pub hours: i64,
    pub negative: bool,
}

/// `h_eff - h_opt`, signed.
pub fn uncertainty_gap(h_eff: usize, h_opt: usize) -> Gap {
    let hours = h_eff as i64 - h_opt as i64;
    Gap {
        hours,
        negative: hours < 0,
    }
}

/// Percent drop from the maximum to the lowest revenue at or after the optimum.
/// `None` when the maximum is not positive.
pub fn loss_beyond_optimum(curve: &Curve) -> Option<f64> {
    let best = curve.argmax();
    let max = curve.revenues[best];
    if max <= 0.0 {
        return None;
    }
    let min_after = curve.revenues[best..].iter().copied().fold(f64::INFINITY, f64::min);
    Some(100.0 * (max - min_after) / max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub curve: Curve,
    pub h_opt: usize,
    /// Taken from the reference curve.
    pub h_eff: usize,
    pub gap: Gap,
    pub loss_percent: Option<f64>,
    pub epsilon: f64,
    /// The forecast curve or the reference curve has a non-positive maximum.
    pub nonpositive_max: bool,
}

impl SweepResult {
    /// Derives all fields from `curve` and a perfect-information `reference`
    /// over the same horizons.
    pub fn derive(curve: Curve, reference: &Curve, epsilon: f64) -> Result<Self> {
        if curve.horizons != reference.horizons {
            return Err(Error::invalid("reference curve covers different horizons"));
        }
        let h_eff = effective_horizon(reference, epsilon)?;
        let h_opt = optimal_horizon(&curve);
        let loss_percent = loss_beyond_optimum(&curve);
        let nonpositive_max = curve.max_revenue() <= 0.0 || reference.max_revenue() <= 0.0;
        Ok(Self {
            h_opt,
            h_eff,
            gap: uncertainty_gap(h_eff, h_opt),
            loss_percent,
            epsilon,
            nonpositive_max,
            curve,
        })
    }
}

/// Fixed inputs of a horizon sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepInputs<'a> {
    pub ground_truth: &'a Series,
    pub forecasts: &'a ForecastSet,
    pub battery: &'a BatterySpec,
    pub market: &'a MarketParams,
    pub stride_hours: usize,
}

/// One MPC run per horizon, all on the same forecast realization. Runs are
/// independent and execute on the current rayon pool.
pub fn sweep_horizons(inputs: &SweepInputs<'_>, horizons: &[usize]) -> Result<Curve> {
    if horizons.is_empty() {
        return Err(Error::invalid("horizon grid is empty"));
    }
    let revenues = horizons
        .par_iter()
        .map(|&h| {
            let config = MpcConfig::new(h, inputs.stride_hours, inputs.forecasts.publication_interval_hours);
            run_mpc(inputs.ground_truth, inputs.forecasts, inputs.battery, inputs.market, &config)
                .map(|run| run.realized_revenue)
        })
        .collect::<Result<Vec<_>>>()?;
    Curve::new(horizons.to_vec(), revenues)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(r: &[f64]) -> Curve {
        Curve::new((1..=r.len()).collect(), r.to_vec()).unwrap()
    }

    #[test]
    fn effective_horizon_examples() {
        let c = curve(&[5.0, 9.0, 10.0, 10.0, 10.0]);
        assert_eq!(effective_horizon(&c, 0.0).unwrap(), 3);
        assert_eq!(effective_horizon(&c, 0.15).unwrap(), 2);
        assert_eq!(effective_horizon(&curve(&[4.0; 6]), 0.0).unwrap(), 1);
        assert!(effective_horizon(&c, 1.0).is_err());
    }

    #[test]
    fn negative_max_uses_absolute_slack() {
        let c = curve(&[-12.0, -10.5, -10.0]);
        assert_eq!(effective_horizon(&c, 0.1).unwrap(), 2);
        assert_eq!(loss_beyond_optimum(&c), None);
    }

    #[test]
    fn optimal_horizon_examples() {
        assert_eq!(optimal_horizon(&curve(&[5.0, 9.0, 10.0, 8.0, 7.0])), 3);
        assert_eq!(optimal_horizon(&curve(&[10.0, 10.0, 7.0])), 1);
        assert_eq!(optimal_horizon(&curve(&[1.0, 2.0, 3.0])), 3);
    }

    #[test]
    fn gap_and_loss_examples() {
        assert_eq!(uncertainty_gap(10, 7), Gap { hours: 3, negative: false });
        assert_eq!(uncertainty_gap(5, 5).hours, 0);
        assert_eq!(uncertainty_gap(3, 5), Gap { hours: -2, negative: true });
        assert_eq!(loss_beyond_optimum(&curve(&[5.0, 9.0, 10.0, 8.0, 7.0])), Some(30.0));
        assert_eq!(loss_beyond_optimum(&curve(&[5.0, 10.0, 10.0])), Some(0.0));
    }

    #[test]
    fn curve_validation() {
        assert!(Curve::new(vec![], vec![]).is_err());
        assert!(Curve::new(vec![1, 1], vec![0.0, 0.0]).is_err());
        assert!(Curve::new(vec![1, 2], vec![0.0]).is_err());
    }

    #[test]
    fn derive_takes_h_eff_from_reference() {
        let reference = curve(&[1.0, 5.0, 10.0, 10.0]);
        let noisy = curve(&[2.0, 6.0, 4.0, 3.0]);
        let r = SweepResult::derive(noisy, &reference, 0.0).unwrap();
        assert_eq!((r.h_opt, r.h_eff, r.gap.hours), (2, 3, 1));
        assert_eq!(r.loss_percent, Some(50.0));
    }
}
