//! Revenue proxy and harmonic calibration helpers.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::HarmonicComponent;
use crate::error::{Error, Result};
use crate::series::Series;

/// Average total variation per day: `(1/D) * sum |p(t+1) - p(t)|` with
/// `D = len * step_hours / 24`.
pub fn revenue_proxy(series: &Series) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::invalid("revenue proxy needs at least two samples"));
    }
    let per_day = 24.0 / series.step_hours();
    if (per_day - per_day.round()).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "step of {} h does not divide a day",
            series.step_hours()
        )));
    }
    let variation: f64 = series.values().windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let days = series.len() as f64 * series.step_hours() / 24.0;
    Ok(variation / days)
}

/// Amplitude of a zero-phase sine of period `period_hours` whose revenue
/// proxy over `length` samples equals `target` EUR/day.
pub fn amplitude_for_target(
    target: f64,
    period_hours: f64,
    length: usize,
    step_hours: f64,
) -> Result<f64> {
    if !(target.is_finite() && target >= 0.0) {
        return Err(Error::invalid(format!("target must be >= 0, got {target}")));
    }
    if !(period_hours.is_finite() && period_hours > 0.0) {
        return Err(Error::invalid("period_hours must be > 0"));
    }
    let unit = HarmonicComponent::new(1.0, 1.0 / period_hours, 0.0)?;
    let sine = super::fourier_backbone(&[unit], length, step_hours)?;
    let per_day_variation = revenue_proxy(&sine)?;
    if per_day_variation <= 1e-9 {
        return Err(Error::invalid(
            "unit sine has no variation at this sampling (degenerate period)",
        ));
    }
    Ok(target / per_day_variation)
}

/// Least-squares fit onto `{sin, cos}(2 pi k t / base_period)`,
/// `k = 1..=n_harmonics`, returned in amplitude/phase form.
pub fn fit_harmonics(
    series: &Series,
    n_harmonics: usize,
    base_period_hours: f64,
) -> Result<Vec<HarmonicComponent>> {
    if n_harmonics == 0 {
        return Err(Error::invalid("n_harmonics must be >= 1"));
    }
    if !(base_period_hours.is_finite() && base_period_hours > 0.0) {
        return Err(Error::invalid("base_period_hours must be > 0"));
    }
    let n = series.len();
    let cols = 2 * n_harmonics;
    if n < cols + 1 {
        return Err(Error::RankDeficient(format!(
            "{n} samples cannot determine {n_harmonics} harmonics"
        )));
    }
    let design = DMatrix::from_fn(n, cols, |row, col| {
        let t = row as f64 * series.step_hours();
        let k = (col / 2 + 1) as f64;
        let arg = 2.0 * PI * k * t / base_period_hours;
        if col % 2 == 0 {
            arg.sin()
        } else {
            arg.cos()
        }
    });
    let rhs = DVector::from_column_slice(series.values());
    let svd = design.svd(true, true);
    let largest = svd.singular_values.max();
    let tol = largest * 1e-10 * n.max(cols) as f64;
    if svd.singular_values.iter().any(|s| *s <= tol) {
        return Err(Error::RankDeficient(
            "harmonic basis is linearly dependent at this sampling".into(),
        ));
    }
    let coeffs = svd
        .solve(&rhs, tol)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;

    (0..n_harmonics)
        .map(|k| {
            let (a, b) = (coeffs[2 * k], coeffs[2 * k + 1]);
            // a sin(x) + b cos(x) = A sin(x + phi)
            HarmonicComponent::new(a.hypot(b), (k + 1) as f64 / base_period_hours, b.atan2(a))
        })
        .collect()
}

/// Euclidean norm of `series - fourier_backbone(harmonics)`.
pub fn residual_norm(series: &Series, harmonics: &[HarmonicComponent]) -> Result<f64> {
    let fitted = super::fourier_backbone(harmonics, series.len(), series.step_hours())?;
    Ok(series
        .values()
        .iter()
        .zip(fitted.values())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt())
}
