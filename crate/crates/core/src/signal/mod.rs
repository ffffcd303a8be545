//! Synthetic ground-truth price generation.
//!
//! A ground-truth series is a Fourier backbone, min-max normalized to
//! `[-1, 1]`, passed through a signed power `sign(x)|x|^gamma`, rescaled to a
//! target price range, and finally mixed with a weighted SARIMA realization.

mod calibrate;
mod sarima;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Series;

pub use calibrate::{amplitude_for_target, fit_harmonics, residual_norm, revenue_proxy};
pub use sarima::{simulate_sarima, SarimaParams};

/// One sinusoid `amplitude * sin(2 pi frequency t + phase)`, `t` in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicComponent {
    /// EUR/MWh.
    pub amplitude: f64,
    /// Cycles per hour.
    pub frequency: f64,
    /// Radians.
    pub phase: f64,
}

impl HarmonicComponent {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        let h = Self {
            amplitude,
            frequency,
            phase,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::invalid(format!(
                "harmonic amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::invalid(format!(
                "harmonic frequency must be > 0, got {}",
                self.frequency
            )));
        }
        if !self.phase.is_finite() {
            return Err(Error::invalid("harmonic phase must be finite"));
        }
        Ok(())
    }

    pub fn eval(&self, t_hours: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.frequency * t_hours + self.phase).sin()
    }
}

/// Recipe for one synthetic ground-truth series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub harmonics: Vec<HarmonicComponent>,
    /// Shaping exponent applied after normalization; must be > 0.
    pub shape_exponent: f64,
    /// Price range (min, max) of the shaped backbone, EUR/MWh.
    pub target_range: (f64, f64),
    pub sarima: SarimaParams,
    /// Mixing weight of the SARIMA component.
    pub sarima_weight: f64,
    /// Number of samples.
    pub length: usize,
    #[serde(default = "default_step_hours")]
    pub step_hours: f64,
    #[serde(default)]
    pub clip_bounds: Option<(f64, f64)>,
    pub seed: u64,
}

fn default_step_hours() -> f64 {
    1.0
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.harmonics.is_empty() {
            return Err(Error::NoHarmonics);
        }
        for h in &self.harmonics {
            h.validate()?;
        }
        if !(self.shape_exponent.is_finite() && self.shape_exponent > 0.0) {
            return Err(Error::invalid("shape_exponent must be > 0"));
        }
        let (lo, hi) = self.target_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid("target_range must satisfy min < max"));
        }
        if !(self.sarima_weight.is_finite() && self.sarima_weight >= 0.0) {
            return Err(Error::invalid("sarima_weight must be >= 0"));
        }
        if self.length == 0 {
            return Err(Error::invalid("length must be >= 1"));
        }
        if !(self.step_hours.is_finite() && self.step_hours > 0.0) {
            return Err(Error::invalid("step_hours must be > 0"));
        }
        if let Some((lo, hi)) = self.clip_bounds {
            if !(lo < hi) {
                return Err(Error::invalid("clip_bounds must satisfy min < max"));
            }
        }
        self.sarima.validate()
    }
}

/// Sum of sinusoids sampled at `t = i * step_hours`, `i = 0..length`.
pub fn fourier_backbone(
    harmonics: &[HarmonicComponent],
    length: usize,
    step_hours: f64,
) -> Result<Series> {
    if harmonics.is_empty() {
        return Err(Error::NoHarmonics);
    }
    if length == 0 {
        return Err(Error::invalid("length must be >= 1"));
    }
    let values = (0..length)
        .map(|i| {
            let t = i as f64 * step_hours;
            harmonics.iter().map(|h| h.eval(t)).sum()
        })
        .collect();
    Series::new(step_hours, values)
}

/// Signed power of a value already normalized to `[-1, 1]`.
pub fn shape_value(x: f64, gamma: f64) -> f64 {
    x.signum() * x.abs().powf(gamma)
}

/// Normalizes `raw` to `[-1, 1]`, applies the signed power `gamma` and maps
/// the result affinely onto `target_range`.
pub fn shape_and_scale(raw: &Series, gamma: f64, target_range: (f64, f64)) -> Result<Series> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be > 0, got {gamma}")));
    }
    let (lo, hi) = target_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::invalid("target_range must satisfy min <= max"));
    }
    let (min, max) = (raw.min(), raw.max());
    let span = max - min;
    if !(span > 0.0) {
        return Err(Error::DegenerateNormalization);
    }
    let values = raw
        .values()
        .iter()
        .map(|&x| {
            let normalized = 2.0 * (x - min) / span - 1.0;
            let shaped = shape_value(normalized, gamma);
            lo + (shaped + 1.0) * 0.5 * (hi - lo)
        })
        .collect();
    Series::new(raw.step_hours(), values)
}

/// The shaped and scaled backbone of `spec`, without the stochastic part.
pub fn shaped_backbone(spec: &SignalSpec) -> Result<Series> {
    let raw = fourier_backbone(&spec.harmonics, spec.length, spec.step_hours)?;
    shape_and_scale(&raw, spec.shape_exponent, spec.target_range)
}

/// Builds the ground truth `backbone + weight * sarima`, clipped if the spec
/// asks for it. Pure in `spec`.
pub fn compose_ground_truth(spec: &SignalSpec) -> Result<Series> {
    spec.validate()?;
    let backbone = shaped_backbone(spec)?;
    let mut values = backbone.into_values();
    if spec.sarima_weight > 0.0 {
        let noise = simulate_sarima(&spec.sarima, spec.length, spec.seed)?;
        for (v, z) in values.iter_mut().zip(noise.values()) {
            *v += spec.sarima_weight * z;
        }
    }
    if let Some((lo, hi)) = spec.clip_bounds {
        for v in values.iter_mut() {
            *v = v.clamp(lo, hi);
        }
    }
    Series::new(spec.step_hours, values)
}
