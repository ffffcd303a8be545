use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::series::Series;

/// Burn-in length, in seasonal periods, discarded before the returned sample.
const BURN_IN_PERIODS: usize = 10;

/// Multiplicative SARIMA(p,d,q)(P,D,Q,s) parameters.
///
/// Sign convention: `z_t = ar[0] z_{t-1} + ... + e_t + ma[0] e_{t-1} + ...`,
/// i.e. the AR polynomial is `1 - sum(ar_i L^i)` and the MA polynomial is
/// `1 + sum(ma_i L^i)`; seasonal polynomials act on `L^s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SarimaParams {
    /// (p, d, q)
    pub nonseasonal_order: (usize, usize, usize),
    /// (P, D, Q, s)
    pub seasonal_order: (usize, usize, usize, usize),
    #[serde(default)]
    pub ar_coeffs: Vec<f64>,
    #[serde(default)]
    pub seasonal_ar_coeffs: Vec<f64>,
    #[serde(default)]
    pub ma_coeffs: Vec<f64>,
    #[serde(default)]
    pub seasonal_ma_coeffs: Vec<f64>,
    pub innovation_variance: f64,
}

impl SarimaParams {
    /// SARIMA(1,0,0)(1,0,0,s).
    pub fn seasonal_ar1(ar: f64, seasonal_ar: f64, period: usize, variance: f64) -> Self {
        Self {
            nonseasonal_order: (1, 0, 0),
            seasonal_order: (1, 0, 0, period),
            ar_coeffs: vec![ar],
            seasonal_ar_coeffs: vec![seasonal_ar],
            ma_coeffs: vec![],
            seasonal_ma_coeffs: vec![],
            innovation_variance: variance,
        }
    }

    /// All orders zero: Gaussian white noise.
    pub fn white_noise(variance: f64) -> Self {
        Self {
            nonseasonal_order: (0, 0, 0),
            seasonal_order: (0, 0, 0, 1),
            ar_coeffs: vec![],
            seasonal_ar_coeffs: vec![],
            ma_coeffs: vec![],
            seasonal_ma_coeffs: vec![],
            innovation_variance: variance,
        }
    }

    pub fn period(&self) -> usize {
        self.seasonal_order.3
    }

    pub fn validate(&self) -> Result<()> {
        let (p, d, q) = self.nonseasonal_order;
        let (sp, sd, sq, s) = self.seasonal_order;
        if s < 1 {
            return Err(Error::invalid("seasonal period s must be >= 1"));
        }
        if !(self.innovation_variance.is_finite() && self.innovation_variance >= 0.0) {
            return Err(Error::invalid("innovation_variance must be >= 0"));
        }
        let check_len = |name: &str, coeffs: &[f64], order: usize| {
            if coeffs.len() != order {
                return Err(Error::invalid(format!(
                    "{name} has {} coefficients but order {order}",
                    coeffs.len()
                )));
            }
            if coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid(format!("{name} contains a non-finite value")));
            }
            Ok(())
        };
        check_len("ar_coeffs", &self.ar_coeffs, p)?;
        check_len("ma_coeffs", &self.ma_coeffs, q)?;
        check_len("seasonal_ar_coeffs", &self.seasonal_ar_coeffs, sp)?;
        check_len("seasonal_ma_coeffs", &self.seasonal_ma_coeffs, sq)?;
        if d > 1 || sd > 1 {
            return Err(Error::invalid("differencing orders above 1 are not supported"));
        }
        if let Some(c) = self
            .ar_coeffs
            .iter()
            .chain(&self.seasonal_ar_coeffs)
            .find(|c| c.abs() >= 1.0)
        {
            return Err(Error::UnstableProcess(format!(
                "autoregressive coefficient {c} has magnitude >= 1"
            )));
        }
        Ok(())
    }

    /// Coefficients `a_k` (k >= 1, index 0 unused) of the expanded AR side:
    /// `w_t = sum_k a_k w_{t-k} + ...`.
    fn expanded_ar(&self) -> Vec<f64> {
        let poly = poly_mul(
            &lag_poly(&self.ar_coeffs, 1, -1.0),
            &lag_poly(&self.seasonal_ar_coeffs, self.period(), -1.0),
        );
        poly.iter().map(|c| -c).collect()
    }

    /// Coefficients `b_k` of the expanded MA side, `b_0 = 1`.
    fn expanded_ma(&self) -> Vec<f64> {
        poly_mul(
            &lag_poly(&self.ma_coeffs, 1, 1.0),
            &lag_poly(&self.seasonal_ma_coeffs, self.period(), 1.0),
        )
    }
}

/// `1 + sign * sum_i coeffs[i] L^{(i+1) * stride}`.
fn lag_poly(coeffs: &[f64], stride: usize, sign: f64) -> Vec<f64> {
    let mut poly = vec![0.0; coeffs.len() * stride + 1];
    poly[0] = 1.0;
    for (i, c) in coeffs.iter().enumerate() {
        poly[(i + 1) * stride] = sign * c;
    }
    poly
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// One realization of the SARIMA process with Gaussian innovations.
///
/// `10 * s` leading samples are simulated and dropped. Differencing
/// (d, D <= 1) is undone by cumulative summation of the kept ARMA sample,
/// starting from zero.
pub fn simulate_sarima(params: &SarimaParams, length: usize, seed: u64) -> Result<Series> {
    params.validate()?;
    if length == 0 {
        return Err(Error::invalid("length must be >= 1"));
    }
    let ar = params.expanded_ar();
    let ma = params.expanded_ma();
    let burn = BURN_IN_PERIODS * params.period();
    let total = burn + length;
    let sd = params.innovation_variance.sqrt();

    let mut rng = rng::stream(seed, 0);
    let shocks: Vec<f64> = (0..total)
        .map(|_| {
            let n: f64 = StandardNormal.sample(&mut rng);
            sd * n
        })
        .collect();

    let mut w = vec![0.0; total];
    for t in 0..total {
        let mut v = shocks[t];
        for (k, b) in ma.iter().enumerate().skip(1) {
            if k > t {
                break;
            }
            v += b * shocks[t - k];
        }
        for (k, a) in ar.iter().enumerate().skip(1) {
            if k > t {
                break;
            }
            v += a * w[t - k];
        }
        w[t] = v;
    }

    let mut out = w.split_off(burn);
    let (_, d, _) = params.nonseasonal_order;
    let (_, sd_order, _, s) = params.seasonal_order;
    if sd_order == 1 {
        for t in s..out.len() {
            out[t] += out[t - s];
        }
    }
    if d == 1 {
        for t in 1..out.len() {
            out[t] += out[t - 1];
        }
    }
    Series::hourly(out)
}
