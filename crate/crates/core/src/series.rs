//! Uniformly sampled price series.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled series of values in EUR/MWh.
///
/// Invariants: at least one value, every value finite, `step_hours > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    step_hours: f64,
    values: Vec<f64>,
}

impl Series {
    pub fn new(step_hours: f64, values: Vec<f64>) -> Result<Self> {
        if !(step_hours.is_finite() && step_hours > 0.0) {
            return Err(Error::invalid(format!(
                "step_hours must be positive, got {step_hours}"
            )));
        }
        if values.is_empty() {
            return Err(Error::invalid("series must not be empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at index {i}")));
        }
        Ok(Self { step_hours, values })
    }

    /// Hourly series.
    pub fn hourly(values: Vec<f64>) -> Result<Self> {
        Self::new(1.0, values)
    }

    pub fn step_hours(&self) -> f64 {
        self.step_hours
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Copy of `values[start..end]`, clamped to the series length.
    pub fn slice(&self, start: usize, end: usize) -> Result<Series> {
        let end = end.min(self.values.len());
        if start >= end {
            return Err(Error::invalid(format!(
                "empty slice {start}..{end} of a series of length {}",
                self.values.len()
            )));
        }
        Series::new(self.step_hours, self.values[start..end].to_vec())
    }

    /// Writes `t_hours,value_eur_mwh` CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t_hours", "value_eur_mwh"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([
                format_number(i as f64 * self.step_hours),
                format_number(*v),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Reads a `t_hours,value_eur_mwh` CSV; the step is inferred from the
    /// first two rows (1 hour for single-row files).
    pub fn read_csv<R: Read>(reader: R) -> Result<Series> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t_hours" || &headers[1] != "value_eur_mwh" {
            return Err(Error::Schema {
                file: "<series csv>".into(),
                field: "header".into(),
                reason: format!("expected `t_hours,value_eur_mwh`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for record in r.records() {
            let record = record?;
            let parse = |field: &str, s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Schema {
                    file: "<series csv>".into(),
                    field: field.into(),
                    reason: e.to_string(),
                })
            };
            times.push(parse("t_hours", &record[0])?);
            values.push(parse("value_eur_mwh", &record[1])?);
        }
        let step = if times.len() >= 2 { times[1] - times[0] } else { 1.0 };
        Series::new(step, values)
    }
}

/// Shortest round-trip decimal representation; stable across runs.
pub(crate) fn format_number(v: f64) -> String {
    if v == 0.0 {
        // avoid "-0"
        return "0".to_string();
    }
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(Series::hourly(vec![]).is_err());
        assert!(Series::hourly(vec![1.0, f64::NAN]).is_err());
        assert!(Series::new(0.0, vec![1.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = Series::hourly(vec![1.5, -2.25, 0.0, 1e-3]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t_hours,value_eur_mwh\n0,1.5\n1,-2.25\n"));
        let back = Series::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn slice_clamps_to_end() {
        let s = Series::hourly(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.slice(1, 10).unwrap().values(), &[2.0, 3.0]);
        assert!(s.slice(3, 5).is_err());
    }
}
