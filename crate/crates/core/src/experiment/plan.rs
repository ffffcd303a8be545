use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::Catalogs;
use crate::error::{Error, Result};
use crate::horizon::DEFAULT_EPSILON;

/// Lattice of sweeps: datasets x batteries x uncertainty factors x seeds,
/// each swept over `horizon_grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub dataset_ids: Vec<String>,
    pub battery_ids: Vec<String>,
    pub uncertainty_factors: Vec<f64>,
    /// Hours, strictly increasing.
    pub horizon_grid: Vec<usize>,
    pub stride_hours: usize,
    pub publication_interval_hours: usize,
    #[serde(default = "default_forecast_horizon")]
    pub forecast_horizon_hours: usize,
    #[serde(default = "default_error_model")]
    pub error_model_id: String,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Directory holding the three catalog files; the shipped catalogs when absent.
    #[serde(default)]
    pub catalog_dir: Option<PathBuf>,
}

fn default_forecast_horizon() -> usize {
    72
}

fn default_error_model() -> String {
    "linear".into()
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl ExperimentPlan {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|err| Error::Schema {
            file: path.display().to_string(),
            field: err.path().to_string(),
            reason: err.into_inner().to_string(),
        })
    }

    /// Checks every lattice dimension and resolves every id.
    pub fn validate(&self, catalogs: &Catalogs) -> Result<()> {
        let nonempty = |name: &str, len: usize| {
            if len == 0 {
                Err(Error::invalid(format!("plan field `{name}` is empty")))
            } else {
                Ok(())
            }
        };
        nonempty("dataset_ids", self.dataset_ids.len())?;
        nonempty("battery_ids", self.battery_ids.len())?;
        nonempty("uncertainty_factors", self.uncertainty_factors.len())?;
        nonempty("horizon_grid", self.horizon_grid.len())?;
        nonempty("seeds", self.seeds.len())?;
        for id in &self.dataset_ids {
            catalogs.dataset(id)?;
        }
        for id in &self.battery_ids {
            catalogs.battery(id)?;
        }
        catalogs.error_model(&self.error_model_id)?;
        if self.uncertainty_factors.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
            return Err(Error::invalid("uncertainty factors must be finite and >= 0"));
        }
        if self.horizon_grid[0] == 0 || self.horizon_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("horizon_grid must be >= 1 and strictly increasing"));
        }
        if self.stride_hours == 0 || self.publication_interval_hours == 0 || self.forecast_horizon_hours == 0 {
            return Err(Error::invalid("stride, publication interval and forecast horizon must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::invalid("epsilon must lie in [0, 1)"));
        }
        let mut seen = std::collections::HashSet::new();
        for (what, ids) in [("dataset", &self.dataset_ids), ("battery", &self.battery_ids)] {
            seen.clear();
            if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
                return Err(Error::invalid(format!("duplicate {what} id `{dup}`")));
            }
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(Error::invalid("duplicate seeds"));
        }
        let mut ufs = self.uncertainty_factors.clone();
        ufs.sort_by(f64::total_cmp);
        if ufs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate uncertainty factors"));
        }
        Ok(())
    }

    /// Uncertainty factors in ascending order.
    pub fn sorted_ufs(&self) -> Vec<f64> {
        let mut ufs = self.uncertainty_factors.clone();
        ufs.sort_by(f64::total_cmp);
        ufs
    }

    /// Number of forecast sweeps (excluding perfect-information references).
    pub fn sweep_count(&self) -> usize {
        self.dataset_ids.len() * self.battery_ids.len() * self.uncertainty_factors.len() * self.seeds.len()
    }

    /// Number of MPC runs over all forecast sweeps.
    pub fn mpc_run_count(&self) -> usize {
        self.sweep_count() * self.horizon_grid.len()
    }

    pub fn has_gapped_horizons(&self) -> bool {
        self.horizon_grid.iter().any(|&h| h < self.stride_hours)
    }

    /// The plan without its output location, which does not affect results.
    pub(crate) fn hashed_view(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("plan serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("output_dir");
        }
        v
    }
}
