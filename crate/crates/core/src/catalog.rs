//! Dataset, battery and error-model catalogs.
//!
//! Each catalog is a JSON file; ids are unique within a file. Parse and
//! validation failures are reported as [`Error::Schema`] with the file name
//! and the dotted path of the offending field.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::battery::{BatterySpec, MarketParams};
use crate::error::{Error, Result};
use crate::forecast::ErrorModel;
use crate::signal::SignalSpec;

const SHIPPED_DATASETS: &str = include_str!("../catalog/datasets.json");
const SHIPPED_BATTERIES: &str = include_str!("../catalog/batteries.json");
const SHIPPED_ERROR_MODELS: &str = include_str!("../catalog/error_models.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub id: String,
    pub family: String,
    pub instance: String,
    pub spec: SignalSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryEntry {
    pub id: String,
    pub name: String,
    pub spec: BatterySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorModelEntry {
    pub id: String,
    pub model: ErrorModel,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    datasets: Vec<DatasetEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatteryFile {
    #[serde(default)]
    market: MarketParams,
    batteries: Vec<BatteryEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ErrorModelFile {
    error_models: Vec<ErrorModelEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogPaths {
    pub datasets: PathBuf,
    pub batteries: PathBuf,
    pub error_models: PathBuf,
}

impl CatalogPaths {
    /// The three standard file names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            datasets: dir.join("datasets.json"),
            batteries: dir.join("batteries.json"),
            error_models: dir.join("error_models.json"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalogs {
    pub datasets: Vec<DatasetEntry>,
    pub batteries: Vec<BatteryEntry>,
    pub market: MarketParams,
    pub error_models: Vec<ErrorModelEntry>,
}

impl Catalogs {
    /// Catalogs compiled into the library.
    pub fn shipped() -> Self {
        Self::parse(
            ("datasets.json", SHIPPED_DATASETS),
            ("batteries.json", SHIPPED_BATTERIES),
            ("error_models.json", SHIPPED_ERROR_MODELS),
        )
        .expect("shipped catalogs are valid")
    }

    /// Parses `(file name, contents)` pairs.
    pub fn parse(datasets: (&str, &str), batteries: (&str, &str), error_models: (&str, &str)) -> Result<Self> {
        let d: DatasetFile = parse_json(datasets.0, datasets.1)?;
        let b: BatteryFile = parse_json(batteries.0, batteries.1)?;
        let e: ErrorModelFile = parse_json(error_models.0, error_models.1)?;

        check_ids(datasets.0, "datasets", d.datasets.iter().map(|x| x.id.as_str()))?;
        for (i, entry) in d.datasets.iter().enumerate() {
            entry
                .spec
                .validate()
                .map_err(|err| schema(datasets.0, format!("datasets[{i}].spec"), err))?;
        }

        check_ids(batteries.0, "batteries", b.batteries.iter().map(|x| x.id.as_str()))?;
        b.market.validate().map_err(|err| schema(batteries.0, "market".into(), err))?;
        for (i, entry) in b.batteries.iter().enumerate() {
            entry
                .spec
                .validate()
                .map_err(|err| schema(batteries.0, format!("batteries[{i}].spec"), err))?;
        }

        check_ids(error_models.0, "error_models", e.error_models.iter().map(|x| x.id.as_str()))?;
        for (i, entry) in e.error_models.iter().enumerate() {
            entry
                .model
                .validate()
                .map_err(|err| schema(error_models.0, format!("error_models[{i}].model"), err))?;
        }

        Ok(Self {
            datasets: d.datasets,
            batteries: b.batteries,
            market: b.market,
            error_models: e.error_models,
        })
    }

    pub fn dataset(&self, id: &str) -> Result<&DatasetEntry> {
        self.datasets.iter().find(|d| d.id == id).ok_or_else(|| Error::UnknownId {
            kind: "dataset",
            id: id.to_owned(),
        })
    }

    pub fn battery(&self, id: &str) -> Result<&BatteryEntry> {
        self.batteries.iter().find(|b| b.id == id).ok_or_else(|| Error::UnknownId {
            kind: "battery",
            id: id.to_owned(),
        })
    }

    pub fn error_model(&self, id: &str) -> Result<&ErrorModelEntry> {
        self.error_models.iter().find(|m| m.id == id).ok_or_else(|| Error::UnknownId {
            kind: "error model",
            id: id.to_owned(),
        })
    }
}

pub fn load_catalogs(paths: &CatalogPaths) -> Result<Catalogs> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let d = read(&paths.datasets)?;
    let b = read(&paths.batteries)?;
    let e = read(&paths.error_models)?;
    Catalogs::parse(
        (&paths.datasets.display().to_string(), &d),
        (&paths.batteries.display().to_string(), &b),
        (&paths.error_models.display().to_string(), &e),
    )
}

fn parse_json<T: DeserializeOwned>(file: &str, text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let field = err.path().to_string();
        Error::Schema {
            file: file.to_owned(),
            field,
            reason: err.into_inner().to_string(),
        }
    })
}

fn schema(file: &str, field: String, err: Error) -> Error {
    Error::Schema {
        file: file.to_owned(),
        field,
        reason: err.to_string(),
    }
}

fn check_ids<'a>(file: &str, list: &str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for (i, id) in ids.enumerate() {
        if id.is_empty() || !seen.insert(id) {
            return Err(Error::Schema {
                file: file.to_owned(),
                field: format!("{list}[{i}].id"),
                reason: format!("id `{id}` is empty or duplicated"),
            });
        }
    }
    Ok(())
}
