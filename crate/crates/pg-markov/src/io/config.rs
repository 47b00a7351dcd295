//! Run configuration: a single TOML file describing paths, the model
//! declaration, priors, sampler settings and imputation count.

use crate::gibbs::{PriorSpec, SamplerConfig};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSection {
    /// Fixed label file; mutually exclusive with `probabilities`.
    pub labels: Option<PathBuf>,
    /// Classification probability file.
    pub probabilities: Option<PathBuf>,
    pub covariates: PathBuf,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub states: Vec<String>,
    /// Reference category; defaults to the last state.
    pub reference: Option<String>,
    pub habitats: Vec<String>,
    /// Optional regrouping of raw habitat labels into the model habitats,
    /// applied at ingestion (`raw = "grouped"` entries).
    #[serde(default)]
    pub habitat_map: std::collections::BTreeMap<String, String>,
    /// Quantitative covariate columns to ingest from the covariates file.
    #[serde(default)]
    pub quantitative: Vec<String>,
    /// Standardize the quantitative columns at ingestion (mean 0, sd 1).
    #[serde(default = "default_true")]
    pub standardize: bool,
    /// Append cos/sin time-of-day columns computed from the timestamp.
    #[serde(default)]
    pub time_of_day: bool,
    pub step_seconds: i64,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImputationSection {
    pub m: usize,
}

impl Default for ImputationSection {
    fn default() -> Self {
        Self { m: 200 }
    }
}

/// Scenario settings for the `simulate` subcommand; states and habitats come
/// from the `[model]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSection {
    pub n_individuals: usize,
    pub t_per_individual: usize,
    #[serde(default = "default_one")]
    pub n_noise_covariates: usize,
    #[serde(default)]
    pub diurnal: bool,
    #[serde(default = "default_range")]
    pub coefficient_range: (f64, f64),
}

fn default_one() -> usize {
    1
}

fn default_range() -> (f64, f64) {
    (-1.0, 1.0)
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            n_individuals: 2,
            t_per_individual: 4_000,
            n_noise_covariates: 1,
            diurnal: false,
            coefficient_range: (-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataSection,
    pub model: ModelSection,
    #[serde(default)]
    pub prior: PriorSpec,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub imputation: ImputationSection,
    pub simulate: Option<SimulateSection>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = toml::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.labels.is_some() == self.data.probabilities.is_some() {
            return Err(Error::Config(
                "exactly one of data.labels and data.probabilities must be set".into(),
            ));
        }
        if self.model.states.len() < 2 {
            return Err(Error::Config("model.states needs at least 2 entries".into()));
        }
        if self.model.habitats.is_empty() {
            return Err(Error::Config("model.habitats must not be empty".into()));
        }
        if let Some((raw, grouped)) = self
            .model
            .habitat_map
            .iter()
            .find(|(_, grouped)| !self.model.habitats.contains(grouped))
        {
            return Err(Error::Config(format!(
                "habitat_map sends '{raw}' to '{grouped}', which is not a model habitat"
            )));
        }
        if self.model.step_seconds <= 0 {
            return Err(Error::Config("model.step_seconds must be positive".into()));
        }
        if self.imputation.m < 1 {
            return Err(Error::Config("imputation.m must be >= 1".into()));
        }
        self.prior.validate()?;
        self.sampler.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[data]
labels = "labels.csv"
covariates = "covariates.csv"
out_dir = "out"

[model]
states = ["feeding", "walking"]
habitats = ["corn"]
step_seconds = 360
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: RunConfig = toml::from_str(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.sampler.iterations, 15_000);
        assert_eq!(cfg.sampler.burn_in, 5_000);
        assert_eq!(cfg.prior.variance, 100.0);
        assert_eq!(cfg.imputation.m, 200);
        assert!(cfg.model.standardize);
    }

    #[test]
    fn both_label_sources_rejected() {
        let text = MINIMAL.replace(
            "labels = \"labels.csv\"",
            "labels = \"labels.csv\"\nprobabilities = \"p.csv\"",
        );
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        assert!(cfg.validate().is_err());
    }
}
