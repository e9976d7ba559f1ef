//! Experiment configuration, stored as TOML.

use std::path::{Path, PathBuf};

use bicog::learners::{LearnerFamily, LogisticConfig, NoisyOracleConfig};
use bicog::{AugmentConfig, RunConfig};
use serde::{Deserialize, Serialize};

use crate::generators::{GeneratorName, GeneratorParams};
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSpec {
    Generator {
        generator: GeneratorName,
        #[serde(default)]
        params: GeneratorParams,
    },
    Csv {
        path: PathBuf,
        feature_columns: Vec<String>,
        label_column: String,
        #[serde(default)]
        split_column: Option<String>,
        /// Share of rows held out for testing when there is no split column.
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
    },
}

fn default_test_fraction() -> f64 {
    0.2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub base_fraction: f64,
    pub shots_per_class: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            base_fraction: 1.0,
            shots_per_class: 4,
        }
    }
}

/// Pretraining corpus for each learner, drawn fresh from the generator.
///
/// CSV datasets pretrain on the labeled split instead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainSpec {
    pub per_class: usize,
    /// Probability of replacing a pretraining label with a random class.
    pub label_noise: f64,
}

impl Default for PretrainSpec {
    fn default() -> Self {
        Self {
            per_class: 2,
            label_noise: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerSlot {
    pub family: LearnerFamily,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub logistic: LogisticConfig,
    #[serde(default = "default_knn_k")]
    pub knn_k: usize,
    #[serde(default)]
    pub oracle: NoisyOracleConfig,
}

fn default_count() -> usize {
    1
}

fn default_knn_k() -> usize {
    5
}

impl LearnerSlot {
    pub fn new(family: LearnerFamily, count: usize) -> Self {
        Self {
            family,
            count,
            logistic: LogisticConfig::default(),
            knn_k: default_knn_k(),
            oracle: NoisyOracleConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub pretrain: PretrainSpec,
    pub learners: Vec<LearnerSlot>,
    #[serde(default)]
    pub augment: AugmentConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn slot_count(&self) -> usize {
        self.learners.iter().map(|s| s.count).sum()
    }

    /// The family of every ensemble slot in order.
    pub fn expanded_learners(&self) -> Vec<&LearnerSlot> {
        self.learners
            .iter()
            .flat_map(|s| std::iter::repeat_n(s, s.count))
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.run
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.augment
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must not be empty".into()));
        }
        if self.slot_count() != self.run.k {
            return Err(CliError::Config(format!(
                "{} learner slots configured for k = {}",
                self.slot_count(),
                self.run.k
            )));
        }
        if !(self.split.base_fraction > 0.0 && self.split.base_fraction <= 1.0) {
            return Err(CliError::Config(
                "split.base_fraction must lie in (0, 1]".into(),
            ));
        }
        if self.split.shots_per_class == 0 {
            return Err(CliError::Config(
                "split.shots_per_class must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.pretrain.label_noise) {
            return Err(CliError::Config(
                "pretrain.label_noise must lie in [0, 1]".into(),
            ));
        }
        if let DatasetSpec::Csv { test_fraction, .. } = &self.dataset {
            if !(0.0..1.0).contains(test_fraction) {
                return Err(CliError::Config("test_fraction must lie in [0, 1)".into()));
            }
        }
        Ok(())
    }
}
