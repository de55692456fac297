use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::{generate_coauthor, generate_tree_cycles, load_coauthor_file, CoauthorConfig, TreeCyclesConfig};
use crate::dataset::{load_dataset, TemporalDataset};
use crate::drift::DEFAULT_SIGNIFICANCE;
use crate::error::{Error, Result};
use crate::explainer::{AdaptConfig, ExplainerConfig};
use crate::gae::GaeTrainConfig;
use crate::oracle::Oracle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    TreeCycles,
    Coauthor,
}

impl Family {
    /// 50 epochs at 1e-3 for tree-cycles, 150 epochs at 1e-4 for coauthor.
    pub fn default_model(self) -> GaeTrainConfig {
        match self {
            Family::TreeCycles => GaeTrainConfig::default(),
            Family::Coauthor => GaeTrainConfig {
                epochs: 150,
                learning_rate: 1e-4,
                ..GaeTrainConfig::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSection {
    pub family: Family,
    /// Label used in reports; defaults to the family name.
    pub name: Option<String>,
    /// Read snapshots from this file instead of generating them.
    pub path: Option<PathBuf>,
    pub tree_cycles: TreeCyclesConfig,
    pub coauthor: CoauthorConfig,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            family: Family::TreeCycles,
            name: None,
            path: None,
            tree_cycles: TreeCyclesConfig::default(),
            coauthor: CoauthorConfig::default(),
        }
    }
}

impl DatasetSection {
    pub fn display_name(&self) -> String {
        match (&self.name, self.family) {
            (Some(n), _) => n.clone(),
            (None, Family::TreeCycles) => "tree-cycles".into(),
            (None, Family::Coauthor) => "coauthor".into(),
        }
    }

    /// Loads or generates the dataset together with its ground-truth oracle.
    pub fn materialize(&self) -> Result<(TemporalDataset, Oracle)> {
        match self.family {
            Family::TreeCycles => {
                let d = match &self.path {
                    Some(p) => load_dataset(p)?,
                    None => generate_tree_cycles(&self.tree_cycles)?,
                };
                Ok((d, Oracle::cycle()))
            }
            Family::Coauthor => {
                let d = match &self.path {
                    Some(p) => load_coauthor_file(p, &self.coauthor)?,
                    None => generate_coauthor(&self.coauthor)?,
                };
                let oracle = Oracle::percentile_for(&d, self.coauthor.percentile);
                Ok((d, oracle))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainerSection {
    pub k: usize,
    pub l2_lambda: f64,
    pub pool_filter: bool,
    pub warm_start: bool,
    pub adapt: AdaptConfig,
    pub drift_significance: f64,
    /// Run one drift test per inferred class instead of a pooled one.
    pub drift_per_class: bool,
}

impl Default for ExplainerSection {
    fn default() -> Self {
        let e = ExplainerConfig::default();
        ExplainerSection {
            k: e.k,
            l2_lambda: e.l2_lambda,
            pool_filter: e.pool_filter,
            warm_start: e.warm_start,
            adapt: e.adapt,
            drift_significance: DEFAULT_SIGNIFICANCE,
            drift_per_class: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    pub folds: usize,
    pub holdout: f64,
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { folds: 10, holdout: 0.10, seed: 0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: DatasetSection,
    /// Autoencoder training; unset falls back to [`Family::default_model`].
    pub model: Option<GaeTrainConfig>,
    pub explainer: ExplainerSection,
    pub eval: EvalSection,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        RunConfig::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies a master seed to the evaluation split and to the generator.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.eval.seed = seed;
        self.dataset.tree_cycles.seed = seed;
        self.dataset.coauthor.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.eval.folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {}", self.eval.folds)));
        }
        if !(self.eval.holdout > 0.0 && self.eval.holdout < 1.0) {
            return Err(Error::Config(format!("holdout must lie in (0, 1), got {}", self.eval.holdout)));
        }
        if !(0.0..=1.0).contains(&self.explainer.drift_significance) {
            return Err(Error::Config("drift significance must lie in [0, 1]".into()));
        }
        self.explainer_config().validate()
    }

    pub fn model_config(&self) -> GaeTrainConfig {
        self.model.clone().unwrap_or_else(|| self.dataset.family.default_model())
    }

    pub fn explainer_config(&self) -> ExplainerConfig {
        ExplainerConfig {
            k: self.explainer.k,
            gae: self.model_config(),
            adapt: self.explainer.adapt.clone(),
            l2_lambda: self.explainer.l2_lambda,
            pool_filter: self.explainer.pool_filter,
            warm_start: self.explainer.warm_start,
        }
    }
}
