//! Declarative experiment configuration (TOML).
//!
//! Only the input/output locations and the feature kind are required;
//! everything else defaults to the standard recipe, so a minimal config
//! reproduces it:
//!
//! ```toml
//! manifest = "data/manifest.jsonl"
//! features_dir = "out/features"
//! output_dir = "out/exp1"
//! feature_kind = "PROSODY"
//! # pooling = "meanstd"          # mean | std | meanstd
//! # split_mode = "SI"            # SD | SI
//! # seeds = [11, 22, 33]
//! # normalize = true             # default: by feature-kind policy
//! # normalization_stats = "all"  # all | train
//! # feature_label = "PROSODY"    # results-table row label
//! #
//! # [model]
//! # layer_sizes = [256, 128, 64, 32]
//! # dropout_p = 0.1
//! # activation = "relu"
//! # seed = 1
//! #
//! # [training]
//! # lr = 1e-4
//! # epochs = 50
//! # batch_size = 100
//! ```
//!
//! Relative paths are resolved against the current working directory.
//! Every artifact a run writes carries the hex SHA-256 of the resolved
//! configuration; reports whose hashes differ refuse to average.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nsdid_core::classifier::{Activation, Hyperparams, ModelConfig};
use nsdid_core::dsp::FeatureKind;
use nsdid_core::pooling::{normalization_policy, PoolingMode};
use nsdid_core::splits::{SplitMode, DEFAULT_HOLDOUT_PER_DIALECT, DEFAULT_SEEDS};
use nsdid_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationStats {
    /// Speaker statistics over all of a speaker's utterances.
    All,
    /// Speaker statistics from non-test utterances only, per split.
    Train,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    /// Directory produced by `nsdid extract` (FMX files + index.jsonl).
    pub features_dir: PathBuf,
    pub output_dir: PathBuf,
    pub feature_kind: FeatureKind,
    #[serde(default = "default_pooling")]
    pub pooling: PoolingMode,
    #[serde(default = "default_split_mode")]
    pub split_mode: SplitMode,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Override for the per-feature-kind normalization policy.
    #[serde(default)]
    pub normalize: Option<bool>,
    #[serde(default = "default_norm_stats")]
    pub normalization_stats: NormalizationStats,
    /// Row label for results tables; defaults to the feature kind name.
    #[serde(default)]
    pub feature_label: Option<String>,
    #[serde(default = "default_holdout")]
    pub holdout_per_dialect: usize,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub training: TrainingSection,
}

fn default_pooling() -> PoolingMode {
    PoolingMode::MeanStd
}

fn default_split_mode() -> SplitMode {
    SplitMode::SI
}

fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}

fn default_norm_stats() -> NormalizationStats {
    NormalizationStats::All
}

fn default_holdout() -> usize {
    DEFAULT_HOLDOUT_PER_DIALECT
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_layer_sizes")]
    pub layer_sizes: Vec<usize>,
    #[serde(default = "default_dropout")]
    pub dropout_p: f64,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default = "default_model_seed")]
    pub seed: u64,
}

fn default_layer_sizes() -> Vec<usize> {
    vec![256, 128, 64, 32]
}

fn default_dropout() -> f64 {
    0.1
}

fn default_activation() -> Activation {
    Activation::Relu
}

fn default_model_seed() -> u64 {
    1
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            layer_sizes: default_layer_sizes(),
            dropout_p: default_dropout(),
            activation: default_activation(),
            seed: default_model_seed(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_beta1")]
    pub adam_beta1: f64,
    #[serde(default = "default_beta2")]
    pub adam_beta2: f64,
    #[serde(default = "default_eps")]
    pub adam_eps: f64,
}

fn default_lr() -> f64 {
    1e-4
}

fn default_epochs() -> usize {
    50
}

fn default_batch_size() -> usize {
    100
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            lr: default_lr(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            adam_beta1: default_beta1(),
            adam_beta2: default_beta2(),
            adam_eps: default_eps(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidParam(format!("config `{}`: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidParam("seeds must be nonempty".into()));
        }
        if self.feature_kind == FeatureKind::Mfcc13 {
            return Err(Error::InvalidParam(
                "use MFCC39 for experiments; MFCC13 is an intermediate kind".into(),
            ));
        }
        Ok(())
    }

    /// The normalization flag, config override first, policy otherwise.
    pub fn resolved_normalize(&self) -> bool {
        self.normalize
            .unwrap_or_else(|| normalization_policy(self.feature_kind))
    }

    pub fn resolved_label(&self) -> String {
        self.feature_label
            .clone()
            .unwrap_or_else(|| self.feature_kind.as_str().to_string())
    }

    pub fn model_config(&self, input_dim: usize) -> ModelConfig {
        ModelConfig {
            input_dim,
            layer_sizes: self.model.layer_sizes.clone(),
            n_classes: 4,
            dropout_p: self.model.dropout_p,
            activation: self.model.activation,
            seed: self.model.seed,
        }
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            lr: self.training.lr,
            epochs: self.training.epochs,
            batch_size: self.training.batch_size,
            adam_beta1: self.training.adam_beta1,
            adam_beta2: self.training.adam_beta2,
            adam_eps: self.training.adam_eps,
        }
    }

    /// Hex SHA-256 of the fully resolved configuration (canonical JSON).
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
