//! Declarative run configuration.
//!
//! One TOML file covers every pipeline knob. All fields are optional with
//! the standard defaults (k = 15, pool = 30, samples = 10, chunk 512/50,
//! ensemble of 3); unknown keys are rejected so typos fail loudly.
//! Command-line flags override file values, which override defaults.
//! Backend endpoints may additionally come from environment variables,
//! which sit between flags and the file in precedence.

use std::path::Path;
use std::time::Duration;

use serde::Deserialize;

use sentsel_core::alignment::AlignConfig;
use sentsel_core::inference::LlmConfig;
use sentsel_core::linear::TrainConfig;
use sentsel_core::metrics::{GainScheme, MacroAveraging};
use sentsel_core::scoring::{ChunkConfig, EntropyAggregation, ImportanceNorm};
use sentsel_core::selection::{RankWeighting, SelectionConfig, SelectionMode};

use crate::http::HttpConfig;

/// Environment variable naming the classification backend endpoint.
pub const SCORER_ENDPOINT_VAR: &str = "SENTSEL_SCORER_ENDPOINT";
/// Environment variable naming the generation backend endpoint.
pub const GENERATOR_ENDPOINT_VAR: &str = "SENTSEL_GENERATOR_ENDPOINT";

/// Failure to read or parse a configuration file.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
}

/// The full pipeline configuration with every default applied.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub run: RunSection,
    pub selection: SelectionSection,
    pub chunking: ChunkingSection,
    pub alignment: AlignmentSection,
    pub signals: SignalsSection,
    pub training: TrainingSection,
    pub inference: InferenceSection,
    pub metrics: MetricsSection,
    pub backend: BackendSection,
}

/// Top-level run parameters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// The single seed all randomness derives from.
    pub seed: u64,
    /// Document-level parallelism.
    pub workers: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 42, workers: 1 }
    }
}

/// Sentence-selection parameters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionSection {
    pub k: usize,
    pub pool: usize,
    pub mode: SelectionMode,
    pub samples: usize,
    pub weighting: RankWeighting,
}

impl Default for SelectionSection {
    fn default() -> Self {
        let d = SelectionConfig::default();
        Self { k: d.k, pool: d.pool, mode: d.mode, samples: d.num_samples, weighting: d.weighting }
    }
}

/// Token-window chunking parameters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChunkingSection {
    pub max_tokens: usize,
    pub overlap: usize,
}

impl Default for ChunkingSection {
    fn default() -> Self {
        let d = ChunkConfig::default();
        Self { max_tokens: d.max_tokens, overlap: d.overlap }
    }
}

/// Evidence-alignment thresholds.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignmentSection {
    pub match_threshold: f64,
    pub borderline_threshold: f64,
    /// Accept borderline matches instead of dropping them.
    pub accept_borderline: bool,
}

impl Default for AlignmentSection {
    fn default() -> Self {
        let d = AlignConfig::default();
        Self {
            match_threshold: d.t_match,
            borderline_threshold: d.t_borderline,
            accept_borderline: false,
        }
    }
}

/// How ensemble members combine for the entropy signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyChoice {
    /// Entropy of the averaged distribution.
    #[default]
    AverageDistributions,
    /// Average of the per-member entropies.
    AverageEntropies,
}

impl From<EntropyChoice> for EntropyAggregation {
    fn from(value: EntropyChoice) -> Self {
        match value {
            EntropyChoice::AverageDistributions => Self::AverageDistributions,
            EntropyChoice::AverageEntropies => Self::AverageEntropies,
        }
    }
}

/// Norm over per-class logit deltas for the importance signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceChoice {
    #[default]
    L1,
    Linf,
}

impl From<ImportanceChoice> for ImportanceNorm {
    fn from(value: ImportanceChoice) -> Self {
        match value {
            ImportanceChoice::L1 => Self::L1,
            ImportanceChoice::Linf => Self::LInf,
        }
    }
}

/// Usefulness-signal parameters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalsSection {
    /// Classifiers in the entropy ensemble.
    pub ensemble: usize,
    pub entropy: EntropyChoice,
    pub importance: ImportanceChoice,
}

impl Default for SignalsSection {
    fn default() -> Self {
        Self {
            ensemble: 3,
            entropy: EntropyChoice::default(),
            importance: ImportanceChoice::default(),
        }
    }
}

/// Reference-classifier training parameters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub l2: f32,
    pub rebalance: bool,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            epochs: d.epochs,
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
            l2: d.l2,
            rebalance: d.rebalance,
        }
    }
}

/// Generative-path parameters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferenceSection {
    pub max_new_tokens: usize,
    /// Ask the model for a summary line before the answer line.
    pub summary: bool,
}

impl Default for InferenceSection {
    fn default() -> Self {
        let d = LlmConfig::default();
        Self { max_new_tokens: d.max_new_tokens, summary: d.include_summary }
    }
}

/// Evaluation-metric conventions.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    pub macro_averaging: MacroAveraging,
    pub ndcg_gain: GainScheme,
    /// Rank cutoff for NDCG; whole list when absent.
    pub ndcg_cutoff: Option<usize>,
}

/// Remote backend endpoints and HTTP behavior.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendSection {
    pub scorer_endpoint: Option<String>,
    pub generator_endpoint: Option<String>,
    pub timeout_secs: u64,
    pub retries: u32,
}

impl Default for BackendSection {
    fn default() -> Self {
        let d = HttpConfig::new("");
        Self {
            scorer_endpoint: None,
            generator_endpoint: None,
            timeout_secs: d.timeout.as_secs(),
            retries: d.retries,
        }
    }
}

impl PipelineConfig {
    /// Parses a TOML config file; every field is optional.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|err| ConfigError::Parse {
            path: path.display().to_string(),
            message: err.message().to_string(),
        })
    }

    /// File config when a path is given, defaults otherwise.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            Some(path) => Self::from_path(path),
            None => Ok(Self::default()),
        }
    }

    /// The selection parameters, seeded from the top-level seed.
    pub fn selection_config(&self) -> SelectionConfig {
        SelectionConfig {
            k: self.selection.k,
            pool: self.selection.pool,
            mode: self.selection.mode,
            num_samples: self.selection.samples,
            seed: self.run.seed,
            weighting: self.selection.weighting,
        }
    }

    pub fn chunk_config(&self) -> ChunkConfig {
        ChunkConfig { max_tokens: self.chunking.max_tokens, overlap: self.chunking.overlap }
    }

    pub fn align_config(&self) -> AlignConfig {
        AlignConfig {
            t_match: self.alignment.match_threshold,
            t_borderline: self.alignment.borderline_threshold,
        }
    }

    /// Training parameters; ensemble members offset the top-level seed.
    pub fn train_config(&self, seed_offset: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.training.epochs,
            batch_size: self.training.batch_size,
            learning_rate: self.training.learning_rate,
            l2: self.training.l2,
            seed: self.run.seed.wrapping_add(seed_offset),
            rebalance: self.training.rebalance,
        }
    }

    pub fn llm_config(&self) -> LlmConfig {
        LlmConfig {
            max_new_tokens: self.inference.max_new_tokens,
            include_summary: self.inference.summary,
        }
    }

    /// HTTP settings for an endpoint resolved elsewhere.
    pub fn http_config(&self, endpoint: &str) -> HttpConfig {
        HttpConfig {
            endpoint: endpoint.to_string(),
            timeout: Duration::from_secs(self.backend.timeout_secs),
            retries: self.backend.retries,
        }
    }
}

/// Resolves an endpoint with precedence: flag, then environment variable,
/// then config file. Returns `None` when no layer sets it.
pub fn resolve_endpoint(
    flag: Option<&str>,
    env_var: &str,
    file_value: Option<&str>,
) -> Option<String> {
    if let Some(flag) = flag {
        return Some(flag.to_string());
    }
    if let Ok(value) = std::env::var(env_var) {
        if !value.trim().is_empty() {
            return Some(value);
        }
    }
    file_value.map(str::to_string)
}
