//! Reference linear classifier: multinomial logistic regression over hashed
//! unigram/bigram features, trained with seeded mini-batch gradient descent.
//!
//! Everything here is bit-deterministic for a fixed seed: features are
//! accumulated in sorted index order, weights are `f32`, and training
//! touches examples in an order fixed by the shuffling RNG. Two runs with
//! the same inputs and seed produce byte-identical serialized models.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Document;
use crate::math;
use crate::scoring::{chunk_text, BackendCaps, BackendError, ChunkConfig, ScorerBackend};
use crate::text::reference_tokenize;

/// Width of the hashed feature space.
pub const FEATURE_DIM: usize = 1 << 18;
const FEATURE_MASK: u64 = (FEATURE_DIM as u64) - 1; // 0x3FFFF

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a 64-bit hash.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Hashes text into a sparse, L2-normalized bag of unigrams and bigrams.
///
/// Tokens are case-folded; bigrams are hashed as the two tokens joined by a
/// single space (unambiguous, since tokens never contain whitespace).
/// Returned pairs are sorted by feature index with counts merged, so dot
/// products accumulate in a fixed order.
pub fn featurize(text: &str) -> Vec<(u32, f32)> {
    let tokens: Vec<String> = reference_tokenize(text).iter().map(|t| t.to_lowercase()).collect();
    let mut indices: Vec<u32> = Vec::with_capacity(tokens.len() * 2);
    for token in &tokens {
        indices.push((fnv1a(token.as_bytes()) & FEATURE_MASK) as u32);
    }
    for pair in tokens.windows(2) {
        let mut key = String::with_capacity(pair[0].len() + pair[1].len() + 1);
        key.push_str(&pair[0]);
        key.push(' ');
        key.push_str(&pair[1]);
        indices.push((fnv1a(key.as_bytes()) & FEATURE_MASK) as u32);
    }
    indices.sort_unstable();

    let mut features: Vec<(u32, f32)> = Vec::with_capacity(indices.len());
    for idx in indices {
        match features.last_mut() {
            Some(last) if last.0 == idx => last.1 += 1.0,
            _ => features.push((idx, 1.0)),
        }
    }
    let norm = features.iter().map(|(_, v)| v * v).sum::<f32>();
    if norm > 0.0 {
        let inv = 1.0 / math::sqrt_f32(norm);
        for (_, v) in &mut features {
            *v *= inv;
        }
    }
    features
}

/// Gradient-descent hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    /// L2 penalty; zero disables weight decay entirely.
    pub l2: f32,
    pub seed: u64,
    /// Weight examples inversely to their class frequency.
    pub rebalance: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 12, batch_size: 32, learning_rate: 0.5, l2: 0.0, seed: 42, rebalance: false }
    }
}

/// Training and model-format errors.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrainError {
    #[error("no labeled documents in the training set")]
    NoLabeledData,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("num_classes must be at least 2, got {0}")]
    InvalidClassCount(usize),
    #[error("class {class} out of range for {num_classes} classes")]
    ClassOutOfRange { class: usize, num_classes: usize },
    #[error("epochs and batch_size must be positive")]
    InvalidTrainConfig,
}

/// Errors decoding a serialized model.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelFormatError {
    #[error("bad magic bytes; not a serialized model")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("model declares feature_dim {0}, expected {FEATURE_DIM}")]
    DimensionMismatch(u32),
    #[error("model byte stream truncated or oversized")]
    Truncated,
}

const MODEL_MAGIC: [u8; 4] = *b"SSRC";
const MODEL_VERSION: u32 = 1;

/// Multinomial logistic-regression model over hashed text features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    num_classes: usize,
    /// Class-major weights: `weights[c * FEATURE_DIM + i]`.
    weights: Vec<f32>,
    bias: Vec<f32>,
}

impl LinearModel {
    fn zeroed(num_classes: usize) -> Self {
        Self {
            num_classes,
            weights: alloc::vec![0.0; num_classes * FEATURE_DIM],
            bias: alloc::vec![0.0; num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Raw logits for one text.
    pub fn score_text(&self, text: &str) -> Vec<f64> {
        self.score_features(&featurize(text))
    }

    fn score_features(&self, features: &[(u32, f32)]) -> Vec<f64> {
        let mut logits = Vec::with_capacity(self.num_classes);
        for c in 0..self.num_classes {
            let row = &self.weights[c * FEATURE_DIM..(c + 1) * FEATURE_DIM];
            let mut acc = self.bias[c];
            for &(idx, value) in features {
                acc += row[idx as usize] * value;
            }
            logits.push(acc as f64);
        }
        logits
    }

    /// Serializes as: magic, version, feature_dim, class_count (LE u32s),
    /// then per-class bias and class-major weights as LE `f32`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * (self.bias.len() + self.weights.len()));
        out.extend_from_slice(&MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(FEATURE_DIM as u32).to_le_bytes());
        out.extend_from_slice(&(self.num_classes as u32).to_le_bytes());
        for b in &self.bias {
            out.extend_from_slice(&b.to_le_bytes());
        }
        for w in &self.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelFormatError> {
        if bytes.len() < 16 {
            return Err(if bytes.starts_with(&MODEL_MAGIC) || MODEL_MAGIC.starts_with(bytes) {
                ModelFormatError::Truncated
            } else {
                ModelFormatError::BadMagic
            });
        }
        if bytes[0..4] != MODEL_MAGIC {
            return Err(ModelFormatError::BadMagic);
        }
        let read_u32 = |offset: usize| {
            u32::from_le_bytes([bytes[offset], bytes[offset + 1], bytes[offset + 2], bytes[offset + 3]])
        };
        let version = read_u32(4);
        if version != MODEL_VERSION {
            return Err(ModelFormatError::UnsupportedVersion(version));
        }
        let dim = read_u32(8);
        if dim as usize != FEATURE_DIM {
            return Err(ModelFormatError::DimensionMismatch(dim));
        }
        let num_classes = read_u32(12) as usize;
        let expected = 16 + 4 * (num_classes + num_classes * FEATURE_DIM);
        if bytes.len() != expected {
            return Err(ModelFormatError::Truncated);
        }
        let mut cursor = 16;
        let mut read_f32s = |count: usize| {
            let mut values = Vec::with_capacity(count);
            for _ in 0..count {
                values.push(f32::from_le_bytes([
                    bytes[cursor],
                    bytes[cursor + 1],
                    bytes[cursor + 2],
                    bytes[cursor + 3],
                ]));
                cursor += 4;
            }
            values
        };
        let bias = read_f32s(num_classes);
        let weights = read_f32s(num_classes * FEATURE_DIM);
        Ok(Self { num_classes, weights, bias })
    }
}

impl ScorerBackend for LinearModel {
    fn capabilities(&self) -> BackendCaps {
        // Linear scoring has no input-length limit; chunking remains the
        // caller's choice.
        BackendCaps { max_tokens: usize::MAX, batch_size: 1024 }
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn classify(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError> {
        Ok(texts.iter().map(|t| self.score_text(t)).collect())
    }
}

/// Trains on labeled texts. `examples` pairs each text with a class index
/// strictly below `num_classes`.
pub fn train_on_examples(
    examples: &[(String, usize)],
    num_classes: usize,
    cfg: &TrainConfig,
) -> Result<LinearModel, TrainError> {
    if num_classes < 2 {
        return Err(TrainError::InvalidClassCount(num_classes));
    }
    if examples.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(TrainError::InvalidTrainConfig);
    }
    for &(_, class) in examples {
        if class >= num_classes {
            return Err(TrainError::ClassOutOfRange { class, num_classes });
        }
    }

    let featurized: Vec<(Vec<(u32, f32)>, usize)> =
        examples.iter().map(|(text, class)| (featurize(text), *class)).collect();

    // Inverse-frequency example weights; uniform unless rebalancing.
    let mut example_weight = alloc::vec![1.0f32; num_classes];
    if cfg.rebalance {
        let mut counts = alloc::vec![0usize; num_classes];
        for &(_, class) in &featurized {
            counts[class] += 1;
        }
        let total = featurized.len() as f32;
        for (w, &count) in example_weight.iter_mut().zip(&counts) {
            *w = if count > 0 { total / (num_classes as f32 * count as f32) } else { 0.0 };
        }
    }

    let mut model = LinearModel::zeroed(num_classes);
    let mut order: Vec<usize> = (0..featurized.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Per-example softmax gradient coefficients, computed for the whole
    // batch against pre-update weights, then applied in example order.
    let mut coeffs: Vec<(usize, Vec<f32>)> = Vec::with_capacity(cfg.batch_size);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            coeffs.clear();
            for &example_index in batch {
                let (features, class) = &featurized[example_index];
                let logits = model.score_features(features);
                let probs = softmax_f32(&logits);
                let mut grad = probs;
                grad[*class] -= 1.0;
                let weight = example_weight[*class];
                for g in &mut grad {
                    *g *= weight;
                }
                coeffs.push((example_index, grad));
            }
            let scale = cfg.learning_rate / batch.len() as f32;
            if cfg.l2 > 0.0 {
                let decay = 1.0 - cfg.learning_rate * cfg.l2;
                for w in &mut model.weights {
                    *w *= decay;
                }
            }
            for (example_index, grad) in &coeffs {
                let features = &featurized[*example_index].0;
                for (c, g) in grad.iter().enumerate() {
                    let step = scale * g;
                    let row = &mut model.weights[c * FEATURE_DIM..(c + 1) * FEATURE_DIM];
                    for &(idx, value) in features {
                        row[idx as usize] -= step * value;
                    }
                    model.bias[c] -= step;
                }
            }
        }
    }
    Ok(model)
}

fn softmax_f32(logits: &[f64]) -> Vec<f32> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f32> = logits.iter().map(|&l| math::exp_f32((l - max) as f32)).collect();
    let sum: f32 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

/// Trains a six-way impact classifier from labeled documents.
///
/// Each document is chunked and every chunk becomes one training example
/// carrying the document's label; unlabeled documents are skipped.
pub fn train_on_documents(
    docs: &[Document],
    chunk_cfg: &ChunkConfig,
    cfg: &TrainConfig,
) -> Result<LinearModel, TrainError> {
    let mut examples: Vec<(String, usize)> = Vec::new();
    for doc in docs {
        let Some(label) = doc.label else { continue };
        let chunks = chunk_text(&doc.tokens(), chunk_cfg).map_err(|_| TrainError::InvalidTrainConfig)?;
        for chunk in chunks {
            examples.push((chunk.text, label.index()));
        }
    }
    if examples.is_empty() {
        return Err(TrainError::NoLabeledData);
    }
    train_on_examples(&examples, crate::category::NUM_CATEGORIES, cfg)
}
