//! Classifier backend contract, chunked document classification and the
//! classifier-derived sentence signals (entropy, leave-one-out importance).
//!
//! Backends are pluggable: anything that can score a batch of texts into
//! per-class logits satisfies [`ScorerBackend`]. Long inputs are split into
//! overlapping token chunks and the per-chunk logits averaged into one
//! score vector for the whole document.

use alloc::string::String;
use alloc::vec::Vec;

use crate::category::NUM_CATEGORIES;
use crate::corpus::Document;
use crate::math;

/// Per-class logits for the six impact categories, in enum order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores(pub [f64; NUM_CATEGORIES]);

impl ClassScores {
    /// Softmax distribution over the six categories.
    pub fn softmax(&self) -> [f64; NUM_CATEGORIES] {
        let mut out = [0.0; NUM_CATEGORIES];
        let probs = softmax(&self.0);
        out.copy_from_slice(&probs);
        out
    }

    /// Index of the highest logit; ties fall to the earlier category.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    fn from_logits(logits: &[f64]) -> Result<Self, ScoringError> {
        if logits.len() != NUM_CATEGORIES {
            return Err(ScoringError::ClassCountMismatch {
                expected: NUM_CATEGORIES,
                got: logits.len(),
            });
        }
        let mut arr = [0.0; NUM_CATEGORIES];
        arr.copy_from_slice(logits);
        Ok(Self(arr))
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| math::exp(l - max)).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

/// First index attaining the maximum value.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Shannon entropy in nats; zero probabilities contribute nothing.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * math::ln(p)).sum::<f64>()
}

/// Capability descriptor of a scorer backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackendCaps {
    /// Longest input, in reference tokens, the backend accepts per text.
    pub max_tokens: usize,
    /// Largest batch the backend accepts per classify call.
    pub batch_size: usize,
}

impl Default for BackendCaps {
    fn default() -> Self {
        Self { max_tokens: 512, batch_size: 16 }
    }
}

/// Error from a classification backend.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("backend error: {message}")]
pub struct BackendError {
    pub message: String,
}

impl BackendError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { message: message.into() }
    }
}

/// A classification backend scoring texts into per-class logits.
///
/// `classify` must be deterministic for a fixed backend state and return
/// one logit vector of width `num_classes()` per input text. The built-in
/// reference classifier, the HTTP backend and the mocks all implement this.
pub trait ScorerBackend {
    fn capabilities(&self) -> BackendCaps;
    fn num_classes(&self) -> usize;
    fn classify(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError>;
}

/// One token window of a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    /// Half-open token offsets into the document's concatenated token stream.
    pub token_start: usize,
    pub token_end: usize,
    /// Detokenized chunk text (tokens joined with single spaces).
    pub text: String,
}

/// Chunking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkConfig {
    pub max_tokens: usize,
    pub overlap: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self { max_tokens: 512, overlap: 50 }
    }
}

/// How ensemble members combine for the entropy signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntropyAggregation {
    /// Average the per-backend distributions, then take entropy.
    #[default]
    AverageDistributions,
    /// Average the per-backend entropies.
    AverageEntropies,
}

/// Norm aggregating the per-class logit deltas for the importance signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImportanceNorm {
    #[default]
    L1,
    LInf,
}

/// Errors from chunking, classification and signal computation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoringError {
    #[error("invalid chunk config: max_tokens={max_tokens}, overlap={overlap}")]
    InvalidChunkConfig { max_tokens: usize, overlap: usize },
    #[error("backend failed at chunk {chunk:?}: {source}")]
    Backend {
        chunk: Option<usize>,
        #[source]
        source: BackendError,
    },
    #[error("document has a single sentence; leave-one-out is undefined")]
    SingleSentenceDocument,
    #[error("document has no sentences")]
    EmptyDocument,
    #[error("sentence index {index} out of range for {len} sentences")]
    InvalidSentenceIndex { index: usize, len: usize },
    #[error("expected {expected} classes, backend returned {got}")]
    ClassCountMismatch { expected: usize, got: usize },
    #[error("at least one backend is required")]
    NoBackends,
    #[error("backend returned {got} results for {expected} inputs")]
    ResultCountMismatch { expected: usize, got: usize },
}

/// Splits a token stream into overlapping chunks.
///
/// Chunk `i` starts at `i * (max_tokens - overlap)`; the final chunk's end
/// is clamped to the stream length. Every token is covered by at least one
/// chunk and consecutive chunks overlap by exactly `overlap` tokens.
pub fn chunk_text(tokens: &[String], cfg: &ChunkConfig) -> Result<Vec<Chunk>, ScoringError> {
    if cfg.max_tokens == 0 || cfg.overlap >= cfg.max_tokens {
        return Err(ScoringError::InvalidChunkConfig {
            max_tokens: cfg.max_tokens,
            overlap: cfg.overlap,
        });
    }
    let n = tokens.len();
    let mut chunks = Vec::new();
    if n == 0 {
        return Ok(chunks);
    }
    let stride = cfg.max_tokens - cfg.overlap;
    let mut start = 0;
    loop {
        let end = (start + cfg.max_tokens).min(n);
        chunks.push(Chunk { token_start: start, token_end: end, text: join_tokens(&tokens[start..end]) });
        if end == n {
            break;
        }
        start += stride;
    }
    Ok(chunks)
}

fn join_tokens(tokens: &[String]) -> String {
    let mut out = String::new();
    for tok in tokens {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

/// Classifies a token stream: chunk, score each chunk, average the logits.
///
/// The effective chunk size is the smaller of `cfg.max_tokens` and the
/// backend's declared limit. Returns logits of width `num_classes()`.
pub fn classify_tokens(
    tokens: &[String],
    backend: &dyn ScorerBackend,
    cfg: &ChunkConfig,
) -> Result<Vec<f64>, ScoringError> {
    if tokens.is_empty() {
        return Err(ScoringError::EmptyDocument);
    }
    let caps = backend.capabilities();
    let max_tokens = cfg.max_tokens.min(caps.max_tokens.max(1));
    let effective = ChunkConfig { max_tokens, overlap: cfg.overlap.min(max_tokens.saturating_sub(1)) };
    let chunks = chunk_text(tokens, &effective)?;
    let logits = classify_chunk_texts(&chunks, backend)?;

    let classes = backend.num_classes();
    let mut mean = alloc::vec![0.0f64; classes];
    for chunk_logits in &logits {
        for (m, l) in mean.iter_mut().zip(chunk_logits) {
            *m += l;
        }
    }
    let count = logits.len() as f64;
    for m in &mut mean {
        *m /= count;
    }
    Ok(mean)
}

fn classify_chunk_texts(
    chunks: &[Chunk],
    backend: &dyn ScorerBackend,
) -> Result<Vec<Vec<f64>>, ScoringError> {
    let caps = backend.capabilities();
    let batch = caps.batch_size.max(1);
    let classes = backend.num_classes();
    let mut out = Vec::with_capacity(chunks.len());
    for (batch_index, group) in chunks.chunks(batch).enumerate() {
        let texts: Vec<&str> = group.iter().map(|c| c.text.as_str()).collect();
        let scores = backend
            .classify(&texts)
            .map_err(|source| ScoringError::Backend { chunk: Some(batch_index * batch), source })?;
        if scores.len() != texts.len() {
            return Err(ScoringError::ResultCountMismatch { expected: texts.len(), got: scores.len() });
        }
        for logits in &scores {
            if logits.len() != classes {
                return Err(ScoringError::ClassCountMismatch { expected: classes, got: logits.len() });
            }
        }
        out.extend(scores);
    }
    Ok(out)
}

/// Classifies a whole document into six-way impact logits.
pub fn classify_document(
    doc: &Document,
    backend: &dyn ScorerBackend,
    cfg: &ChunkConfig,
) -> Result<ClassScores, ScoringError> {
    if doc.sentences.is_empty() {
        return Err(ScoringError::EmptyDocument);
    }
    let logits = classify_tokens(&doc.tokens(), backend, cfg)?;
    ClassScores::from_logits(&logits)
}

/// Entropy signal for one sentence: negative entropy of its standalone
/// class distribution, so higher means more class-indicative.
///
/// With several backends the distributions are averaged before the entropy
/// is taken (or the per-backend entropies averaged, per `aggregation`).
/// Always in `[-ln C, 0]` for `C`-class backends.
pub fn sentence_entropy_score(
    sentence_text: &str,
    backends: &[&dyn ScorerBackend],
    aggregation: EntropyAggregation,
) -> Result<f64, ScoringError> {
    if backends.is_empty() {
        return Err(ScoringError::NoBackends);
    }
    let classes = backends[0].num_classes();
    let mut mean_dist = alloc::vec![0.0f64; classes];
    let mut mean_entropy = 0.0;
    for backend in backends {
        if backend.num_classes() != classes {
            return Err(ScoringError::ClassCountMismatch {
                expected: classes,
                got: backend.num_classes(),
            });
        }
        let scores = backend
            .classify(&[sentence_text])
            .map_err(|source| ScoringError::Backend { chunk: None, source })?;
        let logits = scores
            .first()
            .ok_or(ScoringError::ResultCountMismatch { expected: 1, got: 0 })?;
        if logits.len() != classes {
            return Err(ScoringError::ClassCountMismatch { expected: classes, got: logits.len() });
        }
        let probs = softmax(logits);
        mean_entropy += entropy(&probs);
        for (m, p) in mean_dist.iter_mut().zip(&probs) {
            *m += p;
        }
    }
    let k = backends.len() as f64;
    match aggregation {
        EntropyAggregation::AverageDistributions => {
            for m in &mut mean_dist {
                *m /= k;
            }
            Ok(-entropy(&mean_dist))
        }
        EntropyAggregation::AverageEntropies => Ok(-(mean_entropy / k)),
    }
}

/// Leave-one-out importance of sentence `index`: the change in document
/// logits when that sentence is removed, averaged over backends.
///
/// The shortened document is re-chunked from scratch, so removals can shift
/// chunk boundaries. Non-negative; exactly zero for content-insensitive
/// backends.
pub fn sentence_importance_score(
    doc: &Document,
    index: usize,
    backends: &[&dyn ScorerBackend],
    cfg: &ChunkConfig,
    norm: ImportanceNorm,
) -> Result<f64, ScoringError> {
    if backends.is_empty() {
        return Err(ScoringError::NoBackends);
    }
    if doc.sentences.len() < 2 {
        return Err(ScoringError::SingleSentenceDocument);
    }
    if index >= doc.sentences.len() {
        return Err(ScoringError::InvalidSentenceIndex { index, len: doc.sentences.len() });
    }
    let full: Vec<Vec<f64>> = backends
        .iter()
        .map(|b| classify_tokens(&doc.tokens(), *b, cfg))
        .collect::<Result<_, _>>()?;
    importance_against_full(doc, index, backends, &full, cfg, norm)
}

/// Importance scores for every sentence of a document, computing the
/// full-document logits once per backend.
pub fn document_importance_scores(
    doc: &Document,
    backends: &[&dyn ScorerBackend],
    cfg: &ChunkConfig,
    norm: ImportanceNorm,
) -> Result<Vec<f64>, ScoringError> {
    if backends.is_empty() {
        return Err(ScoringError::NoBackends);
    }
    if doc.sentences.len() < 2 {
        return Err(ScoringError::SingleSentenceDocument);
    }
    let full: Vec<Vec<f64>> = backends
        .iter()
        .map(|b| classify_tokens(&doc.tokens(), *b, cfg))
        .collect::<Result<_, _>>()?;
    (0..doc.sentences.len())
        .map(|index| importance_against_full(doc, index, backends, &full, cfg, norm))
        .collect()
}

fn importance_against_full(
    doc: &Document,
    index: usize,
    backends: &[&dyn ScorerBackend],
    full: &[Vec<f64>],
    cfg: &ChunkConfig,
    norm: ImportanceNorm,
) -> Result<f64, ScoringError> {
    let mut reduced_tokens = Vec::new();
    for sentence in doc.sentences.iter().filter(|s| s.index != index) {
        reduced_tokens.extend(crate::text::reference_tokenize(&sentence.text));
    }
    let mut total = 0.0;
    for (backend, full_logits) in backends.iter().zip(full) {
        let reduced = classify_tokens(&reduced_tokens, *backend, cfg)?;
        let delta = full_logits.iter().zip(&reduced).map(|(a, b)| math::abs(a - b));
        total += match norm {
            ImportanceNorm::L1 => delta.sum::<f64>(),
            ImportanceNorm::LInf => delta.fold(0.0, f64::max),
        };
    }
    Ok(total / backends.len() as f64)
}

/// Entropy scores for every sentence of a document.
pub fn document_entropy_scores(
    doc: &Document,
    backends: &[&dyn ScorerBackend],
    aggregation: EntropyAggregation,
) -> Result<Vec<f64>, ScoringError> {
    doc.sentences
        .iter()
        .map(|s| sentence_entropy_score(&s.text, backends, aggregation))
        .collect()
}

pub mod mock {
    //! Deterministic in-process backends for tests, dry runs and examples.

    use alloc::string::String;
    use alloc::vec::Vec;

    use super::{BackendCaps, BackendError, ScorerBackend};
    use crate::text::reference_tokenize;

    /// Emits the same logits for every input.
    #[derive(Debug, Clone)]
    pub struct ConstantBackend {
        pub logits: Vec<f64>,
        pub caps: BackendCaps,
    }

    impl ConstantBackend {
        pub fn new(logits: Vec<f64>) -> Self {
            Self { logits, caps: BackendCaps::default() }
        }
    }

    impl ScorerBackend for ConstantBackend {
        fn capabilities(&self) -> BackendCaps {
            self.caps
        }

        fn num_classes(&self) -> usize {
            self.logits.len()
        }

        fn classify(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError> {
            Ok(texts.iter().map(|_| self.logits.clone()).collect())
        }
    }

    /// Logits equal per-class keyword occurrence counts in the input.
    ///
    /// Class `c` scores the number of tokens (case-folded) that appear in
    /// `keywords[c]`.
    #[derive(Debug, Clone)]
    pub struct KeywordBackend {
        pub keywords: Vec<Vec<String>>,
        pub caps: BackendCaps,
    }

    impl KeywordBackend {
        pub fn new(keywords: Vec<Vec<String>>) -> Self {
            Self { keywords, caps: BackendCaps { max_tokens: 100_000, batch_size: 64 } }
        }
    }

    impl ScorerBackend for KeywordBackend {
        fn capabilities(&self) -> BackendCaps {
            self.caps
        }

        fn num_classes(&self) -> usize {
            self.keywords.len()
        }

        fn classify(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError> {
            Ok(texts
                .iter()
                .map(|text| {
                    let tokens: Vec<String> = reference_tokenize(text)
                        .into_iter()
                        .map(|t| t.to_lowercase())
                        .collect();
                    self.keywords
                        .iter()
                        .map(|class_words| {
                            tokens
                                .iter()
                                .filter(|t| class_words.iter().any(|k| k == *t))
                                .count() as f64
                        })
                        .collect()
                })
                .collect())
        }
    }
}
