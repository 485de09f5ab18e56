//! Wall-clock benchmark harness for the two inference paths.
//!
//! A variant runs the pipeline stage by stage — ranking, selection, backend
//! inference, output parsing — over a document set, repeated several times;
//! the report carries the median wall-clock per stage, the token volume
//! actually sent to the backend, and the input-reduction ratio. Token counts
//! are deterministic; only the timings vary between runs.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use sentsel_core::category::ImpactCategory;
use sentsel_core::corpus::Document;
use sentsel_core::scoring::{
    argmax, chunk_text, classify_tokens, BackendCaps, BackendError, ChunkConfig, ScorerBackend,
    ScoringError,
};
use sentsel_core::selection::{
    assemble_input, rank_sentences, select_top_k, InputStyle, SelectionError, SentenceRanking,
};
use sentsel_core::text::reference_tokenize;

use crate::parallel::par_try_map;

/// Which pipeline path a report measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchVariant {
    /// The whole document goes to the backend.
    FullText,
    /// Only the top-k ranked sentences go to the backend.
    TopK,
}

impl BenchVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::FullText => "full_text",
            Self::TopK => "top_k",
        }
    }
}

/// Harness settings.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub repetitions: usize,
    /// Sentences kept by the selected path.
    pub k: usize,
    pub workers: usize,
    pub chunk: ChunkConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { repetitions: 3, k: 15, workers: 1, chunk: ChunkConfig::default() }
    }
}

/// Median stage timings in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub ranking_ms: f64,
    pub selection_ms: f64,
    pub inference_ms: f64,
    pub parsing_ms: f64,
}

/// Result of benchmarking one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub variant: BenchVariant,
    pub k: Option<usize>,
    pub documents: usize,
    pub repetitions: usize,
    pub workers: usize,
    pub stages: StageTimings,
    /// Median of per-repetition wall-clock totals.
    pub total_ms: f64,
    /// Reference tokens sent to the backend per repetition, after chunking.
    pub tokens_processed: usize,
    /// Reference tokens of the raw full texts.
    pub full_text_tokens: usize,
    /// Tokens of the assembled backend inputs over `full_text_tokens`.
    pub reduction_ratio: f64,
}

/// Errors from a benchmark run.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("no documents to benchmark")]
    NoDocuments,
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    }
}

fn ms(duration: Duration) -> f64 {
    duration.as_secs_f64() * 1e3
}

/// Tokens the backend sees for `tokens` under `chunk`: the sum of chunk
/// sizes, which exceeds the document length when windows overlap.
fn chunked_token_count(tokens: &[String], chunk: &ChunkConfig) -> Result<usize, ScoringError> {
    Ok(chunk_text(tokens, chunk)?.iter().map(|c| c.token_end - c.token_start).sum())
}

/// Benchmarks one variant over `docs`.
///
/// The selected path ranks with `selector`, keeps the top `cfg.k` sentences
/// in document order, and classifies the assembled excerpt; the full-text
/// path classifies the whole document. Both classify through `backend`.
pub fn run_benchmark(
    docs: &[Document],
    selector: &(dyn ScorerBackend + Sync),
    backend: &(dyn ScorerBackend + Sync),
    variant: BenchVariant,
    cfg: &BenchConfig,
) -> Result<BenchmarkReport, BenchError> {
    if cfg.repetitions == 0 {
        return Err(BenchError::NoRepetitions);
    }
    if docs.is_empty() {
        return Err(BenchError::NoDocuments);
    }

    let full_text_tokens: usize = docs.iter().map(Document::token_count).sum();

    let mut ranking_samples = Vec::with_capacity(cfg.repetitions);
    let mut selection_samples = Vec::with_capacity(cfg.repetitions);
    let mut inference_samples = Vec::with_capacity(cfg.repetitions);
    let mut parsing_samples = Vec::with_capacity(cfg.repetitions);
    let mut total_samples = Vec::with_capacity(cfg.repetitions);
    let mut tokens_processed = 0usize;
    let mut input_tokens = 0usize;

    for _ in 0..cfg.repetitions {
        let rep_start = Instant::now();

        // Stage 1: ranking (selected path only).
        let stage_start = Instant::now();
        let rankings: Option<Vec<SentenceRanking>> = match variant {
            BenchVariant::FullText => None,
            BenchVariant::TopK => Some(par_try_map(docs, cfg.workers, |doc| {
                rank_sentences(doc, selector)
            })?),
        };
        ranking_samples.push(ms(stage_start.elapsed()));

        // Stage 2: selection and input assembly.
        let stage_start = Instant::now();
        let inputs: Vec<String> = match (&rankings, variant) {
            (Some(rankings), BenchVariant::TopK) => docs
                .iter()
                .zip(rankings)
                .map(|(doc, ranking)| {
                    let indices = select_top_k(ranking, cfg.k);
                    assemble_input(doc, &indices, InputStyle::Concatenated)
                })
                .collect(),
            _ => docs.iter().map(Document::full_text).collect(),
        };
        selection_samples.push(ms(stage_start.elapsed()));

        // Stage 3: backend inference over chunked inputs.
        let stage_start = Instant::now();
        let logit_results: Vec<Vec<f64>> = par_try_map(&inputs, cfg.workers, |input| {
            let tokens = reference_tokenize(input);
            classify_tokens(&tokens, backend, &cfg.chunk)
        })?;
        inference_samples.push(ms(stage_start.elapsed()));

        // Stage 4: turning logits into labeled predictions.
        let stage_start = Instant::now();
        let predictions: Vec<(String, ImpactCategory)> = docs
            .iter()
            .zip(&logit_results)
            .map(|(doc, logits)| {
                let category = ImpactCategory::from_index(argmax(logits))
                    .expect("argmax of six logits is a category index");
                (doc.doc_id.clone(), category)
            })
            .collect();
        parsing_samples.push(ms(stage_start.elapsed()));
        assert_eq!(predictions.len(), docs.len());

        total_samples.push(ms(rep_start.elapsed()));

        // Token accounting is identical across repetitions; compute once.
        if tokens_processed == 0 {
            for input in &inputs {
                let tokens = reference_tokenize(input);
                input_tokens += tokens.len();
                tokens_processed += chunked_token_count(&tokens, &cfg.chunk)?;
            }
        }
    }

    Ok(BenchmarkReport {
        variant,
        k: match variant {
            BenchVariant::TopK => Some(cfg.k),
            BenchVariant::FullText => None,
        },
        documents: docs.len(),
        repetitions: cfg.repetitions,
        workers: cfg.workers,
        stages: StageTimings {
            ranking_ms: median(&mut ranking_samples),
            selection_ms: median(&mut selection_samples),
            inference_ms: median(&mut inference_samples),
            parsing_ms: median(&mut parsing_samples),
        },
        total_ms: median(&mut total_samples),
        tokens_processed,
        full_text_tokens,
        reduction_ratio: input_tokens as f64 / full_text_tokens as f64,
    })
}

/// Wraps a backend with a busy-wait of `per_token` for every reference
/// token classified, emulating a compute-bound model whose cost scales
/// linearly with input size.
pub struct LatencyBackend<B> {
    inner: B,
    per_token: Duration,
}

impl<B> LatencyBackend<B> {
    pub fn new(inner: B, per_token: Duration) -> Self {
        Self { inner, per_token }
    }
}

impl<B: ScorerBackend> ScorerBackend for LatencyBackend<B> {
    fn capabilities(&self) -> BackendCaps {
        self.inner.capabilities()
    }

    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    fn classify(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError> {
        let tokens: usize = texts.iter().map(|t| reference_tokenize(t).len()).sum();
        let deadline = Instant::now() + self.per_token * tokens as u32;
        while Instant::now() < deadline {
            std::hint::spin_loop();
        }
        self.inner.classify(texts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_corpus, SynthConfig};
    use sentsel_core::scoring::mock::ConstantBackend;

    fn small_corpus() -> Vec<Document> {
        synth_corpus(&SynthConfig {
            docs: 4,
            distractor_sentences: 40,
            ..SynthConfig::default()
        })
    }

    #[test]
    fn median_of_odd_and_even_sample_counts() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn full_text_report_has_unit_reduction_and_zero_selection_stages() {
        let docs = small_corpus();
        let backend = ConstantBackend::new(vec![0.0; 6]);
        let report = run_benchmark(
            &docs,
            &backend,
            &backend,
            BenchVariant::FullText,
            &BenchConfig { repetitions: 2, ..BenchConfig::default() },
        )
        .unwrap();
        assert_eq!(report.variant, BenchVariant::FullText);
        assert_eq!(report.k, None);
        assert_eq!(report.reduction_ratio, 1.0);
        assert!(report.tokens_processed >= report.full_text_tokens, "overlap inflates");
    }

    #[test]
    fn top_k_reduces_tokens() {
        let docs = small_corpus();
        let backend = ConstantBackend::new(vec![0.0; 6]);
        let cfg = BenchConfig { repetitions: 2, k: 5, ..BenchConfig::default() };
        let report =
            run_benchmark(&docs, &backend, &backend, BenchVariant::TopK, &cfg).unwrap();
        assert_eq!(report.k, Some(5));
        assert!(report.reduction_ratio < 0.5, "got {}", report.reduction_ratio);
        assert!(report.tokens_processed < report.full_text_tokens);
    }

    #[test]
    fn token_accounting_is_deterministic_across_runs_and_workers() {
        let docs = small_corpus();
        let backend = ConstantBackend::new(vec![0.0; 6]);
        let mut seen = Vec::new();
        for workers in [1, 4] {
            let cfg = BenchConfig { repetitions: 2, k: 5, workers, ..BenchConfig::default() };
            let report =
                run_benchmark(&docs, &backend, &backend, BenchVariant::TopK, &cfg).unwrap();
            seen.push((report.tokens_processed, report.reduction_ratio.to_bits()));
        }
        assert_eq!(seen[0], seen[1]);
    }

    #[test]
    fn latency_backend_scales_with_tokens() {
        let backend =
            LatencyBackend::new(ConstantBackend::new(vec![0.0; 6]), Duration::from_micros(40));
        let short = "one two three";
        let long_text = vec!["word"; 300].join(" ");

        let start = Instant::now();
        backend.classify(&[short]).unwrap();
        let short_time = start.elapsed();

        let start = Instant::now();
        backend.classify(&[long_text.as_str()]).unwrap();
        let long_time = start.elapsed();

        // 300 tokens vs 3: the long call must take markedly longer.
        assert!(long_time > short_time * 10, "short {short_time:?} long {long_time:?}");
    }
}
