//! Command-line surface binding the pipeline end to end.
//!
//! Eleven subcommands cover ingestion through benchmarking. Every command
//! reads declared input artifacts, runs one pipeline stage, and writes one
//! output artifact; given fixed inputs, configuration, and seed, re-running
//! a command reproduces its artifact byte for byte. Per-document outputs
//! are written in ascending `doc_id` order regardless of worker scheduling.
//!
//! Failures exit with code 1 (usage), 2 (data or schema), or 3 (backend or
//! client), printing a one-line JSON object `{"kind": ..., "message": ...}`
//! on standard error.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sentsel_core::alignment::{
    align_evidence, AcceptBorderline, Adjudicator, AlignmentSummary, InvalidThresholds,
    MatchStatus, RejectBorderline,
};
use sentsel_core::category::ImpactCategory;
use sentsel_core::corpus::{build_splits, ingest_assessments, CorpusError, Document, SplitName};
use sentsel_core::inference::{
    predict_with_classifier, predict_with_llm, InferenceError, Prediction,
};
use sentsel_core::linear::{train_on_examples, LinearModel, TrainError};
use sentsel_core::metrics::{
    agreement_matrix, compute_f1_with, MacroAveraging, MetricsError,
};
use sentsel_core::category::NUM_CATEGORIES;
use sentsel_core::scoring::{
    chunk_text, document_entropy_scores, document_importance_scores, BackendCaps, ScorerBackend,
    ScoringError,
};
use sentsel_core::selection::{
    derive_training_data, discretize_scores, rank_sentences, SelectionError, SelectionMode,
    SentenceRanking, SignalInputs,
};
use sentsel_core::text::segment_sentences;

use crate::bench::{run_benchmark, BenchConfig, BenchError, BenchVariant, BenchmarkReport, LatencyBackend};
use crate::config::{
    resolve_endpoint, ConfigError, PipelineConfig, GENERATOR_ENDPOINT_VAR, SCORER_ENDPOINT_VAR,
};
use crate::formats::{self, FormatError};
use crate::http::{HttpGenerationClient, HttpScorerBackend};
use crate::parallel::par_try_map;

/// Process exit code for command-line or configuration mistakes.
pub const EXIT_USAGE: i32 = 1;
/// Process exit code for malformed or inconsistent data artifacts.
pub const EXIT_DATA: i32 = 2;
/// Process exit code for remote backend failures.
pub const EXIT_BACKEND: i32 = 3;

/// A command failure, classified for the exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::Data(_) => "data",
            Self::Backend(_) => "backend",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Data(_) => EXIT_DATA,
            Self::Backend(_) => EXIT_BACKEND,
        }
    }

    /// The single stderr line: a compact JSON object.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "kind": self.kind(), "message": self.to_string() }).to_string()
    }
}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        Self::Usage(err.to_string())
    }
}

impl From<FormatError> for CliError {
    fn from(err: FormatError) -> Self {
        Self::Data(err.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(err: CorpusError) -> Self {
        match err {
            CorpusError::InvalidRatios(_) => Self::Usage(err.to_string()),
            _ => Self::Data(err.to_string()),
        }
    }
}

impl From<InvalidThresholds> for CliError {
    fn from(err: InvalidThresholds) -> Self {
        Self::Usage(err.to_string())
    }
}

impl From<ScoringError> for CliError {
    fn from(err: ScoringError) -> Self {
        match err {
            ScoringError::Backend { .. } => Self::Backend(err.to_string()),
            ScoringError::InvalidChunkConfig { .. } => Self::Usage(err.to_string()),
            _ => Self::Data(err.to_string()),
        }
    }
}

impl From<SelectionError> for CliError {
    fn from(err: SelectionError) -> Self {
        match err {
            SelectionError::InvalidConfig { .. } => Self::Usage(err.to_string()),
            SelectionError::Backend(_) => Self::Backend(err.to_string()),
            _ => Self::Data(err.to_string()),
        }
    }
}

impl From<InferenceError> for CliError {
    fn from(err: InferenceError) -> Self {
        match err {
            InferenceError::Client(_) | InferenceError::Backend(_) => {
                Self::Backend(err.to_string())
            }
            InferenceError::Scoring(inner) => Self::from(inner),
            InferenceError::Selection(inner) => Self::from(inner),
            _ => Self::Data(err.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(err: TrainError) -> Self {
        Self::Data(err.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(err: MetricsError) -> Self {
        Self::Data(err.to_string())
    }
}

impl From<BenchError> for CliError {
    fn from(err: BenchError) -> Self {
        match err {
            BenchError::Scoring(inner) => Self::from(inner),
            BenchError::Selection(inner) => Self::from(inner),
            _ => Self::Usage(err.to_string()),
        }
    }
}

/// Sentence-selection pipeline for scientific full-text classification.
#[derive(Debug, Parser)]
#[command(name = "sentsel", version, about, max_term_width = 100)]
pub struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed; all randomness derives from it.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads for document-level parallelism.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a corpus from an assessment CSV and a directory of full texts.
    Ingest(IngestArgs),
    /// Align assessment evidence onto corpus sentences.
    Align(AlignArgs),
    /// Build a species-disjoint train/val/test split.
    Split(SplitArgs),
    /// Compute per-sentence usefulness scores with classifier backends.
    Score(ScoreArgs),
    /// Derive labeled selector training examples from a signal.
    Derive(DeriveArgs),
    /// Train a linear classifier and save its weights.
    TrainRef(TrainRefArgs),
    /// Rank every document's sentences with a selector backend.
    Rank(RankArgs),
    /// Predict document categories, optionally from selected sentences.
    Classify(ClassifyArgs),
    /// Score predictions against gold labels.
    Eval(EvalArgs),
    /// Cross-tabulate rankings against relevance truths by mean NDCG.
    Agree(AgreeArgs),
    /// Benchmark the full-text and selected paths over a corpus.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Assessment CSV with columns species, publication, category, evidence.
    #[arg(long, value_name = "FILE")]
    pub assessments: PathBuf,
    /// Directory holding one `<publication>.txt` per assessment.
    #[arg(long, value_name = "DIR")]
    pub texts: PathBuf,
    /// Separator between sentences inside the evidence CSV cell.
    #[arg(long, default_value = "|", value_name = "STR")]
    pub delimiter: String,
    /// Corpus JSONL to write.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Corpus JSONL to annotate.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Assessment CSV with the evidence sentences.
    #[arg(long, value_name = "FILE")]
    pub assessments: PathBuf,
    /// Separator between sentences inside the evidence CSV cell.
    #[arg(long, default_value = "|", value_name = "STR")]
    pub delimiter: String,
    /// Minimum similarity for a confident match.
    #[arg(long, value_name = "X")]
    pub match_threshold: Option<f64>,
    /// Minimum similarity for a borderline candidate.
    #[arg(long, value_name = "X")]
    pub borderline_threshold: Option<f64>,
    /// Keep borderline matches instead of dropping them.
    #[arg(long)]
    pub accept_borderline: bool,
    /// Corpus JSONL to write with evidence_indices filled in.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    /// Alignment report JSONL to write.
    #[arg(long, value_name = "FILE")]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Corpus JSONL to split.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Train, validation, and test fractions; they must sum to 1.
    #[arg(long, default_value = "0.7,0.1,0.2", value_name = "A,B,C")]
    pub ratios: String,
    /// Split JSON to write.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, clap::ValueEnum, Clone, Copy, PartialEq, Eq)]
pub enum ScoreSignal {
    Entropy,
    Importance,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Corpus JSONL to score.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Which usefulness signal to compute.
    #[arg(long, value_enum)]
    pub signal: ScoreSignal,
    /// Classifier weight files; repeat for an ensemble.
    #[arg(long = "model", value_name = "FILE")]
    pub models: Vec<PathBuf>,
    /// Remote classification endpoint (overrides SENTSEL_SCORER_ENDPOINT).
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    /// Scores JSONL to write.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, clap::ValueEnum, Clone, Copy, PartialEq, Eq)]
pub enum DeriveSignal {
    Evidence,
    Entropy,
    Importance,
    Llm,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    /// Corpus JSONL providing sentences and context.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Which signal labels the examples.
    #[arg(long, value_enum)]
    pub signal: DeriveSignal,
    /// Scores JSONL (required for entropy and importance signals).
    #[arg(long, value_name = "FILE")]
    pub scores: Option<PathBuf>,
    /// Usefulness-label JSONL (required for the llm signal).
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// Selector-example JSONL to write.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, clap::ValueEnum, Clone, Copy, PartialEq, Eq)]
pub enum ModeChoice {
    Deterministic,
    Randomized,
}

impl From<ModeChoice> for SelectionMode {
    fn from(value: ModeChoice) -> Self {
        match value {
            ModeChoice::Deterministic => Self::Deterministic,
            ModeChoice::Randomized => Self::Randomized,
        }
    }
}

#[derive(Debug, clap::ValueEnum, Clone, Copy, PartialEq, Eq)]
pub enum SubsetName {
    Train,
    Val,
    Test,
}

impl From<SubsetName> for SplitName {
    fn from(value: SubsetName) -> Self {
        match value {
            SubsetName::Train => Self::Train,
            SubsetName::Val => Self::Val,
            SubsetName::Test => Self::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainRefArgs {
    /// Corpus JSONL with gold labels (six-class document classifier).
    #[arg(long, value_name = "FILE", conflicts_with = "selector_data")]
    pub corpus: Option<PathBuf>,
    /// Selector-example JSONL (sentence-usefulness selector) instead.
    #[arg(long, value_name = "FILE")]
    pub selector_data: Option<PathBuf>,
    /// Split JSON restricting which documents train.
    #[arg(long, value_name = "FILE", requires = "corpus")]
    pub split: Option<PathBuf>,
    /// Which subset of the split to train on.
    #[arg(long, value_enum, default_value = "train", value_name = "NAME")]
    pub subset: SubsetName,
    /// Added to the master seed, giving ensemble members distinct streams.
    #[arg(long, default_value_t = 0, value_name = "N")]
    pub seed_offset: u64,
    /// Passes over the training data.
    #[arg(long, value_name = "N")]
    pub epochs: Option<usize>,
    /// Examples per gradient step.
    #[arg(long, value_name = "N")]
    pub batch_size: Option<usize>,
    /// Gradient step size.
    #[arg(long, value_name = "X")]
    pub learning_rate: Option<f32>,
    /// L2 penalty; zero disables weight decay.
    #[arg(long, value_name = "X")]
    pub l2: Option<f32>,
    /// Weight examples inversely to their class frequency.
    #[arg(long)]
    pub rebalance: bool,
    /// Weight file to write.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Corpus JSONL to rank.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Selector weight file.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Remote classification endpoint (overrides SENTSEL_SCORER_ENDPOINT).
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    /// Ranking JSONL to write.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Corpus JSONL to classify.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Ranking JSONL; omitting it classifies full texts.
    #[arg(long, value_name = "FILE")]
    pub ranking: Option<PathBuf>,
    /// Classifier weight file.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Remote classification endpoint (overrides SENTSEL_SCORER_ENDPOINT).
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    /// Remote generation endpoint (overrides SENTSEL_GENERATOR_ENDPOINT);
    /// switches to the generative path.
    #[arg(long, value_name = "URL")]
    pub generator_endpoint: Option<String>,
    /// Deterministic top-k or randomized sampling with voting.
    #[arg(long, value_enum, value_name = "MODE")]
    pub mode: Option<ModeChoice>,
    /// Sentences per assembled input.
    #[arg(long, value_name = "N")]
    pub k: Option<usize>,
    /// Ranked sentences eligible for sampling.
    #[arg(long, value_name = "N")]
    pub pool: Option<usize>,
    /// Sampled inputs per document in randomized mode.
    #[arg(long, value_name = "N")]
    pub samples: Option<usize>,
    /// Ask the generative backend for the answer line only.
    #[arg(long)]
    pub no_summary: bool,
    /// Predictions JSONL to write.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions JSONL to evaluate.
    #[arg(long, value_name = "FILE")]
    pub predictions: PathBuf,
    /// Corpus JSONL carrying the gold labels.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Macro-average over all six classes instead of present ones.
    #[arg(long)]
    pub all_classes: bool,
    /// Evaluation report JSON to write.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AgreeArgs {
    /// Corpus JSONL providing evidence truth.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Ranking JSONL as `name=path`; repeatable.
    #[arg(long = "ranking", value_name = "NAME=FILE", required = true)]
    pub rankings: Vec<String>,
    /// Scores JSONL as graded truth `name=path`; repeatable. Scores are
    /// discretized into usefulness classes before use as gains.
    #[arg(long = "truth", value_name = "NAME=FILE")]
    pub truths: Vec<String>,
    /// Include binary evidence gains from the corpus as a truth column.
    #[arg(long)]
    pub evidence: bool,
    /// Agreement matrix JSON to write.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    /// Also write the matrix as CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Corpus JSONL to benchmark over.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Classifier weight file.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Selector weight file; the classifier weights when omitted.
    #[arg(long, value_name = "FILE")]
    pub selector: Option<PathBuf>,
    /// Sentences kept by the selected path.
    #[arg(long, value_name = "N")]
    pub k: Option<usize>,
    /// Timed repetitions per variant.
    #[arg(long, default_value_t = 3, value_name = "N")]
    pub repetitions: usize,
    /// Simulated classifier latency per input token, in microseconds.
    #[arg(long, default_value_t = 0, value_name = "US")]
    pub latency_us: u64,
    /// Benchmark report JSON to write.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

/// Both benchmark variants side by side.
#[derive(Debug, Serialize)]
pub struct BenchSummary {
    pub full_text: BenchmarkReport,
    pub top_k: BenchmarkReport,
    /// Selected-path tokens over full-path tokens.
    pub token_ratio: f64,
    /// Full-path median total over selected-path median total.
    pub speedup: f64,
}

/// Loads the configuration and applies the global flag overrides.
fn effective_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.run.workers = workers;
    }
    Ok(cfg)
}

/// Runs one parsed invocation.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = effective_config(cli)?;
    match &cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Align(args) => cmd_align(args, &cfg),
        Command::Split(args) => cmd_split(args, &cfg),
        Command::Score(args) => cmd_score(args, &cfg),
        Command::Derive(args) => cmd_derive(args),
        Command::TrainRef(args) => cmd_train_ref(args, &cfg),
        Command::Rank(args) => cmd_rank(args, &cfg),
        Command::Classify(args) => cmd_classify(args, &cfg),
        Command::Eval(args) => cmd_eval(args, &cfg),
        Command::Agree(args) => cmd_agree(args, &cfg),
        Command::Bench(args) => cmd_bench(args, &cfg),
    }
}

fn doc_key(species: &str, publication: &str) -> String {
    format!("{species}::{publication}")
}

fn cmd_ingest(args: &IngestArgs) -> Result<(), CliError> {
    let rows = formats::read_assessments(&args.assessments, &args.delimiter)?;
    let assessments = ingest_assessments(&rows)?;
    let mut docs = Vec::with_capacity(assessments.len());
    for assessment in &assessments {
        let text_path = args.texts.join(format!("{}.txt", assessment.publication));
        let raw = std::fs::read_to_string(&text_path).map_err(|err| {
            CliError::Data(format!("cannot read text {}: {err}", text_path.display()))
        })?;
        let sentences = segment_sentences(&raw).map_err(|_| {
            CliError::Data(format!("text {} contains no sentences", text_path.display()))
        })?;
        docs.push(Document {
            doc_id: doc_key(&assessment.species, &assessment.publication),
            species: assessment.species.clone(),
            title: assessment.publication.clone(),
            sentences,
            label: Some(assessment.category),
            evidence_indices: None,
        });
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    formats::save_corpus(&args.output, &docs)?;
    Ok(())
}

fn cmd_align(args: &AlignArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut docs = formats::load_corpus(&args.corpus)?;
    let rows = formats::read_assessments(&args.assessments, &args.delimiter)?;
    let assessments = ingest_assessments(&rows)?;

    let align_cfg = sentsel_core::alignment::AlignConfig::new(
        args.match_threshold.unwrap_or(cfg.alignment.match_threshold),
        args.borderline_threshold.unwrap_or(cfg.alignment.borderline_threshold),
    )?;
    let accept = args.accept_borderline || cfg.alignment.accept_borderline;
    let adjudicator: &dyn Adjudicator =
        if accept { &AcceptBorderline } else { &RejectBorderline };

    let mut by_key: BTreeMap<String, usize> = BTreeMap::new();
    for (i, doc) in docs.iter().enumerate() {
        by_key.insert(doc_key(&doc.species, &doc.title), i);
    }

    let mut records = Vec::new();
    let mut summary = AlignmentSummary::default();
    for assessment in &assessments {
        let key = doc_key(&assessment.species, &assessment.publication);
        let Some(&doc_index) = by_key.get(&key) else {
            return Err(CliError::Data(format!("no document for assessment {key}")));
        };
        let results =
            align_evidence(&docs[doc_index], &assessment.evidence_texts, &align_cfg, adjudicator);
        summary.accumulate(&results);
        let mut evidence: BTreeSet<usize> = docs[doc_index]
            .evidence_indices
            .take()
            .unwrap_or_default();
        for result in &results {
            let keep = match result.status {
                MatchStatus::Exact | MatchStatus::Fuzzy => true,
                MatchStatus::Borderline => accept,
                MatchStatus::Unmatched => false,
            };
            if keep {
                evidence.extend(result.matched_indices.iter().copied());
            }
            records.push(formats::AlignmentRecord::new(&docs[doc_index].doc_id, result));
        }
        docs[doc_index].evidence_indices = Some(evidence);
    }

    formats::save_corpus(&args.output, &docs)?;
    formats::write_alignment_report(&args.report, &records, &summary)?;
    Ok(())
}

fn cmd_split(args: &SplitArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let docs = formats::load_corpus(&args.corpus)?;
    let parts: Vec<f64> = args
        .ratios
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|err| CliError::Usage(format!("invalid --ratios {:?}: {err}", args.ratios)))?;
    let [train, val, test] = parts[..] else {
        return Err(CliError::Usage(format!(
            "--ratios needs exactly three comma-separated fractions, got {:?}",
            args.ratios
        )));
    };
    let split = build_splits(&docs, (train, val, test), cfg.run.seed)?;
    formats::save_split(&args.output, &split)?;
    Ok(())
}

/// The scoring backends for a command: local weight files or one endpoint.
fn load_backends(
    models: &[PathBuf],
    endpoint: Option<&str>,
    cfg: &PipelineConfig,
) -> Result<Vec<Box<dyn ScorerBackend + Sync>>, CliError> {
    let endpoint = resolve_endpoint(
        endpoint,
        SCORER_ENDPOINT_VAR,
        cfg.backend.scorer_endpoint.as_deref(),
    );
    if !models.is_empty() && endpoint.is_some() {
        return Err(CliError::Usage(
            "give either --model files or a scorer endpoint, not both".into(),
        ));
    }
    if !models.is_empty() {
        let mut backends: Vec<Box<dyn ScorerBackend + Sync>> = Vec::with_capacity(models.len());
        for path in models {
            backends.push(Box::new(formats::load_model(path)?));
        }
        return Ok(backends);
    }
    match endpoint {
        Some(endpoint) => {
            let http = cfg.http_config(&endpoint);
            let backend = HttpScorerBackend::new(http, BackendCaps::default(), NUM_CATEGORIES)
                .map_err(|err| CliError::Backend(err.to_string()))?;
            Ok(vec![Box::new(backend)])
        }
        None => Err(CliError::Usage(
            "no classifier given: pass --model, --endpoint, or set SENTSEL_SCORER_ENDPOINT"
                .into(),
        )),
    }
}

fn cmd_score(args: &ScoreArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let docs = formats::load_corpus(&args.corpus)?;
    let backends = load_backends(&args.models, args.endpoint.as_deref(), cfg)?;
    let chunk = cfg.chunk_config();
    let entropy = cfg.signals.entropy.into();
    let importance = cfg.signals.importance.into();

    let scored: Vec<(String, Vec<f64>)> = par_try_map(&docs, cfg.run.workers, |doc| {
        let refs: Vec<&dyn ScorerBackend> =
            backends.iter().map(|b| b.as_ref() as &dyn ScorerBackend).collect();
        let scores = match args.signal {
            ScoreSignal::Entropy => document_entropy_scores(doc, &refs, entropy)?,
            ScoreSignal::Importance => document_importance_scores(doc, &refs, &chunk, importance)?,
        };
        Ok::<_, ScoringError>((doc.doc_id.clone(), scores))
    })?;

    let map: BTreeMap<String, Vec<f64>> = scored.into_iter().collect();
    formats::write_scores(&args.output, &map)?;
    Ok(())
}

fn cmd_derive(args: &DeriveArgs) -> Result<(), CliError> {
    let docs = formats::load_corpus(&args.corpus)?;
    let require = |path: &Option<PathBuf>, flag: &str| {
        path.clone().ok_or_else(|| {
            CliError::Usage(format!("--signal {:?} needs {flag}", args.signal).to_lowercase())
        })
    };
    let examples = match args.signal {
        DeriveSignal::Evidence => derive_training_data(&docs, &SignalInputs::Evidence)?,
        DeriveSignal::Entropy => {
            let scores = formats::read_scores(&require(&args.scores, "--scores")?)?;
            derive_training_data(&docs, &SignalInputs::Entropy(&scores))?
        }
        DeriveSignal::Importance => {
            let scores = formats::read_scores(&require(&args.scores, "--scores")?)?;
            derive_training_data(&docs, &SignalInputs::Importance(&scores))?
        }
        DeriveSignal::Llm => {
            let labels = formats::read_usefulness_labels(&require(&args.labels, "--labels")?)?;
            derive_training_data(&docs, &SignalInputs::Llm(&labels))?
        }
    };
    formats::write_selector_data(&args.output, &examples)?;
    Ok(())
}

fn cmd_train_ref(args: &TrainRefArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut train_cfg = cfg.train_config(args.seed_offset);
    if let Some(epochs) = args.epochs {
        train_cfg.epochs = epochs;
    }
    if let Some(batch_size) = args.batch_size {
        train_cfg.batch_size = batch_size;
    }
    if let Some(learning_rate) = args.learning_rate {
        train_cfg.learning_rate = learning_rate;
    }
    if let Some(l2) = args.l2 {
        train_cfg.l2 = l2;
    }
    if args.rebalance {
        train_cfg.rebalance = true;
    }

    let (examples, num_classes): (Vec<(String, usize)>, usize) =
        match (&args.corpus, &args.selector_data) {
            (Some(corpus_path), None) => {
                let docs = formats::load_corpus(corpus_path)?;
                let keep: Box<dyn Fn(&Document) -> bool> = match &args.split {
                    Some(split_path) => {
                        let split = formats::load_split(split_path)?;
                        let subset = SplitName::from(args.subset);
                        Box::new(move |doc: &Document| split.split_of(doc) == Some(subset))
                    }
                    None => Box::new(|_: &Document| true),
                };
                let chunk = cfg.chunk_config();
                let mut examples = Vec::new();
                for doc in docs.iter().filter(|d| keep(d)) {
                    let Some(label) = doc.label else { continue };
                    for piece in chunk_text(&doc.tokens(), &chunk)? {
                        examples.push((piece.text, label.index()));
                    }
                }
                (examples, NUM_CATEGORIES)
            }
            (None, Some(selector_path)) => {
                let rows = formats::read_selector_data(selector_path)?;
                let num_classes = match rows.first() {
                    Some(first) => first.source.num_classes(),
                    None => 0,
                };
                let examples = rows
                    .into_iter()
                    .map(|row| (row.input_text, row.label as usize))
                    .collect();
                (examples, num_classes)
            }
            _ => {
                return Err(CliError::Usage(
                    "pass exactly one of --corpus or --selector-data".into(),
                ))
            }
        };

    if examples.is_empty() {
        return Err(CliError::Data("no labeled training examples".into()));
    }
    let model = train_on_examples(&examples, num_classes, &train_cfg)?;
    formats::save_model(&args.output, &model)?;
    Ok(())
}

fn cmd_rank(args: &RankArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let docs = formats::load_corpus(&args.corpus)?;
    let models: Vec<PathBuf> = args.model.iter().cloned().collect();
    let backends = load_backends(&models, args.endpoint.as_deref(), cfg)?;
    let backend = backends[0].as_ref();

    let mut rankings: Vec<SentenceRanking> =
        par_try_map(&docs, cfg.run.workers, |doc| rank_sentences(doc, backend))?;
    rankings.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    formats::write_rankings(&args.output, &rankings)?;
    Ok(())
}

fn cmd_classify(args: &ClassifyArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let docs = formats::load_corpus(&args.corpus)?;

    let rankings: Option<BTreeMap<String, SentenceRanking>> = match &args.ranking {
        Some(path) => Some(
            formats::read_rankings(path)?
                .into_iter()
                .map(|r| (r.doc_id.clone(), r))
                .collect(),
        ),
        None => None,
    };
    let ranking_for = |doc: &Document| -> Result<Option<&SentenceRanking>, CliError> {
        match &rankings {
            None => Ok(None),
            Some(map) => map
                .get(&doc.doc_id)
                .map(Some)
                .ok_or_else(|| CliError::Data(format!("no ranking for document {}", doc.doc_id))),
        }
    };

    let mut sel_cfg = cfg.selection_config();
    if let Some(mode) = args.mode {
        sel_cfg.mode = mode.into();
    }
    if let Some(k) = args.k {
        sel_cfg.k = k;
    }
    if let Some(pool) = args.pool {
        sel_cfg.pool = pool;
    }
    if let Some(samples) = args.samples {
        sel_cfg.num_samples = samples;
    }
    sel_cfg.validate()?;

    let generator_endpoint = resolve_endpoint(
        args.generator_endpoint.as_deref(),
        GENERATOR_ENDPOINT_VAR,
        cfg.backend.generator_endpoint.as_deref(),
    );

    let mut predictions: Vec<Prediction> = if let Some(endpoint) = generator_endpoint {
        if args.model.is_some() || args.endpoint.is_some() {
            return Err(CliError::Usage(
                "give either a generation endpoint or a classifier, not both".into(),
            ));
        }
        let client = HttpGenerationClient::new(cfg.http_config(&endpoint))
            .map_err(|err| CliError::Backend(err.to_string()))?;
        let mut llm = cfg.llm_config();
        if args.no_summary {
            llm.include_summary = false;
        }
        par_try_map(&docs, cfg.run.workers, |doc| {
            let ranking = ranking_for(doc)?;
            predict_with_llm(doc, ranking, &sel_cfg, &client, &llm).map_err(CliError::from)
        })?
    } else {
        let models: Vec<PathBuf> = args.model.iter().cloned().collect();
        let backends = load_backends(&models, args.endpoint.as_deref(), cfg)?;
        let backend = backends[0].as_ref();
        let chunk = cfg.chunk_config();
        par_try_map(&docs, cfg.run.workers, |doc| {
            let ranking = ranking_for(doc)?;
            predict_with_classifier(doc, ranking, &sel_cfg, backend, &chunk)
                .map_err(CliError::from)
        })?
    };

    predictions.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    formats::write_predictions(&args.output, &predictions)?;
    Ok(())
}

fn cmd_eval(args: &EvalArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let docs = formats::load_corpus(&args.corpus)?;
    let labels: BTreeMap<&str, Option<ImpactCategory>> =
        docs.iter().map(|d| (d.doc_id.as_str(), d.label)).collect();
    let predictions = formats::read_predictions(&args.predictions)?;

    let mut preds = Vec::with_capacity(predictions.len());
    let mut golds = Vec::with_capacity(predictions.len());
    for prediction in &predictions {
        let gold = labels.get(prediction.doc_id.as_str()).ok_or_else(|| {
            CliError::Data(format!("prediction for unknown document {}", prediction.doc_id))
        })?;
        let gold = (*gold).ok_or_else(|| {
            CliError::Data(format!("document {} has no gold label", prediction.doc_id))
        })?;
        preds.push(prediction.category);
        golds.push(gold);
    }

    let averaging = if args.all_classes {
        MacroAveraging::AllClasses
    } else {
        cfg.metrics.macro_averaging
    };
    let report = compute_f1_with(&preds, &golds, averaging)?;
    formats::write_json(&args.output, &report)?;
    Ok(())
}

/// Parses a repeatable `name=path` flag value.
fn named_path(raw: &str, flag: &str) -> Result<(String, PathBuf), CliError> {
    match raw.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(CliError::Usage(format!("{flag} takes NAME=FILE, got {raw:?}"))),
    }
}

fn cmd_agree(args: &AgreeArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let docs = formats::load_corpus(&args.corpus)?;

    let mut rankings: BTreeMap<String, BTreeMap<String, Vec<usize>>> = BTreeMap::new();
    for raw in &args.rankings {
        let (name, path) = named_path(raw, "--ranking")?;
        let orders = formats::read_rankings(&path)?
            .into_iter()
            .map(|r| (r.doc_id, r.order))
            .collect();
        rankings.insert(name, orders);
    }

    let mut truths: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for raw in &args.truths {
        let (name, path) = named_path(raw, "--truth")?;
        let graded = formats::read_scores(&path)?
            .into_iter()
            .map(|(doc_id, scores)| {
                let gains = discretize_scores(&scores).into_iter().map(f64::from).collect();
                (doc_id, gains)
            })
            .collect();
        truths.insert(name, graded);
    }
    if args.evidence {
        let mut gains_by_doc = BTreeMap::new();
        for doc in &docs {
            let evidence = doc.evidence_indices.as_ref().ok_or_else(|| {
                CliError::Data(format!("document {} has no evidence indices", doc.doc_id))
            })?;
            let gains = (0..doc.sentences.len())
                .map(|i| if evidence.contains(&i) { 1.0 } else { 0.0 })
                .collect();
            gains_by_doc.insert(doc.doc_id.clone(), gains);
        }
        truths.insert("evidence".to_string(), gains_by_doc);
    }
    if truths.is_empty() {
        return Err(CliError::Usage("no truth given: pass --truth or --evidence".into()));
    }

    let matrix = agreement_matrix(&rankings, &truths, cfg.metrics.ndcg_gain)?;
    formats::write_json(&args.output, &matrix)?;
    if let Some(csv_path) = &args.csv {
        formats::write_agreement_csv(csv_path, &matrix)?;
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let docs = formats::load_corpus(&args.corpus)?;
    let classifier: LinearModel = formats::load_model(&args.model)?;
    let selector: LinearModel = match &args.selector {
        Some(path) => formats::load_model(path)?,
        None => classifier.clone(),
    };

    let bench_cfg = BenchConfig {
        repetitions: args.repetitions,
        k: args.k.unwrap_or(cfg.selection.k),
        workers: cfg.run.workers,
        chunk: cfg.chunk_config(),
    };

    let run_variant = |variant: BenchVariant| -> Result<BenchmarkReport, CliError> {
        let report = if args.latency_us > 0 {
            let slow = LatencyBackend::new(
                classifier.clone(),
                std::time::Duration::from_micros(args.latency_us),
            );
            run_benchmark(&docs, &selector, &slow, variant, &bench_cfg)?
        } else {
            run_benchmark(&docs, &selector, &classifier, variant, &bench_cfg)?
        };
        Ok(report)
    };

    let full_text = run_variant(BenchVariant::FullText)?;
    let top_k = run_variant(BenchVariant::TopK)?;
    let summary = BenchSummary {
        token_ratio: top_k.tokens_processed as f64 / full_text.tokens_processed as f64,
        speedup: full_text.total_ms / top_k.total_ms,
        full_text,
        top_k,
    };
    formats::write_json(&args.output, &summary)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_tree_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn error_json_is_one_line_with_kind_and_message() {
        let err = CliError::Data("bad\nrecord".to_string());
        let line = err.to_json_line();
        assert!(!line.contains('\n'));
        let value: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(value["kind"], "data");
        assert_eq!(value["message"], "bad\nrecord");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 1);
        assert_eq!(CliError::Data(String::new()).exit_code(), 2);
        assert_eq!(CliError::Backend(String::new()).exit_code(), 3);
    }

    #[test]
    fn named_path_requires_both_halves() {
        assert!(named_path("a=b.jsonl", "--truth").is_ok());
        assert!(named_path("ab.jsonl", "--truth").is_err());
        assert!(named_path("=b", "--truth").is_err());
        assert!(named_path("a=", "--truth").is_err());
    }
}
