//! Core algorithms for sentence-selection based full-text classification.
//!
//! This crate holds the pure, IO-free part of the pipeline: the corpus data
//! model, sentence segmentation and reference tokenization, fuzzy evidence
//! alignment, chunked classification with logit averaging, classifier-derived
//! sentence signals, selector training-data derivation, ranking and sentence
//! selection (deterministic and rank-weighted randomized), prompt construction
//! and answer parsing for generation backends, majority-vote aggregation, and
//! the evaluation metrics (macro/micro F1, NDCG agreement).
//!
//! File formats, HTTP backends, the CLI and the benchmark harness live in the
//! companion `sentsel` crate. This crate is `no_std`-compatible (with `alloc`);
//! disable the default `std` feature to use it in that mode.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod alignment;
pub mod category;
pub mod corpus;
pub mod inference;
pub mod linear;
pub mod math;
pub mod metrics;
pub mod scoring;
pub mod selection;
pub mod text;

pub use category::ImpactCategory;
pub use corpus::{CorpusSplit, Document, Sentence, SplitName};
pub use inference::{GenerationClient, Prediction};
pub use linear::LinearModel;
pub use metrics::EvalReport;
pub use scoring::{BackendCaps, BackendError, ClassScores, ScorerBackend};
pub use selection::{SelectionConfig, SelectionMode, SentenceRanking};
