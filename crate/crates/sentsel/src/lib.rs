//! Batch tooling around [`sentsel_core`]: file formats for every pipeline
//! artifact, HTTP backends, document-level parallelism, a benchmark harness,
//! configuration, and the command-line interface.

pub mod bench;
pub mod cli;
pub mod config;
pub mod formats;
pub mod http;
pub mod parallel;
pub mod synth;

pub use formats::FormatError;
