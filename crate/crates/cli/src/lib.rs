//! Command-line pipeline: blood models, feature extraction, classifier
//! training, fusion-weight search, prediction and evaluation.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::Context;
pub use config::PipelineConfig;
pub use error::{CliError, CliResult};
