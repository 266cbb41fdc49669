//! Experiment driver: sectioned key = value configs, sweep orchestration
//! over the core simulator, and artifact emission (results.csv,
//! summary.json, optional plot.svg).

pub mod config;
pub mod error;
pub mod runner;
pub mod svg;

pub use config::{canonical_echo, parse_config, ExperimentConfig, ExperimentKind, SweepConfig};
pub use error::CliError;
pub use runner::{run, RunOutcome};
