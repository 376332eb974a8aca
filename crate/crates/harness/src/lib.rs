//! Experiment harness for `doolp-core`: JSON experiment grids, parallel
//! repetitions with derived seeds, and CSV traces and summaries.

pub mod config;
pub mod grid;
pub mod trace;

pub use config::{parse_config, validate_all, ExperimentConfig, FactoryConfig, StrategyName};
pub use grid::{run_grid, write_outputs, GridOutput, RunFailure};
pub use trace::{
    read_summary, read_traces, summarize, write_summary, write_traces, RunTrace, SummaryRow,
};

use doolp_core::ConfigError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Validation(#[from] ConfigError),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    /// Process exit code: 1 for bad configuration, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 1,
            _ => 2,
        }
    }
}
