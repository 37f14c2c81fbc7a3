//! Configuration, sweep orchestration, analysis tasks and file output.
//!
//! Workers only compute; every file is written by the caller through
//! [`write_artifacts`] after the whole batch is in memory.

pub mod analyze;
pub mod check;
pub mod config;
pub mod output;
pub mod sweep;

use std::path::PathBuf;

pub use analyze::{analyze, AnalyzeOptions, AnalyzeTask};
pub use check::{run_oracle_checks, CheckScope};
pub use config::{Artifact, OutputConfig, ParameterGrid, ProtocolConfig, RealGrid, SweepConfig};
pub use output::{write_artifacts, OutputFile};
pub use sweep::{run_sweep, sweep_artifacts, RunRecord, SweepOutput};

/// Schema version carried by every JSON summary.
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config syntax error at line {line}, column {column}: {message}")]
    ConfigSyntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("refusing to overwrite existing files (pass --overwrite): {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    WouldOverwrite(Vec<PathBuf>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Schema(#[from] crate::analysis::SchemaError),
    #[error(transparent)]
    Model(#[from] crate::error::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}
