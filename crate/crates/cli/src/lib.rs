//! Command-line pipeline for order availability-date prediction:
//! generate or ingest orders, encode, tune, train, evaluate, predict, plan
//! and summarize, writing every artifact under one output directory with a
//! content-hash manifest.

pub mod artifacts;
pub mod config;
pub mod pipeline;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use artifacts::{Manifest, ManifestEntry};
pub use config::{parse_families, PlanConfig, RunConfig};
pub use pipeline::{run_pipeline, RunOutput, Stage};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// 1 usage, 2 data or I/O, 3 training.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io { .. } => 2,
            CliError::Training(_) => 3,
        }
    }
}
