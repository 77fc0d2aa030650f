//! Experiment runner, config and file formats on top of `facnorm-core`.
//!
//! A run reads one config, resolves the catalog, computes the experiment rows
//! in parallel and writes `<experiment>.csv` plus a JSON sidecar into the
//! output directory. Row order and CSV bytes do not depend on the thread
//! count.

use std::path::PathBuf;

pub mod catalog;
pub mod config;
pub mod experiments;
pub mod matrix_io;
pub mod output;
pub mod runner;

pub use catalog::Catalog;
pub use config::{ExperimentConfig, ExperimentKind};
pub use runner::{run, RunOptions, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("catalog: {0}")]
    Catalog(String),
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {}: {message}", path.display())]
    Output { path: PathBuf, message: String },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl RunError {
    pub(crate) fn output(path: impl Into<PathBuf>, e: impl std::fmt::Display) -> Self {
        RunError::Output {
            path: path.into(),
            message: e.to_string(),
        }
    }
}
