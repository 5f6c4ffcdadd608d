//! Command-line front end: load a JSON design, run it, write tables and charts.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod config;
pub mod output;
pub mod plot;
pub mod run;

pub use config::{parse_config, DesignFile};
pub use run::{execute, resolve_workers, CliConfig, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("estimation failed: {0}")]
    Estimation(tlp_core::Error),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    /// 2 for bad input, 3 for estimation failures, 4 for file system errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) => 2,
            CliError::Estimation(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<tlp_core::Error> for CliError {
    fn from(e: tlp_core::Error) -> Self {
        match e {
            tlp_core::Error::InvalidSpec(msg) => CliError::Validation(msg),
            other => CliError::Estimation(other),
        }
    }
}
