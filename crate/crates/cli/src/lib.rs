//! Batch pipeline over scenario corpora: metric dumps, rule-based filtering,
//! synthetic corpus generation and report tables.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod cli;
pub mod config;
pub mod pipeline;

pub use cli::{run, Cli};
pub use config::{Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config file or rules; nothing was processed.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("writing output: {0}")]
    Output(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}
