//! Command-line front end and benchmark harness for the bound library.
//!
//! The pieces are usable programmatically as well:
//! * [`schema`] — the JSON problem-file format and report types;
//! * [`methods`] — the method registry (`oracle-e`, `dualgd-p`, ...) shared
//!   by the `bound` subcommand and the benchmark;
//! * [`bench`] — the benchmark runner with CSV/JSON artifacts;
//! * [`fig1`] — the illustrative-example sweep data.

use std::path::PathBuf;

pub mod bench;
pub mod fig1;
pub mod methods;
pub mod schema;

/// Errors of the CLI layer, wrapping library errors with file/config context.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rkhs_bounds::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dominance audit failed: {0}")]
    Audit(String),
}

impl CliError {
    /// Process exit code: 2 for infeasible problems, 3 for solver
    /// non-convergence, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_infeasible() => 2,
            CliError::Core(e) if e.is_non_convergence() => 3,
            _ => 1,
        }
    }
}

/// Reads and deserializes a JSON file, attaching the path to errors.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.clone(),
        source,
    })
}

/// Writes a file, creating parent directories as needed.
pub fn write_file(path: &PathBuf, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
        }
    }
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })
}
