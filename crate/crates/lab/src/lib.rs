//! Experiment harness around `meanfield-core`: configuration, pipelines
//! for the `meanfield` binary, artifact formats and run manifests.

pub mod commands;
pub mod config;
pub mod formats;
pub mod manifest;

use std::path::PathBuf;

pub use commands::{execute, run_command, Artifacts, Command, RunOptions};
pub use config::{ConfigError, ExperimentConfig};
pub use manifest::Manifest;

/// Process exit codes of the binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERIC_GUARD: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{context}: {source}")]
    Core {
        context: &'static str,
        #[source]
        source: meanfield_core::Error,
    },

    #[error("{context}: mass drift {drift:e} per step exceeds {limit:e}")]
    Conservation {
        context: &'static str,
        drift: f64,
        limit: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: formats::FormatError,
    },

    #[error("thread pool: {0}")]
    Threads(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => exit::CONFIG,
            LabError::Core { source, .. } if source.is_numeric_guard() => exit::NUMERIC_GUARD,
            LabError::Conservation { .. } => exit::NUMERIC_GUARD,
            _ => exit::FAILURE,
        }
    }
}

/// Attaches pipeline context to core errors.
pub(crate) trait Context<T> {
    fn ctx(self, context: &'static str) -> Result<T, LabError>;
}

impl<T> Context<T> for meanfield_core::Result<T> {
    fn ctx(self, context: &'static str) -> Result<T, LabError> {
        self.map_err(|source| LabError::Core { context, source })
    }
}
