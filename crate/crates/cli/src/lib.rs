//! File formats, configuration, and subcommand logic behind the
//! `splatprior` binary. Everything here is deterministic: the same inputs,
//! seed, and config produce byte-identical outputs at any thread count.

pub mod commands;
pub mod config;
pub mod formats;

use std::process::ExitCode;

use splatprior_core::SplatError;

/// Exit 1 for anything the caller could fix (bad arguments, malformed
/// files), exit 2 when the numbers themselves gave out.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error(transparent)]
    Core(#[from] SplatError),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn format(path: &std::path::Path, message: impl Into<String>) -> Self {
        CliError::Format { path: path.display().to_string(), message: message.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Format { .. } => {
                ExitCode::from(1)
            }
            CliError::Core(SplatError::InvalidInput(_)) => ExitCode::from(1),
            CliError::Core(_) => ExitCode::from(2),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
