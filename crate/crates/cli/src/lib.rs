//! Library side of the `fcw` binary: config parsing and the four
//! subcommands, kept separate from argument handling so they can be tested
//! directly.

pub mod commands;
pub mod config;

use fcw_core::FcwError;

pub use config::{GenerateConfig, RunConfig};

/// Failures surfaced to the user, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    #[error("config error: {0}")]
    Config(String),
    /// Episodes, forecasts or outputs could not be read, scored or written (exit 2).
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<FcwError> for CliError {
    fn from(e: FcwError) -> Self {
        match e {
            FcwError::InvalidArgument(_) => CliError::config(e),
            _ => CliError::data(e),
        }
    }
}
