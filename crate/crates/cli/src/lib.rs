//! Library half of the `chronosim` binary: config parsing and presets,
//! report rendering, and the subcommand implementations. `main` only parses
//! arguments and maps [`CliError`] to exit codes.

use std::fmt;

use chronosim_core::SimError;

pub mod commands;
pub mod config;
pub mod report;

/// CLI-level failure, split by exit code: usage and config problems exit 1,
/// runtime domain or I/O failures exit 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for CliError {}

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        CliError::Runtime(err.to_string())
    }
}
