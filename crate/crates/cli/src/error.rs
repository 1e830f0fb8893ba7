//! Error classification onto process exit codes.

use std::fmt;

/// Exit codes: 2 = configuration error, 3 = data error, 4 = numerical
/// divergence (0 = success; clap's own usage errors also exit with 2).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Divergence(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Divergence(msg) => write!(f, "numerical divergence: {msg}"),
        }
    }
}

impl From<vigrad::Error> for CliError {
    fn from(e: vigrad::Error) -> Self {
        match e {
            vigrad::Error::Diverged { .. } => CliError::Divergence(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
