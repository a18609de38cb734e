//! Configuration-driven experiment runner and report emitter around
//! `hvfront-core`: multi-seed training runs, summary CSVs, grid tuning, and
//! SVG front plots.

pub mod config;
pub mod experiment;
pub mod plot;
pub mod report;

use hvfront_core::error::Error as CoreError;

/// CLI-facing error with an exit-code category: configuration problems exit
/// with 2, training failures with 3, and IO failures with 4.
#[derive(Debug)]
pub enum CliError {
    Config(CoreError),
    Training(CoreError),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Training(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e}"),
            CliError::Training(e) => write!(f, "training error: {e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Io(io) => CliError::Io(io),
            CoreError::Parse { .. } | CoreError::InvalidConfig(_) => CliError::Config(e),
            _ => CliError::Training(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
