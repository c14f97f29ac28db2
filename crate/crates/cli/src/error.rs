use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_ANALYSIS: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("analysis error: {0}")]
    Analysis(#[from] netsel::Error),

    #[error("analysis error: no sweep point succeeded; first failure: {0}")]
    EmptySweep(String),

    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl CliError {
    /// Core errors raised while validating user input.
    pub fn config(err: netsel::Error) -> Self {
        Self::Config(err.to_string())
    }

    pub fn output(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Self::Output {
            path: path.into(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Analysis(_) | Self::EmptySweep(_) => EXIT_ANALYSIS,
            Self::Output { .. } => EXIT_IO,
        }
    }
}
