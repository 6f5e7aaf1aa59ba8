//! Crate-wide error type and result alias.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure categories surfaced by the library and mapped to CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation was called outside its contract (dimension mismatch,
    /// out-of-range parameter, invalid probability).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input data failed validation after parsing.
    #[error("data error: {0}")]
    Data(String),

    /// A file could not be parsed; points at the offending line.
    #[error("load error at {path}:{line}: {message}")]
    Load {
        path: String,
        line: usize,
        message: String,
    },

    /// Experiment configuration is incomplete or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable category label, used by the CLI for exit codes and messages.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Contract(_) => "contract",
            Error::Data(_) => "data",
            Error::Load { .. } => "load",
            Error::Config(_) => "config",
            Error::Io(_) | Error::Csv(_) => "io",
        }
    }
}
