//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
///
/// The variants map onto the process exit codes used by the batch driver:
/// invalid/degenerate input -> 2, numerical or training failure -> 3,
/// file integrity / version problems -> 4.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Inputs were structurally valid but carry no usable information
    /// (e.g. an all-zero spectrum).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// An iterative routine failed to converge or produced non-finite values.
    #[error("numerical failure in {context}: residual {residual:.3e}")]
    NumericalFailure { context: String, residual: f64 },

    /// Training diverged; carries the last finite state.
    #[error("training diverged at epoch {epoch} (last finite loss {last_loss:.6})")]
    TrainingDiverged {
        epoch: usize,
        last_loss: f64,
        /// Parameters from the last epoch whose loss was finite.
        last_model: Box<crate::model::MlpModel>,
    },

    /// An operation that must yield at least one result yielded none.
    #[error("empty result: {0}")]
    EmptyResult(String),

    /// A file failed checksum or structural validation.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// A file has an unsupported format version.
    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }

    /// Exit code for the batch driver: 2 invalid input, 3 numerical failure,
    /// 4 integrity error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::DegenerateInput(_) | Error::Io(_) => 2,
            Error::NumericalFailure { .. }
            | Error::TrainingDiverged { .. }
            | Error::EmptyResult(_) => 3,
            Error::Integrity(_) | Error::UnsupportedVersion { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
