use thiserror::Error;

/// Errors produced while building problems or running the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: String,
        expected: String,
        got: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("closed loop is not stable: eigenvalue with real part {real_part:e}")]
    Unstable { real_part: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("power iteration did not converge after {iterations} steps (best estimate {estimate:e})")]
    SpectralNorm { iterations: usize, estimate: f64 },

    #[error("gain extraction failed: min eig(W1) = {min_eig:e}, condition estimate {condition:e}")]
    SingularW1 { min_eig: f64, condition: f64 },

    #[error("parameters rejected: {0}")]
    Parameters(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(what: impl Into<String>, expected: impl ToString, got: impl ToString) -> Self {
        Error::Dimension {
            what: what.into(),
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
