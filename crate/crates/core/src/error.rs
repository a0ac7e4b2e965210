use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested configuration is not modeled (for example a lossy QCRB).
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Fock-space truncation dropped too much probability.
    #[error("truncation error: norm deficit {deficit:.3e} at cutoff {cutoff} exceeds {limit:.1e}")]
    Truncation { deficit: f64, cutoff: usize, limit: f64 },

    /// A malformed input line.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Well-formed input that fails validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// The fit did not converge from any start. Carries the best attempt.
    #[error("fit failed: {message}")]
    FitFailure {
        message: String,
        best: Option<Box<crate::fit::FitResult>>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
