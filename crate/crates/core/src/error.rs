use thiserror::Error;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum DnlsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field contains non-finite samples")]
    Diverged,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    IterationFailure { iterations: usize, residual: f64 },

    #[error("iteration collapsed to the zero field")]
    DegenerateSeed,

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no blow-up time bound: initial L2 norm {norm} does not exceed the threshold {threshold}")]
    NoBound { norm: f64, threshold: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("study aborted: {0}")]
    StudyAborted(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DnlsError>;
