use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum KttError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("infeasible moments: {0}")]
    InfeasibleMoments(String),

    #[error("undefined variance: {0}")]
    UndefinedVariance(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("clothoid G1 fit failed: {0}")]
    FitFailure(String),

    #[error("extraction failed: {0}")]
    ExtractionFailure(String),

    #[error("generation failed: {0}")]
    GenerationFailure(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported plan version: {0}")]
    UnsupportedVersion(String),

    #[error("unsupported kind: {0}")]
    UnsupportedKind(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, KttError>;
