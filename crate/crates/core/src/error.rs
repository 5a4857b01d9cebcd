use thiserror::Error;

/// Errors raised by the algebra engine.
///
/// Variants fall into two groups: input errors (bad labels, unsupported
/// parameters, violated preconditions) and internal failures
/// (`DecompositionFailure`, `ExtractionFailure`, `IntegralityViolation`) that
/// can only occur if a divisibility guaranteed by the theory fails, which
/// would indicate a bug or corrupted variety data.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown cell label `{label}` on {variety}")]
    UnknownLabel { variety: String, label: String },

    #[error("classes live on different varieties ({left} vs {right})")]
    VarietyMismatch { left: String, right: String },

    #[error("even-dimensional quadrics are not supported (dim {0})")]
    EvenDimensionUnsupported(usize),

    #[error("unknown morphism kind `{0}`")]
    UnknownKind(String),

    #[error("incompatible dimensions: {0}")]
    IncompatibleDimensions(String),

    #[error("morphism {morphism} lacks the `{flag}` flag required for {operation}")]
    FlagViolation {
        morphism: String,
        flag: &'static str,
        operation: &'static str,
    },

    #[error("input class is not integral: {0}")]
    NonIntegralInput(String),

    #[error("the zero class has no filtration level")]
    ZeroClass,

    #[error("series with zero constant term is not invertible")]
    NonInvertibleSeries,

    #[error("characteristic class has non-integral coefficient: {0}")]
    IntegralityViolation(String),

    #[error("Bott decomposition failed: {0}")]
    DecompositionFailure(String),

    #[error("p-adic extraction failed: {0}")]
    ExtractionFailure(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("filtration level violation: {0}")]
    LevelViolation(String),

    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("invalid variety data for {variety}: {reason}")]
    InvalidVariety { variety: String, reason: String },

    #[error("invalid morphism data for {morphism}: {reason}")]
    InvalidMorphism { morphism: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
