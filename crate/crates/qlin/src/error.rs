//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by model construction and the numerical pipeline.
#[derive(Debug, Error)]
pub enum QlinError {
    /// Dimension or parity constraint violated while building a model.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An argument fell outside its valid domain (e.g. negative time).
    #[error("domain error: {0}")]
    Domain(String),

    /// A precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Gain synthesis failed (e.g. singular `D D^T`).
    #[error("synthesis error: {0}")]
    Synthesis(String),

    /// Requested operation is not supported for this commutation structure.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Vacuum-noise augmentation cannot repair the realizability defect.
    #[error("infeasible augmentation: {0}")]
    InfeasibleAugmentation(String),

    /// A scenario file could not be read or parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, QlinError>;
