//! Error type for the network engine.

use thiserror::Error;

/// Failures surfaced by model construction, evaluation, and training.
#[derive(Debug, Error)]
pub enum MlpError {
    /// An input, target, or parameter tensor has the wrong shape.
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: String,
        expected: String,
        got: String,
    },

    /// A loss or activation became non-finite; for training failures the
    /// epoch is the one being processed when the value appeared.
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    /// A structural invariant of the network description was violated.
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    /// Model file persistence failed.
    #[error("model file error: {0}")]
    Persist(String),
}

impl From<std::io::Error> for MlpError {
    fn from(e: std::io::Error) -> Self {
        MlpError::Persist(e.to_string())
    }
}

impl From<serde_json::Error> for MlpError {
    fn from(e: serde_json::Error) -> Self {
        MlpError::Persist(e.to_string())
    }
}
