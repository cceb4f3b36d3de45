//! Error type shared by the design-time pipeline.

use thiserror::Error;

/// Failures raised while building, persisting, or applying a design.
#[derive(Debug, Error)]
pub enum DesignError {
    /// A requested sampling range is empty or leaves the open unit interval.
    #[error("invalid range: {0}")]
    InvalidRange(String),

    /// Too many training examples lost to non-converged posterior fits.
    #[error("{excluded} of {total} training examples excluded for non-convergence (limit 1%)")]
    TooManyExclusions { excluded: usize, total: usize },

    /// No admissible constant cutoff exists on the requested grid.
    #[error("no cutoff grid point below 1 satisfies the error constraint")]
    GridExhausted,

    /// The observation does not match the design it is being applied to.
    #[error("design mismatch: {0}")]
    DesignMismatch(String),

    /// A stored design failed its content-hash check.
    #[error("design fingerprint mismatch: stored {stored}, recomputed {recomputed}")]
    FingerprintMismatch { stored: String, recomputed: String },

    /// Input data failed structural validation.
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    /// A configuration field is malformed.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Mcmc(#[from] histborrow_mcmc::McmcError),

    #[error(transparent)]
    Mlp(#[from] histborrow_mlp::MlpError),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization failure: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
}

impl From<histborrow_core::types::ValidationReport> for DesignError {
    fn from(report: histborrow_core::types::ValidationReport) -> Self {
        DesignError::Validation(report.violations)
    }
}
