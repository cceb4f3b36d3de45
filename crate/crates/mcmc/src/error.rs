//! Error type for the posterior sampling engine.

use thiserror::Error;

/// Failures surfaced by the sampler and its diagnostics.
#[derive(Debug, Error)]
pub enum McmcError {
    /// Chains still disagree after the configured number of adaptation
    /// restarts.
    #[error("chains failed to converge: max R-hat {rhat:.4} after {restarts} restart(s)")]
    NonConvergence { rhat: f64, restarts: u32 },

    /// A matrix operation lost positive definiteness or produced
    /// non-finite values beyond what clamping can absorb.
    #[error("numerical failure during {context}")]
    NumericalFailure { context: String },

    /// Within-chain variance is exactly zero, so the convergence ratio is
    /// undefined.
    #[error("degenerate chains: within-chain variance is zero")]
    DegenerateChains,

    /// A configuration invariant was violated.
    #[error("invalid MCMC configuration: {0}")]
    InvalidConfig(String),
}
