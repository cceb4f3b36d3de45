//! Sampler configuration.

use serde::{Deserialize, Serialize};

use crate::error::McmcError;

/// Controls for the Metropolis-within-Gibbs run.
///
/// Proposal scales adapt toward the `[accept_low, accept_high]` acceptance
/// band during burn-in, one adjustment per `adapt_window` iterations, and
/// are frozen afterwards so the kept draws target the exact posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    /// Independent chains; convergence needs at least two.
    #[serde(default = "default_chains")]
    pub chains: usize,
    /// Discarded adaptation iterations per chain.
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Draws retained per chain after burn-in and thinning.
    #[serde(default = "default_kept")]
    pub kept_draws_per_chain: usize,
    /// Keep every `thinning`-th post-burn-in draw.
    #[serde(default = "default_thinning")]
    pub thinning: usize,
    /// Convergence gate on the potential scale reduction factor.
    #[serde(default = "default_rhat_threshold")]
    pub rhat_threshold: f64,
    /// Lower edge of the target acceptance band.
    #[serde(default = "default_accept_low")]
    pub accept_low: f64,
    /// Upper edge of the target acceptance band.
    #[serde(default = "default_accept_high")]
    pub accept_high: f64,
    /// Iterations between proposal-scale adjustments during burn-in.
    #[serde(default = "default_adapt_window")]
    pub adapt_window: usize,
    /// Root seed; chains derive independent streams from it.
    pub seed: u64,
}

fn default_chains() -> usize {
    3
}
fn default_burn_in() -> usize {
    2000
}
fn default_kept() -> usize {
    // three chains of 3334 give the conventional 10,000 total draws
    3334
}
fn default_thinning() -> usize {
    1
}
fn default_rhat_threshold() -> f64 {
    1.01
}
fn default_accept_low() -> f64 {
    0.25
}
fn default_accept_high() -> f64 {
    0.45
}
fn default_adapt_window() -> usize {
    50
}

impl McmcConfig {
    /// Defaults with the given seed: 3 chains, burn-in 2,000, 3,334 kept
    /// draws per chain (10,002 total), no thinning, R-hat gate 1.01.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            chains: default_chains(),
            burn_in: default_burn_in(),
            kept_draws_per_chain: default_kept(),
            thinning: default_thinning(),
            rhat_threshold: default_rhat_threshold(),
            accept_low: default_accept_low(),
            accept_high: default_accept_high(),
            adapt_window: default_adapt_window(),
            seed,
        }
    }

    /// Total kept draws across chains.
    pub fn total_draws(&self) -> usize {
        self.chains * self.kept_draws_per_chain
    }

    pub fn validate(&self) -> Result<(), McmcError> {
        if self.chains < 2 {
            return Err(McmcError::InvalidConfig(
                "at least 2 chains are required".into(),
            ));
        }
        if self.total_draws() < 1000 {
            return Err(McmcError::InvalidConfig(
                "kept draws times chains must be at least 1000".into(),
            ));
        }
        if !(self.rhat_threshold > 1.0) {
            return Err(McmcError::InvalidConfig(
                "rhat_threshold must exceed 1".into(),
            ));
        }
        if self.thinning == 0 {
            return Err(McmcError::InvalidConfig("thinning must be >= 1".into()));
        }
        if !(0.0 < self.accept_low && self.accept_low < self.accept_high && self.accept_high < 1.0)
        {
            return Err(McmcError::InvalidConfig(
                "acceptance band must satisfy 0 < low < high < 1".into(),
            ));
        }
        if self.adapt_window == 0 {
            return Err(McmcError::InvalidConfig(
                "adapt_window must be >= 1".into(),
            ));
        }
        Ok(())
    }
}
