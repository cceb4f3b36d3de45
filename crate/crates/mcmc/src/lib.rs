//! Posterior sampling for the borrowing design: a Metropolis-within-Gibbs
//! sampler for the hierarchical control model, conjugate beta sampling for
//! the treatment arms, convergence diagnostics, and Monte Carlo summaries
//! of the promise probabilities.
//!
//! The sampler is deliberately specialized to this one model — it is not a
//! general probabilistic-programming interface, and no gradient-based
//! samplers are provided.

pub mod config;
pub mod diagnostics;
pub mod draws;
pub mod dump;
pub mod error;
pub mod posterior;
pub mod sampler;

pub use config::McmcConfig;
pub use diagnostics::{gelman_rubin, mcse_mean, sample_variance};
pub use draws::{ControlPosterior, Diagnostics, Draws, PosteriorDraws};
pub use dump::write_draw_dump;
pub use error::McmcError;
pub use posterior::{posterior_mean_control, posterior_prob_s};
pub use sampler::{
    sample_beta_posterior, sample_hier_posterior, sample_inverse_wishart, sample_joint_posterior,
    update_sigma, update_theta,
};
