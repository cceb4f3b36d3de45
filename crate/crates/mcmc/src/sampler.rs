//! Metropolis-within-Gibbs sampler for the hierarchical control model,
//! plus conjugate beta sampling for the treatment arms.
//!
//! The model treats the current control arm and each historical study as
//! exchangeable units: unit counts are binomial given a unit-level
//! logit-scale rate vector, unit vectors are multivariate normal around a
//! population mean with unknown covariance, and the mean and covariance
//! carry vague normal and inverse-Wishart priors.
//!
//! One sweep is (a) a per-component Gaussian random-walk Metropolis update
//! of every unit vector, (b) an exact conjugate multivariate-normal update
//! of the population mean, and (c) an exact conjugate inverse-Wishart
//! update of the covariance. Proposal scales adapt during burn-in only.

use histborrow_core::linalg::{cholesky, clamped_inverse, sym_eigenvalues};
use histborrow_core::streams::substream;
use histborrow_core::types::{
    CurrentTrialObservation, EndpointConfig, HierPriorConfig, HistoricalDataset,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta as BetaDist, ChiSquared, Distribution, StandardNormal};

use crate::config::McmcConfig;
use crate::diagnostics::gelman_rubin;
use crate::draws::{ControlPosterior, Diagnostics, Draws, PosteriorDraws};
use crate::error::McmcError;

/// Largest double strictly below one; draws are clamped inside (0,1).
const ONE_MINUS_EPS: f64 = 1.0 - f64::EPSILON / 2.0;

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binomial observations for one exchangeable unit.
#[derive(Debug, Clone)]
struct Unit {
    n: f64,
    r: Vec<f64>,
}

fn assemble_units(
    hist: &HistoricalDataset,
    n_control: u32,
    r_control: &[u32],
) -> Vec<Unit> {
    // unit 0 is the current control arm, the rest are historical studies
    let mut units = Vec::with_capacity(hist.studies.len() + 1);
    units.push(Unit {
        n: f64::from(n_control),
        r: r_control.iter().map(|&r| f64::from(r)).collect(),
    });
    for study in &hist.studies {
        units.push(Unit {
            n: f64::from(study.n),
            r: study.r.iter().map(|&r| f64::from(r)).collect(),
        });
    }
    units
}

/// Conditional posterior of the population mean given unit vectors and
/// covariance: returns `(mean, covariance)` of the exact multivariate
/// normal conditional.
///
/// The prior on each mean component is an independent zero-mean normal
/// with the configured precision; the units contribute one covariance-
/// weighted observation each.
pub fn update_theta(
    mu: &[Vec<f64>],
    sigma: &[f64],
    prior: &HierPriorConfig,
) -> Result<(Vec<f64>, Vec<f64>), McmcError> {
    let units = mu.len();
    let dim = mu.first().map_or(0, Vec::len);
    if sigma.len() != dim * dim || mu.iter().any(|row| row.len() != dim) {
        return Err(McmcError::NumericalFailure {
            context: "population mean update: dimension mismatch".into(),
        });
    }
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(McmcError::NumericalFailure {
            context: "population mean update: non-finite covariance".into(),
        });
    }
    let min_eig = sym_eigenvalues(dim, sigma)
        .first()
        .copied()
        .unwrap_or(0.0);
    if min_eig <= 0.0 {
        return Err(McmcError::NumericalFailure {
            context: "population mean update: covariance not positive definite".into(),
        });
    }
    let prec = clamped_inverse(dim, sigma);

    // posterior precision = tau*I + (J+1)*Sigma^{-1}
    let mut post_prec: Vec<f64> = prec.iter().map(|&p| units as f64 * p).collect();
    for i in 0..dim {
        post_prec[i * dim + i] += prior.theta_precision;
    }
    let cov = clamped_inverse(dim, &post_prec);

    // posterior mean = cov * Sigma^{-1} * sum_j mu_j
    let mut mu_sum = vec![0.0; dim];
    for row in mu {
        for (s, &v) in mu_sum.iter_mut().zip(row) {
            *s += v;
        }
    }
    let weighted: Vec<f64> = (0..dim)
        .map(|i| (0..dim).map(|k| prec[i * dim + k] * mu_sum[k]).sum())
        .collect();
    let mean: Vec<f64> = (0..dim)
        .map(|i| (0..dim).map(|k| cov[i * dim + k] * weighted[k]).sum())
        .collect();
    Ok((mean, cov))
}

/// Conditional posterior of the covariance given unit vectors and mean:
/// returns `(degrees of freedom, scale matrix)` of the exact
/// inverse-Wishart conditional.
pub fn update_sigma(mu: &[Vec<f64>], theta: &[f64], prior: &HierPriorConfig) -> (f64, Vec<f64>) {
    let units = mu.len();
    let dim = theta.len();
    let df = prior.wishart_df + units as f64;
    let mut scale = prior.sigma0.data.clone();
    for row in mu {
        for i in 0..dim {
            let di = row[i] - theta[i];
            for j in 0..dim {
                scale[i * dim + j] += di * (row[j] - theta[j]);
            }
        }
    }
    (df, scale)
}

/// One draw from an inverse-Wishart with the stated degrees of freedom and
/// scale matrix, in the convention where the sampled precision `Σ⁻¹` has
/// expectation `df · scale⁻¹`.
///
/// Returns `(covariance, precision)`; both are exact inverses of each other
/// up to eigenvalue clamping.
pub fn sample_inverse_wishart<R: Rng>(
    dim: usize,
    df: f64,
    scale: &[f64],
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>), McmcError> {
    let chis: Vec<ChiSquared<f64>> = (0..dim)
        .map(|i| {
            ChiSquared::new(df - i as f64).map_err(|_| McmcError::NumericalFailure {
                context: "inverse-Wishart draw: degrees of freedom too small".into(),
            })
        })
        .collect::<Result<_, _>>()?;
    sample_inverse_wishart_with(dim, scale, &chis, rng)
}

/// Bartlett-decomposition draw with prebuilt chi-squared distributions
/// (one per diagonal entry), so repeated sweeps avoid re-deriving them.
fn sample_inverse_wishart_with<R: Rng>(
    dim: usize,
    scale: &[f64],
    chis: &[ChiSquared<f64>],
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>), McmcError> {
    let scale_inv = clamped_inverse(dim, scale);
    let l = cholesky(dim, &scale_inv).ok_or_else(|| McmcError::NumericalFailure {
        context: "inverse-Wishart draw: scale matrix lost positive definiteness".into(),
    })?;

    // lower-triangular Bartlett factor
    let mut a = vec![0.0; dim * dim];
    for i in 0..dim {
        a[i * dim + i] = chis[i].sample(rng).max(1e-300).sqrt();
        for j in 0..i {
            a[i * dim + j] = rng.sample::<f64, _>(StandardNormal);
        }
    }

    // precision = (L A)(L A)^T  ~  Wishart(df, scale^{-1})
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut sum = 0.0;
            for k in j..=i {
                sum += l[i * dim + k] * a[k * dim + j];
            }
            m[i * dim + j] = sum;
        }
    }
    let mut prec = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = 0.0;
            for k in 0..dim {
                sum += m[i * dim + k] * m[j * dim + k];
            }
            prec[i * dim + j] = sum;
            prec[j * dim + i] = sum;
        }
    }
    let sigma = clamped_inverse(dim, &prec);
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(McmcError::NumericalFailure {
            context: "inverse-Wishart draw: non-finite covariance".into(),
        });
    }
    Ok((sigma, prec))
}

/// Independent draws from the conjugate beta posterior `Beta(a+r, b+n-r)`
/// of one treatment-arm response rate.
pub fn sample_beta_posterior<R: Rng>(
    r: u32,
    n: u32,
    a: f64,
    b: f64,
    n_draws: usize,
    rng: &mut R,
) -> Vec<f64> {
    assert!(r <= n, "responders exceed sample size");
    assert!(a > 0.0 && b > 0.0, "beta prior parameters must be positive");
    let dist = BetaDist::new(a + f64::from(r), b + f64::from(n - r))
        .expect("posterior beta parameters are positive");
    (0..n_draws)
        .map(|_| dist.sample(rng).clamp(f64::MIN_POSITIVE, ONE_MINUS_EPS))
        .collect()
}

/// Everything one chain produces.
struct ChainRun {
    /// Kept current-control draws on the probability scale.
    psi: Draws,
    /// Post-burn-in acceptance rate per (unit, endpoint), unit-major.
    acceptance: Vec<f64>,
    /// Smallest covariance eigenvalue over kept sweeps.
    min_sigma_eig: f64,
}

fn run_chain(
    units: &[Unit],
    endpoints: usize,
    prior: &HierPriorConfig,
    cfg: &McmcConfig,
    burn_in: usize,
    chain: usize,
    restart: u32,
) -> Result<ChainRun, McmcError> {
    let mut rng = substream(cfg.seed, "mcmc/hier-chain", &[u64::from(restart), chain as u64]);
    let n_units = units.len();
    let dim = endpoints;

    // --- initialization ------------------------------------------------
    // Unit vectors start at smoothed empirical logits, jittered by twice
    // the conditional standard deviation so chains are overdispersed at a
    // scale the sampler can actually traverse.
    let mut sigma = if prior.sigma0.is_positive_definite(0.0) {
        prior.sigma0.data.clone()
    } else {
        let mut eye = vec![0.0; dim * dim];
        for i in 0..dim {
            eye[i * dim + i] = 1.0;
        }
        eye
    };
    let mut prec = clamped_inverse(dim, &sigma);

    // The equilibrium spread of a unit vector around the population mean is
    // governed by the posterior covariance, whose prior expectation is
    // scale/(df - dim - 1). Sizing the initial jitter and proposal scales
    // from that (rather than from the raw scale matrix) keeps chains
    // traversable even under near-degenerate covariance priors.
    let df_shrink = (prior.wishart_df - dim as f64 - 1.0).max(1.0);
    let mut mu = vec![0.0; n_units * dim];
    let mut prop_scale = vec![0.0; n_units * dim];
    for (j, unit) in units.iter().enumerate() {
        for i in 0..dim {
            let p_hat = (unit.r[i] + 0.5) / (unit.n + 1.0);
            let prior_prec = df_shrink / prior.sigma0.get(i, i).max(1e-300);
            let info = unit.n * p_hat * (1.0 - p_hat) + prior_prec;
            let cond_sd = info.sqrt().recip();
            mu[j * dim + i] =
                logit(p_hat) + 2.0 * cond_sd * rng.sample::<f64, _>(StandardNormal);
            prop_scale[j * dim + i] = 2.4 * cond_sd;
        }
    }
    let mut theta = vec![0.0; dim];
    for i in 0..dim {
        theta[i] = (0..n_units).map(|j| mu[j * dim + i]).sum::<f64>() / n_units as f64;
    }

    // Per-component scale for the joint shift move (all units plus the
    // population mean move together). Under that move the covariance-prior
    // terms cancel, so the right scale comes from the pooled binomial
    // information plus the population-mean prior.
    let mut shift_scale = vec![0.0; dim];
    for i in 0..dim {
        let mut pooled_info = prior.theta_precision;
        for unit in units {
            let p_hat = (unit.r[i] + 0.5) / (unit.n + 1.0);
            pooled_info += unit.n * p_hat * (1.0 - p_hat);
        }
        shift_scale[i] = 2.4 / pooled_info.sqrt();
    }

    let df = prior.wishart_df + n_units as f64;
    let chis: Vec<ChiSquared<f64>> = (0..dim)
        .map(|i| {
            ChiSquared::new(df - i as f64).map_err(|_| McmcError::NumericalFailure {
                context: "covariance update: degrees of freedom too small".into(),
            })
        })
        .collect::<Result<_, _>>()?;

    let kept = cfg.kept_draws_per_chain;
    let total_iters = burn_in + kept * cfg.thinning;
    let mut psi = Draws::zeros(kept, dim);
    let mut kept_so_far = 0usize;
    let mut min_sigma_eig = f64::INFINITY;

    let mut window_accepts = vec![0u32; n_units * dim];
    let mut shift_window_accepts = vec![0u32; dim];
    let mut post_accepts = vec![0u64; n_units * dim];
    let mut post_proposals = 0u64;

    for iter in 0..total_iters {
        let adapting = iter < burn_in;

        // (a) random-walk Metropolis on each unit component
        for (j, unit) in units.iter().enumerate() {
            for i in 0..dim {
                let idx = j * dim + i;
                let current = mu[idx];
                let step = prop_scale[idx] * rng.sample::<f64, _>(StandardNormal);
                let proposed = current + step;

                let loglik_delta = unit.r[i] * (proposed - current)
                    - unit.n * (softplus(proposed) - softplus(current));
                // prior delta for a single-component move of size `step`:
                // -step * (P (mu_j - theta))_i - step^2 * P_ii / 2
                let mut grad = 0.0;
                for k in 0..dim {
                    grad += prec[i * dim + k] * (mu[j * dim + k] - theta[k]);
                }
                let prior_delta =
                    -step * grad - 0.5 * step * step * prec[i * dim + i];

                let accept = {
                    let log_ratio = loglik_delta + prior_delta;
                    log_ratio >= 0.0 || rng.gen::<f64>().ln() < log_ratio
                };
                if accept {
                    mu[idx] = proposed;
                    if adapting {
                        window_accepts[idx] += 1;
                    } else {
                        post_accepts[idx] += 1;
                    }
                }
            }
        }
        if !adapting {
            post_proposals += 1;
        }

        // joint shift move: translate every unit vector and the population
        // mean together in one component. Residuals from the mean are
        // unchanged, so only the binomial likelihoods and the mean's own
        // prior enter the ratio. This traverses the pooled direction that
        // per-unit moves cannot when the covariance is near-degenerate.
        for i in 0..dim {
            let delta = shift_scale[i] * rng.sample::<f64, _>(StandardNormal);
            let mut log_ratio =
                -prior.theta_precision * (delta * theta[i] + 0.5 * delta * delta);
            for (j, unit) in units.iter().enumerate() {
                let current = mu[j * dim + i];
                log_ratio += unit.r[i] * delta
                    - unit.n * (softplus(current + delta) - softplus(current));
            }
            if log_ratio >= 0.0 || rng.gen::<f64>().ln() < log_ratio {
                for j in 0..n_units {
                    mu[j * dim + i] += delta;
                }
                theta[i] += delta;
                if adapting {
                    shift_window_accepts[i] += 1;
                }
            }
        }

        // proposal-scale adaptation, burn-in only
        if adapting && (iter + 1) % cfg.adapt_window == 0 {
            for idx in 0..n_units * dim {
                let rate = f64::from(window_accepts[idx]) / cfg.adapt_window as f64;
                // gentle correction near the band, aggressive far away
                let factor = if rate < 0.05 || rate > 0.80 { 1.5 } else { 1.25 };
                if rate < cfg.accept_low {
                    prop_scale[idx] /= factor;
                } else if rate > cfg.accept_high {
                    prop_scale[idx] *= factor;
                }
                window_accepts[idx] = 0;
            }
            for i in 0..dim {
                let rate = f64::from(shift_window_accepts[i]) / cfg.adapt_window as f64;
                let factor = if rate < 0.05 || rate > 0.80 { 1.5 } else { 1.25 };
                if rate < cfg.accept_low {
                    shift_scale[i] /= factor;
                } else if rate > cfg.accept_high {
                    shift_scale[i] *= factor;
                }
                shift_window_accepts[i] = 0;
            }
        }

        // (b) exact conjugate update of the population mean
        {
            let mut post_prec: Vec<f64> = prec.iter().map(|&p| n_units as f64 * p).collect();
            for i in 0..dim {
                post_prec[i * dim + i] += prior.theta_precision;
            }
            let cov = clamped_inverse(dim, &post_prec);
            let mut mu_sum = vec![0.0; dim];
            for j in 0..n_units {
                for i in 0..dim {
                    mu_sum[i] += mu[j * dim + i];
                }
            }
            let weighted: Vec<f64> = (0..dim)
                .map(|i| (0..dim).map(|k| prec[i * dim + k] * mu_sum[k]).sum())
                .collect();
            let l = cholesky(dim, &cov).ok_or_else(|| McmcError::NumericalFailure {
                context: "population mean update: conditional covariance not positive definite"
                    .into(),
            })?;
            let z: Vec<f64> = (0..dim)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            for i in 0..dim {
                let mut v = 0.0;
                for k in 0..dim {
                    v += cov[i * dim + k] * weighted[k];
                    if k <= i {
                        v += l[i * dim + k] * z[k];
                    }
                }
                theta[i] = v;
            }
        }

        // (c) exact conjugate update of the covariance
        {
            let mut scale = prior.sigma0.data.clone();
            for j in 0..n_units {
                for i in 0..dim {
                    let di = mu[j * dim + i] - theta[i];
                    for k in 0..dim {
                        scale[i * dim + k] += di * (mu[j * dim + k] - theta[k]);
                    }
                }
            }
            let (new_sigma, new_prec) =
                sample_inverse_wishart_with(dim, &scale, &chis, &mut rng)?;
            sigma = new_sigma;
            prec = new_prec;
        }

        // record kept draws
        if !adapting && (iter - burn_in) % cfg.thinning == 0 && kept_so_far < kept {
            for i in 0..dim {
                let p = expit(mu[i]).clamp(f64::MIN_POSITIVE, ONE_MINUS_EPS);
                psi.set(kept_so_far, i, p);
            }
            kept_so_far += 1;
            let min_eig = sym_eigenvalues(dim, &sigma)[0];
            if min_eig < min_sigma_eig {
                min_sigma_eig = min_eig;
            }
        }
    }

    if mu.iter().any(|v| !v.is_finite()) || theta.iter().any(|v| !v.is_finite()) {
        return Err(McmcError::NumericalFailure {
            context: "chain state became non-finite".into(),
        });
    }

    let denom = (post_proposals as f64).max(1.0);
    let acceptance = post_accepts.iter().map(|&a| a as f64 / denom).collect();
    Ok(ChainRun {
        psi,
        acceptance,
        min_sigma_eig,
    })
}

/// Posterior of the current control response rates under the hierarchical
/// model, borrowing from the historical studies.
///
/// Runs `cfg.chains` chains on derived streams, gates on the potential
/// scale reduction factor of every control endpoint, and retries once with
/// doubled burn-in before giving up: sporadic slow starts must not kill a
/// large batch of design-time runs.
pub fn sample_hier_posterior(
    hist: &HistoricalDataset,
    n_control: u32,
    r_control: &[u32],
    prior: &HierPriorConfig,
    cfg: &McmcConfig,
) -> Result<ControlPosterior, McmcError> {
    cfg.validate()?;
    let units = assemble_units(hist, n_control, r_control);
    let endpoints = r_control.len();

    let max_restarts = 1u32;
    let mut last_rhat = f64::INFINITY;
    for restart in 0..=max_restarts {
        let burn_in = cfg.burn_in << restart;
        let runs: Vec<ChainRun> = (0..cfg.chains)
            .map(|chain| run_chain(&units, endpoints, prior, cfg, burn_in, chain, restart))
            .collect::<Result<_, _>>()?;

        let mut rhat = Vec::with_capacity(endpoints);
        let mut degenerate = false;
        for i in 0..endpoints {
            let columns: Vec<Vec<f64>> = runs.iter().map(|r| r.psi.column(i)).collect();
            match gelman_rubin(&columns) {
                Ok(v) => rhat.push(v),
                Err(McmcError::DegenerateChains) => {
                    degenerate = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }

        if !degenerate {
            let max_rhat = rhat.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if max_rhat < cfg.rhat_threshold {
                // concatenate chains in chain order
                let total = cfg.chains * cfg.kept_draws_per_chain;
                let mut draws = Draws::zeros(total, endpoints);
                let mut row = 0;
                for run in &runs {
                    for t in 0..run.psi.n_draws {
                        for i in 0..endpoints {
                            draws.set(row, i, run.psi.get(t, i));
                        }
                        row += 1;
                    }
                }
                let n_params = runs[0].acceptance.len();
                let acceptance: Vec<f64> = (0..n_params)
                    .map(|p| {
                        runs.iter().map(|r| r.acceptance[p]).sum::<f64>() / runs.len() as f64
                    })
                    .collect();
                let min_sigma_eigenvalue = runs
                    .iter()
                    .map(|r| r.min_sigma_eig)
                    .fold(f64::INFINITY, f64::min);
                return Ok(ControlPosterior {
                    draws,
                    diagnostics: Diagnostics {
                        rhat,
                        acceptance,
                        min_sigma_eigenvalue,
                        restarts: restart,
                    },
                });
            }
            last_rhat = max_rhat;
        } else if restart == max_restarts {
            return Err(McmcError::DegenerateChains);
        }
    }
    Err(McmcError::NonConvergence {
        rhat: last_rhat,
        restarts: max_restarts,
    })
}

/// Joint posterior for the current trial: hierarchical control draws
/// paired by index with independent conjugate treatment draws.
pub fn sample_joint_posterior(
    hist: &HistoricalDataset,
    obs: &CurrentTrialObservation,
    endpoints: &EndpointConfig,
    prior: &HierPriorConfig,
    cfg: &McmcConfig,
) -> Result<PosteriorDraws, McmcError> {
    let control = sample_hier_posterior(hist, obs.n_control, &obs.r_control, prior, cfg)?;
    let n_draws = control.draws.n_draws;
    let dim = endpoints.endpoint_count;

    let mut treatment = Draws::zeros(n_draws, dim);
    for i in 0..dim {
        let (a, b) = endpoints.treatment_prior[i];
        let mut rng: ChaCha8Rng = substream(cfg.seed, "mcmc/treatment", &[i as u64]);
        let column =
            sample_beta_posterior(obs.r_treatment[i], obs.n_treatment, a, b, n_draws, &mut rng);
        for (t, v) in column.into_iter().enumerate() {
            treatment.set(t, i, v);
        }
    }
    Ok(PosteriorDraws {
        control: control.draws,
        treatment,
        diagnostics: control.diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use histborrow_core::types::SymmetricMatrix;

    #[test]
    fn softplus_is_stable() {
        assert_abs_diff_eq!(softplus(0.0), 2.0_f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(softplus(800.0), 800.0, epsilon = 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert!(softplus(-800.0) < 1e-300);
    }

    #[test]
    fn expit_logit_round_trip() {
        for p in [1e-6, 0.25, 0.5, 0.9, 1.0 - 1e-6] {
            assert_abs_diff_eq!(expit(logit(p)), p, epsilon = 1e-12);
        }
    }

    #[test]
    fn theta_update_limits() {
        let prior_small = HierPriorConfig {
            theta_precision: 1e-12,
            ..HierPriorConfig::vague(2)
        };
        let m = vec![vec![0.7, -0.3]; 4];
        let sigma = vec![1.0, 0.2, 0.2, 1.0];
        let (mean, _) = update_theta(&m, &sigma, &prior_small).unwrap();
        assert_abs_diff_eq!(mean[0], 0.7, epsilon = 1e-9);
        assert_abs_diff_eq!(mean[1], -0.3, epsilon = 1e-9);

        let prior_huge = HierPriorConfig {
            theta_precision: 1e9,
            ..HierPriorConfig::vague(2)
        };
        let (mean, cov) = update_theta(&m, &sigma, &prior_huge).unwrap();
        assert!(mean[0].abs() < 1e-6 && mean[1].abs() < 1e-6);
        assert!(cov[0] < 1e-8, "prior dominates the conditional covariance");
    }

    #[test]
    fn theta_update_rejects_indefinite_sigma() {
        let prior = HierPriorConfig::vague(2);
        let m = vec![vec![0.0, 0.0]];
        let sigma = vec![1.0, 2.0, 2.0, 1.0];
        assert!(matches!(
            update_theta(&m, &sigma, &prior),
            Err(McmcError::NumericalFailure { .. })
        ));
    }

    #[test]
    fn sigma_update_zero_residuals() {
        let prior = HierPriorConfig::vague(2);
        let theta = vec![0.4, -0.1];
        let m = vec![theta.clone(); 7];
        let (df, scale) = update_sigma(&m, &theta, &prior);
        assert_eq!(df, 3.0 + 7.0);
        assert_eq!(scale, SymmetricMatrix::identity(2).data);
    }

    #[test]
    fn sigma_update_single_residual() {
        let prior = HierPriorConfig {
            wishart_df: 3.0,
            ..HierPriorConfig::vague(2)
        };
        let theta = vec![0.0, 0.0];
        let m = vec![vec![1.0, 0.0]];
        let (df, scale) = update_sigma(&m, &theta, &prior);
        assert_eq!(df, 4.0);
        assert_eq!(scale, vec![2.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn beta_posterior_means() {
        let mut rng = substream(5, "test/beta", &[]);
        let n = 40_000;

        let prior_only = sample_beta_posterior(0, 0, 1.0, 1.0, n, &mut rng);
        let mean = prior_only.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 3.0 * (1.0 / 12.0_f64 / n as f64).sqrt());

        let symmetric = sample_beta_posterior(75, 150, 1.0, 1.0, n, &mut rng);
        let mean = symmetric.iter().sum::<f64>() / n as f64;
        let sd = (0.5 * 0.5 / 153.0_f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sd / (n as f64).sqrt());

        let skewed = sample_beta_posterior(120, 150, 1.0, 1.0, n, &mut rng);
        let mean = skewed.iter().sum::<f64>() / n as f64;
        let expect = 121.0 / 152.0;
        let var = expect * (1.0 - expect) / 153.0;
        assert!((mean - expect).abs() < 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn inverse_wishart_rejects_low_df() {
        let mut rng = substream(6, "test/iw", &[]);
        let scale = SymmetricMatrix::identity(3).data;
        assert!(sample_inverse_wishart(3, 1.5, &scale, &mut rng).is_err());
    }
}
