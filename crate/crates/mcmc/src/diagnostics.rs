//! Convergence and Monte Carlo error diagnostics.

use histborrow_core::kahan::{kahan_mean, kahan_sum};

use crate::error::McmcError;

/// Unbiased sample variance (denominator `n - 1`).
pub fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mean = kahan_mean(x);
    kahan_sum(x.iter().map(|&v| (v - mean) * (v - mean))) / (n - 1) as f64
}

/// Potential scale reduction factor across chains.
///
/// With `W` the mean within-chain sample variance and `B` the chain length
/// times the sample variance of the chain means, the statistic is
/// `sqrt(((n-1)/n * W + B/n) / W)`.
pub fn gelman_rubin<C: AsRef<[f64]>>(chains: &[C]) -> Result<f64, McmcError> {
    assert!(chains.len() >= 2, "at least two chains required");
    let n = chains[0].as_ref().len();
    assert!(n >= 2, "chains must have length at least two");
    assert!(
        chains.iter().all(|c| c.as_ref().len() == n),
        "chains must have equal length"
    );

    let w = kahan_mean(
        &chains
            .iter()
            .map(|c| sample_variance(c.as_ref()))
            .collect::<Vec<_>>(),
    );
    if w == 0.0 {
        return Err(McmcError::DegenerateChains);
    }
    let means: Vec<f64> = chains.iter().map(|c| kahan_mean(c.as_ref())).collect();
    let b = n as f64 * sample_variance(&means);
    let n = n as f64;
    Ok((((n - 1.0) / n * w + b / n) / w).sqrt())
}

/// Monte Carlo standard error of the mean by the batch-means method,
/// which stays valid for autocorrelated chains.
pub fn mcse_mean(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return f64::INFINITY;
    }
    let n_batches = (n as f64).sqrt().floor() as usize;
    let batch_len = n / n_batches;
    let batch_means: Vec<f64> = (0..n_batches)
        .map(|b| kahan_mean(&x[b * batch_len..(b + 1) * batch_len]))
        .collect();
    (sample_variance(&batch_means) / n_batches as f64).sqrt()
}
