//! Brute-force validation of the two exact conditional updates.
//!
//! The population-mean conditional is checked against an independent
//! Metropolis sampler targeting the same unnormalized density; the
//! covariance conditional is checked through the mean identity of the
//! sampled precision matrices.

use histborrow_core::types::{HierPriorConfig, SymmetricMatrix};
use histborrow_mcmc::{mcse_mean, sample_inverse_wishart, update_sigma, update_theta};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_spd(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let b = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    &b * b.transpose() + DMatrix::identity(dim, dim) * 0.3
}

/// Per-component Metropolis on the unnormalized conditional density of the
/// population mean: zero-mean normal prior with the given precision times
/// one covariance-weighted normal likelihood term per unit vector.
fn metropolis_theta(
    mu: &[DVector<f64>],
    prec: &DMatrix<f64>,
    tau: f64,
    total: usize,
    burn: usize,
    seed: u64,
) -> Vec<DVector<f64>> {
    let dim = prec.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_density = |th: &DVector<f64>| {
        let mut lp = -0.5 * tau * th.dot(th);
        for m in mu {
            let d = m - th;
            lp -= 0.5 * (prec * &d).dot(&d);
        }
        lp
    };
    let scale: Vec<f64> = (0..dim)
        .map(|i| 2.4 / (tau + mu.len() as f64 * prec[(i, i)]).sqrt())
        .collect();

    let mut theta = DVector::<f64>::zeros(dim);
    let mut kept = Vec::with_capacity(total - burn);
    let mut accepted = 0u64;
    for iter in 0..total {
        for i in 0..dim {
            let mut cand = theta.clone();
            cand[i] += scale[i] * rng.sample::<f64, _>(StandardNormal);
            let delta = log_density(&cand) - log_density(&theta);
            if delta >= 0.0 || rng.gen::<f64>().ln() < delta {
                theta = cand;
                accepted += 1;
            }
        }
        if iter >= burn {
            kept.push(theta.clone());
        }
    }
    let rate = accepted as f64 / (total * dim) as f64;
    assert!((0.1..0.9).contains(&rate), "oracle acceptance {rate}");
    kept
}

#[test]
fn theta_conditional_matches_metropolis_oracle() {
    let dim = 2;
    for instance in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + instance);
        let sigma = random_spd(dim, &mut rng);
        let tau = if instance % 2 == 0 { 0.01 } else { 0.5 };
        let mu: Vec<DVector<f64>> = (0..7)
            .map(|_| DVector::from_fn(dim, |_, _| rng.gen_range(-1.5..1.5)))
            .collect();

        let prior = HierPriorConfig {
            theta_precision: tau,
            ..HierPriorConfig::vague(dim)
        };
        let sigma_ref = &sigma;
        let sigma_rows: Vec<f64> = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| sigma_ref[(i, j)]))
            .collect();
        let mu_rows: Vec<Vec<f64>> = mu.iter().map(|m| m.iter().copied().collect()).collect();
        let (mean, cov) = update_theta(&mu_rows, &sigma_rows, &prior).unwrap();

        let prec = sigma.clone().try_inverse().unwrap();
        let draws = metropolis_theta(&mu, &prec, tau, 120_000, 5_000, 900 + instance);
        for i in 0..dim {
            let col: Vec<f64> = draws.iter().map(|d| d[i]).collect();
            let oracle_mean = col.iter().sum::<f64>() / col.len() as f64;
            let tol = 3.0 * mcse_mean(&col);
            assert!(
                (mean[i] - oracle_mean).abs() < tol,
                "instance {instance} comp {i}: analytic {} vs oracle {oracle_mean} (tol {tol})",
                mean[i]
            );

            // variance: compare against the oracle's sample variance using a
            // batch MCSE of the squared deviations
            let sq: Vec<f64> = col.iter().map(|&v| (v - oracle_mean).powi(2)).collect();
            let oracle_var = sq.iter().sum::<f64>() / sq.len() as f64;
            let var_tol = 3.0 * mcse_mean(&sq);
            assert!(
                (cov[i * dim + i] - oracle_var).abs() < var_tol,
                "instance {instance} comp {i}: analytic var {} vs oracle {oracle_var} (tol {var_tol})",
                cov[i * dim + i]
            );
        }
    }
}

#[test]
fn sigma_conditional_satisfies_wishart_mean_identity() {
    let dim = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(41);

    // random residual configuration feeding the conditional
    let theta = vec![0.3, -0.2];
    let mu: Vec<Vec<f64>> = (0..6)
        .map(|_| {
            (0..dim)
                .map(|i| theta[i] + rng.gen_range(-0.8..0.8))
                .collect()
        })
        .collect();
    let prior = HierPriorConfig {
        sigma0: SymmetricMatrix {
            dim,
            data: vec![1.3, 0.4, 0.4, 0.9],
        },
        ..HierPriorConfig::vague(dim)
    };
    let (df, scale) = update_sigma(&mu, &theta, &prior);
    assert_eq!(df, prior.wishart_df + 6.0);

    // scale must stay symmetric positive definite
    let scale_m = DMatrix::from_row_slice(dim, dim, &scale);
    assert!(scale_m.clone().cholesky().is_some());

    // the precision draws must average to df * scale^{-1}
    let n_draws = 50_000;
    let mut sums = vec![0.0; dim * dim];
    let mut sums_sq = vec![0.0; dim * dim];
    for _ in 0..n_draws {
        let (sig, prec) = sample_inverse_wishart(dim, df, &scale, &mut rng).unwrap();
        for k in 0..dim * dim {
            sums[k] += prec[k];
            sums_sq[k] += prec[k] * prec[k];
        }
        // each covariance draw is the clamped inverse of its precision
        let p = DMatrix::from_row_slice(dim, dim, &prec);
        let s = DMatrix::from_row_slice(dim, dim, &sig);
        let eye = &p * &s;
        for i in 0..dim {
            for j in 0..dim {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((eye[(i, j)] - want).abs() < 1e-8);
            }
        }
    }
    let expect = scale_m.try_inverse().unwrap() * df;
    for i in 0..dim {
        for j in 0..dim {
            let k = i * dim + j;
            let mean = sums[k] / n_draws as f64;
            let var = sums_sq[k] / n_draws as f64 - mean * mean;
            let tol = 3.0 * (var / n_draws as f64).sqrt();
            assert!(
                (mean - expect[(i, j)]).abs() < tol,
                "entry ({i},{j}): {mean} vs {} (tol {tol})",
                expect[(i, j)]
            );
        }
    }
}
