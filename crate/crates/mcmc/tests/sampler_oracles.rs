//! Cross-checks of the hierarchical sampler against an independently
//! written reference chain and against low-dimensional numerical
//! integration, plus the sampler's structural invariants.
//!
//! The reference chain below deliberately shares no code with the library:
//! it uses nalgebra for all matrix work, recomputes full log densities
//! instead of update deltas, and runs plain non-adaptive Metropolis.

use histborrow_core::types::{
    HierPriorConfig, HistoricalDataset, HistoricalStudy, SymmetricMatrix,
};
use histborrow_mcmc::{
    mcse_mean, posterior_mean_control, sample_hier_posterior, McmcConfig,
};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn six_study_history() -> HistoricalDataset {
    let n = [100, 100, 200, 200, 300, 300];
    let r1 = [33, 41, 78, 81, 115, 113];
    let r2 = [31, 28, 69, 68, 94, 97];
    HistoricalDataset::new(
        (0..6)
            .map(|j| HistoricalStudy {
                label: None,
                n: n[j],
                r: vec![r1[j], r2[j]],
            })
            .collect(),
    )
}

// =======================================================================
// independent reference chain
// =======================================================================

struct RefProblem {
    /// Per unit: (sample size, responders per endpoint); unit 0 is the
    /// current control arm.
    units: Vec<(f64, Vec<f64>)>,
    tau: f64,
    sigma0: DMatrix<f64>,
    wishart_df: f64,
}

/// Plain Metropolis-within-Gibbs with fixed proposal scales and full
/// log-density recomputation; returns kept draws of the unit-0 rates.
fn reference_chain(p: &RefProblem, total: usize, burn: usize, seed: u64) -> Vec<Vec<f64>> {
    let dim = p.sigma0.nrows();
    let n_units = p.units.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut mu: Vec<DVector<f64>> = p
        .units
        .iter()
        .map(|(n, r)| {
            DVector::from_iterator(dim, r.iter().map(|&ri| logit((ri + 0.5) / (n + 1.0))))
        })
        .collect();
    let mut theta = DVector::<f64>::zeros(dim);
    for m in &mu {
        theta += m;
    }
    theta /= n_units as f64;
    let mut sigma = p.sigma0.clone();
    let mut prec = sigma.clone().try_inverse().expect("invertible scale");

    let scales: Vec<Vec<f64>> = p
        .units
        .iter()
        .map(|(n, r)| {
            r.iter()
                .map(|&ri| {
                    let ph = (ri + 0.5) / (n + 1.0);
                    2.4 / (n * ph * (1.0 - ph) + 1.0).sqrt()
                })
                .collect()
        })
        .collect();

    let log_post_unit = |m: &DVector<f64>, n: f64, r: &[f64], th: &DVector<f64>, pr: &DMatrix<f64>| {
        let mut ll = 0.0;
        for i in 0..dim {
            ll += r[i] * m[i] - n * softplus(m[i]);
        }
        let d = m - th;
        ll - 0.5 * (pr * &d).dot(&d)
    };

    let mut kept = Vec::with_capacity(total - burn);
    let mut accepted = 0u64;
    let mut proposed = 0u64;
    for iter in 0..total {
        for j in 0..n_units {
            let (n, r) = (p.units[j].0, p.units[j].1.clone());
            for i in 0..dim {
                let mut cand = mu[j].clone();
                cand[i] += scales[j][i] * rng.sample::<f64, _>(StandardNormal);
                let delta = log_post_unit(&cand, n, &r, &theta, &prec)
                    - log_post_unit(&mu[j], n, &r, &theta, &prec);
                proposed += 1;
                if delta >= 0.0 || rng.gen::<f64>().ln() < delta {
                    mu[j] = cand;
                    accepted += 1;
                }
            }
        }

        // conjugate update of the population mean
        let mut post_prec = &prec * n_units as f64;
        for i in 0..dim {
            post_prec[(i, i)] += p.tau;
        }
        let cov = post_prec.try_inverse().expect("posterior precision invertible");
        let mut mu_sum = DVector::<f64>::zeros(dim);
        for m in &mu {
            mu_sum += m;
        }
        let mean = &cov * (&prec * mu_sum);
        let l = Cholesky::new(cov.clone()).expect("posterior covariance SPD").l();
        let z = DVector::from_iterator(dim, (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
        theta = mean + l * z;

        // conjugate inverse-Wishart update of the covariance
        let mut scale = p.sigma0.clone();
        for m in &mu {
            let d = m - &theta;
            scale += &d * d.transpose();
        }
        let nu = p.wishart_df + n_units as f64;
        let scale_inv = scale.try_inverse().expect("scale invertible");
        let l = Cholesky::new(scale_inv).expect("scale inverse SPD").l();
        let mut a = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            let chi = Gamma::new((nu - i as f64) / 2.0, 2.0).unwrap().sample(&mut rng);
            a[(i, i)] = chi.sqrt();
            for jj in 0..i {
                a[(i, jj)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let m = &l * a;
        prec = &m * m.transpose();
        sigma = prec.clone().try_inverse().expect("precision invertible");
        let _ = &sigma;

        if iter >= burn {
            kept.push((0..dim).map(|i| expit(mu[0][i])).collect());
        }
    }
    let acc_rate = accepted as f64 / proposed as f64;
    assert!(
        (0.1..0.9).contains(&acc_rate),
        "reference chain acceptance {acc_rate} outside sane range"
    );
    kept
}

#[test]
fn posterior_mean_matches_reference_chain() {
    let hist = six_study_history();
    let prior = HierPriorConfig::vague(2);
    let cfg = McmcConfig::with_seed(2024);
    let fit = sample_hier_posterior(&hist, 150, &[60, 45], &prior, &cfg).unwrap();
    let ours = posterior_mean_control(&fit.draws);

    let mut units = vec![(150.0, vec![60.0, 45.0])];
    for s in &hist.studies {
        units.push((f64::from(s.n), s.r.iter().map(|&r| f64::from(r)).collect()));
    }
    let problem = RefProblem {
        units,
        tau: prior.theta_precision,
        sigma0: DMatrix::identity(2, 2),
        wishart_df: prior.wishart_df,
    };
    let reference = reference_chain(&problem, 200_000, 5_000, 77);

    for i in 0..2 {
        let ref_col: Vec<f64> = reference.iter().map(|row| row[i]).collect();
        let ref_mean = ref_col.iter().sum::<f64>() / ref_col.len() as f64;
        let tol = 3.0
            * (mcse_mean(&fit.draws.column(i)).powi(2) + mcse_mean(&ref_col).powi(2)).sqrt();
        assert!(
            (ours[i] - ref_mean).abs() < tol,
            "endpoint {i}: ours {} vs reference {ref_mean} (tol {tol})",
            ours[i]
        );
    }
    // current empirical and pooled historical rates for endpoint 1 are both
    // essentially 0.40, so the borrowing posterior must sit right there
    assert!((ours[0] - 0.40).abs() < 0.02, "endpoint 1 mean {}", ours[0]);
}

// =======================================================================
// near-complete pooling against 1-D numerical integration
// =======================================================================

/// Composite Simpson integration of `f` over `[a, b]` with `n` intervals.
fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + h * k as f64);
    }
    sum * h / 3.0
}

/// Posterior mean of `expit(x)` when two pooled units share one logit-scale
/// parameter with a zero-mean normal prior of the given precision.
fn pooled_posterior_mean(r_total: f64, n_total: f64, tau: f64) -> f64 {
    let log_w = |x: f64| r_total * x - n_total * softplus(x) - 0.5 * tau * x * x;
    // stabilize around the maximum over the integration range
    let m = (0..=1600)
        .map(|k| log_w(-8.0 + k as f64 * 0.01))
        .fold(f64::NEG_INFINITY, f64::max);
    let numer = simpson(-8.0, 8.0, 16_000, |x| expit(x) * (log_w(x) - m).exp());
    let denom = simpson(-8.0, 8.0, 16_000, |x| (log_w(x) - m).exp());
    numer / denom
}

#[test]
fn near_complete_pooling_matches_grid_integration() {
    // frozen references from an independent high-precision evaluation of
    // the same 1-D integrals
    let oracle1 = pooled_posterior_mean(80.0, 200.0, 0.01);
    let oracle2 = pooled_posterior_mean(60.0, 200.0, 0.01);
    assert!((oracle1 - 0.400020373494198).abs() < 1e-9, "oracle1 {oracle1}");
    assert!((oracle2 - 0.3000425936640122).abs() < 1e-9, "oracle2 {oracle2}");

    // one historical study identical to the current control; covariance
    // pinned near zero by the prior so both units share one parameter
    let hist = HistoricalDataset::new(vec![HistoricalStudy {
        label: None,
        n: 100,
        r: vec![40, 30],
    }]);
    let prior = HierPriorConfig {
        theta_precision: 0.01,
        sigma0: SymmetricMatrix::scaled_identity(2, 1e-6),
        wishart_df: 1e6,
        ..HierPriorConfig::vague(2)
    };
    let mut cfg = McmcConfig::with_seed(31);
    cfg.burn_in = 1000;
    cfg.kept_draws_per_chain = 500;
    let fit = sample_hier_posterior(&hist, 100, &[40, 30], &prior, &cfg).unwrap();
    let means = posterior_mean_control(&fit.draws);
    assert!((means[0] - oracle1).abs() < 0.005, "endpoint 1: {} vs {oracle1}", means[0]);
    assert!((means[1] - oracle2).abs() < 0.005, "endpoint 2: {} vs {oracle2}", means[1]);
}

// =======================================================================
// structural invariants
// =======================================================================

fn quick_cfg(seed: u64) -> McmcConfig {
    let mut cfg = McmcConfig::with_seed(seed);
    cfg.burn_in = 1000;
    cfg.kept_draws_per_chain = 1500;
    cfg
}

#[test]
fn borrowing_shrinks_toward_history() {
    let hist = six_study_history();
    let prior = HierPriorConfig::vague(2);

    // current rate below history: the posterior mean is pulled up
    let low = sample_hier_posterior(&hist, 150, &[30, 45], &prior, &quick_cfg(5)).unwrap();
    let low_mean = posterior_mean_control(&low.draws)[0];
    assert!(low_mean > 0.2, "no shrinkage upward: {low_mean}");
    assert!(low_mean < 0.35, "overshrunk: {low_mean}");

    // current rate above history: pulled down
    let high = sample_hier_posterior(&hist, 150, &[90, 45], &prior, &quick_cfg(6)).unwrap();
    let high_mean = posterior_mean_control(&high.draws)[0];
    assert!(high_mean < 0.6, "no shrinkage downward: {high_mean}");
    assert!(high_mean > 0.45, "overshrunk: {high_mean}");
}

#[test]
fn draws_strictly_inside_unit_interval_and_sigma_spd() {
    let hist = six_study_history();
    let prior = HierPriorConfig::vague(2);
    let fit = sample_hier_posterior(&hist, 150, &[0, 150], &prior, &quick_cfg(7)).unwrap();
    assert!(fit.draws.all_in_unit_interval());
    assert!(
        fit.diagnostics.min_sigma_eigenvalue > 1e-12,
        "covariance draw lost positive definiteness: {}",
        fit.diagnostics.min_sigma_eigenvalue
    );
    assert!(fit.diagnostics.rhat.iter().all(|&r| r < 1.01));
}

#[test]
fn identical_seeds_reproduce_bit_identical_draws() {
    let hist = six_study_history();
    let prior = HierPriorConfig::vague(2);
    let a = sample_hier_posterior(&hist, 150, &[60, 45], &prior, &quick_cfg(9)).unwrap();
    let b = sample_hier_posterior(&hist, 150, &[60, 45], &prior, &quick_cfg(9)).unwrap();
    assert_eq!(a.draws.data, b.draws.data, "same seed must reproduce exactly");

    let c = sample_hier_posterior(&hist, 150, &[60, 45], &prior, &quick_cfg(10)).unwrap();
    assert_ne!(a.draws.data, c.draws.data, "different seed must differ");
}
