//! Labeled training data for the posterior surrogates: simulate current
//! trials over the scenario patterns, fit the hierarchical posterior to
//! each, and record the Monte Carlo labels, then select and fit the
//! networks.

use std::path::Path;

use histborrow_core::streams::substream;
use histborrow_core::types::{
    CurrentTrialObservation, EndpointConfig, HierPriorConfig, HistoricalDataset,
};
use histborrow_mcmc::{
    posterior_mean_control, posterior_prob_s, sample_joint_posterior, McmcConfig, McmcError,
};
use histborrow_mlp::{cross_validate, init_model, train, MlpModel, TrainConfig};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SurrogateTrainingConfig;
use crate::error::DesignError;
use crate::scenario::ScenarioDraw;

/// One labeled example: simulated current-trial counts with Monte Carlo
/// posterior labels, plus the generating truth kept for audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingExample {
    pub example_id: usize,
    pub pattern_id: usize,
    pub truth_control: [f64; 2],
    pub truth_treatment: [f64; 2],
    /// Normalized counts (control endpoint 1, control endpoint 2,
    /// treatment endpoint 1, treatment endpoint 2).
    pub features: [f64; 4],
    /// Posterior promise probabilities per endpoint.
    pub label_s: [f64; 2],
    /// Posterior means of the current control rates.
    pub label_p: [f64; 2],
}

/// Simulates binomial current-trial counts for a generating tuple.
pub fn simulate_counts<R: Rng>(
    n_control: u32,
    n_treatment: u32,
    control_rates: &[f64],
    treatment_rates: &[f64],
    rng: &mut R,
) -> CurrentTrialObservation {
    let draw = |n: u32, p: f64, rng: &mut R| {
        Binomial::new(u64::from(n), p.clamp(0.0, 1.0))
            .expect("valid binomial")
            .sample(rng) as u32
    };
    let r_control: Vec<u32> = control_rates
        .iter()
        .map(|&p| draw(n_control, p, rng))
        .collect();
    let r_treatment: Vec<u32> = treatment_rates
        .iter()
        .map(|&p| draw(n_treatment, p, rng))
        .collect();
    CurrentTrialObservation::new(n_control, n_treatment, r_control, r_treatment)
}

/// Normalized-count features of an observation, control endpoints first.
pub fn observation_features(obs: &CurrentTrialObservation) -> [f64; 4] {
    [
        f64::from(obs.r_control[0]) / f64::from(obs.n_control),
        f64::from(obs.r_control[1]) / f64::from(obs.n_control),
        f64::from(obs.r_treatment[0]) / f64::from(obs.n_treatment),
        f64::from(obs.r_treatment[1]) / f64::from(obs.n_treatment),
    ]
}

/// Labels every scenario draw by a fresh posterior fit. Examples whose
/// chains fail the convergence gate are excluded; the batch fails if
/// more than 1% are lost. Returns the kept examples in draw order plus
/// the exclusion count.
#[allow(clippy::too_many_arguments)]
pub fn generate_training_set(
    history: &HistoricalDataset,
    n_control: u32,
    n_treatment: u32,
    scenarios: &[ScenarioDraw],
    endpoints: &EndpointConfig,
    prior: &HierPriorConfig,
    mcmc: &McmcConfig,
    seed: u64,
) -> Result<(Vec<TrainingExample>, usize), DesignError> {
    let labeled: Vec<Result<Option<TrainingExample>, DesignError>> = scenarios
        .par_iter()
        .enumerate()
        .map(|(b, scenario)| {
            let mut rng = substream(seed, "design/train-example", &[b as u64]);
            let obs = simulate_counts(
                n_control,
                n_treatment,
                &scenario.control_rates,
                &scenario.treatment_rates,
                &mut rng,
            );
            let mcmc_cfg = McmcConfig {
                seed: rng.gen(),
                ..mcmc.clone()
            };
            match sample_joint_posterior(history, &obs, endpoints, prior, &mcmc_cfg) {
                Ok(draws) => {
                    let label_s = posterior_prob_s(
                        &draws.control,
                        &draws.treatment,
                        &endpoints.promise_margins,
                    );
                    let label_p = posterior_mean_control(&draws.control);
                    Ok(Some(TrainingExample {
                        example_id: b,
                        pattern_id: scenario.pattern_id,
                        truth_control: [scenario.control_rates[0], scenario.control_rates[1]],
                        truth_treatment: [
                            scenario.treatment_rates[0],
                            scenario.treatment_rates[1],
                        ],
                        features: observation_features(&obs),
                        label_s: [label_s[0], label_s[1]],
                        label_p: [label_p[0], label_p[1]],
                    }))
                }
                Err(McmcError::NonConvergence { .. }) => Ok(None),
                Err(e) => Err(DesignError::Mcmc(e)),
            }
        })
        .collect();

    let mut examples = Vec::with_capacity(scenarios.len());
    let mut excluded = 0usize;
    for item in labeled {
        match item? {
            Some(example) => examples.push(example),
            None => excluded += 1,
        }
    }
    if excluded * 100 > scenarios.len() {
        return Err(DesignError::TooManyExclusions {
            excluded,
            total: scenarios.len(),
        });
    }
    Ok((examples, excluded))
}

/// The fitted posterior surrogates with their selection audit trail.
#[derive(Debug, Clone)]
pub struct SurrogateFit {
    /// Promise-probability network: 4 features to 2 outputs.
    pub f_s: MlpModel,
    /// Posterior-mean network: the 2 control features to 2 outputs.
    pub f_p: MlpModel,
    /// Mean cross-validation MSE per candidate, in candidate order.
    pub f_s_cv_scores: Vec<f64>,
    pub f_p_cv_scores: Vec<f64>,
}

pub(crate) fn select_and_fit(
    inputs: Array2<f64>,
    targets: Array2<f64>,
    cfg: &SurrogateTrainingConfig,
    seed: u64,
    label: &str,
) -> Result<(MlpModel, Vec<f64>), DesignError> {
    let input_dim = inputs.ncols();
    let output_dim = targets.ncols();
    let specs: Vec<_> = cfg
        .candidates
        .iter()
        .map(|c| c.to_spec(input_dim, output_dim))
        .collect();

    let mut base = TrainConfig::with_seed(substream(seed, label, &[0]).gen());
    base.batch_size = cfg.batch_size;
    base.learning_rate = cfg.learning_rate;
    base.folds = cfg.folds;
    base.epochs = cfg.cv_epochs;
    let outcome = cross_validate(&specs, inputs.view(), targets.view(), &base)?;

    let mut final_cfg = TrainConfig::with_seed(substream(seed, label, &[1]).gen());
    final_cfg.batch_size = cfg.batch_size;
    final_cfg.learning_rate = cfg.learning_rate;
    final_cfg.epochs = cfg.final_epochs;
    final_cfg.holdout_fraction = cfg.holdout_fraction;
    let model = init_model(&outcome.best, substream(seed, label, &[2]).gen())?;
    let fitted = train(model, inputs.view(), targets.view(), &final_cfg)?;
    Ok((fitted, outcome.validation_mse))
}

/// Selects architectures by cross-validation and fits the final
/// promise-probability and posterior-mean networks.
pub fn fit_posterior_surrogates(
    examples: &[TrainingExample],
    cfg: &SurrogateTrainingConfig,
    seed: u64,
) -> Result<SurrogateFit, DesignError> {
    if examples.len() < 500 {
        return Err(DesignError::InvalidConfig(format!(
            "{} examples is too few to fit surrogates (need at least 500)",
            examples.len()
        )));
    }
    let n = examples.len();
    let x_s = Array2::from_shape_fn((n, 4), |(i, j)| examples[i].features[j]);
    let y_s = Array2::from_shape_fn((n, 2), |(i, j)| examples[i].label_s[j]);
    // only the control counts inform the control posterior means
    let x_p = Array2::from_shape_fn((n, 2), |(i, j)| examples[i].features[j]);
    let y_p = Array2::from_shape_fn((n, 2), |(i, j)| examples[i].label_p[j]);

    let (f_s, f_s_cv_scores) = select_and_fit(x_s, y_s, cfg, seed, "design/fit-fs")?;
    let (f_p, f_p_cv_scores) = select_and_fit(x_p, y_p, cfg, seed, "design/fit-fp")?;
    Ok(SurrogateFit {
        f_s,
        f_p,
        f_s_cv_scores,
        f_p_cv_scores,
    })
}

/// Writes the labeled training set for offline audit.
pub fn write_training_dump(path: &Path, examples: &[TrainingExample]) -> Result<(), DesignError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "example_id",
        "pattern_id",
        "true_psi_c1",
        "true_psi_c2",
        "true_psi_t1",
        "true_psi_t2",
        "feature_rc1",
        "feature_rc2",
        "feature_rt1",
        "feature_rt2",
        "label_s1",
        "label_s2",
        "label_p1",
        "label_p2",
    ])?;
    for e in examples {
        let mut row = vec![e.example_id.to_string(), e.pattern_id.to_string()];
        for v in e
            .truth_control
            .iter()
            .chain(&e.truth_treatment)
            .chain(&e.features)
            .chain(&e.label_s)
            .chain(&e.label_p)
        {
            row.push(format!("{v:.17}"));
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
