//! The locked design artifact: every network and constant the current
//! trial's analysis needs, fingerprinted so the file can be frozen
//! before the trial starts and verified at decision time.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use histborrow_core::streams::substream;
use histborrow_core::types::{
    CurrentTrialObservation, EndpointConfig, HierPriorConfig, HistoricalDataset, ParameterSpaces,
    SCHEMA_VERSION,
};
use histborrow_mcmc::{posterior_mean_control, posterior_prob_s, sample_joint_posterior, McmcConfig};
use histborrow_mlp::MlpModel;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{
    constant_cutoff_baseline, fit_critical_networks, CriticalSurrogates,
};
use crate::config::{Budgets, DesignConfig, SurrogateTrainingConfig};
use crate::decision::{DecisionEngine, DecisionMode, DecisionOutcome};
use crate::error::DesignError;
use crate::scenario::{draw_scenarios, standard_patterns};
use crate::training::{
    fit_posterior_surrogates, generate_training_set, TrainingExample,
};

/// Everything needed to replay or audit the training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub seed: u64,
    pub mcmc: McmcConfig,
    pub budgets: Budgets,
    pub surrogate_training: SurrogateTrainingConfig,
    /// Training examples dropped for non-convergence.
    pub excluded_examples: usize,
    /// Cross-validation scores of the promise-probability candidates.
    pub f_s_cv_scores: Vec<f64>,
    /// Cross-validation scores of the posterior-mean candidates.
    pub f_p_cv_scores: Vec<f64>,
    /// Per-baseline-scenario empirical global-null critical values.
    pub baseline_critical_values: Vec<f64>,
    /// Wall-clock creation time (unix seconds); excluded from the
    /// fingerprint so identical runs hash identically.
    pub created_at_unix: u64,
}

/// A complete trained design, ready to lock to disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedDesign {
    #[serde(default)]
    pub schema_version: u32,
    pub endpoints: EndpointConfig,
    pub spaces: ParameterSpaces,
    pub history: HistoricalDataset,
    pub prior: HierPriorConfig,
    pub n_control: u32,
    pub n_treatment: u32,
    /// Promise-probability network (4 features to 2 outputs).
    pub f_s: MlpModel,
    /// Posterior-mean network (2 features to 2 outputs).
    pub f_p: MlpModel,
    pub critical: CriticalSurrogates,
    /// Constant-cutoff baseline threshold.
    pub c_const: f64,
    pub provenance: Provenance,
    /// Content hash of everything above (with creation time zeroed).
    pub fingerprint: String,
}

impl TrainedDesign {
    /// SHA-256 over the canonical serialized form, excluding the
    /// fingerprint itself and the creation timestamp.
    pub fn compute_fingerprint(&self) -> String {
        let mut canonical = self.clone();
        canonical.fingerprint = String::new();
        canonical.provenance.created_at_unix = 0;
        let bytes = serde_json::to_vec(&canonical).expect("design serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Seals the fingerprint after construction or mutation.
    pub fn refresh_fingerprint(&mut self) {
        self.fingerprint = self.compute_fingerprint();
    }

    /// The evaluation wiring over this design's networks.
    pub fn engine(&self) -> DecisionEngine<'_> {
        DecisionEngine {
            f_s: &self.f_s,
            f_p: &self.f_p,
            f1: &self.critical.f1,
            f2: &self.critical.f2,
            f12: &self.critical.f12,
            feature_boxes: &self.critical.feature_boxes,
            c_const: self.c_const,
            n_control: self.n_control,
            n_treatment: self.n_treatment,
        }
    }

    /// The surrogate analysis of an observed trial.
    pub fn decide(&self, cur: &CurrentTrialObservation) -> Result<DecisionOutcome, DesignError> {
        self.engine().decide(cur, DecisionMode::Surrogate)
    }

    /// Analysis under any of the three modes.
    pub fn decide_in_mode(
        &self,
        cur: &CurrentTrialObservation,
        mode: DecisionMode,
    ) -> Result<DecisionOutcome, DesignError> {
        match mode {
            DecisionMode::FreshMcmc => {
                let (s, p) = self.fresh_mcmc_estimates(cur)?;
                self.engine()
                    .decide_with_estimates(cur, s, p, DecisionMode::FreshMcmc)
            }
            other => self.engine().decide(cur, other),
        }
    }

    /// The reference path: a fresh posterior fit on the observation,
    /// returning Monte Carlo promise probabilities and posterior means.
    pub fn fresh_mcmc_estimates(
        &self,
        cur: &CurrentTrialObservation,
    ) -> Result<([f64; 2], [f64; 2]), DesignError> {
        let mcmc_seed: u64 = substream(
            self.provenance.seed,
            "design/fresh-decide",
            &[
                u64::from(cur.r_control[0]),
                u64::from(cur.r_control[1]),
                u64::from(cur.r_treatment[0]),
                u64::from(cur.r_treatment[1]),
            ],
        )
        .gen();
        let mcmc_cfg = McmcConfig {
            seed: mcmc_seed,
            ..self.provenance.mcmc.clone()
        };
        let draws =
            sample_joint_posterior(&self.history, cur, &self.endpoints, &self.prior, &mcmc_cfg)?;
        let s = posterior_prob_s(
            &draws.control,
            &draws.treatment,
            &self.endpoints.promise_margins,
        );
        let p = posterior_mean_control(&draws.control);
        Ok(([s[0], s[1]], [p[0], p[1]]))
    }

    /// Writes the design with a freshly computed fingerprint.
    pub fn save(&self, path: &Path) -> Result<(), DesignError> {
        let mut sealed = self.clone();
        sealed.refresh_fingerprint();
        let json = serde_json::to_string_pretty(&sealed)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    /// Loads a design and verifies its fingerprint and network shapes.
    pub fn load(path: &Path) -> Result<Self, DesignError> {
        let bytes = std::fs::read(path)?;
        let design: TrainedDesign = serde_json::from_slice(&bytes)?;
        let recomputed = design.compute_fingerprint();
        if recomputed != design.fingerprint {
            return Err(DesignError::FingerprintMismatch {
                stored: design.fingerprint.clone(),
                recomputed,
            });
        }
        design.check_networks()?;
        Ok(design)
    }

    fn check_networks(&self) -> Result<(), DesignError> {
        let expect = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(DesignError::DesignMismatch(format!(
                    "stored design is inconsistent: {what}"
                )))
            }
        };
        expect(self.f_s.is_consistent(), "promise network weights")?;
        expect(self.f_p.is_consistent(), "posterior-mean network weights")?;
        expect(self.critical.f1.is_consistent(), "critical network 1")?;
        expect(self.critical.f2.is_consistent(), "critical network 2")?;
        expect(self.critical.f12.is_consistent(), "global critical network")?;
        expect(
            self.f_s.spec.input_dim == 4 && self.f_s.spec.output_dim == 2,
            "promise network shape",
        )?;
        expect(
            self.f_p.spec.input_dim == 2 && self.f_p.spec.output_dim == 2,
            "posterior-mean network shape",
        )?;
        expect(
            self.critical.f1.spec.input_dim == 3
                && self.critical.f2.spec.input_dim == 3
                && self.critical.f12.spec.input_dim == 2,
            "critical network shapes",
        )?;
        expect(0.0 < self.c_const && self.c_const < 1.0, "constant cutoff")?;
        Ok(())
    }
}

/// Runs the whole training pipeline and also returns the labeled
/// training set for dumping or audit.
pub fn train_design_with_artifacts(
    cfg: &DesignConfig,
) -> Result<(TrainedDesign, Vec<TrainingExample>), DesignError> {
    cfg.validate()?;
    let patterns = standard_patterns(&cfg.spaces);
    let scenarios = draw_scenarios(&patterns, cfg.budgets.training_examples, cfg.seed)?;
    let (examples, excluded) = generate_training_set(
        &cfg.history,
        cfg.n_control,
        cfg.n_treatment,
        &scenarios,
        &cfg.endpoints,
        &cfg.prior,
        &cfg.mcmc,
        cfg.seed,
    )?;
    let fit = fit_posterior_surrogates(&examples, &cfg.surrogates, cfg.seed)?;
    let critical = fit_critical_networks(
        &fit.f_s,
        &cfg.spaces,
        cfg.n_control,
        cfg.n_treatment,
        cfg.budgets.null_grid_points,
        cfg.budgets.critical_replicates,
        cfg.endpoints.alpha,
        &cfg.surrogates.for_critical_surfaces(),
        cfg.seed,
    )?;
    let (c_const, baseline_critical_values) = constant_cutoff_baseline(
        &fit.f_s,
        &cfg.baseline_scenarios,
        cfg.n_control,
        cfg.n_treatment,
        cfg.budgets.critical_replicates,
        cfg.endpoints.alpha,
        cfg.budgets.cutoff_grid_step,
        cfg.seed,
    )?;

    let created_at_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut design = TrainedDesign {
        schema_version: SCHEMA_VERSION,
        endpoints: cfg.endpoints.clone(),
        spaces: cfg.spaces.clone(),
        history: cfg.history.clone(),
        prior: cfg.prior.clone(),
        n_control: cfg.n_control,
        n_treatment: cfg.n_treatment,
        f_s: fit.f_s,
        f_p: fit.f_p,
        critical,
        c_const,
        provenance: Provenance {
            seed: cfg.seed,
            mcmc: cfg.mcmc.clone(),
            budgets: cfg.budgets.clone(),
            surrogate_training: cfg.surrogates.clone(),
            excluded_examples: excluded,
            f_s_cv_scores: fit.f_s_cv_scores,
            f_p_cv_scores: fit.f_p_cv_scores,
            baseline_critical_values,
            created_at_unix,
        },
        fingerprint: String::new(),
    };
    design.refresh_fingerprint();
    Ok((design, examples))
}

/// Runs the whole training pipeline.
pub fn train_design(cfg: &DesignConfig) -> Result<TrainedDesign, DesignError> {
    train_design_with_artifacts(cfg).map(|(design, _)| design)
}

/// Side-by-side comparison of the surrogate and reference analysis
/// paths on one observation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub s_surrogate: [f64; 2],
    pub s_mcmc: [f64; 2],
    /// Absolute gap per endpoint.
    pub divergence: [f64; 2],
    pub surrogate_nanos: u128,
    pub mcmc_nanos: u128,
    /// Reference wall-clock over surrogate wall-clock.
    pub speedup: f64,
}

/// Evaluates both analysis paths and reports their promise-probability
/// gap and wall-clock times.
pub fn surrogate_vs_mcmc_report(
    design: &TrainedDesign,
    cur: &CurrentTrialObservation,
) -> Result<DivergenceReport, DesignError> {
    let start = Instant::now();
    let surrogate = design.decide(cur)?;
    let surrogate_nanos = start.elapsed().as_nanos();

    let start = Instant::now();
    let (s_mcmc, _) = design.fresh_mcmc_estimates(cur)?;
    let mcmc_nanos = start.elapsed().as_nanos();

    let divergence = [
        (surrogate.s_hat[0] - s_mcmc[0]).abs(),
        (surrogate.s_hat[1] - s_mcmc[1]).abs(),
    ];
    Ok(DivergenceReport {
        s_surrogate: surrogate.s_hat,
        s_mcmc,
        divergence,
        surrogate_nanos,
        mcmc_nanos,
        speedup: mcmc_nanos as f64 / surrogate_nanos.max(1) as f64,
    })
}
