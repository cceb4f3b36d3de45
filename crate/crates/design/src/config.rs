//! Configuration of a full design-engine run: data, priors, simulation
//! budgets, and network-training settings, with desk-scale defaults and
//! a full-scale switch.

use histborrow_core::types::{
    EndpointConfig, HierPriorConfig, HistoricalDataset, ParameterSpaces, ValidationReport,
    SCHEMA_VERSION,
};
use histborrow_mcmc::McmcConfig;
use histborrow_mlp::MlpSpec;
use serde::{Deserialize, Serialize};

use crate::error::DesignError;

/// Simulation sizes for each stage of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    /// Labeled training examples for the posterior surrogates.
    pub training_examples: usize,
    /// Null-grid points per hypothesis family for critical-value fitting.
    pub null_grid_points: usize,
    /// Simulated trials per critical-value evaluation.
    pub critical_replicates: usize,
    /// Default replicates per scenario in operating-characteristic runs.
    pub oc_replicates: usize,
    /// Rounding step for the constant-cutoff baseline.
    pub cutoff_grid_step: f64,
}

impl Budgets {
    /// Sizes small enough for an interactive desktop run.
    pub fn desk_scale() -> Self {
        Self {
            training_examples: 2_000,
            null_grid_points: 800,
            critical_replicates: 20_000,
            oc_replicates: 10_000,
            cutoff_grid_step: 5e-4,
        }
    }

    /// The production sizes the desk-scale defaults stand in for.
    pub fn full_scale() -> Self {
        Self {
            training_examples: 8_000,
            null_grid_points: 2_000,
            critical_replicates: 100_000,
            oc_replicates: 100_000,
            cutoff_grid_step: 5e-4,
        }
    }
}

/// One architecture candidate: hidden widths plus dropout rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSpec {
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub dropout: f64,
}

impl CandidateSpec {
    /// Realizes the candidate for a given input/output shape with a
    /// sigmoid output layer (every surrogate output lives in [0,1]).
    pub fn to_spec(&self, input_dim: usize, output_dim: usize) -> MlpSpec {
        MlpSpec::sigmoid(input_dim, self.hidden.clone(), output_dim).with_dropout(self.dropout)
    }
}

/// Settings for architecture selection and final network fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateTrainingConfig {
    pub candidates: Vec<CandidateSpec>,
    /// Epochs per fold during cross-validation.
    pub cv_epochs: usize,
    /// Epochs for the final fit of the selected architecture.
    pub final_epochs: usize,
    pub folds: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Share of examples held out during the final fit to report a
    /// validation error.
    pub holdout_fraction: f64,
}

impl SurrogateTrainingConfig {
    /// Two contrasting candidates and shortened schedules.
    pub fn desk_scale() -> Self {
        Self {
            candidates: vec![
                CandidateSpec {
                    hidden: vec![60, 60],
                    dropout: 0.1,
                },
                CandidateSpec {
                    hidden: vec![20],
                    dropout: 0.0,
                },
            ],
            cv_epochs: 200,
            final_epochs: 600,
            folds: 3,
            batch_size: 100,
            learning_rate: 2e-3,
            holdout_fraction: 0.1,
        }
    }

    /// The full search grid: one to three hidden layers, widths
    /// 20/50/60, dropout off or 0.1, full-length schedules.
    pub fn full_scale() -> Self {
        let mut candidates = Vec::new();
        for layers in [1usize, 2, 3] {
            for width in [20usize, 50, 60] {
                for dropout in [0.0, 0.1] {
                    candidates.push(CandidateSpec {
                        hidden: vec![width; layers],
                        dropout,
                    });
                }
            }
        }
        Self {
            candidates,
            cv_epochs: 1_000,
            final_epochs: 1_000,
            folds: 5,
            batch_size: 100,
            learning_rate: 1e-3,
            holdout_fraction: 0.1,
        }
    }

    /// Variant used for the critical-value networks. Their targets are
    /// low-dimensional, nearly noise-free surfaces (the empirical
    /// order-statistic labels carry errors an order of magnitude below
    /// the promise-network labels), so dropout only blurs the fit and
    /// the final schedule is lengthened instead.
    pub fn for_critical_surfaces(&self) -> Self {
        let mut cfg = self.clone();
        for candidate in &mut cfg.candidates {
            candidate.dropout = 0.0;
        }
        cfg.candidates.dedup();
        cfg.final_epochs *= 2;
        cfg
    }

    fn validate(&self) -> Result<(), DesignError> {
        if self.candidates.is_empty() {
            return Err(DesignError::InvalidConfig(
                "at least one architecture candidate required".into(),
            ));
        }
        if self.folds < 2 || self.batch_size == 0 || self.cv_epochs == 0 || self.final_epochs == 0
        {
            return Err(DesignError::InvalidConfig(
                "folds must be >= 2 and epochs/batch size positive".into(),
            ));
        }
        if !(0.0..0.5).contains(&self.holdout_fraction) {
            return Err(DesignError::InvalidConfig(
                "holdout fraction must lie in [0, 0.5)".into(),
            ));
        }
        Ok(())
    }
}

/// Everything needed to train a design end to end.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    pub seed: u64,
    pub endpoints: EndpointConfig,
    pub spaces: ParameterSpaces,
    pub history: HistoricalDataset,
    pub prior: HierPriorConfig,
    pub mcmc: McmcConfig,
    pub n_control: u32,
    pub n_treatment: u32,
    pub budgets: Budgets,
    pub surrogates: SurrogateTrainingConfig,
    /// Global-null control-rate pairs the constant baseline must hold at.
    pub baseline_scenarios: Vec<[f64; 2]>,
}

fn schema_version_default() -> u32 {
    SCHEMA_VERSION
}

impl DesignConfig {
    /// Desk-scale configuration around the given data and sample sizes.
    pub fn desk_scale(
        endpoints: EndpointConfig,
        spaces: ParameterSpaces,
        history: HistoricalDataset,
        n_control: u32,
        n_treatment: u32,
        baseline_scenarios: Vec<[f64; 2]>,
        seed: u64,
    ) -> Self {
        let endpoint_count = endpoints.endpoint_count;
        let mut mcmc = McmcConfig::with_seed(seed);
        // shortened chains for throughput; the wider convergence gate
        // absorbs the extra sampling noise of R-hat at this draw count
        mcmc.burn_in = 1_000;
        mcmc.kept_draws_per_chain = 3_334;
        // keep every third draw so the 10,002 label draws are close to
        // independent and the binomial MCSE model for labels is honest
        mcmc.thinning = 3;
        mcmc.rhat_threshold = 1.05;
        Self {
            schema_version: SCHEMA_VERSION,
            seed,
            endpoints,
            spaces,
            history,
            prior: HierPriorConfig::vague(endpoint_count),
            mcmc,
            n_control,
            n_treatment,
            budgets: Budgets::desk_scale(),
            surrogates: SurrogateTrainingConfig::desk_scale(),
            baseline_scenarios,
        }
    }

    /// Switches budgets, schedules, and the convergence gate to the
    /// production values.
    pub fn to_full_scale(&mut self) {
        self.budgets = Budgets::full_scale();
        self.surrogates = SurrogateTrainingConfig::full_scale();
        self.mcmc.burn_in = 2_000;
        self.mcmc.rhat_threshold = 1.01;
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        let mut report = ValidationReport::default();
        self.endpoints.check(&mut report);
        let endpoints = self.endpoints.endpoint_count;
        self.history.check(endpoints, &mut report);
        self.spaces.check(endpoints, &mut report);
        self.prior.check(endpoints, &mut report);
        if !report.passed() {
            return Err(DesignError::Validation(report.violations));
        }
        self.mcmc
            .validate()
            .map_err(|e| DesignError::InvalidConfig(e.to_string()))?;
        self.surrogates.validate()?;
        if self.n_control == 0 || self.n_treatment == 0 {
            return Err(DesignError::InvalidConfig(
                "sample sizes must be positive".into(),
            ));
        }
        if self.budgets.training_examples < 500 {
            return Err(DesignError::InvalidConfig(
                "at least 500 training examples required".into(),
            ));
        }
        if self.budgets.critical_replicates < 10_000 {
            return Err(DesignError::InvalidConfig(
                "critical-value replicates must be at least 10,000".into(),
            ));
        }
        if self.budgets.null_grid_points < 50 {
            return Err(DesignError::InvalidConfig(
                "null grids need at least 50 points".into(),
            ));
        }
        if !(self.budgets.cutoff_grid_step > 0.0 && self.budgets.cutoff_grid_step < 0.1) {
            return Err(DesignError::InvalidConfig(
                "cutoff grid step must lie in (0, 0.1)".into(),
            ));
        }
        if self.baseline_scenarios.is_empty() {
            return Err(DesignError::InvalidConfig(
                "baseline scenario list must not be empty".into(),
            ));
        }
        for pair in &self.baseline_scenarios {
            if pair.iter().any(|p| !(0.0 < *p && *p < 1.0)) {
                return Err(DesignError::InvalidRange(
                    "baseline scenario rates must lie in (0,1)".into(),
                ));
            }
        }
        Ok(())
    }
}
