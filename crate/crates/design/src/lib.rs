//! Design-time engine for a two-endpoint trial that borrows historical
//! controls.
//!
//! The pipeline: simulate current trials across effect patterns, label
//! each with an MCMC posterior fit, train neural surrogates for the
//! promise probabilities and posterior means, calibrate per-hypothesis
//! critical-value surrogates on null grids, and freeze everything into
//! a fingerprinted design artifact. A simulation harness then estimates
//! the frozen design's error rates, power, bias, and RMSE.

pub mod artifact;
pub mod calibration;
pub mod config;
pub mod decision;
pub mod error;
pub mod harness;
pub mod scenario;
pub mod surrogate;
pub mod training;

pub use artifact::{
    surrogate_vs_mcmc_report, train_design, train_design_with_artifacts, DivergenceReport,
    Provenance, TrainedDesign,
};
pub use calibration::{
    constant_cutoff_baseline, empirical_critical_value, fit_critical_networks,
    upper_alpha_order_statistic, write_calibration_audit, CriticalSurrogates, GridLabel,
};
pub use config::{Budgets, CandidateSpec, DesignConfig, SurrogateTrainingConfig};
pub use decision::{DecisionEngine, DecisionMode, DecisionOutcome};
pub use error::DesignError;
pub use harness::{
    compare_power_preservation, results_csv_string, run_case_study,
    run_operating_characteristics, run_operating_characteristics_in_mode, write_results_csv,
    write_run_manifest, CaseStudyReport, PowerComparison, RunManifest, Scenario, ScenarioResult,
};
pub use scenario::{
    draw_null_grid, draw_scenarios, standard_patterns, NullHypothesisKind, ScenarioDraw,
    ScenarioPattern,
};
pub use surrogate::{ConstantSurrogate, FnSurrogate, HashUniformSurrogate, Surrogate};
pub use training::{
    fit_posterior_surrogates, generate_training_set, observation_features, simulate_counts,
    write_training_dump, SurrogateFit, TrainingExample,
};
