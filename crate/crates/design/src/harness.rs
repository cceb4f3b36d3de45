//! Monte Carlo evaluation of a trained design: rejection rates with
//! standard errors, bias and RMSE of the posterior-mean surrogate, and
//! the surrogate-versus-constant-cutoff power comparison.

use std::path::Path;

use histborrow_core::kahan::KahanSum;
use histborrow_core::streams::substream;
use histborrow_core::types::{ValidationReport, SCHEMA_VERSION};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::{train_design, TrainedDesign};
use crate::config::DesignConfig;
use crate::decision::DecisionMode;
use crate::error::DesignError;
use crate::training::simulate_counts;

/// One simulated truth: control rates, treatment effects, and how many
/// trials to replay under it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub control_rates: [f64; 2],
    pub effects: [f64; 2],
    pub replicates: u32,
}

impl Scenario {
    pub fn new(control_rates: [f64; 2], effects: [f64; 2], replicates: u32) -> Self {
        Self {
            label: None,
            control_rates,
            effects,
            replicates,
        }
    }

    /// True treatment rates implied by control rates and effects.
    pub fn treatment_rates(&self) -> [f64; 2] {
        [
            self.control_rates[0] + self.effects[0],
            self.control_rates[1] + self.effects[1],
        ]
    }

    fn check(&self, index: usize, report: &mut ValidationReport) {
        for i in 0..2 {
            let c = self.control_rates[i];
            let t = self.control_rates[i] + self.effects[i];
            if !(c > 0.0 && c < 1.0) {
                report.violations.push(format!(
                    "scenario {index}: control rate {c} for endpoint {} outside (0, 1)",
                    i + 1
                ));
            }
            if !(t > 0.0 && t < 1.0) {
                report.violations.push(format!(
                    "scenario {index}: treatment rate {t} for endpoint {} outside (0, 1)",
                    i + 1
                ));
            }
        }
        if self.replicates < 1_000 {
            report.violations.push(format!(
                "scenario {index}: {} replicates; at least 1,000 required for stable rates",
                self.replicates
            ));
        }
    }
}

/// Estimated operating characteristics of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub mode: DecisionMode,
    /// Rate of rejecting endpoint 1's null, with its Monte Carlo
    /// standard error.
    pub reject_h1_rate: f64,
    pub reject_h1_mcse: f64,
    pub reject_h2_rate: f64,
    pub reject_h2_mcse: f64,
    /// Rate of rejecting at least one null: the family-wise error rate
    /// under a null truth, the any-rejection power under an
    /// alternative.
    pub reject_h12_rate: f64,
    pub reject_h12_mcse: f64,
    /// Mean posterior-mean-estimate error per control endpoint.
    pub bias: [f64; 2],
    /// Root mean squared posterior-mean-estimate error.
    pub rmse: [f64; 2],
}

fn mcse(p: f64, n: u32) -> f64 {
    (p * (1.0 - p) / f64::from(n)).sqrt()
}

fn validate_scenarios(scenarios: &[Scenario]) -> Result<(), DesignError> {
    let mut report = ValidationReport::default();
    if scenarios.is_empty() {
        report
            .violations
            .push("no scenarios supplied".to_string());
    }
    for (index, scenario) in scenarios.iter().enumerate() {
        scenario.check(index, &mut report);
    }
    if !report.passed() {
        return Err(DesignError::Validation(report.violations));
    }
    Ok(())
}

/// Simulates every scenario through the surrogate decision path.
pub fn run_operating_characteristics(
    design: &TrainedDesign,
    scenarios: &[Scenario],
    seed: u64,
) -> Result<Vec<ScenarioResult>, DesignError> {
    run_operating_characteristics_in_mode(design, scenarios, DecisionMode::Surrogate, seed)
}

/// Simulates every scenario through the requested decision path.
///
/// Replicates run in parallel on streams keyed by (scenario,
/// replicate), and aggregation uses exact counters plus compensated
/// sums, so the results do not depend on the thread count.
pub fn run_operating_characteristics_in_mode(
    design: &TrainedDesign,
    scenarios: &[Scenario],
    mode: DecisionMode,
    seed: u64,
) -> Result<Vec<ScenarioResult>, DesignError> {
    validate_scenarios(scenarios)?;
    scenarios
        .iter()
        .enumerate()
        .map(|(s, scenario)| run_one_scenario(design, scenario, s, mode, seed))
        .collect()
}

fn run_one_scenario(
    design: &TrainedDesign,
    scenario: &Scenario,
    scenario_index: usize,
    mode: DecisionMode,
    seed: u64,
) -> Result<ScenarioResult, DesignError> {
    let truth_control = scenario.control_rates;
    let truth_treatment = scenario.treatment_rates();
    let per_replicate: Vec<([bool; 2], [f64; 2])> = (0..scenario.replicates)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(
                seed,
                "design/oc-replicate",
                &[scenario_index as u64, u64::from(k)],
            );
            let obs = simulate_counts(
                design.n_control,
                design.n_treatment,
                &truth_control,
                &truth_treatment,
                &mut rng,
            );
            let out = design.decide_in_mode(&obs, mode)?;
            Ok((out.rejected, out.posterior_mean_hat))
        })
        .collect::<Result<_, DesignError>>()?;

    let mut reject = [0u64; 2];
    let mut reject_any = 0u64;
    let mut err_sum = [KahanSum::new(), KahanSum::new()];
    let mut err_sq_sum = [KahanSum::new(), KahanSum::new()];
    for (rejected, p_hat) in &per_replicate {
        for i in 0..2 {
            if rejected[i] {
                reject[i] += 1;
            }
            let err = p_hat[i] - truth_control[i];
            err_sum[i].add(err);
            err_sq_sum[i].add(err * err);
        }
        if rejected[0] || rejected[1] {
            reject_any += 1;
        }
    }

    let n = f64::from(scenario.replicates);
    let rate = |count: u64| count as f64 / n;
    let reject_h1_rate = rate(reject[0]);
    let reject_h2_rate = rate(reject[1]);
    let reject_h12_rate = rate(reject_any);
    let bias = [err_sum[0].sum() / n, err_sum[1].sum() / n];
    let rmse = [
        (err_sq_sum[0].sum() / n).max(0.0).sqrt(),
        (err_sq_sum[1].sum() / n).max(0.0).sqrt(),
    ];
    Ok(ScenarioResult {
        scenario: scenario.clone(),
        mode,
        reject_h1_rate,
        reject_h1_mcse: mcse(reject_h1_rate, scenario.replicates),
        reject_h2_rate,
        reject_h2_mcse: mcse(reject_h2_rate, scenario.replicates),
        reject_h12_rate,
        reject_h12_mcse: mcse(reject_h12_rate, scenario.replicates),
        bias,
        rmse,
    })
}

/// Surrogate-cutoff and constant-cutoff results for one scenario,
/// replayed on identical simulated trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerComparison {
    pub surrogate: ScenarioResult,
    pub constant: ScenarioResult,
}

/// Runs each scenario under both cutoff arms with a shared seed, so the
/// two arms see the same simulated trials and differ only in their
/// critical values.
pub fn compare_power_preservation(
    design: &TrainedDesign,
    scenarios: &[Scenario],
    seed: u64,
) -> Result<Vec<PowerComparison>, DesignError> {
    let surrogate =
        run_operating_characteristics_in_mode(design, scenarios, DecisionMode::Surrogate, seed)?;
    let constant = run_operating_characteristics_in_mode(
        design,
        scenarios,
        DecisionMode::ConstantBaseline,
        seed,
    )?;
    Ok(surrogate
        .into_iter()
        .zip(constant)
        .map(|(surrogate, constant)| PowerComparison {
            surrogate,
            constant,
        })
        .collect())
}

/// A trained case-study design together with its simulated operating
/// characteristics.
#[derive(Debug)]
pub struct CaseStudyReport {
    pub design: TrainedDesign,
    pub results: Vec<ScenarioResult>,
}

/// Trains a design from the given configuration and evaluates it on the
/// cross of the configuration's baseline control scenarios with the
/// supplied effect grid.
pub fn run_case_study(
    cfg: &DesignConfig,
    effect_grid: &[[f64; 2]],
    replicates: u32,
    seed: u64,
) -> Result<CaseStudyReport, DesignError> {
    if effect_grid.is_empty() {
        return Err(DesignError::InvalidConfig(
            "case study needs at least one effect vector".to_string(),
        ));
    }
    let design = train_design(cfg)?;
    let mut scenarios = Vec::with_capacity(cfg.baseline_scenarios.len() * effect_grid.len());
    for (s, control) in cfg.baseline_scenarios.iter().enumerate() {
        for effects in effect_grid {
            scenarios.push(Scenario {
                label: Some(format!("S{}", s + 1)),
                control_rates: *control,
                effects: *effects,
                replicates,
            });
        }
    }
    let results = run_operating_characteristics(&design, &scenarios, seed)?;
    Ok(CaseStudyReport { design, results })
}

/// Everything needed to replay a simulation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    pub seed: u64,
    pub mode: DecisionMode,
    pub design_fingerprint: String,
    /// Content hash of the scenario file, when one was used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_digest: Option<String>,
    pub scenario_count: usize,
}

impl RunManifest {
    pub fn new(seed: u64, mode: DecisionMode, design: &TrainedDesign, count: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed,
            mode,
            design_fingerprint: design.fingerprint.clone(),
            scenario_digest: None,
            scenario_count: count,
        }
    }
}

#[derive(Serialize)]
struct ResultRow<'a> {
    label: &'a str,
    psi_c1: f64,
    psi_c2: f64,
    delta1: f64,
    delta2: f64,
    replicates: u32,
    mode: DecisionMode,
    reject_h1_rate: f64,
    reject_h1_mcse: f64,
    reject_h2_rate: f64,
    reject_h2_mcse: f64,
    reject_h12_rate: f64,
    reject_h12_mcse: f64,
    bias1: f64,
    bias2: f64,
    rmse1: f64,
    rmse2: f64,
}

const RESULTS_HEADER: &str = "label,psi_c1,psi_c2,delta1,delta2,replicates,mode,\
                              reject_h1_rate,reject_h1_mcse,reject_h2_rate,reject_h2_mcse,\
                              reject_h12_rate,reject_h12_mcse,bias1,bias2,rmse1,rmse2";

/// Renders results as CSV text (one row per scenario, fixed column
/// order); reruns with the same seed produce identical bytes.
pub fn results_csv_string(results: &[ScenarioResult]) -> Result<String, DesignError> {
    if results.is_empty() {
        return Ok(format!("{RESULTS_HEADER}\n"));
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in results {
        writer.serialize(ResultRow {
            label: r.scenario.label.as_deref().unwrap_or(""),
            psi_c1: r.scenario.control_rates[0],
            psi_c2: r.scenario.control_rates[1],
            delta1: r.scenario.effects[0],
            delta2: r.scenario.effects[1],
            replicates: r.scenario.replicates,
            mode: r.mode,
            reject_h1_rate: r.reject_h1_rate,
            reject_h1_mcse: r.reject_h1_mcse,
            reject_h2_rate: r.reject_h2_rate,
            reject_h2_mcse: r.reject_h2_mcse,
            reject_h12_rate: r.reject_h12_rate,
            reject_h12_mcse: r.reject_h12_mcse,
            bias1: r.bias[0],
            bias2: r.bias[1],
            rmse1: r.rmse[0],
            rmse2: r.rmse[1],
        })?;
    }
    let bytes = writer.into_inner().map_err(|e| {
        DesignError::InvalidConfig(format!("could not finalize results CSV: {e}"))
    })?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Writes the results CSV; an empty result list still gets a header.
pub fn write_results_csv(path: &Path, results: &[ScenarioResult]) -> Result<(), DesignError> {
    std::fs::write(path, results_csv_string(results)?)?;
    Ok(())
}

/// Writes the run manifest alongside the results.
pub fn write_run_manifest(path: &Path, manifest: &RunManifest) -> Result<(), DesignError> {
    let json = serde_json::to_string_pretty(manifest)?;
    std::fs::write(path, json)?;
    Ok(())
}
