//! The five subcommand implementations. Each returns a serializable
//! report so both the binary and integration tests can inspect results;
//! the binary renders reports to standard output.

use std::path::{Path, PathBuf};
use std::time::Instant;

use histborrow_core::types::CurrentTrialObservation;
use histborrow_design::{
    run_operating_characteristics_in_mode, surrogate_vs_mcmc_report, train_design_with_artifacts,
    write_results_csv, write_run_manifest, DecisionMode, DecisionOutcome, NullHypothesisKind,
    RunManifest, Surrogate, TrainedDesign,
};
use serde::Serialize;

use crate::config_file::{ScenarioFile, TrainFileConfig};
use crate::error::{from_design_error, CmdError, Stage};

/// Loads a design file, mapping failures to the documented exit codes.
fn load_design(path: &Path) -> Result<TrainedDesign, CmdError> {
    TrainedDesign::load(path).map_err(|e| from_design_error(e, Stage::ReadingInputs))
}

/// Reads an observation JSON document.
fn read_observation(path: &Path) -> Result<CurrentTrialObservation, CmdError> {
    let bytes = std::fs::read(path).map_err(|e| {
        CmdError::validation(format!("cannot read observation {}: {e}", path.display()))
    })?;
    serde_json::from_slice(&bytes).map_err(|e| {
        CmdError::validation(format!("cannot parse observation {}: {e}", path.display()))
    })
}

/// Mean and maximum gap between a fitted critical network and its
/// empirical training labels, per hypothesis family.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationAuditSummary {
    pub kind: &'static str,
    pub grid_points: usize,
    pub mean_abs_gap: f64,
    pub max_abs_gap: f64,
}

/// Everything `train` reports after writing the design file.
#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub out_path: String,
    pub fingerprint: String,
    pub examples_used: usize,
    pub examples_excluded: usize,
    pub f_s_train_mse: Option<f64>,
    pub f_s_validation_mse: Option<f64>,
    pub f_p_train_mse: Option<f64>,
    pub f_p_validation_mse: Option<f64>,
    pub critical_audit: Vec<CalibrationAuditSummary>,
    pub c_const: f64,
    pub baseline_critical_values: Vec<f64>,
    pub train_seconds: f64,
}

impl TrainReport {
    /// Human-readable summary for standard output.
    pub fn render(&self) -> String {
        let mse = |v: Option<f64>| match v {
            Some(x) => format!("{x:.6}"),
            None => "n/a".to_string(),
        };
        let mut out = String::new();
        out.push_str(&format!("design written to {}\n", self.out_path));
        out.push_str(&format!("fingerprint: {}\n", self.fingerprint));
        out.push_str(&format!(
            "training examples: {} used, {} excluded\n",
            self.examples_used, self.examples_excluded
        ));
        out.push_str(&format!(
            "promise network mse: train {}, validation {}\n",
            mse(self.f_s_train_mse),
            mse(self.f_s_validation_mse)
        ));
        out.push_str(&format!(
            "posterior-mean network mse: train {}, validation {}\n",
            mse(self.f_p_train_mse),
            mse(self.f_p_validation_mse)
        ));
        for audit in &self.critical_audit {
            out.push_str(&format!(
                "critical network {}: {} grid points, |fit - empirical| mean {:.5}, max {:.5}\n",
                audit.kind, audit.grid_points, audit.mean_abs_gap, audit.max_abs_gap
            ));
        }
        out.push_str(&format!(
            "constant cutoff {:.4} (per-baseline {})\n",
            self.c_const,
            self.baseline_critical_values
                .iter()
                .map(|c| format!("{c:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        ));
        out.push_str(&format!("trained in {:.1} s\n", self.train_seconds));
        out
    }
}

/// How far each critical network strays from its empirical grid labels.
pub fn summarize_calibration(design: &TrainedDesign) -> Result<Vec<CalibrationAuditSummary>, CmdError> {
    let mut summaries = Vec::with_capacity(3);
    for kind in NullHypothesisKind::ALL {
        let labels = &design.critical.audit[kind.index()];
        let network = design.critical.network(kind);
        let mut sum = 0.0;
        let mut max = 0.0f64;
        for label in labels {
            let fitted = network
                .eval_one(&label.features)
                .map_err(|e| from_design_error(e, Stage::Running))?[0];
            let gap = (fitted - label.critical_value).abs();
            sum += gap;
            max = max.max(gap);
        }
        summaries.push(CalibrationAuditSummary {
            kind: kind.label(),
            grid_points: labels.len(),
            mean_abs_gap: if labels.is_empty() {
                0.0
            } else {
                sum / labels.len() as f64
            },
            max_abs_gap: max,
        });
    }
    Ok(summaries)
}

/// Trains a design from a configuration document and locks it to disk.
///
/// Refuses to overwrite an existing file: designs are immutable once
/// written.
pub fn cmd_train(
    config_path: &Path,
    out_path: &Path,
    seed_override: Option<u64>,
    full_scale: bool,
) -> Result<TrainReport, CmdError> {
    let file = TrainFileConfig::read(config_path)?;
    let cfg = file.to_design_config(config_path, seed_override, full_scale)?;
    if out_path.exists() {
        return Err(CmdError::validation(format!(
            "{} already exists; designs are locked once written",
            out_path.display()
        )));
    }
    let start = Instant::now();
    let (design, examples) =
        train_design_with_artifacts(&cfg).map_err(|e| from_design_error(e, Stage::Running))?;
    design
        .save(out_path)
        .map_err(|e| from_design_error(e, Stage::Running))?;
    let train_seconds = start.elapsed().as_secs_f64();

    let summary = |m: &histborrow_mlp::MlpModel| {
        (
            m.training_summary.map(|s| s.train_mse),
            m.training_summary.and_then(|s| s.validation_mse),
        )
    };
    let (f_s_train_mse, f_s_validation_mse) = summary(&design.f_s);
    let (f_p_train_mse, f_p_validation_mse) = summary(&design.f_p);
    Ok(TrainReport {
        out_path: out_path.display().to_string(),
        fingerprint: design.fingerprint.clone(),
        examples_used: examples.len(),
        examples_excluded: design.provenance.excluded_examples,
        f_s_train_mse,
        f_s_validation_mse,
        f_p_train_mse,
        f_p_validation_mse,
        critical_audit: summarize_calibration(&design)?,
        c_const: design.c_const,
        baseline_critical_values: design.provenance.baseline_critical_values.clone(),
        train_seconds,
    })
}

/// The decision report: the outcome plus provenance and timing.
#[derive(Debug, Clone, Serialize)]
pub struct DecideReport {
    #[serde(flatten)]
    pub outcome: DecisionOutcome,
    pub design_fingerprint: String,
    /// Wall-clock of the analysis itself, after the design was loaded.
    pub decide_millis: f64,
}

/// Applies a locked design to one observed trial.
pub fn cmd_decide(
    design_path: &Path,
    observation_path: &Path,
    mode: DecisionMode,
) -> Result<DecideReport, CmdError> {
    let design = load_design(design_path)?;
    let observation = read_observation(observation_path)?;
    let start = Instant::now();
    let outcome = design
        .decide_in_mode(&observation, mode)
        .map_err(|e| from_design_error(e, Stage::Running))?;
    let decide_millis = start.elapsed().as_secs_f64() * 1e3;
    Ok(DecideReport {
        outcome,
        design_fingerprint: design.fingerprint.clone(),
        decide_millis,
    })
}

/// What `simulate` reports after writing its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub results_path: String,
    pub manifest_path: String,
    pub scenario_count: usize,
    pub seed: u64,
    pub mode: DecisionMode,
}

impl SimulateReport {
    pub fn render(&self) -> String {
        format!(
            "simulated {} scenario(s) with seed {}\nresults: {}\nmanifest: {}\n",
            self.scenario_count, self.seed, self.results_path, self.manifest_path
        )
    }
}

/// Replays scenarios through a locked design and writes the results CSV
/// plus a run manifest.
pub fn cmd_simulate(
    design_path: &Path,
    scenario_path: &Path,
    out_path: &Path,
    manifest_path: Option<&Path>,
    seed_override: Option<u64>,
    mode: DecisionMode,
) -> Result<SimulateReport, CmdError> {
    let design = load_design(design_path)?;
    let (file, digest) = ScenarioFile::read(scenario_path)?;
    if out_path == design_path {
        return Err(CmdError::validation(
            "results path equals the design path; designs are never rewritten".to_string(),
        ));
    }
    let seed = seed_override.unwrap_or(design.provenance.seed);
    // An empty list is a legitimate dry run: it produces the header-only
    // CSV and a manifest, without entering the harness.
    let results = if file.scenarios.is_empty() {
        Vec::new()
    } else {
        run_operating_characteristics_in_mode(&design, &file.scenarios, mode, seed)
            .map_err(|e| from_design_error(e, Stage::Running))?
    };
    write_results_csv(out_path, &results).map_err(|e| from_design_error(e, Stage::Running))?;

    let manifest_path = manifest_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_manifest_path(out_path));
    let mut manifest = RunManifest::new(seed, mode, &design, file.scenarios.len());
    manifest.scenario_digest = Some(digest);
    write_run_manifest(&manifest_path, &manifest)
        .map_err(|e| from_design_error(e, Stage::Running))?;
    Ok(SimulateReport {
        results_path: out_path.display().to_string(),
        manifest_path: manifest_path.display().to_string(),
        scenario_count: file.scenarios.len(),
        seed,
        mode,
    })
}

/// `results.csv` gets `results.manifest.json` next to it.
fn default_manifest_path(out_path: &Path) -> PathBuf {
    out_path.with_extension("manifest.json")
}

/// Five-number summary of the surrogate-versus-reference gaps.
#[derive(Debug, Clone, Serialize)]
pub struct GapQuantiles {
    pub min: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub max: f64,
}

/// What `validate` reports after probing the design.
#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub design_fingerprint: String,
    /// Probe levels per control endpoint; the grid is their cross.
    pub grid_levels: usize,
    pub probe_points: usize,
    /// Quantiles of |surrogate - reference| promise probability over
    /// all probe points and endpoints.
    pub divergence: GapQuantiles,
    pub median_divergence_per_endpoint: [f64; 2],
    /// Median reference-over-surrogate wall-clock ratio.
    pub median_speedup: f64,
}

impl ValidateReport {
    pub fn render(&self) -> String {
        format!(
            "probed {} points ({} levels per endpoint)\n\
             |surrogate - reference| quantiles: min {:.4}, p25 {:.4}, median {:.4}, p75 {:.4}, max {:.4}\n\
             per-endpoint median gap: {:.4}, {:.4}\n\
             median speedup over fresh sampling: {:.0}x\n",
            self.probe_points,
            self.grid_levels,
            self.divergence.min,
            self.divergence.p25,
            self.divergence.median,
            self.divergence.p75,
            self.divergence.max,
            self.median_divergence_per_endpoint[0],
            self.median_divergence_per_endpoint[1],
            self.median_speedup
        )
    }
}

/// Linear-interpolation quantile of an unsorted sample.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// The probe observations: expected counts at a uniform grid of
/// control-rate levels, both arms at the same rate.
fn probe_grid(design: &TrainedDesign, levels: usize) -> Vec<CurrentTrialObservation> {
    let level = |interval: &histborrow_core::types::Interval, k: usize| {
        interval.lo + interval.width() * (k as f64 + 0.5) / levels as f64
    };
    let mut probes = Vec::with_capacity(levels * levels);
    for i in 0..levels {
        for j in 0..levels {
            let rates = [
                level(&design.spaces.control_space[0], i),
                level(&design.spaces.control_space[1], j),
            ];
            let expected = |n: u32| {
                vec![
                    (rates[0] * f64::from(n)).round() as u32,
                    (rates[1] * f64::from(n)).round() as u32,
                ]
            };
            probes.push(CurrentTrialObservation::new(
                design.n_control,
                design.n_treatment,
                expected(design.n_control),
                expected(design.n_treatment),
            ));
        }
    }
    probes
}

/// Audits a locked design against the reference analysis path on a grid
/// of probe observations.
pub fn cmd_validate(design_path: &Path, grid_levels: usize) -> Result<ValidateReport, CmdError> {
    let design = load_design(design_path)?;
    let probes = probe_grid(&design, grid_levels);
    let mut gaps = Vec::with_capacity(2 * probes.len());
    let mut per_endpoint: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut speedups = Vec::with_capacity(probes.len());
    for probe in &probes {
        let report =
            surrogate_vs_mcmc_report(&design, probe).map_err(|e| from_design_error(e, Stage::Running))?;
        for endpoint in 0..2 {
            gaps.push(report.divergence[endpoint]);
            per_endpoint[endpoint].push(report.divergence[endpoint]);
        }
        speedups.push(report.speedup);
    }
    gaps.sort_by(|a, b| a.total_cmp(b));
    per_endpoint[0].sort_by(|a, b| a.total_cmp(b));
    per_endpoint[1].sort_by(|a, b| a.total_cmp(b));
    speedups.sort_by(|a, b| a.total_cmp(b));
    Ok(ValidateReport {
        design_fingerprint: design.fingerprint.clone(),
        grid_levels,
        probe_points: probes.len(),
        divergence: GapQuantiles {
            min: quantile(&gaps, 0.0),
            p25: quantile(&gaps, 0.25),
            median: quantile(&gaps, 0.5),
            p75: quantile(&gaps, 0.75),
            max: quantile(&gaps, 1.0),
        },
        median_divergence_per_endpoint: [
            quantile(&per_endpoint[0], 0.5),
            quantile(&per_endpoint[1], 0.5),
        ],
        median_speedup: quantile(&speedups, 0.5),
    })
}

/// A network's shape as a compact string, e.g. `4-60-60-2`.
fn shape_of(model: &histborrow_mlp::MlpModel) -> String {
    let mut dims = vec![model.spec.input_dim];
    dims.extend_from_slice(&model.spec.hidden_widths);
    dims.push(model.spec.output_dim);
    dims.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join("-")
}

/// What `inspect` prints about a locked design.
#[derive(Debug, Clone, Serialize)]
pub struct InspectReport {
    pub fingerprint: String,
    pub created_at_unix: u64,
    pub seed: u64,
    pub n_control: u32,
    pub n_treatment: u32,
    pub alpha: f64,
    pub promise_margins: Vec<f64>,
    pub historical_studies: usize,
    pub historical_subjects: u64,
    pub network_shapes: NetworkShapes,
    pub f_s_cv_scores: Vec<f64>,
    pub f_p_cv_scores: Vec<f64>,
    pub critical_cv_scores: [Vec<f64>; 3],
    pub c_const: f64,
    pub baseline_critical_values: Vec<f64>,
    pub examples_excluded: usize,
    pub training_examples: usize,
    pub null_grid_points: usize,
    pub critical_replicates: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetworkShapes {
    pub f_s: String,
    pub f_p: String,
    pub f1: String,
    pub f2: String,
    pub f12: String,
}

/// Loads a design (verifying its fingerprint) and summarizes it.
pub fn cmd_inspect(design_path: &Path) -> Result<InspectReport, CmdError> {
    let design = load_design(design_path)?;
    Ok(InspectReport {
        fingerprint: design.fingerprint.clone(),
        created_at_unix: design.provenance.created_at_unix,
        seed: design.provenance.seed,
        n_control: design.n_control,
        n_treatment: design.n_treatment,
        alpha: design.endpoints.alpha,
        promise_margins: design.endpoints.promise_margins.clone(),
        historical_studies: design.history.studies.len(),
        historical_subjects: design.history.studies.iter().map(|s| u64::from(s.n)).sum(),
        network_shapes: NetworkShapes {
            f_s: shape_of(&design.f_s),
            f_p: shape_of(&design.f_p),
            f1: shape_of(&design.critical.f1),
            f2: shape_of(&design.critical.f2),
            f12: shape_of(&design.critical.f12),
        },
        f_s_cv_scores: design.provenance.f_s_cv_scores.clone(),
        f_p_cv_scores: design.provenance.f_p_cv_scores.clone(),
        critical_cv_scores: design.critical.cv_scores.clone(),
        c_const: design.c_const,
        baseline_critical_values: design.provenance.baseline_critical_values.clone(),
        examples_excluded: design.provenance.excluded_examples,
        training_examples: design.provenance.budgets.training_examples,
        null_grid_points: design.provenance.budgets.null_grid_points,
        critical_replicates: design.provenance.budgets.critical_replicates,
    })
}
