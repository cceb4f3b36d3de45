//! End-to-end behavior of the five subcommands, through both the
//! library entry points and the compiled binary.
//!
//! A single small design is trained once and shared: its budgets sit at
//! the configured minimums so the full train-lock-apply path stays
//! exercisable in seconds.

use std::path::{Path, PathBuf};
use std::process::Command;

use histborrow_cli::{
    cmd_decide, cmd_inspect, cmd_simulate, cmd_train, cmd_validate, ScenarioFile, TrainFileConfig,
    TrainReport, EXIT_FINGERPRINT, EXIT_VALIDATION,
};
use histborrow_core::types::CurrentTrialObservation;
use histborrow_design::{Budgets, DecisionMode, SurrogateTrainingConfig};
use histborrow_mcmc::McmcConfig;
use once_cell::sync::Lazy;
use tempfile::TempDir;

/// A trained-and-locked design shared by every test in this file.
struct TestWorkspace {
    dir: TempDir,
    config_path: PathBuf,
    design_path: PathBuf,
    report: TrainReport,
}

fn write_json(path: &Path, value: &impl serde::Serialize) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

fn small_train_config() -> TrainFileConfig {
    TrainFileConfig {
        schema_version: 1,
        seed: 4_242,
        n_control: 150,
        n_treatment: 150,
        alpha: 0.05,
        promise_margins: None,
        history_file: "history.json".to_string(),
        control_ranges: vec![[0.2, 0.7], [0.1, 0.6]],
        effect_ranges: vec![[-0.1, 0.2], [-0.1, 0.2]],
        baseline_scenarios: vec![[0.4, 0.3]],
        budgets: Some(Budgets {
            training_examples: 500,
            null_grid_points: 50,
            critical_replicates: 10_000,
            oc_replicates: 1_000,
            cutoff_grid_step: 5e-4,
        }),
        surrogates: Some({
            let mut s = SurrogateTrainingConfig::desk_scale();
            s.cv_epochs = 120;
            s.final_epochs = 300;
            s
        }),
        mcmc: Some(McmcConfig {
            chains: 2,
            burn_in: 400,
            kept_draws_per_chain: 600,
            thinning: 1,
            rhat_threshold: 1.3,
            ..McmcConfig::with_seed(0)
        }),
    }
}

fn history_json() -> serde_json::Value {
    serde_json::json!({
        "schema_version": 1,
        "studies": [
            { "n": 100, "r": [33, 31] },
            { "n": 100, "r": [41, 28] },
            { "n": 200, "r": [78, 69] },
            { "n": 200, "r": [81, 68] },
            { "n": 300, "r": [115, 94] },
            { "n": 300, "r": [113, 97] }
        ]
    })
}

static WORKSPACE: Lazy<TestWorkspace> = Lazy::new(|| {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("design.json");
    write_json(&dir.path().join("history.json"), &history_json());
    write_json(&config_path, &small_train_config());

    let design_path = dir.path().join("design.lock.json");
    let report = cmd_train(&config_path, &design_path, None, false).unwrap();
    TestWorkspace {
        dir,
        config_path,
        design_path,
        report,
    }
});

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_histborrow"))
}

fn stderr_error_kind(output: &std::process::Output) -> String {
    let stderr = String::from_utf8_lossy(&output.stderr);
    let parsed: serde_json::Value =
        serde_json::from_str(stderr.trim()).expect("stderr is one JSON object");
    parsed["error"].as_str().unwrap().to_string()
}

#[test]
fn train_reports_losses_and_reruns_reproduce_the_fingerprint() {
    let ws = &*WORKSPACE;
    assert_eq!(ws.report.examples_used + ws.report.examples_excluded, 500);
    assert!(ws.report.f_s_train_mse.unwrap() > 0.0);
    assert!(ws.report.f_s_validation_mse.unwrap() > 0.0);
    assert!(ws.report.f_p_train_mse.unwrap() > 0.0);
    assert_eq!(ws.report.critical_audit.len(), 3);
    for audit in &ws.report.critical_audit {
        assert_eq!(audit.grid_points, 50);
        assert!(audit.mean_abs_gap <= audit.max_abs_gap);
    }
    let rendered = ws.report.render();
    assert!(rendered.contains("promise network mse"));
    assert!(rendered.contains("critical network h12"));

    // A second run from the same document and seed locks to the same
    // content hash.
    let again = ws.dir.path().join("design.again.json");
    let report = cmd_train(&ws.config_path, &again, None, false).unwrap();
    assert_eq!(report.fingerprint, ws.report.fingerprint);

    // A different seed produces a different design.
    let other = ws.dir.path().join("design.other.json");
    let report = cmd_train(&ws.config_path, &other, Some(4_243), false).unwrap();
    assert_ne!(report.fingerprint, ws.report.fingerprint);
}

#[test]
fn train_refuses_to_overwrite_a_locked_design() {
    let ws = &*WORKSPACE;
    let before = std::fs::read(&ws.design_path).unwrap();
    let err = cmd_train(&ws.config_path, &ws.design_path, None, false).unwrap_err();
    assert_eq!(err.exit_code, EXIT_VALIDATION);
    assert_eq!(std::fs::read(&ws.design_path).unwrap(), before);
}

#[test]
fn decide_echoes_the_fingerprint_and_holds_the_threshold_invariant() {
    let ws = &*WORKSPACE;
    let obs_path = ws.dir.path().join("observation.json");
    write_json(
        &obs_path,
        &CurrentTrialObservation::new(150, 150, vec![60, 45], vec![75, 60]),
    );

    let report = cmd_decide(&ws.design_path, &obs_path, DecisionMode::Surrogate).unwrap();
    assert_eq!(report.design_fingerprint, ws.report.fingerprint);
    assert!(report.outcome.invariants_hold());
    assert_eq!(
        report.outcome.c_tilde[0],
        report.outcome.c_hat[0].max(report.outcome.c_hat[2])
    );

    // The report serializes flat: outcome fields live at the top level
    // beside the provenance fields.
    let json = serde_json::to_value(&report).unwrap();
    assert!(json["s_hat"].is_array());
    assert!(json["design_fingerprint"].is_string());
    assert!(json["decide_millis"].is_number());

    let constant = cmd_decide(&ws.design_path, &obs_path, DecisionMode::ConstantBaseline).unwrap();
    assert_eq!(constant.outcome.c_hat.to_vec(), vec![ws.report.c_const; 3]);
}

#[test]
fn simulate_writes_csv_and_manifest_with_input_digest() {
    let ws = &*WORKSPACE;
    let scenarios_path = ws.dir.path().join("scenarios.json");
    write_json(
        &scenarios_path,
        &serde_json::json!({
            "schema_version": 1,
            "scenarios": [
                { "label": "null", "control_rates": [0.4, 0.3], "effects": [0.0, 0.0], "replicates": 1000 },
                { "label": "alt", "control_rates": [0.4, 0.3], "effects": [0.1, 0.1], "replicates": 1000 }
            ]
        }),
    );
    let out = ws.dir.path().join("results.csv");
    let report = cmd_simulate(
        &ws.design_path,
        &scenarios_path,
        &out,
        None,
        Some(7),
        DecisionMode::Surrogate,
    )
    .unwrap();
    assert_eq!(report.scenario_count, 2);
    assert_eq!(report.seed, 7);

    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("label,psi_c1,psi_c2,"));
    assert_eq!(lines.count(), 2);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ws.dir.path().join("results.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["design_fingerprint"], ws.report.fingerprint.as_str());
    assert_eq!(manifest["scenario_count"], 2);
    let digest = manifest["scenario_digest"].as_str().unwrap();
    assert_eq!(
        digest,
        histborrow_cli::sha256_hex(&std::fs::read(&scenarios_path).unwrap())
    );
}

#[test]
fn simulate_with_no_scenarios_writes_a_header_only_csv() {
    let ws = &*WORKSPACE;
    let scenarios_path = ws.dir.path().join("empty_scenarios.json");
    write_json(
        &scenarios_path,
        &serde_json::json!({ "schema_version": 1, "scenarios": [] }),
    );
    let out = ws.dir.path().join("empty_results.csv");
    let report = cmd_simulate(
        &ws.design_path,
        &scenarios_path,
        &out,
        None,
        None,
        DecisionMode::Surrogate,
    )
    .unwrap();
    assert_eq!(report.scenario_count, 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.ends_with('\n'));
}

#[test]
fn shipped_scenario_list_produces_one_row_per_scenario() {
    let ws = &*WORKSPACE;
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/simulation/scenarios.json");
    let (file, _) = ScenarioFile::read(&shipped).unwrap();
    assert_eq!(file.scenarios.len(), 11);

    // Trim the replicate counts so the replay stays quick; the row
    // structure is what this test pins down.
    let mut trimmed = file.clone();
    for scenario in &mut trimmed.scenarios {
        scenario.replicates = 1_000;
    }
    let scenarios_path = ws.dir.path().join("shipped_trimmed.json");
    write_json(&scenarios_path, &trimmed);

    let out = ws.dir.path().join("shipped_results.csv");
    cmd_simulate(
        &ws.design_path,
        &scenarios_path,
        &out,
        None,
        Some(11),
        DecisionMode::Surrogate,
    )
    .unwrap();
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 12);
    assert_eq!(csv.matches("global-null").count(), 3);
    assert_eq!(csv.matches("alternative").count(), 6);
}

#[test]
fn validate_reports_ordered_divergence_quantiles() {
    let ws = &*WORKSPACE;
    let report = cmd_validate(&ws.design_path, 3).unwrap();
    assert_eq!(report.probe_points, 9);
    let q = &report.divergence;
    assert!(q.min <= q.p25 && q.p25 <= q.median && q.median <= q.p75 && q.p75 <= q.max);
    assert!(q.min >= 0.0 && q.max <= 1.0);
    assert!(report.median_speedup > 1.0);
}

#[test]
fn inspect_summarizes_the_locked_design() {
    let ws = &*WORKSPACE;
    let report = cmd_inspect(&ws.design_path).unwrap();
    assert_eq!(report.fingerprint, ws.report.fingerprint);
    assert_eq!(report.n_control, 150);
    assert_eq!(report.training_examples, 500);
    assert!(report.network_shapes.f_s.starts_with("4-"));
    assert!(report.network_shapes.f_s.ends_with("-2"));
    assert!(report.network_shapes.f12.starts_with("2-"));
    assert!(report.network_shapes.f12.ends_with("-1"));
    assert_eq!(report.f_s_cv_scores.len(), 2);
}

#[test]
fn binary_maps_failures_to_documented_exit_codes() {
    let ws = &*WORKSPACE;

    // Tampering with a locked design breaks its content hash.
    let tampered_path = ws.dir.path().join("tampered.json");
    let text = std::fs::read_to_string(&ws.design_path).unwrap();
    let needle = format!("\"c_const\": {}", ws.report.c_const);
    assert!(text.contains(&needle), "design file prints c_const plainly");
    std::fs::write(&tampered_path, text.replacen(&needle, "\"c_const\": 0.42", 1)).unwrap();

    let obs_path = ws.dir.path().join("bin_observation.json");
    write_json(
        &obs_path,
        &CurrentTrialObservation::new(150, 150, vec![60, 45], vec![75, 60]),
    );
    let output = bin()
        .args(["decide", "--design"])
        .arg(&tampered_path)
        .arg("--observation")
        .arg(&obs_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(EXIT_FINGERPRINT));
    assert_eq!(stderr_error_kind(&output), "fingerprint_mismatch");

    // More responders than subjects fails validation.
    let bad_obs = ws.dir.path().join("bad_observation.json");
    write_json(
        &bad_obs,
        &CurrentTrialObservation::new(150, 150, vec![151, 45], vec![75, 60]),
    );
    let output = bin()
        .args(["decide", "--design"])
        .arg(&ws.design_path)
        .arg("--observation")
        .arg(&bad_obs)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(EXIT_VALIDATION));
    assert_eq!(stderr_error_kind(&output), "validation");

    // Sample sizes that differ from the design's are a design mismatch.
    let mismatched = ws.dir.path().join("mismatched_observation.json");
    write_json(
        &mismatched,
        &CurrentTrialObservation::new(100, 100, vec![40, 30], vec![50, 40]),
    );
    let output = bin()
        .args(["decide", "--design"])
        .arg(&ws.design_path)
        .arg("--observation")
        .arg(&mismatched)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(histborrow_cli::EXIT_DESIGN_MISMATCH));
    assert_eq!(stderr_error_kind(&output), "design_mismatch");

    // A config naming a history file that does not exist fails before
    // any training starts.
    let loose_config = ws.dir.path().join("loose.json");
    let mut cfg = small_train_config();
    cfg.history_file = "missing_history.json".to_string();
    write_json(&loose_config, &cfg);
    let output = bin()
        .args(["train", "--config"])
        .arg(&loose_config)
        .arg("--out")
        .arg(ws.dir.path().join("never_written.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(EXIT_VALIDATION));
    assert_eq!(stderr_error_kind(&output), "validation");
    assert!(!ws.dir.path().join("never_written.json").exists());
}

#[test]
fn binary_decide_succeeds_and_prints_the_outcome() {
    let ws = &*WORKSPACE;
    let obs_path = ws.dir.path().join("ok_observation.json");
    write_json(
        &obs_path,
        &CurrentTrialObservation::new(150, 150, vec![60, 45], vec![75, 60]),
    );
    let output = bin()
        .args(["decide", "--design"])
        .arg(&ws.design_path)
        .arg("--observation")
        .arg(&obs_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let parsed: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("stdout is the decision JSON");
    assert_eq!(parsed["mode"], "surrogate");
    assert_eq!(parsed["design_fingerprint"], ws.report.fingerprint.as_str());
    assert_eq!(parsed["rejected"].as_array().unwrap().len(), 2);
}

#[test]
fn thread_count_does_not_change_simulation_results() {
    let ws = &*WORKSPACE;
    let scenarios_path = ws.dir.path().join("threads_scenarios.json");
    write_json(
        &scenarios_path,
        &serde_json::json!({
            "schema_version": 1,
            "scenarios": [
                { "control_rates": [0.35, 0.25], "effects": [0.05, 0.05], "replicates": 2000 }
            ]
        }),
    );
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = ws
            .dir
            .path()
            .join(format!("threads_{threads}_results.csv"));
        let status = bin()
            .args(["simulate", "--threads", threads, "--design"])
            .arg(&ws.design_path)
            .arg("--scenarios")
            .arg(&scenarios_path)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "99"])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
