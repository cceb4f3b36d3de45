//! Critical-value calibration: empirical upper-α quantiles of the
//! surrogate promise probabilities under simulated null configurations,
//! the networks that interpolate them, and the constant-cutoff baseline.

use std::path::Path;

use histborrow_core::streams::substream;
use histborrow_core::types::{Interval, ParameterSpaces};
use histborrow_mlp::MlpModel;
use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SurrogateTrainingConfig;
use crate::error::DesignError;
use crate::scenario::{draw_null_grid, NullHypothesisKind};
use crate::surrogate::Surrogate;
use crate::training::{select_and_fit, simulate_counts};

/// Upper-α empirical quantile with the conservative order-statistic
/// convention: the value at 1-based index ceil((1−α)(n+1)), clamped to
/// n. Guarantees at most an α share of the sample exceeds the result.
pub fn upper_alpha_order_statistic(values: &mut [f64], alpha: f64) -> f64 {
    assert!(!values.is_empty(), "empty sample");
    assert!((0.0..1.0).contains(&alpha) && alpha > 0.0, "alpha in (0,1)");
    let n = values.len();
    let rank = ((1.0 - alpha) * (n as f64 + 1.0)).ceil() as usize;
    let rank = rank.clamp(1, n);
    let (_, kth, _) = values.select_nth_unstable_by(rank - 1, |a, b| {
        a.partial_cmp(b).expect("finite promise values")
    });
    *kth
}

/// Simulates `b_prime` current trials under the null configuration the
/// features describe, scores each with the promise surrogate, and
/// returns the upper-α quantile of the family's test statistic: the
/// affected endpoint's promise probability for a single null, and the
/// maximum over endpoints for the global null (whose exceedance
/// probability is exactly the probability of rejecting any endpoint).
#[allow(clippy::too_many_arguments)]
pub fn empirical_critical_value(
    kind: NullHypothesisKind,
    features: &[f64],
    f_s: &dyn Surrogate,
    n_control: u32,
    n_treatment: u32,
    b_prime: usize,
    alpha: f64,
    seed: u64,
) -> Result<f64, DesignError> {
    if b_prime < 10_000 {
        return Err(DesignError::InvalidConfig(
            "critical-value replicates must be at least 10,000".into(),
        ));
    }
    assert_eq!(features.len(), kind.feature_dim(), "feature dimension");
    let (control, treatment) = kind.generating_rates(features);
    for rate in control.iter().chain(treatment.iter()) {
        if !(0.0 < *rate && *rate < 1.0) {
            return Err(DesignError::InvalidRange(format!(
                "null configuration rate {rate} leaves (0,1)"
            )));
        }
    }

    let mut rng = substream(seed, "design/critical-sim", &[kind.index() as u64]);
    let mut sim_features = Array2::zeros((b_prime, 4));
    for mut row in sim_features.rows_mut() {
        let obs = simulate_counts(n_control, n_treatment, &control, &treatment, &mut rng);
        row[0] = f64::from(obs.r_control[0]) / f64::from(n_control);
        row[1] = f64::from(obs.r_control[1]) / f64::from(n_control);
        row[2] = f64::from(obs.r_treatment[0]) / f64::from(n_treatment);
        row[3] = f64::from(obs.r_treatment[1]) / f64::from(n_treatment);
    }
    let s_hat = f_s.eval_batch(sim_features.view())?;
    assert_eq!(s_hat.ncols(), 2, "promise surrogate must emit two outputs");

    let mut statistic: Vec<f64> = match kind {
        NullHypothesisKind::H1 => s_hat.column(0).to_vec(),
        NullHypothesisKind::H2 => s_hat.column(1).to_vec(),
        NullHypothesisKind::H12 => s_hat
            .rows()
            .into_iter()
            .map(|r| r[0].max(r[1]))
            .collect(),
    };
    if statistic.iter().any(|v| !v.is_finite()) {
        return Err(DesignError::InvalidRange(
            "non-finite promise values in calibration".into(),
        ));
    }
    Ok(upper_alpha_order_statistic(&mut statistic, alpha))
}

/// One calibrated grid point retained for audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridLabel {
    pub features: Vec<f64>,
    pub critical_value: f64,
}

/// The three critical-value networks with their training grids,
/// feature boxes for clamping, and cross-validation scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalSurrogates {
    pub f1: MlpModel,
    pub f2: MlpModel,
    pub f12: MlpModel,
    /// Per-family feature box, indexed as the families (single null 1,
    /// single null 2, global null).
    pub feature_boxes: [Vec<Interval>; 3],
    /// Labeled grids per family, same indexing.
    pub audit: [Vec<GridLabel>; 3],
    /// Cross-validation scores per family, candidate order.
    pub cv_scores: [Vec<f64>; 3],
}

impl CriticalSurrogates {
    pub fn network(&self, kind: NullHypothesisKind) -> &MlpModel {
        match kind {
            NullHypothesisKind::H1 => &self.f1,
            NullHypothesisKind::H2 => &self.f2,
            NullHypothesisKind::H12 => &self.f12,
        }
    }
}

/// Labels a null grid per hypothesis family by empirical critical
/// values and fits one interpolating network per family.
#[allow(clippy::too_many_arguments)]
pub fn fit_critical_networks(
    f_s: &dyn Surrogate,
    spaces: &ParameterSpaces,
    n_control: u32,
    n_treatment: u32,
    grid_points: usize,
    b_prime: usize,
    alpha: f64,
    cfg: &SurrogateTrainingConfig,
    seed: u64,
) -> Result<CriticalSurrogates, DesignError> {
    let mut networks: Vec<MlpModel> = Vec::with_capacity(3);
    let mut audit: Vec<Vec<GridLabel>> = Vec::with_capacity(3);
    let mut cv_scores: Vec<Vec<f64>> = Vec::with_capacity(3);
    let mut boxes: Vec<Vec<Interval>> = Vec::with_capacity(3);

    for kind in NullHypothesisKind::ALL {
        let grid = draw_null_grid(kind, spaces, grid_points, seed)?;
        let labels: Vec<f64> = grid
            .par_iter()
            .enumerate()
            .map(|(i, point)| {
                let point_seed: u64 =
                    substream(seed, "design/critical-label", &[kind.index() as u64, i as u64])
                        .gen();
                empirical_critical_value(
                    kind,
                    point,
                    f_s,
                    n_control,
                    n_treatment,
                    b_prime,
                    alpha,
                    point_seed,
                )
            })
            .collect::<Result<_, _>>()?;

        let dim = kind.feature_dim();
        let inputs = Array2::from_shape_fn((grid.len(), dim), |(i, j)| grid[i][j]);
        let targets = Array2::from_shape_fn((grid.len(), 1), |(i, _)| labels[i]);
        let label_tag = match kind {
            NullHypothesisKind::H1 => "design/fit-crit-h1",
            NullHypothesisKind::H2 => "design/fit-crit-h2",
            NullHypothesisKind::H12 => "design/fit-crit-h12",
        };
        let (model, scores) = select_and_fit(inputs, targets, cfg, seed, label_tag)?;
        networks.push(model);
        cv_scores.push(scores);
        boxes.push(kind.feature_box(spaces));
        audit.push(
            grid.into_iter()
                .zip(labels)
                .map(|(features, critical_value)| GridLabel {
                    features,
                    critical_value,
                })
                .collect(),
        );
    }

    let [f1, f2, f12]: [MlpModel; 3] = networks.try_into().expect("three networks");
    Ok(CriticalSurrogates {
        f1,
        f2,
        f12,
        feature_boxes: boxes.try_into().expect("three boxes"),
        audit: audit.try_into().expect("three audits"),
        cv_scores: cv_scores.try_into().expect("three score lists"),
    })
}

/// The single cutoff a constant-threshold design would use: the largest
/// per-scenario empirical global-null critical value, rounded up to the
/// cutoff grid. Returns the cutoff and the per-scenario values.
#[allow(clippy::too_many_arguments)]
pub fn constant_cutoff_baseline(
    f_s: &dyn Surrogate,
    scenarios: &[[f64; 2]],
    n_control: u32,
    n_treatment: u32,
    b_prime: usize,
    alpha: f64,
    cutoff_grid_step: f64,
    seed: u64,
) -> Result<(f64, Vec<f64>), DesignError> {
    if scenarios.is_empty() {
        return Err(DesignError::InvalidConfig(
            "baseline scenario list must not be empty".into(),
        ));
    }
    let mut per_scenario = Vec::with_capacity(scenarios.len());
    for (s, pair) in scenarios.iter().enumerate() {
        let scenario_seed: u64 = substream(seed, "design/baseline", &[s as u64]).gen();
        per_scenario.push(empirical_critical_value(
            NullHypothesisKind::H12,
            pair,
            f_s,
            n_control,
            n_treatment,
            b_prime,
            alpha,
            scenario_seed,
        )?);
    }
    let binding = per_scenario.iter().cloned().fold(f64::MIN, f64::max);
    let c_const = (binding / cutoff_grid_step).ceil() * cutoff_grid_step;
    if !(0.0 < c_const && c_const < 1.0) {
        return Err(DesignError::GridExhausted);
    }
    Ok((c_const, per_scenario))
}

/// Writes the calibration grids with surrogate predictions alongside
/// the empirical labels.
pub fn write_calibration_audit(
    path: &Path,
    crit: &CriticalSurrogates,
) -> Result<(), DesignError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["kind", "f1", "f2", "f3", "empirical_c", "surrogate_c"])?;
    for kind in NullHypothesisKind::ALL {
        let network = crit.network(kind);
        for label in &crit.audit[kind.index()] {
            let fitted = network.eval_one(&label.features)?[0];
            let mut row = vec![kind.label().to_string()];
            for j in 0..3 {
                row.push(
                    label
                        .features
                        .get(j)
                        .map(|v| format!("{v:.17}"))
                        .unwrap_or_default(),
                );
            }
            row.push(format!("{:.17}", label.critical_value));
            row.push(format!("{fitted:.17}"));
            writer.write_record(&row)?;
        }
    }
    writer.flush()?;
    Ok(())
}
