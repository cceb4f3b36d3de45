//! Domain types for a two-arm trial with binary endpoints and historical
//! control data, plus structural validation.
//!
//! Counts are kept as exact integers everywhere; response rates are always
//! derived as `r / n` at the point of use. Every type serializes to JSON
//! with a `schema_version` field and rejects unknown fields.

use serde::{Deserialize, Serialize};

use crate::linalg::sym_eigenvalues;

/// Current schema version written to and required from every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

fn schema_version_default() -> u32 {
    SCHEMA_VERSION
}

/// A closed real interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Dense symmetric matrix with explicit dimension metadata (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetricMatrix {
    pub dim: usize,
    /// Row-major entries, `dim * dim` of them.
    pub data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut m = Self::identity(dim);
        for i in 0..dim {
            m.data[i * dim + i] = scale;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Shape and symmetry check; the numeric tolerance is relative to the
    /// largest absolute entry.
    pub fn is_symmetric(&self) -> bool {
        if self.data.len() != self.dim * self.dim {
            return false;
        }
        let scale = self
            .data
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
            .max(1.0);
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if (self.get(i, j) - self.get(j, i)).abs() > 1e-12 * scale {
                    return false;
                }
            }
        }
        true
    }

    /// All eigenvalues strictly above `tol`.
    pub fn is_positive_definite(&self, tol: f64) -> bool {
        if !self.is_symmetric() {
            return false;
        }
        sym_eigenvalues(self.dim, &self.data)
            .iter()
            .all(|&ev| ev > tol)
    }
}

/// Endpoint count, promise margins, treatment priors and the nominal
/// one-sided error level for a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    /// Number of endpoints `I`.
    pub endpoint_count: usize,
    /// Margin per endpoint the treatment-minus-control rate difference must
    /// exceed (rate-difference units).
    pub promise_margins: Vec<f64>,
    /// `(a_i, b_i)` of the conjugate beta prior on each treatment rate.
    pub treatment_prior: Vec<(f64, f64)>,
    /// Nominal family-wise error level.
    pub alpha: f64,
}

impl EndpointConfig {
    /// Two endpoints, flat Beta(1,1) treatment priors, zero margins.
    pub fn default_two_endpoint(alpha: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            endpoint_count: 2,
            promise_margins: vec![0.0, 0.0],
            treatment_prior: vec![(1.0, 1.0), (1.0, 1.0)],
            alpha,
        }
    }

    pub fn check(&self, report: &mut ValidationReport) {
        report.require(
            self.schema_version == SCHEMA_VERSION,
            "endpoint config: unsupported schema_version",
        );
        report.require(self.endpoint_count >= 1, "endpoint config: I must be >= 1");
        report.require(
            self.promise_margins.len() == self.endpoint_count,
            "endpoint config: promise_margins length differs from endpoint count",
        );
        report.require(
            self.treatment_prior.len() == self.endpoint_count,
            "endpoint config: treatment_prior length differs from endpoint count",
        );
        for &(a, b) in &self.treatment_prior {
            report.require(
                a > 0.0 && b > 0.0,
                "endpoint config: beta prior parameters must be positive",
            );
        }
        report.require(
            self.alpha > 0.0 && self.alpha < 1.0,
            "endpoint config: alpha must lie in (0,1)",
        );
        for &m in &self.promise_margins {
            report.require(
                m > -1.0 && m < 1.0,
                "endpoint config: promise margin must lie in (-1,1)",
            );
        }
    }
}

/// One historical study: a common control sample size and one responder
/// count per endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoricalStudy {
    /// Optional display label (study acronym).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Control-arm subjects in this study.
    pub n: u32,
    /// Responders per endpoint.
    pub r: Vec<u32>,
}

/// Control information from completed studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoricalDataset {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    pub studies: Vec<HistoricalStudy>,
}

impl HistoricalDataset {
    pub fn new(studies: Vec<HistoricalStudy>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            studies,
        }
    }

    pub fn study_count(&self) -> usize {
        self.studies.len()
    }

    /// Responders summed over studies divided by subjects summed over
    /// studies, per endpoint.
    pub fn pooled_rates(&self, endpoint_count: usize) -> Vec<f64> {
        let total_n: u64 = self.studies.iter().map(|s| u64::from(s.n)).sum();
        (0..endpoint_count)
            .map(|i| {
                let total_r: u64 = self
                    .studies
                    .iter()
                    .map(|s| u64::from(*s.r.get(i).unwrap_or(&0)))
                    .sum();
                total_r as f64 / total_n as f64
            })
            .collect()
    }

    pub fn check(&self, endpoint_count: usize, report: &mut ValidationReport) {
        report.require(
            self.schema_version == SCHEMA_VERSION,
            "historical dataset: unsupported schema_version",
        );
        report.require(
            !self.studies.is_empty(),
            "historical dataset: at least one study required",
        );
        for (j, study) in self.studies.iter().enumerate() {
            report.require(study.n >= 1, &format!("study {j}: sample size must be >= 1"));
            report.require(
                study.r.len() == endpoint_count,
                &format!("study {j}: responder vector length differs from endpoint count"),
            );
            for (i, &r) in study.r.iter().enumerate() {
                report.require(
                    r <= study.n,
                    &format!("study {j} endpoint {i}: responders exceed sample size"),
                );
            }
        }
    }
}

/// Observed counts from the current trial: both arms, every endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrentTrialObservation {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    pub n_control: u32,
    pub n_treatment: u32,
    pub r_control: Vec<u32>,
    pub r_treatment: Vec<u32>,
}

impl CurrentTrialObservation {
    pub fn new(n_control: u32, n_treatment: u32, r_control: Vec<u32>, r_treatment: Vec<u32>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n_control,
            n_treatment,
            r_control,
            r_treatment,
        }
    }

    pub fn endpoint_count(&self) -> usize {
        self.r_control.len()
    }

    pub fn check(&self, endpoint_count: usize, report: &mut ValidationReport) {
        report.require(
            self.schema_version == SCHEMA_VERSION,
            "observation: unsupported schema_version",
        );
        report.require(self.n_control >= 1, "observation: n_control must be >= 1");
        report.require(self.n_treatment >= 1, "observation: n_treatment must be >= 1");
        report.require(
            self.r_control.len() == endpoint_count,
            "observation: r_control length differs from endpoint count",
        );
        report.require(
            self.r_treatment.len() == endpoint_count,
            "observation: r_treatment length differs from endpoint count",
        );
        for (i, &r) in self.r_control.iter().enumerate() {
            report.require(
                r <= self.n_control,
                &format!("observation control endpoint {i}: responders exceed sample size"),
            );
        }
        for (i, &r) in self.r_treatment.iter().enumerate() {
            report.require(
                r <= self.n_treatment,
                &format!("observation treatment endpoint {i}: responders exceed sample size"),
            );
        }
    }
}

/// Per-endpoint control-rate and effect-size boxes the surrogates are
/// trained over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSpaces {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    /// Control response-rate interval per endpoint, inside (0,1).
    pub control_space: Vec<Interval>,
    /// Treatment-effect (rate difference) interval per endpoint, inside (-1,1).
    pub effect_space: Vec<Interval>,
}

impl ParameterSpaces {
    pub fn new(control_space: Vec<Interval>, effect_space: Vec<Interval>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            control_space,
            effect_space,
        }
    }

    pub fn check(&self, endpoint_count: usize, report: &mut ValidationReport) {
        report.require(
            self.schema_version == SCHEMA_VERSION,
            "parameter spaces: unsupported schema_version",
        );
        report.require(
            self.control_space.len() == endpoint_count,
            "parameter spaces: control_space length differs from endpoint count",
        );
        report.require(
            self.effect_space.len() == endpoint_count,
            "parameter spaces: effect_space length differs from endpoint count",
        );
        for (i, iv) in self.control_space.iter().enumerate() {
            report.require(
                iv.lo > 0.0 && iv.hi < 1.0 && iv.lo < iv.hi,
                &format!("parameter spaces: control interval {i} must satisfy 0 < lo < hi < 1"),
            );
        }
        for (i, iv) in self.effect_space.iter().enumerate() {
            report.require(
                iv.lo > -1.0 && iv.hi < 1.0 && iv.lo < iv.hi,
                &format!("parameter spaces: effect interval {i} must satisfy -1 < lo < hi < 1"),
            );
        }
    }
}

/// Priors for the hierarchical control model: an independent zero-mean
/// normal prior on each component of the logit-scale mean, and an
/// inverse-Wishart prior on the between-study covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierPriorConfig {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    /// Precision of the zero-mean normal prior on each mean component.
    pub theta_precision: f64,
    /// Inverse-Wishart scale matrix.
    pub sigma0: SymmetricMatrix,
    /// Inverse-Wishart degrees of freedom, at least the endpoint count.
    pub wishart_df: f64,
}

impl HierPriorConfig {
    /// The vague default: precision 0.01, unit scale matrix, df `I + 1`.
    pub fn vague(endpoint_count: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            theta_precision: 0.01,
            sigma0: SymmetricMatrix::identity(endpoint_count),
            wishart_df: endpoint_count as f64 + 1.0,
        }
    }

    pub fn check(&self, endpoint_count: usize, report: &mut ValidationReport) {
        report.require(
            self.schema_version == SCHEMA_VERSION,
            "hierarchical prior: unsupported schema_version",
        );
        report.require(
            self.theta_precision > 0.0,
            "hierarchical prior: theta precision must be positive",
        );
        report.require(
            self.sigma0.dim == endpoint_count,
            "hierarchical prior: sigma0 dimension differs from endpoint count",
        );
        report.require(
            self.sigma0.is_positive_definite(1e-12),
            "hierarchical prior: sigma0 must be symmetric positive definite",
        );
        report.require(
            self.wishart_df >= endpoint_count as f64,
            "hierarchical prior: wishart df must be at least the endpoint count",
        );
    }
}

/// Pass/fail outcome of structural validation with the list of violations.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn require(&mut self, condition: bool, message: &str) {
        if !condition {
            self.violations.push(message.to_string());
        }
    }
}

/// Validates a historical dataset and current observation against an
/// endpoint configuration. Never aborts; all failures are reported.
pub fn validate_dataset(
    hist: &HistoricalDataset,
    cur: &CurrentTrialObservation,
    cfg: &EndpointConfig,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    cfg.check(&mut report);
    hist.check(cfg.endpoint_count, &mut report);
    cur.check(cfg.endpoint_count, &mut report);
    report
}

/// Observed `(control rate, treatment rate)` per endpoint.
pub fn empirical_rates(cur: &CurrentTrialObservation) -> Vec<(f64, f64)> {
    cur.r_control
        .iter()
        .zip(&cur.r_treatment)
        .map(|(&rc, &rt)| {
            (
                f64::from(rc) / f64::from(cur.n_control),
                f64::from(rt) / f64::from(cur.n_treatment),
            )
        })
        .collect()
}
