//! Terminal analysis of an observed trial: plug-in null features,
//! surrogate critical values with the max-rule combination, and the
//! reject/fail decision per endpoint.

use histborrow_core::types::{CurrentTrialObservation, Interval, ValidationReport};
use serde::{Deserialize, Serialize};

use crate::error::DesignError;
use crate::surrogate::Surrogate;
use crate::training::observation_features;

/// How the promise probabilities and thresholds were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionMode {
    /// Promise probabilities and critical values from the networks.
    Surrogate,
    /// Network promise probabilities against the constant cutoff.
    ConstantBaseline,
    /// Reference path: promise probabilities from a fresh posterior fit.
    FreshMcmc,
}

/// The full outcome of one analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionOutcome {
    /// Promise probability per endpoint.
    pub s_hat: [f64; 2],
    /// Critical values (single null 1, single null 2, global null).
    pub c_hat: [f64; 3],
    /// Combined thresholds: the max of each elementary critical value
    /// and the global-null critical value.
    pub c_tilde: [f64; 2],
    /// Per-endpoint rejection: promise probability exceeds threshold.
    pub rejected: [bool; 2],
    /// Posterior-mean estimates of the control rates.
    pub posterior_mean_hat: [f64; 2],
    pub mode: DecisionMode,
    /// Whether each critical network saw clamped (out-of-box) features.
    pub clamped: [bool; 3],
}

impl DecisionOutcome {
    /// The structural invariants every outcome must satisfy.
    pub fn invariants_hold(&self) -> bool {
        self.c_tilde[0] == self.c_hat[0].max(self.c_hat[2])
            && self.c_tilde[1] == self.c_hat[1].max(self.c_hat[2])
            && self.rejected[0] == (self.s_hat[0] > self.c_tilde[0])
            && self.rejected[1] == (self.s_hat[1] > self.c_tilde[1])
    }
}

/// Null-consistent plug-in features built from the observed counts, one
/// vector per hypothesis family.
///
/// Under a single null the affected endpoint's rate is estimated by
/// pooling both arms while the free endpoint keeps its observed control
/// rate and effect estimate; under the global null both endpoints pool.
pub fn plug_in_null_features(cur: &CurrentTrialObservation) -> ([f64; 3], [f64; 3], [f64; 2]) {
    let nc = f64::from(cur.n_control);
    let nt = f64::from(cur.n_treatment);
    let rc1 = f64::from(cur.r_control[0]);
    let rc2 = f64::from(cur.r_control[1]);
    let rt1 = f64::from(cur.r_treatment[0]);
    let rt2 = f64::from(cur.r_treatment[1]);
    let pooled1 = (rc1 + rt1) / (nc + nt);
    let pooled2 = (rc2 + rt2) / (nc + nt);
    let m1 = [pooled1, rc2 / nc, rt2 / nt - rc2 / nc];
    let m2 = [rc1 / nc, rt1 / nt - rc1 / nc, pooled2];
    let m12 = [pooled1, pooled2];
    (m1, m2, m12)
}

fn clamp_to_box(features: &mut [f64], bounds: &[Interval]) -> bool {
    assert_eq!(features.len(), bounds.len(), "feature box dimension");
    let mut clamped = false;
    for (v, iv) in features.iter_mut().zip(bounds) {
        let c = v.clamp(iv.lo, iv.hi);
        if c != *v {
            clamped = true;
            *v = c;
        }
    }
    clamped
}

/// Evaluation wiring for one trained design; borrows the five networks
/// so tests can substitute reference stubs.
pub struct DecisionEngine<'a> {
    pub f_s: &'a dyn Surrogate,
    pub f_p: &'a dyn Surrogate,
    pub f1: &'a dyn Surrogate,
    pub f2: &'a dyn Surrogate,
    pub f12: &'a dyn Surrogate,
    /// Clamping boxes for the critical networks (single null 1, single
    /// null 2, global null).
    pub feature_boxes: &'a [Vec<Interval>; 3],
    pub c_const: f64,
    pub n_control: u32,
    pub n_treatment: u32,
}

impl DecisionEngine<'_> {
    fn check_observation(&self, cur: &CurrentTrialObservation) -> Result<(), DesignError> {
        if cur.n_control != self.n_control || cur.n_treatment != self.n_treatment {
            return Err(DesignError::DesignMismatch(format!(
                "observation sample sizes ({}, {}) differ from the design's ({}, {})",
                cur.n_control, cur.n_treatment, self.n_control, self.n_treatment
            )));
        }
        let mut report = ValidationReport::default();
        cur.check(2, &mut report);
        if !report.passed() {
            return Err(DesignError::Validation(report.violations));
        }
        Ok(())
    }

    /// Critical values at the clamped plug-in features.
    fn critical_values(
        &self,
        cur: &CurrentTrialObservation,
    ) -> Result<([f64; 3], [bool; 3]), DesignError> {
        let (m1, m2, m12) = plug_in_null_features(cur);
        let mut clamped = [false; 3];
        let mut m1 = m1.to_vec();
        let mut m2 = m2.to_vec();
        let mut m12 = m12.to_vec();
        clamped[0] = clamp_to_box(&mut m1, &self.feature_boxes[0]);
        clamped[1] = clamp_to_box(&mut m2, &self.feature_boxes[1]);
        clamped[2] = clamp_to_box(&mut m12, &self.feature_boxes[2]);
        let c1 = self.f1.eval_one(&m1)?[0];
        let c2 = self.f2.eval_one(&m2)?[0];
        let c12 = self.f12.eval_one(&m12)?[0];
        Ok(([c1, c2, c12], clamped))
    }

    /// Completes a decision from externally supplied promise
    /// probabilities and posterior means (the reference path).
    pub fn decide_with_estimates(
        &self,
        cur: &CurrentTrialObservation,
        s_hat: [f64; 2],
        posterior_mean_hat: [f64; 2],
        mode: DecisionMode,
    ) -> Result<DecisionOutcome, DesignError> {
        self.check_observation(cur)?;
        let (c_hat, clamped) = match mode {
            DecisionMode::ConstantBaseline => ([self.c_const; 3], [false; 3]),
            _ => self.critical_values(cur)?,
        };
        let c_tilde = [c_hat[0].max(c_hat[2]), c_hat[1].max(c_hat[2])];
        Ok(DecisionOutcome {
            s_hat,
            c_hat,
            c_tilde,
            rejected: [s_hat[0] > c_tilde[0], s_hat[1] > c_tilde[1]],
            posterior_mean_hat,
            mode,
            clamped,
        })
    }

    /// The surrogate analysis path (or the constant-cutoff variant).
    pub fn decide(
        &self,
        cur: &CurrentTrialObservation,
        mode: DecisionMode,
    ) -> Result<DecisionOutcome, DesignError> {
        assert!(
            mode != DecisionMode::FreshMcmc,
            "the reference path supplies its own estimates"
        );
        self.check_observation(cur)?;
        let features = observation_features(cur);
        let s = self.f_s.eval_one(&features)?;
        let p = self.f_p.eval_one(&features[..2])?;
        self.decide_with_estimates(cur, [s[0], s[1]], [p[0], p[1]], mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::{ConstantSurrogate, FnSurrogate};
    use histborrow_core::types::Interval;

    fn wide_boxes() -> [Vec<Interval>; 3] {
        [
            vec![
                Interval::new(0.0, 1.0),
                Interval::new(0.0, 1.0),
                Interval::new(-1.0, 1.0),
            ],
            vec![
                Interval::new(0.0, 1.0),
                Interval::new(-1.0, 1.0),
                Interval::new(0.0, 1.0),
            ],
            vec![Interval::new(0.0, 1.0), Interval::new(0.0, 1.0)],
        ]
    }

    #[test]
    fn plug_in_features_match_hand_arithmetic() {
        let cur = CurrentTrialObservation::new(150, 150, vec![60, 45], vec![75, 60]);
        let (m1, m2, m12) = plug_in_null_features(&cur);
        assert!((m1[0] - 0.45).abs() < 1e-15);
        assert!((m1[1] - 0.30).abs() < 1e-15);
        assert!((m1[2] - 0.10).abs() < 1e-15);
        assert!((m2[0] - 0.40).abs() < 1e-15);
        assert!((m2[1] - 0.10).abs() < 1e-15);
        assert!((m2[2] - 0.35).abs() < 1e-15);
        assert!((m12[0] - 0.45).abs() < 1e-15);
        assert!((m12[1] - 0.35).abs() < 1e-15);
    }

    #[test]
    fn equal_arms_zero_effect_and_zero_counts_zero_features() {
        let cur = CurrentTrialObservation::new(100, 100, vec![40, 30], vec![40, 30]);
        let (m1, m2, _) = plug_in_null_features(&cur);
        assert_eq!(m1[2], 0.0);
        assert_eq!(m2[1], 0.0);

        let cur = CurrentTrialObservation::new(100, 100, vec![0, 0], vec![0, 0]);
        let (m1, m2, m12) = plug_in_null_features(&cur);
        assert!(m1.iter().chain(&m2).chain(&m12).all(|v| *v == 0.0));
    }

    #[test]
    fn max_rule_and_rejection() {
        let boxes = wide_boxes();
        let f_s = FnSurrogate {
            f: |_: &[f64]| vec![0.96, 0.10],
            output_dim: 2,
        };
        let f_p = ConstantSurrogate {
            value: 0.4,
            output_dim: 2,
        };
        let f1 = ConstantSurrogate {
            value: 0.95,
            output_dim: 1,
        };
        let f2 = ConstantSurrogate {
            value: 0.93,
            output_dim: 1,
        };
        let f12 = ConstantSurrogate {
            value: 0.97,
            output_dim: 1,
        };
        let engine = DecisionEngine {
            f_s: &f_s,
            f_p: &f_p,
            f1: &f1,
            f2: &f2,
            f12: &f12,
            feature_boxes: &boxes,
            c_const: 0.975,
            n_control: 150,
            n_treatment: 150,
        };
        let cur = CurrentTrialObservation::new(150, 150, vec![60, 45], vec![75, 60]);
        let out = engine.decide(&cur, DecisionMode::Surrogate).unwrap();
        assert_eq!(out.c_tilde, [0.97, 0.97]);
        assert!(!out.rejected[0], "0.96 does not exceed the lifted 0.97");
        assert!(!out.rejected[1]);
        assert!(out.invariants_hold());
        assert_eq!(out.posterior_mean_hat, [0.4, 0.4]);

        let constant = engine.decide(&cur, DecisionMode::ConstantBaseline).unwrap();
        assert_eq!(constant.c_tilde, [0.975, 0.975]);
        assert!(constant.invariants_hold());
    }

    #[test]
    fn zero_promise_never_rejects() {
        let boxes = wide_boxes();
        let f_s = ConstantSurrogate {
            value: 0.0,
            output_dim: 2,
        };
        let f_p = ConstantSurrogate {
            value: 0.5,
            output_dim: 2,
        };
        let c = ConstantSurrogate {
            value: 0.01,
            output_dim: 1,
        };
        let engine = DecisionEngine {
            f_s: &f_s,
            f_p: &f_p,
            f1: &c,
            f2: &c,
            f12: &c,
            feature_boxes: &boxes,
            c_const: 0.5,
            n_control: 100,
            n_treatment: 100,
        };
        let cur = CurrentTrialObservation::new(100, 100, vec![10, 20], vec![90, 80]);
        let out = engine.decide(&cur, DecisionMode::Surrogate).unwrap();
        assert_eq!(out.rejected, [false, false]);
    }

    #[test]
    fn clamping_flags_fire_outside_the_box() {
        let tight: [Vec<Interval>; 3] = [
            vec![
                Interval::new(0.2, 0.7),
                Interval::new(0.1, 0.6),
                Interval::new(-0.1, 0.2),
            ],
            vec![
                Interval::new(0.2, 0.7),
                Interval::new(-0.1, 0.2),
                Interval::new(0.1, 0.6),
            ],
            vec![Interval::new(0.2, 0.7), Interval::new(0.1, 0.6)],
        ];
        // echoes its second feature so the test can observe what the
        // network actually received after clamping
        let recorder = FnSurrogate {
            f: |row: &[f64]| vec![row[1]],
            output_dim: 1,
        };
        let f_s = ConstantSurrogate {
            value: 0.5,
            output_dim: 2,
        };
        let f_p = ConstantSurrogate {
            value: 0.5,
            output_dim: 2,
        };
        let engine = DecisionEngine {
            f_s: &f_s,
            f_p: &f_p,
            f1: &recorder,
            f2: &recorder,
            f12: &recorder,
            feature_boxes: &tight,
            c_const: 0.9,
            n_control: 100,
            n_treatment: 100,
        };
        // a huge observed harm on endpoint 1 puts the effect plug-in far
        // below the box for the second family
        let cur = CurrentTrialObservation::new(100, 100, vec![60, 30], vec![10, 30]);
        let out = engine.decide(&cur, DecisionMode::Surrogate).unwrap();
        assert!(out.clamped[1], "single-null-2 effect feature must clamp");
        assert!(!out.clamped[2], "pooled rates stay inside the box");
        // the echoed feature equals the clamped box edge, not the raw -0.5
        assert!((out.c_hat[1] - (-0.1)).abs() < 1e-15);
    }

    #[test]
    fn mismatched_sample_sizes_are_refused() {
        let boxes = wide_boxes();
        let any = ConstantSurrogate {
            value: 0.5,
            output_dim: 2,
        };
        let c = ConstantSurrogate {
            value: 0.5,
            output_dim: 1,
        };
        let engine = DecisionEngine {
            f_s: &any,
            f_p: &any,
            f1: &c,
            f2: &c,
            f12: &c,
            feature_boxes: &boxes,
            c_const: 0.5,
            n_control: 150,
            n_treatment: 150,
        };
        let cur = CurrentTrialObservation::new(120, 150, vec![10, 10], vec![10, 10]);
        assert!(matches!(
            engine.decide(&cur, DecisionMode::Surrogate),
            Err(DesignError::DesignMismatch(_))
        ));
    }
}
