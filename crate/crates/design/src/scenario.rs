//! Sampling of generating-rate scenarios for surrogate training and of
//! null-hypothesis feature grids for critical-value calibration.

use histborrow_core::streams::substream;
use histborrow_core::types::{Interval, ParameterSpaces, ValidationReport};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::DesignError;

/// One generating pattern: a uniform box for the control rates, plus a
/// per-endpoint effect that is either identically zero or uniform over
/// an interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioPattern {
    pub control_ranges: Vec<Interval>,
    /// `None` pins the endpoint's effect to zero.
    pub effect_ranges: Vec<Option<Interval>>,
}

impl ScenarioPattern {
    /// Checks that the treatment rate range stays within the unit
    /// interval. The closure may touch 0 or 1 — the bounds of the open
    /// uniform ranges are never drawn — so only ranges that actually
    /// cross the boundary are rejected.
    pub fn validate(&self) -> Result<(), DesignError> {
        if self.control_ranges.len() != self.effect_ranges.len() {
            return Err(DesignError::InvalidRange(
                "control and effect range counts differ".into(),
            ));
        }
        for (i, (c, e)) in self
            .control_ranges
            .iter()
            .zip(&self.effect_ranges)
            .enumerate()
        {
            if !(0.0 < c.lo && c.lo < c.hi && c.hi < 1.0) {
                return Err(DesignError::InvalidRange(format!(
                    "control range for endpoint {} must sit inside (0,1)",
                    i + 1
                )));
            }
            let (d_lo, d_hi) = match e {
                Some(d) if d.lo >= d.hi => {
                    return Err(DesignError::InvalidRange(format!(
                        "effect range for endpoint {} is empty",
                        i + 1
                    )))
                }
                Some(d) => (d.lo, d.hi),
                None => (0.0, 0.0),
            };
            if c.lo + d_lo < 0.0 || c.hi + d_hi > 1.0 {
                return Err(DesignError::InvalidRange(format!(
                    "treatment rate range for endpoint {} leaves (0,1)",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// The standard pattern set: every on/off combination of the endpoint
/// effects over the configured spaces, in subset-mask order (all-null
/// first, all-active last). For two endpoints this yields four patterns.
pub fn standard_patterns(spaces: &ParameterSpaces) -> Vec<ScenarioPattern> {
    let endpoints = spaces.control_space.len();
    (0..1usize << endpoints)
        .map(|mask| ScenarioPattern {
            control_ranges: spaces.control_space.clone(),
            effect_ranges: (0..endpoints)
                .map(|i| {
                    if mask & (1 << i) != 0 {
                        Some(spaces.effect_space[i])
                    } else {
                        None
                    }
                })
                .collect(),
        })
        .collect()
}

/// A single drawn generating-rate tuple with its originating pattern.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioDraw {
    pub pattern_id: usize,
    pub control_rates: Vec<f64>,
    pub treatment_rates: Vec<f64>,
}

/// Draws `total` generating-rate tuples, split equally across the
/// patterns, uniform over each pattern's box. Treatment rates are
/// control rates plus the drawn effects.
pub fn draw_scenarios(
    patterns: &[ScenarioPattern],
    total: usize,
    seed: u64,
) -> Result<Vec<ScenarioDraw>, DesignError> {
    if patterns.is_empty() {
        return Err(DesignError::InvalidConfig("no scenario patterns".into()));
    }
    if total % patterns.len() != 0 {
        return Err(DesignError::InvalidConfig(format!(
            "{} draws cannot be split equally over {} patterns",
            total,
            patterns.len()
        )));
    }
    for p in patterns {
        p.validate()?;
    }
    let per_pattern = total / patterns.len();
    let mut draws = Vec::with_capacity(total);
    for b in 0..total {
        let pattern_id = b / per_pattern;
        let pattern = &patterns[pattern_id];
        let mut rng = substream(seed, "design/scenario", &[b as u64]);
        let mut control = Vec::with_capacity(pattern.control_ranges.len());
        let mut treatment = Vec::with_capacity(pattern.control_ranges.len());
        for (c, e) in pattern.control_ranges.iter().zip(&pattern.effect_ranges) {
            // Redraw on the measure-zero event that a sum of boundary
            // draws lands exactly on 0 or 1.
            let (psi_c, psi_t) = loop {
                let psi_c = rng.gen_range(c.lo..c.hi);
                let delta = match e {
                    Some(d) => rng.gen_range(d.lo..d.hi),
                    None => 0.0,
                };
                let psi_t = psi_c + delta;
                if psi_t > 0.0 && psi_t < 1.0 {
                    break (psi_c, psi_t);
                }
            };
            control.push(psi_c);
            treatment.push(psi_t);
        }
        draws.push(ScenarioDraw {
            pattern_id,
            control_rates: control,
            treatment_rates: treatment,
        });
    }
    Ok(draws)
}

/// The three null-hypothesis families of the two-endpoint design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullHypothesisKind {
    /// Endpoint 1 has no effect; endpoint 2 is unconstrained.
    H1,
    /// Endpoint 2 has no effect; endpoint 1 is unconstrained.
    H2,
    /// Neither endpoint has an effect.
    H12,
}

impl NullHypothesisKind {
    pub const ALL: [NullHypothesisKind; 3] = [
        NullHypothesisKind::H1,
        NullHypothesisKind::H2,
        NullHypothesisKind::H12,
    ];

    pub fn index(self) -> usize {
        match self {
            NullHypothesisKind::H1 => 0,
            NullHypothesisKind::H2 => 1,
            NullHypothesisKind::H12 => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NullHypothesisKind::H1 => "h1",
            NullHypothesisKind::H2 => "h2",
            NullHypothesisKind::H12 => "h12",
        }
    }

    /// Number of features describing a null configuration of this kind.
    pub fn feature_dim(self) -> usize {
        match self {
            NullHypothesisKind::H1 | NullHypothesisKind::H2 => 3,
            NullHypothesisKind::H12 => 2,
        }
    }

    /// The axis-aligned box the calibration features are drawn from.
    /// Shared-rate and control coordinates use the control space; free
    /// effect coordinates use the effect space.
    pub fn feature_box(self, spaces: &ParameterSpaces) -> Vec<Interval> {
        let c1 = spaces.control_space[0];
        let c2 = spaces.control_space[1];
        match self {
            NullHypothesisKind::H1 => vec![c1, c2, spaces.effect_space[1]],
            NullHypothesisKind::H2 => vec![c1, spaces.effect_space[0], c2],
            NullHypothesisKind::H12 => vec![c1, c2],
        }
    }

    /// Expands a feature vector into per-arm generating rates
    /// `(control_rates, treatment_rates)`.
    pub fn generating_rates(self, features: &[f64]) -> ([f64; 2], [f64; 2]) {
        match self {
            // (shared rate 1, control rate 2, effect 2)
            NullHypothesisKind::H1 => (
                [features[0], features[1]],
                [features[0], features[1] + features[2]],
            ),
            // (control rate 1, effect 1, shared rate 2)
            NullHypothesisKind::H2 => (
                [features[0], features[2]],
                [features[0] + features[1], features[2]],
            ),
            // (shared rate 1, shared rate 2)
            NullHypothesisKind::H12 => (
                [features[0], features[1]],
                [features[0], features[1]],
            ),
        }
    }
}

/// Draws `count` null-configuration feature vectors of the given kind,
/// uniform over the kind's feature box.
pub fn draw_null_grid(
    kind: NullHypothesisKind,
    spaces: &ParameterSpaces,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, DesignError> {
    let mut report = ValidationReport::default();
    spaces.check(spaces.control_space.len(), &mut report);
    if !report.passed() {
        return Err(DesignError::Validation(report.violations));
    }
    let bounds = kind.feature_box(spaces);
    // Range-level feasibility: the free-effect coordinate's implied
    // treatment closure must stay within [0,1] (touching is fine, the
    // open bounds are never drawn).
    let sum_closure = match kind {
        NullHypothesisKind::H1 => Some((bounds[1].lo + bounds[2].lo, bounds[1].hi + bounds[2].hi)),
        NullHypothesisKind::H2 => Some((bounds[0].lo + bounds[1].lo, bounds[0].hi + bounds[1].hi)),
        NullHypothesisKind::H12 => None,
    };
    if let Some((lo, hi)) = sum_closure {
        if lo < 0.0 || hi > 1.0 {
            return Err(DesignError::InvalidRange(format!(
                "{} treatment rate range leaves (0,1)",
                kind.label()
            )));
        }
    }
    let mut grid = Vec::with_capacity(count);
    for b in 0..count {
        let mut rng = substream(seed, "design/null-grid", &[kind.index() as u64, b as u64]);
        // Redraw on the measure-zero event that a sum of boundary draws
        // lands exactly on 0 or 1.
        let point = loop {
            let candidate: Vec<f64> =
                bounds.iter().map(|iv| rng.gen_range(iv.lo..iv.hi)).collect();
            let (control, treatment) = kind.generating_rates(&candidate);
            let interior = control
                .iter()
                .chain(treatment.iter())
                .all(|v| *v > 0.0 && *v < 1.0);
            if interior {
                break candidate;
            }
        };
        grid.push(point);
    }
    Ok(grid)
}
