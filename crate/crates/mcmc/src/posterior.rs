//! Posterior summaries: promise probabilities and control means.

use histborrow_core::kahan::kahan_mean;

use crate::draws::Draws;

/// Per-endpoint posterior probability of a promising treatment effect:
/// the fraction of index-paired draws with treatment rate minus control
/// rate exceeding the endpoint's margin.
pub fn posterior_prob_s(control: &Draws, treatment: &Draws, margins: &[f64]) -> Vec<f64> {
    assert_eq!(control.n_draws, treatment.n_draws, "draw counts must match");
    assert_eq!(control.endpoints, treatment.endpoints);
    assert_eq!(margins.len(), control.endpoints);
    let n = control.n_draws;
    (0..control.endpoints)
        .map(|i| {
            let mut count = 0u64;
            for t in 0..n {
                if treatment.get(t, i) - control.get(t, i) > margins[i] {
                    count += 1;
                }
            }
            count as f64 / n as f64
        })
        .collect()
}

/// Arithmetic mean of the control draws per endpoint.
pub fn posterior_mean_control(control: &Draws) -> Vec<f64> {
    assert!(control.n_draws > 0, "no draws");
    (0..control.endpoints)
        .map(|i| kahan_mean(&control.column(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paired(control_rows: Vec<Vec<f64>>, treatment_rows: Vec<Vec<f64>>) -> (Draws, Draws) {
        let endpoints = control_rows[0].len();
        (
            Draws::from_rows(endpoints, control_rows),
            Draws::from_rows(endpoints, treatment_rows),
        )
    }

    #[test]
    fn margin_bounds_pin_the_probability() {
        let (c, t) = paired(
            vec![vec![0.3, 0.4], vec![0.5, 0.2]],
            vec![vec![0.6, 0.1], vec![0.4, 0.9]],
        );
        assert_eq!(posterior_prob_s(&c, &t, &[1.0, 1.0]), vec![0.0, 0.0]);
        assert_eq!(posterior_prob_s(&c, &t, &[-1.0, -1.0]), vec![1.0, 1.0]);
    }

    #[test]
    fn probability_counts_paired_exceedances() {
        let (c, t) = paired(
            vec![vec![0.30], vec![0.50], vec![0.20], vec![0.60]],
            vec![vec![0.40], vec![0.45], vec![0.35], vec![0.55]],
        );
        // differences: .10, -.05, .15, -.05
        assert_eq!(posterior_prob_s(&c, &t, &[0.0]), vec![0.5]);
        assert_eq!(posterior_prob_s(&c, &t, &[0.12]), vec![0.25]);
    }

    #[test]
    fn probability_non_increasing_in_margin() {
        let (c, t) = paired(
            (0..50).map(|k| vec![k as f64 / 100.0]).collect(),
            (0..50).map(|k| vec![0.5 - k as f64 / 200.0]).collect(),
        );
        let grid: Vec<f64> = (-10..=10).map(|g| g as f64 / 10.0).collect();
        let mut last = f64::INFINITY;
        for m in grid {
            let s = posterior_prob_s(&c, &t, &[m])[0];
            assert!(s <= last, "S must not increase as the margin grows");
            last = s;
        }
    }

    #[test]
    fn control_means() {
        let d = Draws::from_rows(2, vec![vec![0.4, 0.2], vec![0.4, 0.6]]);
        let m = posterior_mean_control(&d);
        assert_eq!(m, vec![0.4, 0.4]);
    }
}
