//! Compensated (Kahan) summation.
//!
//! Monte Carlo estimates here average 10^4–10^5 terms; compensated sums keep
//! the result independent of accumulation order to near machine precision,
//! which the determinism guarantees rely on.

/// Running compensated sum (Neumaier variant, which stays accurate even
/// when the running total collapses in magnitude).
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn sum(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compensated sum of an iterator.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.sum()
}

/// Compensated mean of a slice; 0.0 for an empty slice.
pub fn kahan_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    kahan_sum(values.iter().copied()) / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beats_naive_summation() {
        let n = 1_000_000;
        let naive: f64 = (0..n).map(|_| 0.1).sum();
        let comp = kahan_sum((0..n).map(|_| 0.1));
        let exact = n as f64 * 0.1;
        assert!((comp - exact).abs() < (naive - exact).abs());
        assert!((comp - exact).abs() < 1e-7);
    }

    #[test]
    fn mean_of_mixed_magnitudes() {
        let values = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(kahan_sum(values.iter().copied()), 2.0);
        assert_eq!(kahan_mean(&values), 0.5);
    }

    #[test]
    fn empty_mean_is_zero() {
        assert_eq!(kahan_mean(&[]), 0.0);
    }
}
