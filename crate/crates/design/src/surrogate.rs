//! Batched evaluation interface over trained networks, plus the
//! deterministic reference stubs used to exercise the calibration and
//! decision plumbing independently of any fitted model.

use histborrow_mlp::{forward, ForwardMode, MlpModel};
use ndarray::{Array2, ArrayView2};

use crate::error::DesignError;

/// Anything that maps a batch of feature rows to a batch of outputs.
///
/// Implementations must be pure: the same input batch always produces
/// the same output batch.
pub trait Surrogate: Sync {
    fn output_dim(&self) -> usize;
    fn eval_batch(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>, DesignError>;

    /// Convenience single-row evaluation.
    fn eval_one(&self, features: &[f64]) -> Result<Vec<f64>, DesignError> {
        let input = Array2::from_shape_vec((1, features.len()), features.to_vec())
            .expect("row shape");
        let out = self.eval_batch(input.view())?;
        Ok(out.row(0).to_vec())
    }
}

impl Surrogate for MlpModel {
    fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    fn eval_batch(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>, DesignError> {
        Ok(forward(self, inputs, ForwardMode::Infer, None)?)
    }
}

/// Emits the same value for every row and output.
pub struct ConstantSurrogate {
    pub value: f64,
    pub output_dim: usize,
}

impl Surrogate for ConstantSurrogate {
    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn eval_batch(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>, DesignError> {
        Ok(Array2::from_elem((inputs.nrows(), self.output_dim), self.value))
    }
}

/// Emits deterministic pseudo-uniform draws on (0,1), independent across
/// rows and outputs: output (i, j) hashes (seed, i, j) and ignores the
/// features entirely. Useful for exercising quantile plumbing against
/// closed-form uniform order statistics.
pub struct HashUniformSurrogate {
    pub seed: u64,
    pub output_dim: usize,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl Surrogate for HashUniformSurrogate {
    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn eval_batch(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>, DesignError> {
        Ok(Array2::from_shape_fn(
            (inputs.nrows(), self.output_dim),
            |(i, j)| {
                let mixed = splitmix64(
                    self.seed
                        .wrapping_mul(0x5851f42d4c957f2d)
                        .wrapping_add((i as u64) << 20)
                        .wrapping_add(j as u64),
                );
                // top 53 bits to a double in [0, 1), nudged off zero
                ((mixed >> 11) as f64 + 0.5) / (1u64 << 53) as f64
            },
        ))
    }
}

/// Wraps a row function as a surrogate; the workhorse for custom
/// monotone or adversarial stubs in tests.
pub struct FnSurrogate<F: Fn(&[f64]) -> Vec<f64> + Sync> {
    pub f: F,
    pub output_dim: usize,
}

impl<F: Fn(&[f64]) -> Vec<f64> + Sync> Surrogate for FnSurrogate<F> {
    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn eval_batch(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>, DesignError> {
        let mut out = Array2::zeros((inputs.nrows(), self.output_dim));
        for (i, row) in inputs.rows().into_iter().enumerate() {
            let owned: Vec<f64> = row.to_vec();
            let values = (self.f)(&owned);
            assert_eq!(values.len(), self.output_dim, "stub output dimension");
            for (j, v) in values.into_iter().enumerate() {
                out[[i, j]] = v;
            }
        }
        Ok(out)
    }
}
