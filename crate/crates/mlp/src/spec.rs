//! Network architecture description and training hyperparameters.

use serde::{Deserialize, Serialize};

use crate::error::MlpError;

/// Hidden-layer activation; rectified linear is the only supported choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenActivation {
    Relu,
}

/// Output-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    /// Logistic squashing; outputs land in (0,1).
    Sigmoid,
    /// Raw affine output.
    Linear,
}

/// Architecture of a fully connected feed-forward network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_widths: Vec<usize>,
    #[serde(default = "default_hidden_activation")]
    pub hidden_activation: HiddenActivation,
    pub output_activation: OutputActivation,
    /// Probability of dropping each hidden activation during training;
    /// inverted scaling keeps the expected pre-activations unchanged.
    #[serde(default)]
    pub dropout_rate: f64,
}

fn default_hidden_activation() -> HiddenActivation {
    HiddenActivation::Relu
}

impl MlpSpec {
    /// Sigmoid-output regression network with the given hidden widths.
    pub fn sigmoid(input_dim: usize, hidden_widths: Vec<usize>, output_dim: usize) -> Self {
        Self {
            input_dim,
            output_dim,
            hidden_widths,
            hidden_activation: HiddenActivation::Relu,
            output_activation: OutputActivation::Sigmoid,
            dropout_rate: 0.0,
        }
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout_rate = rate;
        self
    }

    /// Layer fan-in/fan-out pairs in forward order.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut prev = self.input_dim;
        for &w in &self.hidden_widths {
            dims.push((prev, w));
            prev = w;
        }
        dims.push((prev, self.output_dim));
        dims
    }

    /// Total number of weights and biases.
    pub fn param_count(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|&(fan_in, fan_out)| fan_in * fan_out + fan_out)
            .sum()
    }

    pub fn validate(&self) -> Result<(), MlpError> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(MlpError::InvalidSpec(
                "input and output dimensions must be at least 1".into(),
            ));
        }
        if self.hidden_widths.iter().any(|&w| w == 0) {
            return Err(MlpError::InvalidSpec(
                "hidden widths must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(MlpError::InvalidSpec(
                "dropout rate must lie in [0,1)".into(),
            ));
        }
        Ok(())
    }
}

/// Mini-batch RMSProp training controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_rmsprop_decay")]
    pub rmsprop_decay: f64,
    #[serde(default = "default_rmsprop_epsilon")]
    pub rmsprop_epsilon: f64,
    /// Fraction of the dataset held out for the validation summary during
    /// `train`; zero disables the holdout.
    #[serde(default)]
    pub holdout_fraction: f64,
    /// Fold count for `cross_validate`.
    #[serde(default = "default_folds")]
    pub folds: usize,
    pub seed: u64,
}

fn default_batch_size() -> usize {
    100
}
fn default_epochs() -> usize {
    1000
}
fn default_learning_rate() -> f64 {
    1e-3
}
fn default_rmsprop_decay() -> f64 {
    0.9
}
fn default_rmsprop_epsilon() -> f64 {
    1e-8
}
fn default_folds() -> usize {
    5
}

impl TrainConfig {
    /// Paper-style defaults: batch 100, 1,000 epochs, RMSProp with
    /// learning rate 1e-3, decay 0.9, epsilon 1e-8, 5 folds.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            batch_size: default_batch_size(),
            epochs: default_epochs(),
            learning_rate: default_learning_rate(),
            rmsprop_decay: default_rmsprop_decay(),
            rmsprop_epsilon: default_rmsprop_epsilon(),
            holdout_fraction: 0.0,
            folds: default_folds(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), MlpError> {
        if self.batch_size == 0 {
            return Err(MlpError::InvalidSpec("batch_size must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(MlpError::InvalidSpec("epochs must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(MlpError::InvalidSpec(
                "learning_rate must be nonnegative".into(),
            ));
        }
        if !(self.rmsprop_decay > 0.0 && self.rmsprop_decay < 1.0) {
            return Err(MlpError::InvalidSpec(
                "rmsprop_decay must lie in (0,1)".into(),
            ));
        }
        if !(self.rmsprop_epsilon > 0.0) {
            return Err(MlpError::InvalidSpec(
                "rmsprop_epsilon must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(MlpError::InvalidSpec(
                "holdout_fraction must lie in [0,1)".into(),
            ));
        }
        if self.folds < 2 {
            return Err(MlpError::InvalidSpec("folds must be >= 2".into()));
        }
        Ok(())
    }
}
