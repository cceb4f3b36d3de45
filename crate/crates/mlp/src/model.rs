//! Model parameters, initialization, and file persistence.

use std::fs;
use std::path::Path;

use histborrow_core::streams::substream;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::MlpError;
use crate::spec::MlpSpec;

/// Model file schema version.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// One dense layer: weights stored row-major as `[fan_in × fan_out]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Final losses recorded by training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSummary {
    /// Mean squared error over the training portion after the last epoch,
    /// evaluated without dropout.
    pub train_mse: f64,
    /// Mean squared error on the holdout portion, when one was configured.
    pub validation_mse: Option<f64>,
}

/// A fully connected network with its architecture and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpModel {
    pub spec: MlpSpec,
    pub layers: Vec<Layer>,
    pub training_summary: Option<TrainingSummary>,
}

impl MlpModel {
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// True when every parameter is finite and shapes agree with the spec.
    pub fn is_consistent(&self) -> bool {
        let dims = self.spec.layer_dims();
        self.layers.len() == dims.len()
            && self.layers.iter().zip(&dims).all(|(l, &(fi, fo))| {
                l.fan_in == fi
                    && l.fan_out == fo
                    && l.weights.len() == fi * fo
                    && l.biases.len() == fo
                    && l.weights.iter().all(|w| w.is_finite())
                    && l.biases.iter().all(|b| b.is_finite())
            })
    }
}

/// Fresh model with weights drawn uniformly from
/// `(-1/sqrt(fan_in), +1/sqrt(fan_in))` and zero biases.
pub fn init_model(spec: &MlpSpec, seed: u64) -> Result<MlpModel, MlpError> {
    spec.validate()?;
    let layers = spec
        .layer_dims()
        .iter()
        .enumerate()
        .map(|(layer_idx, &(fan_in, fan_out))| {
            let mut rng = substream(seed, "mlp/init", &[layer_idx as u64]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            Layer {
                fan_in,
                fan_out,
                weights: (0..fan_in * fan_out)
                    .map(|_| rng.gen_range(-bound..bound))
                    .collect(),
                biases: vec![0.0; fan_out],
            }
        })
        .collect();
    Ok(MlpModel {
        spec: spec.clone(),
        layers,
        training_summary: None,
    })
}

/// On-disk wrapper so future layout changes stay detectable.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema_version: u32,
    model: MlpModel,
}

/// Serializes the model to JSON; reloading yields bit-identical parameters.
pub fn save_model(model: &MlpModel, path: &Path) -> Result<(), MlpError> {
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        model: model.clone(),
    };
    fs::write(path, serde_json::to_vec_pretty(&file)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<MlpModel, MlpError> {
    let bytes = fs::read(path)?;
    let file: ModelFile = serde_json::from_slice(&bytes)?;
    if file.schema_version != MODEL_SCHEMA_VERSION {
        return Err(MlpError::Persist(format!(
            "unsupported model schema version {}",
            file.schema_version
        )));
    }
    if !file.model.is_consistent() {
        return Err(MlpError::Persist(
            "model file is internally inconsistent".into(),
        ));
    }
    Ok(file.model)
}
