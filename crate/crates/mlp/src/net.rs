//! Forward evaluation and backpropagation.
//!
//! All heavy lifting is batched matrix multiplication, so evaluation cost
//! is dominated by GEMM even for large scenario batches.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::MlpError;
use crate::model::MlpModel;
use crate::spec::OutputActivation;

/// Whether dropout masks are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    Train,
    Infer,
}

/// Per-layer parameter gradients, shaped like the layers themselves.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Working copy of the parameters as ndarray matrices.
pub(crate) struct Params {
    pub w: Vec<Array2<f64>>,
    pub b: Vec<Array1<f64>>,
}

impl Params {
    pub fn from_model(model: &MlpModel) -> Self {
        let w = model
            .layers
            .iter()
            .map(|l| {
                Array2::from_shape_vec((l.fan_in, l.fan_out), l.weights.clone())
                    .expect("layer shape consistent")
            })
            .collect();
        let b = model
            .layers
            .iter()
            .map(|l| Array1::from_vec(l.biases.clone()))
            .collect();
        Self { w, b }
    }

    pub fn write_back(&self, model: &mut MlpModel) {
        for (layer, (w, b)) in model.layers.iter_mut().zip(self.w.iter().zip(&self.b)) {
            layer.weights = w.iter().copied().collect();
            layer.biases = b.to_vec();
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Everything backpropagation needs from one forward pass.
pub(crate) struct ForwardCache {
    /// Input to each layer beyond the first hidden one: post-activation,
    /// post-dropout.
    pub acts: Vec<Array2<f64>>,
    /// Indicator of active rectifier units per hidden layer (pre-dropout).
    pub relu_active: Vec<Array2<f64>>,
    /// Scaled dropout masks per hidden layer, when training with dropout.
    pub masks: Option<Vec<Array2<f64>>>,
    pub output: Array2<f64>,
}

/// Scaled dropout masks for the hidden activations: entries are
/// `1/(1-rate)` with probability `1-rate` and `0` otherwise, so the
/// expected masked activation equals the unmasked one.
pub(crate) fn draw_masks(
    hidden_shapes: &[(usize, usize)],
    rate: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Array2<f64>> {
    let keep_scale = 1.0 / (1.0 - rate);
    hidden_shapes
        .iter()
        .map(|&(rows, cols)| {
            Array2::from_shape_fn((rows, cols), |_| {
                if rng.gen::<f64>() < rate {
                    0.0
                } else {
                    keep_scale
                }
            })
        })
        .collect()
}

pub(crate) fn forward_cached(
    params: &Params,
    model: &MlpModel,
    inputs: ArrayView2<f64>,
    masks: Option<Vec<Array2<f64>>>,
) -> Result<ForwardCache, MlpError> {
    if inputs.ncols() != model.spec.input_dim {
        return Err(MlpError::ShapeMismatch {
            context: "forward inputs".into(),
            expected: format!("{} columns", model.spec.input_dim),
            got: format!("{} columns", inputs.ncols()),
        });
    }
    let n_hidden = model.spec.hidden_widths.len();
    let mut acts: Vec<Array2<f64>> = Vec::with_capacity(n_hidden);
    let mut relu_active: Vec<Array2<f64>> = Vec::with_capacity(n_hidden);

    let mut current = inputs.to_owned();
    for l in 0..n_hidden {
        let mut z = current.dot(&params.w[l]);
        z += &params.b[l];
        let active = z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        z.mapv_inplace(|v| v.max(0.0));
        relu_active.push(active);
        if let Some(mask_set) = &masks {
            z *= &mask_set[l];
        }
        acts.push(z.clone());
        current = z;
    }
    let mut out = current.dot(&params.w[n_hidden]);
    out += &params.b[n_hidden];
    if model.spec.output_activation == OutputActivation::Sigmoid {
        out.mapv_inplace(sigmoid);
    }
    Ok(ForwardCache {
        acts,
        relu_active,
        masks,
        output: out,
    })
}

/// Batched evaluation of the network.
///
/// In train mode with a positive dropout rate a random stream must be
/// supplied for the masks; infer mode never needs one because masking uses
/// inverted scaling at train time.
pub fn forward(
    model: &MlpModel,
    inputs: ArrayView2<f64>,
    mode: ForwardMode,
    dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<Array2<f64>, MlpError> {
    let params = Params::from_model(model);
    let masks = match (mode, model.spec.dropout_rate > 0.0) {
        (ForwardMode::Train, true) => {
            let rng = dropout_rng.ok_or_else(|| {
                MlpError::InvalidSpec(
                    "train-mode forward with dropout requires a random stream".into(),
                )
            })?;
            let shapes: Vec<(usize, usize)> = model
                .spec
                .hidden_widths
                .iter()
                .map(|&w| (inputs.nrows(), w))
                .collect();
            Some(draw_masks(&shapes, model.spec.dropout_rate, rng))
        }
        _ => None,
    };
    Ok(forward_cached(&params, model, inputs, masks)?.output)
}

/// Mean squared error and its full parameter gradient by backpropagation,
/// evaluated without dropout.
pub fn loss_and_gradient(
    model: &MlpModel,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
) -> Result<(f64, Gradients), MlpError> {
    let params = Params::from_model(model);
    masked_loss_and_gradient(&params, model, inputs, targets, None, 0)
}

/// Backpropagation with optional pre-drawn dropout masks; `epoch` only
/// labels a potential non-finite-loss error.
pub(crate) fn masked_loss_and_gradient(
    params: &Params,
    model: &MlpModel,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    masks: Option<Vec<Array2<f64>>>,
    epoch: usize,
) -> Result<(f64, Gradients), MlpError> {
    if targets.ncols() != model.spec.output_dim || targets.nrows() != inputs.nrows() {
        return Err(MlpError::ShapeMismatch {
            context: "loss targets".into(),
            expected: format!("{} x {}", inputs.nrows(), model.spec.output_dim),
            got: format!("{} x {}", targets.nrows(), targets.ncols()),
        });
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(MlpError::NonFiniteLoss { epoch });
    }
    let cache = forward_cached(params, model, inputs, masks)?;
    let n = inputs.nrows() as f64;
    let d_out = model.spec.output_dim as f64;

    let diff = &cache.output - &targets;
    let mse = diff.iter().map(|v| v * v).sum::<f64>() / (n * d_out);
    if !mse.is_finite() {
        return Err(MlpError::NonFiniteLoss { epoch });
    }

    // output-layer delta: d(mse)/d(pre-activation)
    let mut delta = diff.mapv(|v| 2.0 * v / (n * d_out));
    if model.spec.output_activation == OutputActivation::Sigmoid {
        delta = delta * &cache.output.mapv(|o| o * (1.0 - o));
    }

    let n_layers = model.layers.len();
    let mut grad_w: Vec<Array2<f64>> = vec![Array2::zeros((0, 0)); n_layers];
    let mut grad_b: Vec<Array1<f64>> = vec![Array1::zeros(0); n_layers];
    for l in (0..n_layers).rev() {
        let layer_input = if l == 0 {
            inputs.to_owned()
        } else {
            cache.acts[l - 1].clone()
        };
        grad_w[l] = layer_input.t().dot(&delta);
        grad_b[l] = delta.sum_axis(Axis(0));
        if l > 0 {
            let mut upstream = delta.dot(&params.w[l].t());
            if let Some(mask_set) = &cache.masks {
                upstream *= &mask_set[l - 1];
            }
            upstream *= &cache.relu_active[l - 1];
            delta = upstream;
        }
    }
    Ok((
        mse,
        Gradients {
            weights: grad_w,
            biases: grad_b,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, Layer};
    use crate::spec::{MlpSpec, OutputActivation};
    use approx::assert_abs_diff_eq;
    use histborrow_core::streams::substream;
    use ndarray::array;

    fn zeroed(spec: &MlpSpec) -> MlpModel {
        let mut m = init_model(spec, 0).unwrap();
        for l in &mut m.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        m
    }

    #[test]
    fn zero_network_emits_half_under_sigmoid() {
        let model = zeroed(&MlpSpec::sigmoid(3, vec![4], 2));
        let out = forward(&model, array![[0.2, 0.9, 0.5]].view(), ForwardMode::Infer, None)
            .unwrap();
        assert!(out.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn identity_linear_layer_passes_input_through() {
        let mut model = zeroed(&MlpSpec {
            output_activation: OutputActivation::Linear,
            ..MlpSpec::sigmoid(2, vec![], 2)
        });
        model.layers[0] = Layer {
            fan_in: 2,
            fan_out: 2,
            weights: vec![1.0, 0.0, 0.0, 1.0],
            biases: vec![0.0, 0.0],
        };
        let x = array![[0.3, -0.7], [2.0, 0.25]];
        let out = forward(&model, x.view(), ForwardMode::Infer, None).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn hand_computed_two_layer_network() {
        // 2 -> [2] -> 1, relu hidden, linear output
        let mut model = zeroed(&MlpSpec {
            output_activation: OutputActivation::Linear,
            ..MlpSpec::sigmoid(2, vec![2], 1)
        });
        model.layers[0] = Layer {
            fan_in: 2,
            fan_out: 2,
            weights: vec![1.0, -1.0, 2.0, 1.0], // row-major [in x out]
            biases: vec![0.5, -0.5],
        };
        model.layers[1] = Layer {
            fan_in: 2,
            fan_out: 1,
            weights: vec![3.0, -2.0],
            biases: vec![0.25],
        };
        // x = (1, 2): z1 = (1*1+2*2+0.5, 1*-1+2*1-0.5) = (5.5, 0.5)
        // relu keeps both; out = 3*5.5 - 2*0.5 + 0.25 = 15.75
        let out = forward(&model, array![[1.0, 2.0]].view(), ForwardMode::Infer, None).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], 15.75, epsilon = 1e-12);

        // x = (-1, 0): z1 = (-0.5, 0.5), relu -> (0, 0.5)
        // out = 3*0 - 2*0.5 + 0.25 = -0.75
        let out = forward(&model, array![[-1.0, 0.0]].view(), ForwardMode::Infer, None).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], -0.75, epsilon = 1e-12);
    }

    #[test]
    fn perfect_fit_has_zero_loss_and_gradients() {
        let spec = MlpSpec::sigmoid(2, vec![3], 1);
        let model = init_model(&spec, 5).unwrap();
        let x = array![[0.1, 0.4], [0.9, 0.2]];
        let y = forward(&model, x.view(), ForwardMode::Infer, None).unwrap();
        let (mse, grads) = loss_and_gradient(&model, x.view(), y.view()).unwrap();
        assert_eq!(mse, 0.0);
        assert!(grads.weights.iter().all(|g| g.iter().all(|&v| v == 0.0)));
        assert!(grads.biases.iter().all(|g| g.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn single_linear_unit_gradient() {
        let w = -0.37;
        let mut model = zeroed(&MlpSpec {
            output_activation: OutputActivation::Linear,
            ..MlpSpec::sigmoid(1, vec![], 1)
        });
        model.layers[0].weights[0] = w;
        let (mse, grads) =
            loss_and_gradient(&model, array![[1.0]].view(), array![[0.0]].view()).unwrap();
        assert_abs_diff_eq!(mse, w * w, epsilon = 1e-15);
        assert_abs_diff_eq!(grads.weights[0][[0, 0]], 2.0 * w, epsilon = 1e-15);
    }

    #[test]
    fn non_finite_targets_are_rejected() {
        let spec = MlpSpec::sigmoid(1, vec![], 1);
        let model = init_model(&spec, 1).unwrap();
        let out = loss_and_gradient(&model, array![[0.5]].view(), array![[f64::NAN]].view());
        assert!(matches!(out, Err(MlpError::NonFiniteLoss { .. })));
    }

    #[test]
    fn dropout_mask_expectation_preserves_activations() {
        let rate = 0.1;
        let mut rng = substream(9, "test/dropout", &[]);
        let draws = 100_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let mask = draw_masks(&[(1, 1)], rate, &mut rng);
            sum += mask[0][[0, 0]];
        }
        let mean = sum / draws as f64;
        assert!(
            (mean - 1.0).abs() < 0.02,
            "inverted scaling should have unit mean, got {mean}"
        );
    }

    #[test]
    fn sigmoid_outputs_stay_in_unit_interval() {
        let spec = MlpSpec::sigmoid(3, vec![8, 8], 2);
        let mut model = init_model(&spec, 3).unwrap();
        // inflate weights to push pre-activations far out
        for l in &mut model.layers {
            l.weights.iter_mut().for_each(|w| *w *= 50.0);
        }
        let x = array![[100.0, -40.0, 3.0], [0.0, 0.0, 0.0]];
        let out = forward(&model, x.view(), ForwardMode::Infer, None).unwrap();
        assert!(out.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let spec = MlpSpec::sigmoid(3, vec![4], 1);
        let model = init_model(&spec, 1).unwrap();
        let out = forward(&model, array![[1.0, 2.0]].view(), ForwardMode::Infer, None);
        assert!(matches!(out, Err(MlpError::ShapeMismatch { .. })));
    }
}
