//! Mini-batch RMSProp training and k-fold cross-validation.

use histborrow_core::streams::substream;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::MlpError;
use crate::model::{init_model, MlpModel, TrainingSummary};
use crate::net::{draw_masks, forward, masked_loss_and_gradient, ForwardMode, Params};
use crate::spec::{MlpSpec, TrainConfig};

/// Stable 64-bit FNV-1a digest of a spec's JSON form, used to derive
/// per-candidate training streams from the candidate's content rather
/// than its position, so identical candidates train identically.
fn spec_digest(spec: &MlpSpec) -> u64 {
    let json = serde_json::to_string(spec).expect("spec serializes");
    let mut hash = 0xcbf29ce484222325u64;
    for &b in json.as_bytes() {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn mse_of(model: &MlpModel, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64, MlpError> {
    let out = forward(model, x, ForwardMode::Infer, None)?;
    let diff = &out - &y;
    Ok(diff.iter().map(|v| v * v).sum::<f64>() / (x.nrows().max(1) as f64 * y.ncols() as f64))
}

/// Trains the model in place with seeded mini-batch RMSProp and returns it
/// with a populated training summary.
///
/// Mini-batches are formed by reshuffling the training rows each epoch
/// from a derived stream; with a positive `holdout_fraction` a seeded
/// split reserves rows for the validation summary.
pub fn train(
    mut model: MlpModel,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    cfg: &TrainConfig,
) -> Result<MlpModel, MlpError> {
    cfg.validate()?;
    model.spec.validate()?;
    let n = inputs.nrows();
    if n == 0 {
        return Err(MlpError::InvalidSpec("training dataset is empty".into()));
    }
    if targets.nrows() != n || targets.ncols() != model.spec.output_dim {
        return Err(MlpError::ShapeMismatch {
            context: "training targets".into(),
            expected: format!("{} x {}", n, model.spec.output_dim),
            got: format!("{} x {}", targets.nrows(), targets.ncols()),
        });
    }

    // holdout split
    let mut order: Vec<usize> = (0..n).collect();
    let mut split_rng = substream(cfg.seed, "mlp/holdout", &[]);
    order.shuffle(&mut split_rng);
    let val_count = ((cfg.holdout_fraction * n as f64).round() as usize).min(n.saturating_sub(1));
    let (val_idx, train_idx) = order.split_at(val_count);
    let train_x = inputs.select(Axis(0), train_idx);
    let train_y = targets.select(Axis(0), train_idx);
    let val_x = inputs.select(Axis(0), val_idx);
    let val_y = targets.select(Axis(0), val_idx);

    let mut params = Params::from_model(&model);
    let mut sq_w: Vec<Array2<f64>> = params.w.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
    let mut sq_b: Vec<Array1<f64>> = params.b.iter().map(|b| Array1::zeros(b.raw_dim())).collect();

    let n_train = train_x.nrows();
    let mut epoch_order: Vec<usize> = (0..n_train).collect();
    for epoch in 0..cfg.epochs {
        let mut shuffle_rng = substream(cfg.seed, "mlp/epoch-shuffle", &[epoch as u64]);
        epoch_order.shuffle(&mut shuffle_rng);
        for (batch_no, batch_idx) in epoch_order.chunks(cfg.batch_size).enumerate() {
            let bx = train_x.select(Axis(0), batch_idx);
            let by = train_y.select(Axis(0), batch_idx);
            let masks = if model.spec.dropout_rate > 0.0 {
                let mut mask_rng =
                    substream(cfg.seed, "mlp/dropout", &[epoch as u64, batch_no as u64]);
                let shapes: Vec<(usize, usize)> = model
                    .spec
                    .hidden_widths
                    .iter()
                    .map(|&w| (bx.nrows(), w))
                    .collect();
                Some(draw_masks(&shapes, model.spec.dropout_rate, &mut mask_rng))
            } else {
                None
            };
            let (_, grads) =
                masked_loss_and_gradient(&params, &model, bx.view(), by.view(), masks, epoch)?;

            // RMSProp: s <- rho s + (1-rho) g^2; p <- p - lr g / sqrt(s + eps)
            let rho = cfg.rmsprop_decay;
            let lr = cfg.learning_rate;
            let eps = cfg.rmsprop_epsilon;
            for l in 0..params.w.len() {
                ndarray::Zip::from(&mut sq_w[l])
                    .and(&grads.weights[l])
                    .for_each(|s, &g| *s = rho * *s + (1.0 - rho) * g * g);
                ndarray::Zip::from(&mut params.w[l])
                    .and(&grads.weights[l])
                    .and(&sq_w[l])
                    .for_each(|p, &g, &s| *p -= lr * g / (s + eps).sqrt());
                ndarray::Zip::from(&mut sq_b[l])
                    .and(&grads.biases[l])
                    .for_each(|s, &g| *s = rho * *s + (1.0 - rho) * g * g);
                ndarray::Zip::from(&mut params.b[l])
                    .and(&grads.biases[l])
                    .and(&sq_b[l])
                    .for_each(|p, &g, &s| *p -= lr * g / (s + eps).sqrt());
            }
        }
    }

    params.write_back(&mut model);
    let train_mse = mse_of(&model, train_x.view(), train_y.view())?;
    let validation_mse = if val_count > 0 {
        Some(mse_of(&model, val_x.view(), val_y.view())?)
    } else {
        None
    };
    model.training_summary = Some(TrainingSummary {
        train_mse,
        validation_mse,
    });
    Ok(model)
}

/// Cross-validation outcome: the winning architecture and every
/// candidate's mean validation error, in candidate order.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub best: MlpSpec,
    pub validation_mse: Vec<f64>,
}

/// Scores each candidate by k-fold cross-validation and returns the one
/// with the smallest mean validation error.
///
/// Folds are a seeded partition shared by all candidates. Per-candidate
/// streams derive from the candidate's content, so identical candidates
/// score identically and ties resolve by parameter count, then by
/// candidate order. A candidate whose training fails scores infinity.
pub fn cross_validate(
    candidates: &[MlpSpec],
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    cfg: &TrainConfig,
) -> Result<CvOutcome, MlpError> {
    assert!(!candidates.is_empty(), "at least one candidate required");
    cfg.validate()?;
    let n = inputs.nrows();
    if n < cfg.folds {
        return Err(MlpError::InvalidSpec(format!(
            "{} rows cannot form {} folds",
            n, cfg.folds
        )));
    }

    // one seeded partition, reused for every candidate
    let mut perm: Vec<usize> = (0..n).collect();
    let mut fold_rng = substream(cfg.seed, "mlp/cv-folds", &[]);
    perm.shuffle(&mut fold_rng);
    let folds: Vec<(Array2<f64>, Array2<f64>, Array2<f64>, Array2<f64>)> = (0..cfg.folds)
        .map(|f| {
            let (mut val_idx, mut train_idx) = (Vec::new(), Vec::new());
            for (pos, &row) in perm.iter().enumerate() {
                if pos % cfg.folds == f {
                    val_idx.push(row);
                } else {
                    train_idx.push(row);
                }
            }
            (
                inputs.select(Axis(0), &train_idx),
                targets.select(Axis(0), &train_idx),
                inputs.select(Axis(0), &val_idx),
                targets.select(Axis(0), &val_idx),
            )
        })
        .collect();

    let mut last_error = None;
    let mut scores = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let digest = spec_digest(cand);
        let mut total = 0.0;
        let mut failed = false;
        for (f, (tx, ty, vx, vy)) in folds.iter().enumerate() {
            let mut seed_rng = substream(cfg.seed, "mlp/cv-train", &[digest, f as u64]);
            let fold_seed: u64 = seed_rng.gen();
            let mut fold_cfg = cfg.clone();
            fold_cfg.holdout_fraction = 0.0;
            fold_cfg.seed = fold_seed;
            let outcome = init_model(cand, fold_seed)
                .and_then(|m| train(m, tx.view(), ty.view(), &fold_cfg))
                .and_then(|m| mse_of(&m, vx.view(), vy.view()));
            match outcome {
                Ok(mse) => total += mse,
                Err(e) => {
                    last_error = Some(e);
                    failed = true;
                    break;
                }
            }
        }
        scores.push(if failed {
            f64::INFINITY
        } else {
            total / cfg.folds as f64
        });
    }

    let mut best = 0usize;
    for (i, cand) in candidates.iter().enumerate().skip(1) {
        let better = scores[i] < scores[best]
            || (scores[i] == scores[best]
                && cand.param_count() < candidates[best].param_count());
        if better {
            best = i;
        }
    }
    if scores[best].is_infinite() {
        return Err(last_error.unwrap_or(MlpError::InvalidSpec(
            "every candidate failed cross-validation".into(),
        )));
    }
    Ok(CvOutcome {
        best: candidates[best].clone(),
        validation_mse: scores,
    })
}

/// The default architecture search grid: one to three hidden layers,
/// widths 20/50/60, dropout off or 0.1, sigmoid outputs.
pub fn default_candidate_grid(input_dim: usize, output_dim: usize) -> Vec<MlpSpec> {
    let mut grid = Vec::new();
    for &layers in &[1usize, 2, 3] {
        for &width in &[20usize, 50, 60] {
            for &dropout in &[0.0, 0.1] {
                grid.push(
                    MlpSpec::sigmoid(input_dim, vec![width; layers], output_dim)
                        .with_dropout(dropout),
                );
            }
        }
    }
    grid
}
