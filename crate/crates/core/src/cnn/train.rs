//! Minibatch training and inference-mode evaluation.

use super::adam::{adam_step, AdamConfig, AdamState};
use super::arch::{build_architecture, ArchSpec};
use super::checkpoint::Checkpoint;
use super::network::Network;
use super::ops::{softmax_xent};
use super::tensor::Tensor;
use crate::drwcc::FeatureMask;
use crate::error::{Error, Result};
use crate::integrate::rng::stream;
use crate::integrate::{IhardsDataset, SeededRng, StandardizationStats};
use crate::matrix::Matrix;

pub const EVAL_BATCH: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub repeats: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 500,
            epochs: 10,
            repeats: 10,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-7,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.epochs == 0 || self.repeats == 0 {
            return Err(Error::Config("batch_size, epochs and repeats must be >= 1".into()));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must be in [0, 1), got {b}")));
            }
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(Error::Config(format!("adam_epsilon must be > 0, got {}", self.adam_epsilon)));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

/// Root seed of repeat `r`: repeat 0 uses `seed` itself, later repeats draw
/// from the REPEAT stream.
pub fn repeat_seed(seed: u64, r: usize) -> u64 {
    if r == 0 {
        return seed;
    }
    let mut rng = SeededRng::derive(seed, stream::REPEAT);
    let mut s = 0;
    for _ in 0..r {
        s = rng.next_u64();
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean train-mode minibatch loss over the epoch.
    pub loss: f64,
    /// Train-mode minibatch accuracy over the epoch.
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub curve: Vec<EpochRecord>,
    /// Inference-mode predictions on the training rows, in row order.
    pub train_predictions: Vec<u8>,
    pub train_accuracy: f64,
}

/// Rows `idx` of `data` as a `[idx.len(), cols]` tensor.
pub(crate) fn gather(data: &Matrix<f32>, idx: &[usize]) -> Tensor {
    let cols = data.cols();
    let mut v = Vec::with_capacity(idx.len() * cols);
    for &i in idx {
        v.extend(data.row(i).iter().map(|&x| x as f64));
    }
    Tensor::new(vec![idx.len(), cols], v).expect("gather shape")
}

pub(crate) fn argmax_rows(logits: &Tensor) -> Vec<u8> {
    let c = logits.dim(1);
    logits
        .data()
        .chunks_exact(c)
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best as u8
        })
        .collect()
}

/// Batch boundaries for one epoch. With batch-norm a trailing batch of one
/// row is folded into the previous batch (batch variance is undefined).
fn batch_ranges(rows: usize, batch: usize, batch_norm: bool) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..rows).step_by(batch).map(|s| (s, (s + batch).min(rows))).collect();
    if batch_norm && out.len() > 1 && out.last().is_some_and(|&(s, e)| e - s == 1) {
        let (_, e) = out.pop().unwrap();
        out.last_mut().unwrap().1 = e;
    }
    out
}

/// Runs the training loop on `net` in place. `on_epoch` sees each record as
/// it is produced.
pub fn train_network(
    net: &mut Network,
    batch_norm: bool,
    train: &IhardsDataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<Vec<EpochRecord>> {
    cfg.validate()?;
    if train.rows() == 0 {
        return Err(Error::Shape("training set is empty".into()));
    }
    if train.cols() != net.input_features {
        return Err(Error::Shape(format!(
            "network takes {} features, training data has {}",
            net.input_features,
            train.cols()
        )));
    }
    if batch_norm && train.rows() < 2 {
        return Err(Error::Shape("batch-norm training needs at least 2 rows".into()));
    }
    let adam = cfg.adam();
    let mut states: Vec<AdamState> = net
        .layers
        .iter()
        .flat_map(|l| l.trainable())
        .map(|t| AdamState::new(t.len()))
        .collect();
    let mut order_rng = SeededRng::derive(cfg.seed, stream::BATCH_ORDER);
    let mut drop_rng = SeededRng::derive(cfg.seed, stream::DROPOUT);
    let mut order: Vec<usize> = (0..train.rows()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order_rng.shuffle(&mut order);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (step, (s, e)) in batch_ranges(order.len(), cfg.batch_size, batch_norm).into_iter().enumerate() {
            let idx = &order[s..e];
            let x = gather(&train.features, idx);
            let labels: Vec<u8> = idx.iter().map(|&i| train.labels[i]).collect();
            let logits = net.forward_train(&x, &mut drop_rng)?;
            let (loss, grad) = softmax_xent(&logits, &labels)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("loss is {loss} at epoch {epoch}, step {}", step + 1)));
            }
            loss_sum += loss * idx.len() as f64;
            correct += argmax_rows(&logits).iter().zip(&labels).filter(|(p, l)| p == l).count();
            net.backward(grad)?;
            let mut k = 0;
            for layer in &mut net.layers {
                for (p, g) in layer.params_and_grads() {
                    adam_step(p.data_mut(), g.data(), &mut states[k], &adam, &format!("tensor {k}"))
                        .map_err(|e| match e {
                            Error::Numeric(m) => Error::Numeric(format!("{m} at epoch {epoch}, step {}", step + 1)),
                            other => other,
                        })?;
                    k += 1;
                }
            }
        }
        let rec = EpochRecord {
            epoch,
            loss: loss_sum / train.rows() as f64,
            accuracy: correct as f64 / train.rows() as f64,
        };
        log::info!("epoch {}/{} loss={:.6} accuracy={:.6}", epoch, cfg.epochs, rec.loss, rec.accuracy);
        on_epoch(&rec);
        curve.push(rec);
    }
    Ok(curve)
}

/// Inference-mode class predictions and mean loss for preprocessed rows.
pub fn predict_network(net: &Network, features: &Matrix<f32>, labels: Option<&[u8]>) -> Result<(Vec<u8>, Option<f64>)> {
    if features.cols() != net.input_features {
        return Err(Error::Shape(format!(
            "model takes {} features, input has {}",
            net.input_features,
            features.cols()
        )));
    }
    let mut preds = Vec::with_capacity(features.rows());
    let mut loss_sum = 0.0;
    let idx: Vec<usize> = (0..features.rows()).collect();
    for chunk in idx.chunks(EVAL_BATCH) {
        let logits = net.infer(&gather(features, chunk))?;
        if let Some(i) = logits.data().iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite logit in inference at row {}",
                chunk[0] + i / logits.shape()[1]
            )));
        }
        if let Some(l) = labels {
            let (loss, _) = softmax_xent(&logits, &l[chunk[0]..chunk[0] + chunk.len()])?;
            loss_sum += loss * chunk.len() as f64;
        }
        preds.extend(argmax_rows(&logits));
    }
    let loss = labels.map(|_| if preds.is_empty() { 0.0 } else { loss_sum / preds.len() as f64 });
    Ok((preds, loss))
}

/// Initialises `spec` from `cfg.seed`, trains on already-preprocessed rows
/// and snapshots the result with identity preprocessing.
pub fn train_model(train: &IhardsDataset, spec: &ArchSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut net = build_architecture(spec, train.cols())?;
    net.initialize(&mut SeededRng::derive(cfg.seed, stream::WEIGHT_INIT));
    let curve = train_network(&mut net, spec.batch_norm, train, cfg, |_| {})?;
    let mut checkpoint = Checkpoint::from_network(
        spec,
        &net,
        &FeatureMask::all(train.cols()),
        &StandardizationStats::identity(train.cols()),
    )?;
    // predictions come from the stored (f32) weights, same as evaluate_model
    let stored = checkpoint.to_network()?;
    let (train_predictions, _) = predict_network(&stored, &train.features, None).map_err(|e| match e {
        Error::Numeric(m) => Error::Numeric(format!("{m} with the stored weights after epoch {}", cfg.epochs)),
        other => other,
    })?;
    let correct = train_predictions.iter().zip(&train.labels).filter(|(p, l)| p == l).count();
    let train_accuracy = correct as f64 / train.rows() as f64;
    if let Some(last) = curve.last() {
        checkpoint.metrics.insert("epochs".into(), cfg.epochs.to_string());
        checkpoint.metrics.insert("train_loss".into(), format!("{:?}", last.loss));
        checkpoint.metrics.insert("train_accuracy".into(), format!("{train_accuracy:?}"));
        checkpoint.metrics.insert("seed".into(), cfg.seed.to_string());
    }
    Ok(TrainOutcome {
        checkpoint,
        curve,
        train_predictions,
        train_accuracy,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub labels: Vec<u8>,
    pub predictions: Vec<u8>,
    pub loss: f64,
}

/// Inference on rows already masked and standardized to the checkpoint's
/// input width.
pub fn evaluate_model(ckpt: &Checkpoint, test: &IhardsDataset) -> Result<Evaluation> {
    if test.cols() != ckpt.input_features() {
        return Err(Error::Shape(format!(
            "checkpoint expects {} features, test data has {}",
            ckpt.input_features(),
            test.cols()
        )));
    }
    let net = ckpt.to_network()?;
    let (predictions, loss) = predict_network(&net, &test.features, Some(&test.labels))?;
    Ok(Evaluation {
        labels: test.labels.clone(),
        predictions,
        loss: loss.unwrap_or(0.0),
    })
}
