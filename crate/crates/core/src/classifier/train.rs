//! Adam optimization and the training loop.

use serde::{Deserialize, Serialize};

use super::{argmax_tie_low, cross_entropy, Gradients, Hyperparams, Model, ModelConfig};
use crate::error::{Error, Result};
use crate::rng::Xoshiro256pp;

/// Salt separating the training stream (epoch shuffles, dropout seeds)
/// from the initialization stream, which consumes `config.seed` directly.
const TRAIN_STREAM_SALT: u64 = 0x7472_6169_6e00_0000;

/// Adam first/second moment estimates with a global step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Gradients,
    v: Gradients,
    step: u64,
}

impl AdamState {
    pub fn new(model: &Model) -> Self {
        Self {
            m: Gradients::zeros_like(&model.params),
            v: Gradients::zeros_like(&model.params),
            step: 0,
        }
    }

    /// One Adam update with bias correction.
    pub fn apply(&mut self, model: &mut Model, grads: &Gradients, hp: &Hyperparams) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - hp.adam_beta1.powi(t);
        let bc2 = 1.0 - hp.adam_beta2.powi(t);
        for (l, layer) in model.params.layers.iter_mut().enumerate() {
            let (gm, gv, g) = (&mut self.m.layers[l], &mut self.v.layers[l], &grads.layers[l]);
            for (i, w) in layer.w.iter_mut().enumerate() {
                gm.dw[i] = hp.adam_beta1 * gm.dw[i] + (1.0 - hp.adam_beta1) * g.dw[i];
                gv.dw[i] = hp.adam_beta2 * gv.dw[i] + (1.0 - hp.adam_beta2) * g.dw[i] * g.dw[i];
                *w -= hp.lr * (gm.dw[i] / bc1) / ((gv.dw[i] / bc2).sqrt() + hp.adam_eps);
            }
            for (i, b) in layer.b.iter_mut().enumerate() {
                gm.db[i] = hp.adam_beta1 * gm.db[i] + (1.0 - hp.adam_beta1) * g.db[i];
                gv.db[i] = hp.adam_beta2 * gv.db[i] + (1.0 - hp.adam_beta2) * g.db[i] * g.db[i];
                *b -= hp.lr * (gm.db[i] / bc1) / ((gv.db[i] / bc2).sqrt() + hp.adam_eps);
            }
        }
    }
}

/// Per-epoch curves plus the index of the selected epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub train_loss: Vec<f64>,
    /// Percent, measured on the shuffled training batches (train mode).
    pub train_accuracy: Vec<f64>,
    /// Percent, measured on the validation set in eval mode.
    pub val_accuracy: Vec<f64>,
    /// 0-based epoch with the best validation accuracy (first on ties).
    pub best_epoch: usize,
}

/// Eval-mode accuracy in percent.
pub fn accuracy(model: &Model, xs: &[Vec<f64>], ys: &[usize]) -> Result<f64> {
    let logits = model.forward(xs, false, 0)?;
    let correct = logits
        .iter()
        .zip(ys)
        .filter(|(row, &y)| argmax_tie_low(row) == y)
        .count();
    Ok(100.0 * correct as f64 / ys.len() as f64)
}

/// Train a freshly initialized model.
///
/// Each epoch: seeded Fisher–Yates shuffle of the training set, batches of
/// `hp.batch_size` (the final incomplete batch is used), one Adam update
/// per batch, then validation accuracy in eval mode. Returns the model
/// with the parameter snapshot of the best epoch and the full history.
pub fn train(
    config: &ModelConfig,
    hp: &Hyperparams,
    train_x: &[Vec<f64>],
    train_y: &[usize],
    val_x: &[Vec<f64>],
    val_y: &[usize],
) -> Result<(Model, TrainingHistory)> {
    config.validate()?;
    hp.validate()?;
    if train_x.is_empty() || val_x.is_empty() {
        return Err(Error::InvalidParam("empty train or validation set".into()));
    }
    if train_x.len() != train_y.len() || val_x.len() != val_y.len() {
        return Err(Error::DimMismatch(format!(
            "inputs vs labels: train {}/{}, val {}/{}",
            train_x.len(),
            train_y.len(),
            val_x.len(),
            val_y.len()
        )));
    }
    for &y in train_y.iter().chain(val_y) {
        if y >= config.n_classes {
            return Err(Error::LabelOutOfRange {
                got: y,
                n_classes: config.n_classes,
            });
        }
    }
    let mut model = Model::new(config.clone())?;
    let mut adam = AdamState::new(&model);
    let mut rng = Xoshiro256pp::seed_from_u64(config.seed ^ TRAIN_STREAM_SALT);
    let mut history = TrainingHistory {
        train_loss: Vec::with_capacity(hp.epochs),
        train_accuracy: Vec::with_capacity(hp.epochs),
        val_accuracy: Vec::with_capacity(hp.epochs),
        best_epoch: 0,
    };
    let mut best: Option<(f64, Model)> = None;
    let mut indices: Vec<usize> = (0..train_x.len()).collect();
    for epoch in 0..hp.epochs {
        rng.shuffle(&mut indices);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in indices.chunks(hp.batch_size) {
            let batch: Vec<Vec<f64>> = chunk.iter().map(|&i| train_x[i].clone()).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| train_y[i]).collect();
            let dropout_seed = rng.next_u64();
            let logits = model.forward(&batch, true, dropout_seed)?;
            let loss = cross_entropy(&logits, &labels)?;
            correct += logits
                .iter()
                .zip(&labels)
                .filter(|(row, &y)| argmax_tie_low(row) == y)
                .count();
            let (_, grads) = model.backward(&batch, &labels, true, dropout_seed)?;
            adam.apply(&mut model, &grads, hp);
            loss_sum += loss * batch.len() as f64;
        }
        history.train_loss.push(loss_sum / train_x.len() as f64);
        history
            .train_accuracy
            .push(100.0 * correct as f64 / train_x.len() as f64);
        let val_acc = accuracy(&model, val_x, val_y)?;
        history.val_accuracy.push(val_acc);
        let improved = match &best {
            Some((best_acc, _)) => val_acc > *best_acc,
            None => true,
        };
        if improved {
            best = Some((val_acc, model.clone()));
            history.best_epoch = epoch;
        }
    }
    let (_, best_model) = best.expect("at least one epoch ran");
    Ok((best_model, history))
}
