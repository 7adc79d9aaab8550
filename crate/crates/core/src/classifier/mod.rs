//! Feed-forward dialect classifier.
//!
//! The network is a projection layer to 256 followed by hidden layers
//! [256, 128, 64, 32] and a linear output over the four dialect classes.
//! Inverted dropout (p = 0.1, mask scaled by 1/0.9) is applied only after
//! the first hidden layer's activation, and only in training mode; in eval
//! mode dropout is the identity. Training uses Adam at lr 1e-4 with
//! cross-entropy loss, 50 epochs, batches of 100, keeping the parameter
//! snapshot of the epoch with the best validation accuracy (first epoch
//! wins ties). The activation (ReLU by default) and the fan-based uniform
//! initialization are configurable choices; everything is seeded through
//! the pinned generator so runs are bit-reproducible on one platform.

mod checkpoint;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader, CHECKPOINT_FORMAT};
pub use train::{train, AdamState, TrainingHistory};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Xoshiro256pp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - pre.tanh().powi(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub layer_sizes: Vec<usize>,
    pub n_classes: usize,
    pub dropout_p: f64,
    pub activation: Activation,
    pub seed: u64,
}

impl ModelConfig {
    /// The standard recipe: hidden layers [256, 128, 64, 32], 4 classes,
    /// dropout 0.1, ReLU.
    pub fn standard(input_dim: usize, seed: u64) -> Self {
        Self {
            input_dim,
            layer_sizes: vec![256, 128, 64, 32],
            n_classes: 4,
            dropout_p: 0.1,
            activation: Activation::Relu,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidParam("input_dim must be positive".into()));
        }
        if self.layer_sizes.is_empty() || self.layer_sizes.contains(&0) {
            return Err(Error::InvalidParam(
                "layer_sizes must be nonempty and positive".into(),
            ));
        }
        if self.n_classes < 2 {
            return Err(Error::InvalidParam("n_classes must be ≥ 2".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::InvalidParam(format!(
                "dropout_p {} outside [0, 1)",
                self.dropout_p
            )));
        }
        Ok(())
    }

    /// Layer dimensions chained input → hidden layers → classes.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.layer_sizes.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.layer_sizes);
        dims.push(self.n_classes);
        dims
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            epochs: 50,
            batch_size: 100,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.lr < 0.0
            || self.epochs == 0
            || self.batch_size == 0
            || !(0.0..1.0).contains(&self.adam_beta1)
            || !(0.0..1.0).contains(&self.adam_beta2)
            || self.adam_eps <= 0.0
        {
            return Err(Error::InvalidParam("invalid hyperparameters".into()));
        }
        Ok(())
    }
}

/// One affine layer, weights row-major out × in.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl DenseLayer {
    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.b[o];
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            out.push(acc);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layers: Vec<DenseLayer>,
}

/// Gradients in the same shape as the parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

impl Gradients {
    fn zeros_like(params: &ModelParams) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| LayerGrad {
                    dw: vec![0.0; l.w.len()],
                    db: vec![0.0; l.b.len()],
                })
                .collect(),
        }
    }
}

/// Fan-based uniform initialization: weights in
/// ±sqrt(6/(fan_in + fan_out)) under the seeded generator, biases zero.
pub fn init_model(config: &ModelConfig) -> Result<ModelParams> {
    config.validate()?;
    let mut rng = Xoshiro256pp::seed_from_u64(config.seed);
    let dims = config.layer_dims();
    let layers = dims
        .windows(2)
        .map(|pair| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let w = (0..fan_in * fan_out)
                .map(|_| rng.range_f64(-limit, limit))
                .collect();
            DenseLayer {
                w,
                b: vec![0.0; fan_out],
                in_dim: fan_in,
                out_dim: fan_out,
            }
        })
        .collect();
    Ok(ModelParams { layers })
}

/// Configuration plus parameters; the unit of prediction and persistence.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Self> {
        let params = init_model(&config)?;
        Ok(Self { config, params })
    }

    fn check_batch(&self, batch: &[Vec<f64>]) -> Result<()> {
        for (i, x) in batch.iter().enumerate() {
            if x.len() != self.config.input_dim {
                return Err(Error::DimMismatch(format!(
                    "sample {i} has {} dims, model expects {}",
                    x.len(),
                    self.config.input_dim
                )));
            }
        }
        Ok(())
    }

    /// Inverted dropout mask for one batch: entries are 0 with probability
    /// p, otherwise 1/(1−p).
    fn dropout_mask(&self, batch_len: usize, dropout_seed: u64) -> Vec<Vec<f64>> {
        let p = self.config.dropout_p;
        let scale = 1.0 / (1.0 - p);
        let width = self.config.layer_sizes[0];
        let mut rng = Xoshiro256pp::seed_from_u64(dropout_seed);
        (0..batch_len)
            .map(|_| {
                (0..width)
                    .map(|_| if rng.next_f64() < p { 0.0 } else { scale })
                    .collect()
            })
            .collect()
    }

    fn forward_pass(
        &self,
        batch: &[Vec<f64>],
        train_mode: bool,
        dropout_seed: u64,
    ) -> Result<ForwardPass> {
        self.check_batch(batch)?;
        let n_layers = self.params.layers.len();
        let use_dropout = train_mode && self.config.dropout_p > 0.0;
        let mask = if use_dropout {
            Some(self.dropout_mask(batch.len(), dropout_seed))
        } else {
            None
        };
        // inputs[l] = batch input to layer l; inputs[n_layers] = logits
        let mut inputs: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n_layers + 1);
        let mut preacts: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n_layers - 1);
        inputs.push(batch.to_vec());
        for (l, layer) in self.params.layers.iter().enumerate() {
            let is_output = l == n_layers - 1;
            let mut layer_pre = Vec::with_capacity(batch.len());
            let mut layer_out = Vec::with_capacity(batch.len());
            for (i, x) in inputs[l].iter().enumerate() {
                let mut pre = Vec::with_capacity(layer.out_dim);
                layer.affine(x, &mut pre);
                if is_output {
                    layer_out.push(pre);
                } else {
                    let mut act: Vec<f64> = pre
                        .iter()
                        .map(|&v| self.config.activation.apply(v))
                        .collect();
                    if l == 0 {
                        if let Some(mask) = &mask {
                            for (a, m) in act.iter_mut().zip(&mask[i]) {
                                *a *= m;
                            }
                        }
                    }
                    layer_pre.push(pre);
                    layer_out.push(act);
                }
            }
            if !is_output {
                preacts.push(layer_pre);
            }
            inputs.push(layer_out);
        }
        let logits = inputs.pop().expect("logits present");
        Ok(ForwardPass {
            inputs,
            preacts,
            mask,
            logits,
        })
    }

    /// Batch logits. In eval mode (`train_mode = false`) the dropout seed
    /// is ignored and dropout is the identity.
    pub fn forward(
        &self,
        batch: &[Vec<f64>],
        train_mode: bool,
        dropout_seed: u64,
    ) -> Result<Vec<Vec<f64>>> {
        Ok(self.forward_pass(batch, train_mode, dropout_seed)?.logits)
    }

    /// Mean batch loss and exact gradients of it with respect to every
    /// parameter, via backpropagation through the same forward pass
    /// (including the dropout mask when `train_mode` is set).
    pub fn backward(
        &self,
        batch: &[Vec<f64>],
        labels: &[usize],
        train_mode: bool,
        dropout_seed: u64,
    ) -> Result<(f64, Gradients)> {
        let pass = self.forward_pass(batch, train_mode, dropout_seed)?;
        let loss = cross_entropy(&pass.logits, labels)?;
        let grads = self.backprop(&pass, labels);
        Ok((loss, grads))
    }

    fn backprop(&self, pass: &ForwardPass, labels: &[usize]) -> Gradients {
        let n = pass.logits.len() as f64;
        let n_layers = self.params.layers.len();
        let mut grads = Gradients::zeros_like(&self.params);
        // delta at the output: (softmax − onehot)/n per sample
        let mut deltas: Vec<Vec<f64>> = pass
            .logits
            .iter()
            .zip(labels)
            .map(|(logits, &label)| {
                let mut d = softmax(logits);
                d[label] -= 1.0;
                for v in &mut d {
                    *v /= n;
                }
                d
            })
            .collect();
        for l in (0..n_layers).rev() {
            let layer = &self.params.layers[l];
            let grad = &mut grads.layers[l];
            for (i, delta) in deltas.iter().enumerate() {
                let x = &pass.inputs[l][i];
                for (o, &d) in delta.iter().enumerate() {
                    grad.db[o] += d;
                    let row = &mut grad.dw[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (g, &xi) in row.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
            }
            if l == 0 {
                break;
            }
            // propagate to the previous layer's activation output
            let prev_pre = &pass.preacts[l - 1];
            deltas = deltas
                .iter()
                .enumerate()
                .map(|(i, delta)| {
                    let mut dx = vec![0.0; layer.in_dim];
                    for (o, &d) in delta.iter().enumerate() {
                        let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                        for (g, &w) in dx.iter_mut().zip(row) {
                            *g += d * w;
                        }
                    }
                    // dropout sits between layer 0's activation and layer 1
                    if l == 1 {
                        if let Some(mask) = &pass.mask {
                            for (g, &m) in dx.iter_mut().zip(&mask[i]) {
                                *g *= m;
                            }
                        }
                    }
                    for (g, &pre) in dx.iter_mut().zip(&prev_pre[i]) {
                        *g *= self.config.activation.derivative(pre);
                    }
                    dx
                })
                .collect();
        }
        grads
    }
}

struct ForwardPass {
    /// `inputs[l]` is the batch input to layer l.
    inputs: Vec<Vec<Vec<f64>>>,
    /// Pre-activations of the hidden layers (for activation derivatives).
    preacts: Vec<Vec<Vec<f64>>>,
    mask: Option<Vec<Vec<f64>>>,
    logits: Vec<Vec<f64>>,
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean of `−log softmax(logits)[label]` over the batch, computed through
/// the log-sum-exp identity.
pub fn cross_entropy(logits: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if logits.len() != labels.len() {
        return Err(Error::DimMismatch(format!(
            "{} logit rows vs {} labels",
            logits.len(),
            labels.len()
        )));
    }
    if logits.is_empty() {
        return Err(Error::InvalidParam("empty batch".into()));
    }
    let mut total = 0.0;
    for (row, &label) in logits.iter().zip(labels) {
        if label >= row.len() {
            return Err(Error::LabelOutOfRange {
                got: label,
                n_classes: row.len(),
            });
        }
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
        total += lse - row[label];
    }
    Ok(total / logits.len() as f64)
}

/// Argmax with ties broken toward the lowest index.
pub fn argmax_tie_low(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

/// Eval-mode prediction for one vector: class index and softmax posterior.
pub fn predict(model: &Model, vector: &[f64]) -> Result<(usize, Vec<f64>)> {
    let logits = model.forward(std::slice::from_ref(&vector.to_vec()), false, 0)?;
    let posterior = softmax(&logits[0]);
    Ok((argmax_tie_low(&posterior), posterior))
}
