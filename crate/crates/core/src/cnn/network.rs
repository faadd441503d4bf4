//! Layer pipeline with cached activations for backpropagation.

use super::ops::{self, BatchNormCache, Mode};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::integrate::SeededRng;

pub const BN_EPSILON: f64 = 1e-3;
pub const BN_MOMENTUM: f64 = 0.99;

#[derive(Debug, Clone)]
pub struct Conv1d {
    pub weight: Tensor,
    pub bias: Tensor,
    grad_weight: Tensor,
    grad_bias: Tensor,
    input: Option<Tensor>,
}

impl Conv1d {
    pub fn new(kernel: usize, in_channels: usize, filters: usize) -> Self {
        Conv1d {
            weight: Tensor::zeros(vec![kernel, in_channels, filters]),
            bias: Tensor::zeros(vec![filters]),
            grad_weight: Tensor::zeros(vec![kernel, in_channels, filters]),
            grad_bias: Tensor::zeros(vec![filters]),
            input: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
    grad_weight: Tensor,
    grad_bias: Tensor,
    input: Option<Tensor>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize) -> Self {
        Dense {
            weight: Tensor::zeros(vec![inputs, outputs]),
            bias: Tensor::zeros(vec![outputs]),
            grad_weight: Tensor::zeros(vec![inputs, outputs]),
            grad_bias: Tensor::zeros(vec![outputs]),
            input: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    pub eps: f64,
    pub momentum: f64,
    grad_gamma: Tensor,
    grad_beta: Tensor,
    cache: Option<BatchNormCache>,
}

impl BatchNorm {
    pub fn new(channels: usize) -> Self {
        BatchNorm {
            gamma: Tensor::filled(vec![channels], 1.0),
            beta: Tensor::zeros(vec![channels]),
            running_mean: Tensor::zeros(vec![channels]),
            running_var: Tensor::filled(vec![channels], 1.0),
            eps: BN_EPSILON,
            momentum: BN_MOMENTUM,
            grad_gamma: Tensor::zeros(vec![channels]),
            grad_beta: Tensor::zeros(vec![channels]),
            cache: None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Layer {
    Conv1d(Conv1d),
    Relu { input: Option<Tensor> },
    MaxPool1d { pool: usize, argmax: Option<(Vec<usize>, Vec<usize>)> },
    Dropout { rate: f64, mask: Option<Vec<f64>> },
    Flatten { in_shape: Option<Vec<usize>> },
    Dense(Dense),
    BatchNorm(BatchNorm),
}

impl Layer {
    pub fn relu() -> Self {
        Layer::Relu { input: None }
    }

    pub fn max_pool(pool: usize) -> Self {
        Layer::MaxPool1d { pool, argmax: None }
    }

    pub fn dropout(rate: f64) -> Self {
        Layer::Dropout { rate, mask: None }
    }

    pub fn flatten() -> Self {
        Layer::Flatten { in_shape: None }
    }

    pub fn describe(&self) -> String {
        match self {
            Layer::Conv1d(c) => format!(
                "conv1d(filters={},kernel={})",
                c.weight.dim(2),
                c.weight.dim(0)
            ),
            Layer::Relu { .. } => "relu".into(),
            Layer::MaxPool1d { pool, .. } => format!("maxpool1d({pool})"),
            Layer::Dropout { rate, .. } => format!("dropout({rate})"),
            Layer::Flatten { .. } => "flatten".into(),
            Layer::Dense(d) => format!("dense({})", d.weight.dim(1)),
            Layer::BatchNorm(b) => format!("batchnorm({})", b.gamma.len()),
        }
    }

    /// Pure inference pass; touches no cached state.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv1d(c) => ops::conv1d_forward(x, &c.weight, &c.bias),
            Layer::Relu { .. } => Ok(ops::relu(x)),
            Layer::MaxPool1d { pool, .. } => Ok(ops::maxpool1d(x, *pool)?.0),
            Layer::Dropout { .. } => Ok(x.clone()),
            Layer::Flatten { .. } => flatten(x),
            Layer::Dense(d) => ops::dense_affine(x, &d.weight, &d.bias),
            Layer::BatchNorm(b) => ops::batchnorm_infer(x, &b.gamma, &b.beta, &b.running_mean, &b.running_var, b.eps),
        }
    }

    /// Training pass: caches what backward needs and updates batch-norm
    /// running statistics.
    pub fn forward_train(&mut self, x: Tensor, rng: &mut SeededRng) -> Result<Tensor> {
        match self {
            Layer::Conv1d(c) => {
                let y = ops::conv1d_forward(&x, &c.weight, &c.bias)?;
                c.input = Some(x);
                Ok(y)
            }
            Layer::Relu { input } => {
                let y = ops::relu(&x);
                *input = Some(x);
                Ok(y)
            }
            Layer::MaxPool1d { pool, argmax } => {
                let (y, idx) = ops::maxpool1d(&x, *pool)?;
                *argmax = Some((idx, x.shape().to_vec()));
                Ok(y)
            }
            Layer::Dropout { rate, mask } => {
                let (y, m) = ops::dropout(&x, *rate, Mode::Train, rng)?;
                *mask = m;
                Ok(y)
            }
            Layer::Flatten { in_shape } => {
                *in_shape = Some(x.shape().to_vec());
                flatten(&x)
            }
            Layer::Dense(d) => {
                let y = ops::dense_affine(&x, &d.weight, &d.bias)?;
                d.input = Some(x);
                Ok(y)
            }
            Layer::BatchNorm(b) => {
                let (y, cache) = ops::batchnorm_train(&x, &b.gamma, &b.beta, b.eps)?;
                let m = b.momentum;
                for (r, v) in b.running_mean.data_mut().iter_mut().zip(&cache.mean) {
                    *r = m * *r + (1.0 - m) * v;
                }
                for (r, v) in b.running_var.data_mut().iter_mut().zip(&cache.var) {
                    *r = m * *r + (1.0 - m) * v;
                }
                b.cache = Some(cache);
                Ok(y)
            }
        }
    }

    /// Backward pass; stores parameter gradients and returns the input gradient.
    pub fn backward(&mut self, up: Tensor) -> Result<Tensor> {
        let missing = || Error::Shape("backward called without a cached forward pass".into());
        match self {
            Layer::Conv1d(c) => {
                let x = c.input.as_ref().ok_or_else(missing)?;
                let (gx, gw, gb) = ops::conv1d_backward(&up, x, &c.weight)?;
                c.grad_weight = gw;
                c.grad_bias = gb;
                Ok(gx)
            }
            Layer::Relu { input } => Ok(ops::relu_backward(&up, input.as_ref().ok_or_else(missing)?)),
            Layer::MaxPool1d { argmax, .. } => {
                let (idx, shape) = argmax.as_ref().ok_or_else(missing)?;
                ops::maxpool1d_backward(&up, idx, shape)
            }
            Layer::Dropout { mask, .. } => Ok(ops::dropout_backward(&up, mask.as_deref())),
            Layer::Flatten { in_shape } => up.reshape(in_shape.clone().ok_or_else(missing)?),
            Layer::Dense(d) => {
                let x = d.input.as_ref().ok_or_else(missing)?;
                let (gx, gw, gb) = ops::dense_backward(&up, x, &d.weight)?;
                d.grad_weight = gw;
                d.grad_bias = gb;
                Ok(gx)
            }
            Layer::BatchNorm(b) => {
                let cache = b.cache.as_ref().ok_or_else(missing)?;
                let (gx, gg, gb) = ops::batchnorm_backward(&up, cache, &b.gamma)?;
                b.grad_gamma = gg;
                b.grad_beta = gb;
                Ok(gx)
            }
        }
    }

    /// Trainable parameters paired with their latest gradients.
    pub fn params_and_grads(&mut self) -> Vec<(&mut Tensor, &Tensor)> {
        match self {
            Layer::Conv1d(c) => vec![(&mut c.weight, &c.grad_weight), (&mut c.bias, &c.grad_bias)],
            Layer::Dense(d) => vec![(&mut d.weight, &d.grad_weight), (&mut d.bias, &d.grad_bias)],
            Layer::BatchNorm(b) => vec![(&mut b.gamma, &b.grad_gamma), (&mut b.beta, &b.grad_beta)],
            _ => Vec::new(),
        }
    }

    pub fn trainable(&self) -> Vec<&Tensor> {
        match self {
            Layer::Conv1d(c) => vec![&c.weight, &c.bias],
            Layer::Dense(d) => vec![&d.weight, &d.bias],
            Layer::BatchNorm(b) => vec![&b.gamma, &b.beta],
            _ => Vec::new(),
        }
    }

    /// Every persisted tensor: trainable parameters, then running statistics.
    pub fn state(&self) -> Vec<&Tensor> {
        match self {
            Layer::BatchNorm(b) => vec![&b.gamma, &b.beta, &b.running_mean, &b.running_var],
            other => other.trainable(),
        }
    }

    pub fn state_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Conv1d(c) => vec![&mut c.weight, &mut c.bias],
            Layer::Dense(d) => vec![&mut d.weight, &mut d.bias],
            Layer::BatchNorm(b) => vec![&mut b.gamma, &mut b.beta, &mut b.running_mean, &mut b.running_var],
            _ => Vec::new(),
        }
    }
}

fn flatten(x: &Tensor) -> Result<Tensor> {
    let batch = x.dim(0);
    let rest = x.len() / batch.max(1);
    x.clone().reshape(vec![batch, rest])
}

/// A built architecture. Inputs are `[batch, features]` rows, treated as a
/// one-channel signal of length `features`; outputs are class logits.
#[derive(Debug, Clone)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub input_features: usize,
    pub num_classes: usize,
}

impl Network {
    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.rank() != 2 || x.dim(1) != self.input_features {
            return Err(Error::Shape(format!(
                "network expects [batch, {}] input, got {:?}",
                self.input_features,
                x.shape()
            )));
        }
        Ok(())
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let mut h = x.clone().reshape(vec![x.dim(0), self.input_features, 1])?;
        for layer in &self.layers {
            h = layer.infer(&h)?;
        }
        Ok(h)
    }

    pub fn forward_train(&mut self, x: &Tensor, rng: &mut SeededRng) -> Result<Tensor> {
        self.check_input(x)?;
        let mut h = x.clone().reshape(vec![x.dim(0), self.input_features, 1])?;
        for layer in &mut self.layers {
            h = layer.forward_train(h, rng)?;
        }
        Ok(h)
    }

    /// Backpropagates `grad_logits`; returns the gradient w.r.t. the input rows.
    pub fn backward(&mut self, grad_logits: Tensor) -> Result<Tensor> {
        let mut g = grad_logits;
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(g)?;
        }
        let batch = g.dim(0);
        g.reshape(vec![batch, self.input_features])
    }

    pub fn describe(&self) -> Vec<String> {
        self.layers.iter().map(Layer::describe).collect()
    }

    pub fn trainable_param_count(&self) -> usize {
        self.layers.iter().flat_map(|l| l.trainable()).map(Tensor::len).sum()
    }

    pub fn state_tensors(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| l.state()).collect()
    }

    pub fn state_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.state_mut()).collect()
    }

    /// Fan-in scaled uniform initialisation: conv and dense weights are drawn
    /// from `U(-sqrt(6 / fan_in), +sqrt(6 / fan_in))` in layer order, row-major
    /// within each tensor; biases start at 0, batch-norm at gamma 1, beta 0.
    pub fn initialize(&mut self, rng: &mut SeededRng) {
        for layer in &mut self.layers {
            let (w, fan_in) = match layer {
                Layer::Conv1d(c) => {
                    let fan_in = c.weight.dim(0) * c.weight.dim(1);
                    (&mut c.weight, fan_in)
                }
                Layer::Dense(d) => {
                    let fan_in = d.weight.dim(0);
                    (&mut d.weight, fan_in)
                }
                _ => continue,
            };
            let limit = (6.0 / fan_in as f64).sqrt();
            w.data_mut().iter_mut().for_each(|v| *v = rng.uniform(-limit, limit));
        }
    }
}
