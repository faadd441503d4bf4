//! Forward and backward passes of every layer, as free functions.
//!
//! Layouts: sequences are `[batch, length, channels]`, convolution weights
//! `[kernel, channels_in, filters]`, dense weights `[in, out]`. Convolutions
//! use valid padding and stride 1.

use super::linalg::{gemm_nn, gemm_nt, gemm_tn};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::integrate::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

pub fn conv1d_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    input.expect_rank(3, "conv1d input")?;
    weights.expect_rank(3, "conv1d weights")?;
    let (batch, len, ch) = (input.dim(0), input.dim(1), input.dim(2));
    let (k, wch, filters) = (weights.dim(0), weights.dim(1), weights.dim(2));
    if wch != ch || bias.shape() != [filters] {
        return Err(Error::Shape(format!(
            "conv1d: input {:?}, weights {:?}, bias {:?}",
            input.shape(),
            weights.shape(),
            bias.shape()
        )));
    }
    if len < k {
        return Err(Error::Shape(format!("conv1d: length {len} shorter than kernel {k}")));
    }
    let out_len = len - k + 1;
    let mut out = Tensor::zeros(vec![batch, out_len, filters]);
    let b = bias.data();
    for (bi, o) in out.data_mut().chunks_exact_mut(out_len * filters).enumerate() {
        for row in o.chunks_exact_mut(filters) {
            row.copy_from_slice(b);
        }
        let x = &input.data()[bi * len * ch..(bi + 1) * len * ch];
        // window t is the contiguous slice x[t*ch .. (t+k)*ch]
        gemm_nn(out_len, filters, k * ch, x, ch, weights.data(), o);
    }
    Ok(out)
}

/// Returns `(grad_input, grad_weights, grad_bias)`.
pub fn conv1d_backward(upstream: &Tensor, input: &Tensor, weights: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    input.expect_rank(3, "conv1d input")?;
    weights.expect_rank(3, "conv1d weights")?;
    let (batch, len, ch) = (input.dim(0), input.dim(1), input.dim(2));
    let (k, filters) = (weights.dim(0), weights.dim(2));
    if weights.dim(1) != ch || len < k {
        return Err(Error::Shape("conv1d backward: cached shapes disagree".into()));
    }
    let out_len = len - k + 1;
    if upstream.shape() != [batch, out_len, filters] {
        return Err(Error::Shape(format!(
            "conv1d backward: upstream {:?}, expected {:?}",
            upstream.shape(),
            [batch, out_len, filters]
        )));
    }
    let kc = k * ch;
    let mut gi = Tensor::zeros(input.shape().to_vec());
    let mut gw = Tensor::zeros(weights.shape().to_vec());
    let mut gb = Tensor::zeros(vec![filters]);
    let mut gpatch = vec![0.0; out_len * kc];
    for bi in 0..batch {
        let x = &input.data()[bi * len * ch..(bi + 1) * len * ch];
        let up = &upstream.data()[bi * out_len * filters..(bi + 1) * out_len * filters];
        for row in up.chunks_exact(filters) {
            for (g, u) in gb.data_mut().iter_mut().zip(row) {
                *g += u;
            }
        }
        gemm_tn(out_len, filters, kc, x, ch, up, filters, gw.data_mut());
        // grad wrt each window: up[t, :] . W[(i,c), :]
        gpatch.iter_mut().for_each(|v| *v = 0.0);
        gemm_nt(out_len, kc, filters, up, weights.data(), &mut gpatch);
        let gx = &mut gi.data_mut()[bi * len * ch..(bi + 1) * len * ch];
        for t in 0..out_len {
            let dst = &mut gx[t * ch..t * ch + kc];
            for (d, s) in dst.iter_mut().zip(&gpatch[t * kc..(t + 1) * kc]) {
                *d += s;
            }
        }
    }
    Ok((gi, gw, gb))
}

/// Non-overlapping max pooling over the length axis. Returns the output and,
/// for each output element, the flat input index it came from (first index
/// wins ties). A trailing partial window is dropped.
pub fn maxpool1d(input: &Tensor, pool: usize) -> Result<(Tensor, Vec<usize>)> {
    input.expect_rank(3, "maxpool input")?;
    let (batch, len, ch) = (input.dim(0), input.dim(1), input.dim(2));
    if pool == 0 || len < pool {
        return Err(Error::Shape(format!("maxpool: length {len} shorter than pool {pool}")));
    }
    let out_len = len / pool;
    let mut out = Tensor::zeros(vec![batch, out_len, ch]);
    let mut argmax = vec![0usize; batch * out_len * ch];
    let x = input.data();
    let o = out.data_mut();
    for b in 0..batch {
        for t in 0..out_len {
            for c in 0..ch {
                let mut best = b * len * ch + t * pool * ch + c;
                for i in 1..pool {
                    let idx = b * len * ch + (t * pool + i) * ch + c;
                    if x[idx] > x[best] {
                        best = idx;
                    }
                }
                let oi = (b * out_len + t) * ch + c;
                o[oi] = x[best];
                argmax[oi] = best;
            }
        }
    }
    Ok((out, argmax))
}

pub fn maxpool1d_backward(upstream: &Tensor, argmax: &[usize], input_shape: &[usize]) -> Result<Tensor> {
    if upstream.len() != argmax.len() {
        return Err(Error::Shape("maxpool backward: upstream does not match cached argmax".into()));
    }
    let mut g = Tensor::zeros(input_shape.to_vec());
    let gd = g.data_mut();
    for (&src, &u) in argmax.iter().zip(upstream.data()) {
        gd[src] += u;
    }
    Ok(g)
}

pub fn relu(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

pub fn relu_backward(upstream: &Tensor, input: &Tensor) -> Tensor {
    let mut g = upstream.clone();
    for (gv, &x) in g.data_mut().iter_mut().zip(input.data()) {
        if x <= 0.0 {
            *gv = 0.0;
        }
    }
    g
}

pub fn dense_affine(input: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    input.expect_rank(2, "dense input")?;
    w.expect_rank(2, "dense weights")?;
    let (batch, inp) = (input.dim(0), input.dim(1));
    let out_dim = w.dim(1);
    if w.dim(0) != inp || b.shape() != [out_dim] {
        return Err(Error::Shape(format!(
            "dense: input {:?}, weights {:?}, bias {:?}",
            input.shape(),
            w.shape(),
            b.shape()
        )));
    }
    let mut out = Tensor::zeros(vec![batch, out_dim]);
    for row in out.data_mut().chunks_exact_mut(out_dim) {
        row.copy_from_slice(b.data());
    }
    gemm_nn(batch, out_dim, inp, input.data(), inp, w.data(), out.data_mut());
    Ok(out)
}

/// Returns `(grad_input, grad_w, grad_b)`.
pub fn dense_backward(upstream: &Tensor, input: &Tensor, w: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    input.expect_rank(2, "dense input")?;
    let (batch, inp) = (input.dim(0), input.dim(1));
    let out_dim = w.dim(1);
    if upstream.shape() != [batch, out_dim] || w.dim(0) != inp {
        return Err(Error::Shape(format!(
            "dense backward: upstream {:?}, input {:?}, weights {:?}",
            upstream.shape(),
            input.shape(),
            w.shape()
        )));
    }
    let mut gw = Tensor::zeros(vec![inp, out_dim]);
    gemm_tn(batch, out_dim, inp, input.data(), inp, upstream.data(), out_dim, gw.data_mut());
    let mut gx = Tensor::zeros(vec![batch, inp]);
    gemm_nt(batch, inp, out_dim, upstream.data(), w.data(), gx.data_mut());
    let mut gb = Tensor::zeros(vec![out_dim]);
    for row in upstream.data().chunks_exact(out_dim) {
        for (g, u) in gb.data_mut().iter_mut().zip(row) {
            *g += u;
        }
    }
    Ok((gx, gw, gb))
}

/// Values cached by a training-mode batch-norm forward.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    pub xhat: Tensor,
    pub inv_std: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Training-mode batch norm over every axis but the last. Batch variance is
/// the biased (population) estimate.
pub fn batchnorm_train(x: &Tensor, gamma: &Tensor, beta: &Tensor, eps: f64) -> Result<(Tensor, BatchNormCache)> {
    let ch = *x.shape().last().ok_or_else(|| Error::Shape("batchnorm on scalar".into()))?;
    if gamma.shape() != [ch] || beta.shape() != [ch] {
        return Err(Error::Shape("batchnorm: gamma/beta do not match channels".into()));
    }
    let n = x.len() / ch.max(1);
    if n < 2 {
        return Err(Error::Shape("batchnorm in training mode needs at least 2 samples".into()));
    }
    let mut mean = vec![0.0; ch];
    for row in x.data().chunks_exact(ch) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; ch];
    for row in x.data().chunks_exact(ch) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= n as f64);
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
    let mut xhat = x.clone();
    let mut y = x.clone();
    for (xr, yr) in xhat.data_mut().chunks_exact_mut(ch).zip(y.data_mut().chunks_exact_mut(ch)) {
        for c in 0..ch {
            let h = (xr[c] - mean[c]) * inv_std[c];
            xr[c] = h;
            yr[c] = gamma.data()[c] * h + beta.data()[c];
        }
    }
    Ok((y, BatchNormCache { xhat, inv_std, mean, var }))
}

pub fn batchnorm_infer(
    x: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    running_mean: &Tensor,
    running_var: &Tensor,
    eps: f64,
) -> Result<Tensor> {
    let ch = *x.shape().last().ok_or_else(|| Error::Shape("batchnorm on scalar".into()))?;
    if [gamma, beta, running_mean, running_var].iter().any(|t| t.shape() != [ch]) {
        return Err(Error::Shape("batchnorm: parameters do not match channels".into()));
    }
    let scale: Vec<f64> = (0..ch)
        .map(|c| gamma.data()[c] / (running_var.data()[c] + eps).sqrt())
        .collect();
    let mut y = x.clone();
    for row in y.data_mut().chunks_exact_mut(ch) {
        for c in 0..ch {
            row[c] = (row[c] - running_mean.data()[c]) * scale[c] + beta.data()[c];
        }
    }
    Ok(y)
}

/// Returns `(grad_input, grad_gamma, grad_beta)`.
pub fn batchnorm_backward(upstream: &Tensor, cache: &BatchNormCache, gamma: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    if upstream.shape() != cache.xhat.shape() {
        return Err(Error::Shape("batchnorm backward: upstream does not match cache".into()));
    }
    let ch = gamma.len();
    let n = (upstream.len() / ch) as f64;
    let mut gbeta = vec![0.0; ch];
    let mut ggamma = vec![0.0; ch];
    for (ur, hr) in upstream.data().chunks_exact(ch).zip(cache.xhat.data().chunks_exact(ch)) {
        for c in 0..ch {
            gbeta[c] += ur[c];
            ggamma[c] += ur[c] * hr[c];
        }
    }
    let mut gx = upstream.clone();
    for (gr, hr) in gx.data_mut().chunks_exact_mut(ch).zip(cache.xhat.data().chunks_exact(ch)) {
        for c in 0..ch {
            let k = gamma.data()[c] * cache.inv_std[c] / n;
            gr[c] = k * (n * gr[c] - gbeta[c] - hr[c] * ggamma[c]);
        }
    }
    Ok((gx, Tensor::scalar_vec(&ggamma), Tensor::scalar_vec(&gbeta)))
}

/// Inverted dropout. In training mode each element is zeroed with
/// probability `rate` and survivors are scaled by `1 / (1 - rate)`; the
/// returned mask holds those per-element multipliers. Inference is the
/// identity.
pub fn dropout(input: &Tensor, rate: f64, mode: Mode, rng: &mut SeededRng) -> Result<(Tensor, Option<Vec<f64>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Param(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    if mode == Mode::Infer || rate == 0.0 {
        return Ok((input.clone(), None));
    }
    let scale = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..input.len())
        .map(|_| if rng.next_f64() < rate { 0.0 } else { scale })
        .collect();
    let mut out = input.clone();
    for (v, m) in out.data_mut().iter_mut().zip(&mask) {
        *v *= m;
    }
    Ok((out, Some(mask)))
}

pub fn dropout_backward(upstream: &Tensor, mask: Option<&[f64]>) -> Tensor {
    let mut g = upstream.clone();
    if let Some(mask) = mask {
        for (v, m) in g.data_mut().iter_mut().zip(mask) {
            *v *= m;
        }
    }
    g
}

/// Row-wise softmax with the row maximum subtracted first.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    logits.expect_rank(2, "softmax")?;
    let classes = logits.dim(1);
    let mut p = logits.clone();
    for row in p.data_mut().chunks_exact_mut(classes) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(p)
}

/// Sparse categorical cross-entropy: mean of `-ln p[label]` over the batch,
/// and its gradient `(softmax - onehot) / batch` with respect to the logits.
pub fn softmax_xent(logits: &Tensor, labels: &[u8]) -> Result<(f64, Tensor)> {
    logits.expect_rank(2, "softmax_xent")?;
    let (batch, classes) = (logits.dim(0), logits.dim(1));
    if labels.len() != batch {
        return Err(Error::Shape(format!("{} labels for batch of {batch}", labels.len())));
    }
    if let Some(bad) = labels.iter().find(|&&l| l as usize >= classes) {
        return Err(Error::Label(format!("label {bad} outside 0..{classes}")));
    }
    let mut grad = logits.clone();
    let mut loss = 0.0;
    for (row, &label) in grad.data_mut().chunks_exact_mut(classes).zip(labels) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_sum = sum.ln();
        loss -= row[label as usize] - max - log_sum;
        for v in row.iter_mut() {
            *v = (*v - max - log_sum).exp() / batch as f64;
        }
        row[label as usize] -= 1.0 / batch as f64;
    }
    Ok((loss / batch as f64, grad))
}
