use super::Tensor;
use crate::error::{Error, Result};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Per-channel (last axis) normalisation parameters and running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
}

impl BatchNormParams {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Tensor::filled(&[channels], 1.0),
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::filled(&[channels], 1.0),
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }
}

/// Values kept from a training-mode forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    x_hat: Tensor,
    inv_std: Vec<f64>,
}

fn split_channels(input: &Tensor, channels: usize) -> Result<usize> {
    let c = *input.shape().last().unwrap_or(&0);
    if c != channels {
        return Err(Error::invalid(format!(
            "batch norm over {channels} channels got input {:?}",
            input.shape()
        )));
    }
    Ok(input.len() / c.max(1))
}

/// Normalises with the running estimates; never mutates the parameters.
pub fn batchnorm_infer(input: &Tensor, params: &BatchNormParams) -> Result<Tensor> {
    let c = params.channels();
    split_channels(input, c)?;
    let gamma = params.gamma.data();
    let beta = params.beta.data();
    let scale: Vec<f64> = (0..c)
        .map(|j| gamma[j] / (params.running_var.data()[j] + BN_EPS).sqrt())
        .collect();
    let mean = params.running_mean.data();
    let mut out = Tensor::zeros(input.shape());
    for (o, x) in out.data_mut().chunks_exact_mut(c).zip(input.data().chunks_exact(c)) {
        for j in 0..c {
            o[j] = (x[j] - mean[j]) * scale[j] + beta[j];
        }
    }
    Ok(out)
}

/// Normalises with batch statistics (biased variance) and folds them into the running
/// estimates with momentum [`BN_MOMENTUM`].
pub fn batchnorm_train(input: &Tensor, params: &mut BatchNormParams) -> Result<(Tensor, BatchNormCache)> {
    let c = params.channels();
    let m = split_channels(input, c)?;
    if input.shape()[0] < 2 {
        return Err(Error::invalid("batch norm in train mode needs a batch of at least 2"));
    }
    let mut mean = vec![0.0; c];
    for x in input.data().chunks_exact(c) {
        for j in 0..c {
            mean[j] += x[j];
        }
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);
    let mut var = vec![0.0; c];
    for x in input.data().chunks_exact(c) {
        for j in 0..c {
            let d = x[j] - mean[j];
            var[j] += d * d;
        }
    }
    var.iter_mut().for_each(|v| *v /= m as f64);
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();

    let gamma = params.gamma.data();
    let beta = params.beta.data();
    let mut out = Tensor::zeros(input.shape());
    let mut x_hat = Tensor::zeros(input.shape());
    for ((o, xh), x) in out
        .data_mut()
        .chunks_exact_mut(c)
        .zip(x_hat.data_mut().chunks_exact_mut(c))
        .zip(input.data().chunks_exact(c))
    {
        for j in 0..c {
            xh[j] = (x[j] - mean[j]) * inv_std[j];
            o[j] = gamma[j] * xh[j] + beta[j];
        }
    }
    for j in 0..c {
        let rm = &mut params.running_mean.data_mut()[j];
        *rm = BN_MOMENTUM * *rm + (1.0 - BN_MOMENTUM) * mean[j];
        let rv = &mut params.running_var.data_mut()[j];
        *rv = BN_MOMENTUM * *rv + (1.0 - BN_MOMENTUM) * var[j];
    }
    Ok((out, BatchNormCache { x_hat, inv_std }))
}

pub fn batchnorm_forward(
    input: &Tensor,
    params: &mut BatchNormParams,
    mode: Mode,
) -> Result<(Tensor, Option<BatchNormCache>)> {
    match mode {
        Mode::Infer => Ok((batchnorm_infer(input, params)?, None)),
        Mode::Train => batchnorm_train(input, params).map(|(o, c)| (o, Some(c))),
    }
}

pub struct BatchNormGrads {
    pub input: Tensor,
    pub gamma: Tensor,
    pub beta: Tensor,
}

pub fn batchnorm_backward(
    grad_out: &Tensor,
    cache: &BatchNormCache,
    gamma: &Tensor,
) -> Result<BatchNormGrads> {
    let c = gamma.len();
    if grad_out.shape() != cache.x_hat.shape() {
        return Err(Error::invalid("batch norm gradient shape does not match forward input"));
    }
    let m = (grad_out.len() / c) as f64;
    let mut d_gamma = Tensor::zeros(&[c]);
    let mut d_beta = Tensor::zeros(&[c]);
    for (dy, xh) in grad_out.data().chunks_exact(c).zip(cache.x_hat.data().chunks_exact(c)) {
        for j in 0..c {
            d_gamma.data_mut()[j] += dy[j] * xh[j];
            d_beta.data_mut()[j] += dy[j];
        }
    }
    // dx = γ·σ⁻¹/m · (m·dy − Σdy − x̂·Σ(dy·x̂))
    let mut d_input = Tensor::zeros(grad_out.shape());
    for ((dx, dy), xh) in d_input
        .data_mut()
        .chunks_exact_mut(c)
        .zip(grad_out.data().chunks_exact(c))
        .zip(cache.x_hat.data().chunks_exact(c))
    {
        for j in 0..c {
            let k = gamma.data()[j] * cache.inv_std[j] / m;
            dx[j] = k * (m * dy[j] - d_beta.data()[j] - xh[j] * d_gamma.data()[j]);
        }
    }
    Ok(BatchNormGrads {
        input: d_input,
        gamma: d_gamma,
        beta: d_beta,
    })
}
