//! Per-channel batch normalisation over axis 1 of `[N, C, ...]`.

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Whether batch statistics or running statistics drive normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams<T = f32> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub momentum: f64,
    /// Set once running statistics hold at least one batch (or were loaded).
    pub observed: bool,
}

impl<T: Scalar> BatchNormParams<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Tensor::full([channels], T::one()),
            beta: Tensor::zeros([channels]),
            running_mean: Tensor::zeros([channels]),
            running_var: Tensor::full([channels], T::one()),
            momentum: BN_MOMENTUM,
            observed: false,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn zero_grad(&mut self) {
        self.gamma.zero_grad();
        self.beta.zero_grad();
    }
}

/// Values kept from a training-mode forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache<T = f32> {
    normalized: Vec<T>,
    inv_std: Vec<T>,
    shape: Vec<usize>,
    mode: Mode,
}

fn layout(shape: &[usize], channels: usize) -> Result<(usize, usize)> {
    if shape.len() < 2 || shape[1] != channels {
        return Err(Error::Shape(format!("batch norm over {channels} channels got input {shape:?}")));
    }
    Ok((shape[0], shape[2..].iter().product()))
}

/// Normalises `input`; in train mode also folds the batch statistics into
/// the running estimates.
pub fn batch_norm<T: Scalar>(
    input: &Tensor<T>,
    params: &mut BatchNormParams<T>,
    mode: Mode,
) -> Result<(Tensor<T>, BatchNormCache<T>)> {
    let c = params.channels();
    let (n, inner) = layout(input.shape(), c)?;
    let count = n * inner;
    let eps = T::from_f64_lossy(BN_EPS);
    let x = input.data();

    let (mean, var) = match mode {
        Mode::Train => {
            let mut mean = vec![T::zero(); c];
            let mut var = vec![T::zero(); c];
            for ch in 0..c {
                let mut sum = 0.0f64;
                for b in 0..n {
                    let off = (b * c + ch) * inner;
                    sum += x[off..off + inner].iter().map(|v| v.to_f64().unwrap()).sum::<f64>();
                }
                let mu = sum / count as f64;
                let mut sq = 0.0f64;
                for b in 0..n {
                    let off = (b * c + ch) * inner;
                    sq += x[off..off + inner].iter().map(|v| (v.to_f64().unwrap() - mu).powi(2)).sum::<f64>();
                }
                mean[ch] = T::from_f64_lossy(mu);
                var[ch] = T::from_f64_lossy(sq / count as f64);

                let unbiased = if count > 1 { sq / (count - 1) as f64 } else { sq };
                let m = params.momentum;
                let rm = params.running_mean.data()[ch].to_f64().unwrap();
                let rv = params.running_var.data()[ch].to_f64().unwrap();
                params.running_mean.data_mut()[ch] = T::from_f64_lossy((1.0 - m) * rm + m * mu);
                params.running_var.data_mut()[ch] = T::from_f64_lossy((1.0 - m) * rv + m * unbiased);
            }
            params.observed = true;
            (mean, var)
        }
        Mode::Eval => {
            if !params.observed {
                return Err(Error::MissingRunningStats);
            }
            (params.running_mean.data().to_vec(), params.running_var.data().to_vec())
        }
    };

    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    let mut normalized = vec![T::zero(); x.len()];
    let mut out = Tensor::zeros(input.shape().to_vec());
    let (gamma, beta) = (params.gamma.data(), params.beta.data());
    for b in 0..n {
        for ch in 0..c {
            let off = (b * c + ch) * inner;
            for i in off..off + inner {
                let xh = (x[i] - mean[ch]) * inv_std[ch];
                normalized[i] = xh;
                out.data_mut()[i] = gamma[ch] * xh + beta[ch];
            }
        }
    }
    let cache = BatchNormCache { normalized, inv_std, shape: input.shape().to_vec(), mode };
    Ok((out, cache))
}

/// Eval-mode normalisation from running statistics; never mutates `params`.
pub fn batch_norm_inference<T: Scalar>(input: &Tensor<T>, params: &BatchNormParams<T>) -> Result<Tensor<T>> {
    let c = params.channels();
    let (n, inner) = layout(input.shape(), c)?;
    if !params.observed {
        return Err(Error::MissingRunningStats);
    }
    let eps = T::from_f64_lossy(BN_EPS);
    let (gamma, beta) = (params.gamma.data(), params.beta.data());
    let mean = params.running_mean.data();
    let var = params.running_var.data();
    let mut out = input.clone();
    out.clear_grad();
    let y = out.data_mut();
    for b in 0..n {
        for ch in 0..c {
            let inv_std = T::one() / (var[ch] + eps).sqrt();
            let off = (b * c + ch) * inner;
            for v in &mut y[off..off + inner] {
                *v = gamma[ch] * ((*v - mean[ch]) * inv_std) + beta[ch];
            }
        }
    }
    Ok(out)
}

/// Accumulates `gamma`/`beta` gradients and returns the input gradient.
pub fn batch_norm_backward<T: Scalar>(
    cache: &BatchNormCache<T>,
    params: &mut BatchNormParams<T>,
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    grad_out.expect_shape("batch norm grad", &cache.shape)?;
    let c = params.channels();
    let (n, inner) = layout(&cache.shape, c)?;
    let count = T::from_usize(n * inner).unwrap();
    let dy = grad_out.data();
    let xh = &cache.normalized;

    let mut sum_dy = vec![T::zero(); c];
    let mut sum_dy_xh = vec![T::zero(); c];
    for b in 0..n {
        for ch in 0..c {
            let off = (b * c + ch) * inner;
            for i in off..off + inner {
                sum_dy[ch] += dy[i];
                sum_dy_xh[ch] += dy[i] * xh[i];
            }
        }
    }
    for ch in 0..c {
        params.beta.grad_mut()[ch] += sum_dy[ch];
        params.gamma.grad_mut()[ch] += sum_dy_xh[ch];
    }

    let gamma = params.gamma.data();
    let mut grad_in = Tensor::zeros(cache.shape.clone());
    let dx = grad_in.data_mut();
    for b in 0..n {
        for ch in 0..c {
            let off = (b * c + ch) * inner;
            let scale = gamma[ch] * cache.inv_std[ch];
            match cache.mode {
                Mode::Train => {
                    let mean_dy = sum_dy[ch] / count;
                    let mean_dy_xh = sum_dy_xh[ch] / count;
                    for i in off..off + inner {
                        dx[i] = scale * (dy[i] - mean_dy - xh[i] * mean_dy_xh);
                    }
                }
                Mode::Eval => {
                    for i in off..off + inner {
                        dx[i] = scale * dy[i];
                    }
                }
            }
        }
    }
    Ok(grad_in)
}
