use super::{LayerParams, Scalar, Tensor};
use crate::error::{Error, Result};

fn dims<T: Scalar>(input: &Tensor<T>, params: &LayerParams<T>) -> Result<(usize, usize, usize)> {
    let s = input.shape();
    let ws = params.weight.shape();
    if s.len() != 2 || ws.len() != 2 || ws[1] != s[1] {
        return Err(Error::Shape(format!("linear: input {s:?} incompatible with weights {ws:?}")));
    }
    Ok((s[0], s[1], ws[0]))
}

/// `[N,D] -> [N,K]` with weights `[K,D]` and bias `[K]`.
pub fn linear<T: Scalar>(input: &Tensor<T>, params: &LayerParams<T>) -> Result<Tensor<T>> {
    let (n, d, k) = dims(input, params)?;
    let bias = params.bias.data();
    let mut out = Tensor::from_fn([n, k], |i| bias[i % k]);
    T::gemm(n, d, k, T::one(), input.data(), (d as isize, 1), params.weight.data(), (1, d as isize), T::one(), out.data_mut(), (k as isize, 1));
    Ok(out)
}

/// Accumulates weight/bias gradients and returns the input gradient.
pub fn linear_backward<T: Scalar>(input: &Tensor<T>, params: &mut LayerParams<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, d, k) = dims(input, params)?;
    grad_out.expect_shape("linear grad", &[n, k])?;
    let dy = grad_out.data();
    {
        let bg = params.bias.grad_mut();
        for row in dy.chunks_exact(k) {
            for (b, &g) in bg.iter_mut().zip(row) {
                *b += g;
            }
        }
    }
    let (weight, weight_grad) = params.weight.data_and_grad_mut();
    // dW += dYᵀ · X
    T::gemm(k, n, d, T::one(), dy, (1, k as isize), input.data(), (d as isize, 1), T::one(), weight_grad, (d as isize, 1));
    let mut dx = Tensor::zeros([n, d]);
    T::gemm(n, k, d, T::one(), dy, (k as isize, 1), weight, (d as isize, 1), T::zero(), dx.data_mut(), (d as isize, 1));
    Ok(dx)
}
