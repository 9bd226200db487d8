//! 3×3 (and 3×3×3) "same" convolutions via im2col and GEMM.
//!
//! Convolution here is cross-correlation: no kernel flip.

use super::{LayerParams, Scalar, Tensor};
use crate::error::{Error, Result};

const K: usize = 3;

/// Geometry shared by the 2D and 3D paths. A 2D convolution is a 3D one with
/// a single frame and a temporal kernel of 1.
#[derive(Debug, Clone, Copy)]
struct Geometry {
    batch: usize,
    in_ch: usize,
    out_ch: usize,
    t: usize,
    h: usize,
    w: usize,
    kt: usize,
}

impl Geometry {
    fn volume(&self) -> usize {
        self.t * self.h * self.w
    }

    fn patch(&self) -> usize {
        self.in_ch * self.kt * K * K
    }

    fn pad_t(&self) -> usize {
        self.kt / 2
    }
}

fn geometry_2d<T: Scalar>(input: &Tensor<T>, params: &LayerParams<T>) -> Result<Geometry> {
    let s = input.shape();
    if s.len() != 4 {
        return Err(Error::Shape(format!("conv2d expects [N,C,H,W], got {s:?}")));
    }
    let ws = params.weight.shape();
    if ws.len() != 4 || ws[2] != K || ws[3] != K {
        return Err(Error::Shape(format!("conv2d kernel must be [M,C,3,3], got {ws:?}")));
    }
    if ws[1] != s[1] {
        return Err(Error::Shape(format!(
            "conv2d kernel expects {} input channels, input has {}",
            ws[1], s[1]
        )));
    }
    Ok(Geometry { batch: s[0], in_ch: s[1], out_ch: ws[0], t: 1, h: s[2], w: s[3], kt: 1 })
}

fn geometry_3d<T: Scalar>(input: &Tensor<T>, params: &LayerParams<T>) -> Result<Geometry> {
    let s = input.shape();
    if s.len() != 5 {
        return Err(Error::Shape(format!("conv3d expects [N,C,T,H,W], got {s:?}")));
    }
    let ws = params.weight.shape();
    if ws.len() != 5 || ws[2] != K || ws[3] != K || ws[4] != K {
        return Err(Error::Shape(format!("conv3d kernel must be [M,C,3,3,3], got {ws:?}")));
    }
    if ws[1] != s[1] {
        return Err(Error::Shape(format!(
            "conv3d kernel expects {} input channels, input has {}",
            ws[1], s[1]
        )));
    }
    Ok(Geometry { batch: s[0], in_ch: s[1], out_ch: ws[0], t: s[2], h: s[3], w: s[4], kt: K })
}

/// Output columns `[x0, x1)` whose source `x + dx - 1` lies inside the row.
fn valid_x(dx: usize, w: usize) -> (usize, usize) {
    match dx {
        0 => (1.min(w), w),
        1 => (0, w),
        _ => (0, w.saturating_sub(1)),
    }
}

/// Unfolds one sample `[C, T, H, W]` into `[C*kt*9, T*H*W]`.
fn im2col<T: Scalar>(g: &Geometry, sample: &[T], cols: &mut [T]) {
    let (t_len, h_len, w) = (g.t as isize, g.h as isize, g.w);
    let vol = g.volume();
    let pt = g.pad_t() as isize;
    let mut row = 0;
    for c in 0..g.in_ch {
        let chan = &sample[c * vol..(c + 1) * vol];
        for dt in 0..g.kt as isize {
            for dy in 0..K as isize {
                for dx in 0..K {
                    let out = &mut cols[row * vol..(row + 1) * vol];
                    let (x0, x1) = valid_x(dx, w);
                    for t in 0..t_len {
                        let st = t + dt - pt;
                        for y in 0..h_len {
                            let sy = y + dy - 1;
                            let dst = &mut out[((t * h_len + y) as usize) * w..][..w];
                            if !(0..t_len).contains(&st) || !(0..h_len).contains(&sy) {
                                dst.fill(T::zero());
                                continue;
                            }
                            let src = &chan[((st * h_len + sy) as usize) * w..][..w];
                            dst[..x0].fill(T::zero());
                            dst[x1..].fill(T::zero());
                            dst[x0..x1].copy_from_slice(&src[x0 + dx - 1..x1 + dx - 1]);
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

fn forward<T: Scalar>(g: Geometry, input: &Tensor<T>, params: &LayerParams<T>, out_shape: Vec<usize>) -> Result<Tensor<T>> {
    let vol = g.volume();
    let patch = g.patch();
    let mut out = Tensor::zeros(out_shape);
    let mut cols = vec![T::zero(); patch * vol];
    let weight = params.weight.data();
    let bias = params.bias.data();
    let in_stride = g.in_ch * vol;
    let out_stride = g.out_ch * vol;
    for n in 0..g.batch {
        im2col(&g, &input.data()[n * in_stride..(n + 1) * in_stride], &mut cols);
        let dst = &mut out.data_mut()[n * out_stride..(n + 1) * out_stride];
        for (m, row) in dst.chunks_exact_mut(vol).enumerate() {
            row.iter_mut().for_each(|v| *v = bias[m]);
        }
        T::gemm(g.out_ch, patch, vol, T::one(), weight, (patch as isize, 1), &cols, (vol as isize, 1), T::one(), dst, (vol as isize, 1));
    }
    Ok(out)
}

/// Kernel of the adjoint convolution: channels swapped, taps reversed.
fn adjoint_kernel<T: Scalar>(g: &Geometry, weight: &[T]) -> Vec<T> {
    let taps = g.kt * K * K;
    let mut out = vec![T::zero(); weight.len()];
    for m in 0..g.out_ch {
        for c in 0..g.in_ch {
            let src = &weight[(m * g.in_ch + c) * taps..][..taps];
            let dst = &mut out[(c * g.out_ch + m) * taps..][..taps];
            for (i, v) in src.iter().enumerate() {
                dst[taps - 1 - i] = *v;
            }
        }
    }
    out
}

fn transpose<T: Scalar>(src: &[T], rows: usize, cols: usize, dst: &mut [T]) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

fn backward<T: Scalar>(g: Geometry, input: &Tensor<T>, params: &mut LayerParams<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    let vol = g.volume();
    let patch = g.patch();
    let in_stride = g.in_ch * vol;
    let out_stride = g.out_ch * vol;
    let mut grad_in = Tensor::zeros(input.shape().to_vec());
    // The input gradient is a "same" convolution of dY with the adjoint kernel.
    let adj = Geometry { in_ch: g.out_ch, out_ch: g.in_ch, ..g };
    let adj_patch = adj.patch();
    let mut cols = vec![T::zero(); patch * vol];
    let mut cols_t = vec![T::zero(); patch * vol];
    let mut dy_cols = vec![T::zero(); adj_patch * vol];

    let bias_grad = params.bias.grad_mut();
    for n in 0..g.batch {
        let dy = &grad_out.data()[n * out_stride..(n + 1) * out_stride];
        for (m, row) in dy.chunks_exact(vol).enumerate() {
            bias_grad[m] += row.iter().copied().sum::<T>();
        }
    }

    let (weight, weight_grad) = params.weight.data_and_grad_mut();
    let adj_weight = adjoint_kernel(&g, weight);
    for n in 0..g.batch {
        let x = &input.data()[n * in_stride..(n + 1) * in_stride];
        let dy = &grad_out.data()[n * out_stride..(n + 1) * out_stride];
        im2col(&g, x, &mut cols);
        transpose(&cols, patch, vol, &mut cols_t);
        // dW += dY · colsᵀ
        T::gemm(g.out_ch, vol, patch, T::one(), dy, (vol as isize, 1), &cols_t, (patch as isize, 1), T::one(), weight_grad, (patch as isize, 1));
        im2col(&adj, dy, &mut dy_cols);
        let dst = &mut grad_in.data_mut()[n * in_stride..(n + 1) * in_stride];
        T::gemm(g.in_ch, adj_patch, vol, T::one(), &adj_weight, (adj_patch as isize, 1), &dy_cols, (vol as isize, 1), T::zero(), dst, (vol as isize, 1));
    }
    Ok(grad_in)
}

pub fn conv2d<T: Scalar>(input: &Tensor<T>, params: &LayerParams<T>) -> Result<Tensor<T>> {
    let g = geometry_2d(input, params)?;
    forward(g, input, params, vec![g.batch, g.out_ch, g.h, g.w])
}

/// Accumulates weight/bias gradients into `params` and returns the input gradient.
pub fn conv2d_backward<T: Scalar>(input: &Tensor<T>, params: &mut LayerParams<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    let g = geometry_2d(input, params)?;
    grad_out.expect_shape("conv2d grad", &[g.batch, g.out_ch, g.h, g.w])?;
    backward(g, input, params, grad_out)
}

/// `[N,C,T,H,W] -> [N,M,T,H,W]`, 3×3×3 kernel, zero padding 1 on every axis.
pub fn conv3d<T: Scalar>(input: &Tensor<T>, params: &LayerParams<T>) -> Result<Tensor<T>> {
    let g = geometry_3d(input, params)?;
    forward(g, input, params, vec![g.batch, g.out_ch, g.t, g.h, g.w])
}

pub fn conv3d_backward<T: Scalar>(input: &Tensor<T>, params: &mut LayerParams<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    let g = geometry_3d(input, params)?;
    grad_out.expect_shape("conv3d grad", &[g.batch, g.out_ch, g.t, g.h, g.w])?;
    backward(g, input, params, grad_out)
}
