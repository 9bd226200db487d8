//! Max pooling with a 5×5 spatial window, spatial stride 2 and symmetric
//! −∞ padding, so each spatial extent becomes `ceil(in / 2)`.
//!
//! The 3D variant adds a temporal window of 3 with stride 1. The temporal
//! axis is padded by one frame only while it is 3 frames or shorter, so
//! `T > 3` shrinks to `T - 2` and `T <= 3` is preserved.

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

const KS: usize = 5;
const STRIDE: usize = 2;
const PAD: usize = 2;
const KT: usize = 3;

/// Flat input index of the maximum chosen for every output element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolIndices {
    input_shape: Vec<usize>,
    argmax: Vec<usize>,
}

fn spatial_out(len: usize) -> usize {
    (len + 2 * PAD - KS) / STRIDE + 1
}

fn temporal_geometry(t: usize) -> (usize, usize) {
    if t > KT {
        (t - KT + 1, 0)
    } else {
        (t, 1)
    }
}

/// Pools `[planes, T, H, W]` with temporal kernel `kt`/padding `pt`.
///
/// Separable: a horizontal pass keeps each row's first maximum, then a pass
/// over the window's frames and rows (in scan order) keeps the first strictly
/// larger row maximum, which is the first maximum of the whole window.
fn pool<T: Scalar>(
    data: &[T],
    planes: usize,
    (t, h, w): (usize, usize, usize),
    (kt, pt, ot): (usize, usize, usize),
) -> (Vec<T>, Vec<usize>) {
    let (oh, ow) = (spatial_out(h), spatial_out(w));
    let in_plane = t * h * w;
    let x_range = |xi: usize| {
        let x0 = (xi * STRIDE).saturating_sub(PAD);
        (x0, (xi * STRIDE + KS - PAD).min(w))
    };
    let mut row_val = vec![T::zero(); t * h * ow];
    let mut row_idx = vec![0usize; t * h * ow];
    let mut out = Vec::with_capacity(planes * ot * oh * ow);
    let mut argmax = Vec::with_capacity(out.capacity());
    for p in 0..planes {
        let base = p * in_plane;
        for r in 0..t * h {
            let row = &data[base + r * w..base + (r + 1) * w];
            for xi in 0..ow {
                let (x0, x1) = x_range(xi);
                let mut bi = x0;
                for x in x0 + 1..x1 {
                    if row[x] > row[bi] {
                        bi = x;
                    }
                }
                row_val[r * ow + xi] = row[bi];
                row_idx[r * ow + xi] = base + r * w + bi;
            }
        }
        for ti in 0..ot {
            let t0 = ti as isize - pt as isize;
            let ts = (0..kt as isize).map(|d| t0 + d).filter(|&st| st >= 0 && st < t as isize);
            let ts: Vec<usize> = ts.map(|st| st as usize).collect();
            for yi in 0..oh {
                let (y0, y1) = ((yi * STRIDE).saturating_sub(PAD), (yi * STRIDE + KS - PAD).min(h));
                for xi in 0..ow {
                    let mut best = T::neg_infinity();
                    let mut best_idx = usize::MAX;
                    for &st in &ts {
                        for y in y0..y1 {
                            let k = (st * h + y) * ow + xi;
                            if row_val[k] > best || best_idx == usize::MAX {
                                best = row_val[k];
                                best_idx = row_idx[k];
                            }
                        }
                    }
                    out.push(best);
                    argmax.push(best_idx);
                }
            }
        }
    }
    (out, argmax)
}

/// `[N,C,H,W] -> [N,C,ceil(H/2),ceil(W/2)]`.
pub fn maxpool2d<T: Scalar>(input: &Tensor<T>) -> Result<(Tensor<T>, PoolIndices)> {
    let s = input.shape();
    if s.len() != 4 {
        return Err(Error::Shape(format!("maxpool2d expects [N,C,H,W], got {s:?}")));
    }
    let (out, argmax) = pool(input.data(), s[0] * s[1], (1, s[2], s[3]), (1, 0, 1));
    let shape = vec![s[0], s[1], spatial_out(s[2]), spatial_out(s[3])];
    Ok((Tensor::new(shape, out)?, PoolIndices { input_shape: s.to_vec(), argmax }))
}

/// `[N,C,T,H,W] -> [N,C,T',ceil(H/2),ceil(W/2)]` with `T' = T-2` if `T > 3` else `T`.
pub fn maxpool3d<T: Scalar>(input: &Tensor<T>) -> Result<(Tensor<T>, PoolIndices)> {
    let s = input.shape();
    if s.len() != 5 {
        return Err(Error::Shape(format!("maxpool3d expects [N,C,T,H,W], got {s:?}")));
    }
    let (ot, pt) = temporal_geometry(s[2]);
    let (out, argmax) = pool(input.data(), s[0] * s[1], (s[2], s[3], s[4]), (KT, pt, ot));
    let shape = vec![s[0], s[1], ot, spatial_out(s[3]), spatial_out(s[4])];
    Ok((Tensor::new(shape, out)?, PoolIndices { input_shape: s.to_vec(), argmax }))
}

/// Output shape of [`maxpool3d`] along the temporal axis.
pub(crate) fn pooled_temporal(t: usize) -> usize {
    temporal_geometry(t).0
}

pub(crate) fn pooled_spatial(len: usize) -> usize {
    spatial_out(len)
}

/// Routes each output gradient to the input position that won the max.
pub fn maxpool_backward<T: Scalar>(indices: &PoolIndices, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if grad_out.len() != indices.argmax.len() {
        return Err(Error::Shape(format!(
            "pool gradient has {} values, expected {}",
            grad_out.len(),
            indices.argmax.len()
        )));
    }
    let mut grad_in = Tensor::zeros(indices.input_shape.clone());
    let dst = grad_in.data_mut();
    for (&idx, &g) in indices.argmax.iter().zip(grad_out.data()) {
        dst[idx] += g;
    }
    Ok(grad_in)
}
