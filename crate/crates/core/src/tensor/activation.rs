use super::{Scalar, Tensor};
use crate::error::{Error, Result};

pub const ELU_ALPHA: f64 = 1.0;

/// `x` for `x > 0`, `α (eˣ − 1)` otherwise, with α = 1.
pub fn elu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    let alpha = T::from_f64_lossy(ELU_ALPHA);
    input.map(|x| if x > T::zero() { x } else { alpha * x.exp_m1() })
}

/// Gradient of [`elu`] given the forward input and output. The kink at 0
/// takes the right derivative (1).
pub fn elu_backward<T: Scalar>(input: &Tensor<T>, output: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    grad_out.expect_shape("elu grad", input.shape())?;
    let alpha = T::from_f64_lossy(ELU_ALPHA);
    let mut g = grad_out.clone();
    g.clear_grad();
    for ((d, &x), &y) in g.data_mut().iter_mut().zip(input.data()).zip(output.data()) {
        if x < T::zero() {
            *d *= y + alpha;
        }
    }
    Ok(g)
}

/// Hadamard product of two equally shaped tensors.
pub fn elementwise_mul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("elementwise_mul {:?} vs {:?}", a.shape(), b.shape())));
    }
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| x * y).collect();
    Tensor::new(a.shape().to_vec(), data)
}

/// Returns `(∂L/∂a, ∂L/∂b)`.
pub fn elementwise_mul_backward<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, grad_out: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
    grad_out.expect_shape("elementwise_mul grad", a.shape())?;
    let da = elementwise_mul(grad_out, b)?;
    let db = elementwise_mul(grad_out, a)?;
    Ok((da, db))
}
