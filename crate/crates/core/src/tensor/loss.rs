use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Mean squared error and its gradient `2 (pred − target) / count`.
pub fn mse_loss<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(T, Tensor<T>)> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape(format!("mse_loss {:?} vs {:?}", pred.shape(), target.shape())));
    }
    let count = T::from_usize(pred.len()).unwrap();
    let two = T::from_f64_lossy(2.0);
    let mut sum = T::zero();
    let mut grad = Vec::with_capacity(pred.len());
    for (&p, &t) in pred.data().iter().zip(target.data()) {
        let d = p - t;
        sum += d * d;
        grad.push(two * d / count);
    }
    Ok((sum / count, Tensor::new(pred.shape().to_vec(), grad)?))
}
