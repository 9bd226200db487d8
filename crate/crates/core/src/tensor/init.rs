use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// He initialisation: zero-mean normal samples with variance `2 / fan_in`.
pub fn he_init<T: Scalar>(shape: &[usize], fan_in: usize, seed: u64) -> Result<Tensor<T>> {
    he_init_with(shape, fan_in, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// [`he_init`] drawing from a caller-owned generator.
pub fn he_init_with<T: Scalar, R: Rng + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Result<Tensor<T>> {
    if fan_in == 0 {
        return Err(Error::InvalidArgument("he_init needs a positive fan_in".into()));
    }
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("finite std");
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| T::from_f64_lossy(normal.sample(rng))).collect();
    Tensor::new(shape.to_vec(), data)
}
