use rand::Rng;

use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Uniform He-style initialization, bound `sqrt(6 / fan_in)`.
pub fn he_uniform<T: Scalar, R: Rng>(shape: Shape, fan_in: usize, rng: &mut R) -> Tensor<T> {
    let bound = (6.0 / fan_in.max(1) as f64).sqrt();
    let data = (0..shape.len())
        .map(|_| T::from_f64_lossy(rng.random_range(-bound..bound)))
        .collect();
    Tensor::from_vec(shape, data).expect("length by construction")
}
