use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub fn relu_forward<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    let data = input
        .data()
        .iter()
        .map(|&u| if u >= T::zero() { u } else { T::zero() })
        .collect();
    Tensor::from_vec(input.shape(), data).expect("same shape")
}

/// Passes the upstream gradient where the pre-activation is `>= 0`.
pub fn relu_backward<T: Scalar>(input: &Tensor<T>, grad_out: &[T]) -> Vec<T> {
    input
        .data()
        .iter()
        .zip(grad_out)
        .map(|(&u, &g)| if u >= T::zero() { g } else { T::zero() })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train { seed: u64 },
    Infer,
}

/// Inverted dropout. Returns the output and the per-element multiplier
/// (`0` or `1 / (1 - ratio)`), or `None` when the layer is an identity.
pub fn dropout_forward<T: Scalar>(
    input: &Tensor<T>,
    ratio: f64,
    mode: DropoutMode,
) -> Result<(Tensor<T>, Option<Vec<T>>)> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(NnError::config(
            "dropout",
            format!("ratio {ratio} outside [0, 1)"),
        ));
    }
    let seed = match mode {
        DropoutMode::Train { seed } if ratio > 0.0 => seed,
        _ => return Ok((input.clone(), None)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = T::from_f64_lossy(1.0 / (1.0 - ratio));
    let mask: Vec<T> = (0..input.len())
        .map(|_| {
            if rng.random::<f64>() < ratio {
                T::zero()
            } else {
                keep
            }
        })
        .collect();
    let data = input
        .data()
        .iter()
        .zip(&mask)
        .map(|(x, m)| *x * *m)
        .collect();
    Ok((Tensor::from_vec(input.shape(), data)?, Some(mask)))
}

pub fn dropout_backward<T: Scalar>(mask: Option<&[T]>, grad_out: &[T]) -> Vec<T> {
    match mask {
        Some(m) => grad_out.iter().zip(m).map(|(g, m)| *g * *m).collect(),
        None => grad_out.to_vec(),
    }
}
