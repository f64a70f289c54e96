use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Probabilities below this are clamped before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

/// Row-wise softmax over the channel axis, with max subtraction.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Tensor<T> {
    let c = logits.shape().channels;
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.data().chunks_exact(c.max(1)) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let start = out.len();
        out.extend(row.iter().map(|&a| (a - max).exp()));
        let sum: T = out[start..].iter().copied().sum();
        out[start..].iter_mut().for_each(|v| *v = *v / sum);
    }
    Tensor::from_vec(logits.shape(), out).expect("same shape")
}

fn check_targets<T: Scalar>(probs: &Tensor<T>, targets: &Tensor<T>) -> Result<()> {
    if probs.shape() != targets.shape() {
        return Err(NnError::shape(
            "cross_entropy",
            "targets",
            probs.len(),
            targets.len(),
        ));
    }
    Ok(())
}

/// Mean over the batch of `-Σ_q target_q · ln(prob_q)`.
pub fn cross_entropy_loss<T: Scalar>(probs: &Tensor<T>, targets: &Tensor<T>) -> Result<T> {
    check_targets(probs, targets)?;
    let floor = T::from_f64_lossy(LOG_FLOOR);
    let batch = probs.shape().batch.max(1);
    let total: T = probs
        .data()
        .iter()
        .zip(targets.data())
        .filter(|(_, &y)| y != T::zero())
        .map(|(&p, &y)| -y * p.max(floor).ln())
        .sum();
    Ok(total / T::from_usize(batch).unwrap())
}

/// Fused softmax + cross-entropy. Returns the loss *summed* over the batch,
/// the probabilities, and `d(loss_sum / normalizer) / d(logits)`, which is
/// `(probs - targets) / normalizer`.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    targets: &Tensor<T>,
    normalizer: usize,
) -> Result<(T, Tensor<T>, Vec<T>)> {
    let probs = softmax(logits);
    check_targets(&probs, targets)?;
    let floor = T::from_f64_lossy(LOG_FLOOR);
    let scale = T::one() / T::from_usize(normalizer.max(1)).unwrap();
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(probs.len());
    for (&p, &y) in probs.data().iter().zip(targets.data()) {
        if y != T::zero() {
            loss = loss - y * p.max(floor).ln();
        }
        grad.push((p - y) * scale);
    }
    Ok((loss, probs, grad))
}
