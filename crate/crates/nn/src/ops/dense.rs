use crate::error::{NnError, Result};
use crate::param::Parameter;
use crate::scalar::{gemm, Layout, Scalar};
use crate::tensor::{Shape, Tensor};

/// Fully connected layer over each flattened batch item. Weights are stored
/// `(1, 1, outputs, inputs)`, i.e. row `o` holds the weights of output `o`.
pub fn fully_connected_forward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    layer: &str,
) -> Result<Tensor<T>> {
    let (outputs, inputs) = dims(weight);
    let s = input.shape();
    if s.per_item() != inputs {
        return Err(NnError::shape(
            layer,
            "flattened input",
            inputs,
            s.per_item(),
        ));
    }
    if bias.len() != outputs {
        return Err(NnError::shape(layer, "bias length", outputs, bias.len()));
    }
    let mut out = Vec::with_capacity(s.batch * outputs);
    for _ in 0..s.batch {
        out.extend_from_slice(bias.data());
    }
    gemm(
        s.batch,
        inputs,
        outputs,
        input.data(),
        Layout::Normal,
        weight.data(),
        Layout::Transposed,
        T::one(),
        &mut out,
    );
    Tensor::from_vec(Shape::new(s.batch, 1, 1, outputs), out)
}

pub fn fully_connected<T: Scalar>(
    input: &Tensor<T>,
    weights: &Parameter<T>,
    bias: &Parameter<T>,
) -> Result<Tensor<T>> {
    fully_connected_forward(input, &weights.value, &bias.value, "fully_connected")
}

#[derive(Debug, Clone)]
pub struct FcGrads<T> {
    pub input: Vec<T>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

pub fn fully_connected_backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &[T],
) -> FcGrads<T> {
    let (outputs, inputs) = dims(weight);
    let batch = input.shape().batch;
    let mut grad_in = vec![T::zero(); batch * inputs];
    gemm(
        batch,
        outputs,
        inputs,
        grad_out,
        Layout::Normal,
        weight.data(),
        Layout::Normal,
        T::zero(),
        &mut grad_in,
    );
    let mut grad_w = vec![T::zero(); outputs * inputs];
    gemm(
        outputs,
        batch,
        inputs,
        grad_out,
        Layout::Transposed,
        input.data(),
        Layout::Normal,
        T::zero(),
        &mut grad_w,
    );
    let mut grad_b = vec![T::zero(); outputs];
    for row in grad_out.chunks_exact(outputs) {
        for (b, g) in grad_b.iter_mut().zip(row) {
            *b = *b + *g;
        }
    }
    FcGrads {
        input: grad_in,
        weight: grad_w,
        bias: grad_b,
    }
}

fn dims<T: Scalar>(weight: &Tensor<T>) -> (usize, usize) {
    let s = weight.shape();
    (s.width, s.channels)
}
