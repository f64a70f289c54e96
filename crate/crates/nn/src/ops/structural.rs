use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Concatenates along channels; channels of `a` come first.
pub fn depthcat<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (sa, sb) = (a.shape(), b.shape());
    for (axis, x, y) in [
        ("batch", sa.batch, sb.batch),
        ("height", sa.height, sb.height),
        ("width", sa.width, sb.width),
    ] {
        if x != y {
            return Err(NnError::shape("depthcat", axis, x, y));
        }
    }
    let out_shape = Shape::new(sa.batch, sa.height, sa.width, sa.channels + sb.channels);
    let mut data = Vec::with_capacity(out_shape.len());
    let pixels = sa.batch * sa.height * sa.width;
    for p in 0..pixels {
        data.extend_from_slice(&a.data()[p * sa.channels..(p + 1) * sa.channels]);
        data.extend_from_slice(&b.data()[p * sb.channels..(p + 1) * sb.channels]);
    }
    Tensor::from_vec(out_shape, data)
}

/// Inverse of [`depthcat`]: splits a tensor (or its gradient) at channel
/// `boundary`.
pub fn depthcat_split<T: Scalar>(shape: Shape, data: &[T], boundary: usize) -> (Vec<T>, Vec<T>) {
    let c = shape.channels;
    let pixels = shape.batch * shape.height * shape.width;
    let mut a = Vec::with_capacity(pixels * boundary);
    let mut b = Vec::with_capacity(pixels * (c - boundary));
    for px in data.chunks_exact(c.max(1)).take(pixels) {
        a.extend_from_slice(&px[..boundary]);
        b.extend_from_slice(&px[boundary..]);
    }
    (a, b)
}

pub fn add_elementwise<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if a.shape() != b.shape() {
        let (sa, sb) = (a.shape(), b.shape());
        let axis = if sa.batch != sb.batch {
            ("batch", sa.batch, sb.batch)
        } else if sa.height != sb.height {
            ("height", sa.height, sb.height)
        } else if sa.width != sb.width {
            ("width", sa.width, sb.width)
        } else {
            ("channels", sa.channels, sb.channels)
        };
        return Err(NnError::shape("add", axis.0, axis.1, axis.2));
    }
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| *x + *y)
        .collect();
    Tensor::from_vec(a.shape(), data)
}
