use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

use super::axis_window;
use super::conv::Padding;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSpec {
    /// `(height, width)` of the pooling window.
    pub window: (usize, usize),
    pub stride: (usize, usize),
    pub padding: Padding,
}

impl PoolSpec {
    pub fn new(window: (usize, usize), stride: (usize, usize)) -> Self {
        PoolSpec {
            window,
            stride,
            padding: Padding::SameCeil,
        }
    }

    pub fn output_shape(&self, input: Shape, layer: &str) -> Result<Shape> {
        let (rows, cols) = self.windows(input, layer)?;
        Ok(Shape::new(
            input.batch,
            rows.output,
            cols.output,
            input.channels,
        ))
    }

    fn windows(&self, input: Shape, layer: &str) -> Result<(super::AxisWindow, super::AxisWindow)> {
        if self.window.0 == 0 || self.window.1 == 0 || self.stride.0 == 0 || self.stride.1 == 0 {
            return Err(NnError::config(
                layer,
                "pool window and stride must be at least 1",
            ));
        }
        let same = self.padding == Padding::SameCeil;
        let rows =
            axis_window(input.height, self.window.0, self.stride.0, same).ok_or_else(|| {
                NnError::config(
                    layer,
                    format!(
                        "pool height {} exceeds input height {}",
                        self.window.0, input.height
                    ),
                )
            })?;
        let cols =
            axis_window(input.width, self.window.1, self.stride.1, same).ok_or_else(|| {
                NnError::config(
                    layer,
                    format!(
                        "pool width {} exceeds input width {}",
                        self.window.1, input.width
                    ),
                )
            })?;
        Ok((rows, cols))
    }
}

/// Max pooling; padded cells never win. Returns the output and, per output
/// element, the flat input offset of the first maximal element in row-major
/// window order.
pub fn maxpool_forward<T: Scalar>(
    input: &Tensor<T>,
    spec: &PoolSpec,
    layer: &str,
) -> Result<(Tensor<T>, Vec<usize>)> {
    let s = input.shape();
    let (rows, cols) = spec.windows(s, layer)?;
    let out_shape = Shape::new(s.batch, rows.output, cols.output, s.channels);
    let mut out = Vec::with_capacity(out_shape.len());
    let mut argmax = Vec::with_capacity(out_shape.len());
    let data = input.data();
    for n in 0..s.batch {
        for oh in 0..rows.output {
            let h0 = (oh * spec.stride.0) as isize - rows.pad_before as isize;
            for ow in 0..cols.output {
                let w0 = (ow * spec.stride.1) as isize - cols.pad_before as isize;
                for c in 0..s.channels {
                    let mut best: Option<(T, usize)> = None;
                    for dh in 0..spec.window.0 as isize {
                        let h = h0 + dh;
                        if h < 0 || h >= s.height as isize {
                            continue;
                        }
                        for dw in 0..spec.window.1 as isize {
                            let w = w0 + dw;
                            if w < 0 || w >= s.width as isize {
                                continue;
                            }
                            let idx = s.offset(n, h as usize, w as usize, c);
                            let v = data[idx];
                            if best.is_none_or(|(b, _)| v > b) {
                                best = Some((v, idx));
                            }
                        }
                    }
                    let (v, idx) = best.expect("every window overlaps the input");
                    out.push(v);
                    argmax.push(idx);
                }
            }
        }
    }
    Ok((Tensor::from_vec(out_shape, out)?, argmax))
}

pub fn maxpool<T: Scalar>(
    input: &Tensor<T>,
    pool: (usize, usize),
    stride: (usize, usize),
) -> Result<Tensor<T>> {
    maxpool_forward(input, &PoolSpec::new(pool, stride), "maxpool").map(|(t, _)| t)
}

pub fn maxpool_backward<T: Scalar>(input_len: usize, argmax: &[usize], grad_out: &[T]) -> Vec<T> {
    let mut g = vec![T::zero(); input_len];
    for (&idx, &go) in argmax.iter().zip(grad_out) {
        g[idx] = g[idx] + go;
    }
    g
}

/// Mean over all spatial positions, per batch item and channel.
pub fn global_avgpool<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    let s = input.shape();
    let area = s.height * s.width;
    let scale = T::one() / T::from_usize(area.max(1)).unwrap();
    let mut out = vec![T::zero(); s.batch * s.channels];
    for n in 0..s.batch {
        let acc = &mut out[n * s.channels..(n + 1) * s.channels];
        let item = &input.data()[n * s.per_item()..(n + 1) * s.per_item()];
        for pixel in item.chunks_exact(s.channels) {
            for (a, v) in acc.iter_mut().zip(pixel) {
                *a = *a + *v;
            }
        }
        acc.iter_mut().for_each(|a| *a = *a * scale);
    }
    Tensor::from_vec(Shape::new(s.batch, 1, 1, s.channels), out).expect("shape by construction")
}

pub fn global_avgpool_backward<T: Scalar>(input_shape: Shape, grad_out: &[T]) -> Vec<T> {
    let s = input_shape;
    let area = s.height * s.width;
    let scale = T::one() / T::from_usize(area.max(1)).unwrap();
    let mut g = Vec::with_capacity(s.len());
    for n in 0..s.batch {
        let go = &grad_out[n * s.channels..(n + 1) * s.channels];
        for _ in 0..area {
            g.extend(go.iter().map(|v| *v * scale));
        }
    }
    g
}
