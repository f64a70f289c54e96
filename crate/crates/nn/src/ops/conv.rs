use crate::error::{NnError, Result};
use crate::param::Parameter;
use crate::scalar::{gemm, Layout, Scalar};
use crate::tensor::{Shape, Tensor};

use super::axis_window;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Zero padding so that each output extent is `ceil(input / stride)`.
    SameCeil,
    /// No padding; windows must fit inside the input.
    Valid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub kernel_height: usize,
    pub kernel_width: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    /// `(vertical, horizontal)`.
    pub stride: (usize, usize),
    pub padding: Padding,
}

impl ConvSpec {
    pub fn new(kernel: (usize, usize), in_channels: usize, out_channels: usize) -> Self {
        ConvSpec {
            kernel_height: kernel.0,
            kernel_width: kernel.1,
            in_channels,
            out_channels,
            stride: (1, 1),
            padding: Padding::SameCeil,
        }
    }

    pub fn with_stride(mut self, vertical: usize, horizontal: usize) -> Self {
        self.stride = (vertical, horizontal);
        self
    }

    pub fn with_padding(mut self, padding: Padding) -> Self {
        self.padding = padding;
        self
    }

    /// Weights are stored `(kernel_height, kernel_width, in, out)`.
    pub fn weight_shape(&self) -> Shape {
        Shape::new(
            self.kernel_height,
            self.kernel_width,
            self.in_channels,
            self.out_channels,
        )
    }

    pub fn bias_shape(&self) -> Shape {
        Shape::new(1, 1, 1, self.out_channels)
    }

    pub fn fan_in(&self) -> usize {
        self.kernel_height * self.kernel_width * self.in_channels
    }

    pub fn parameter_count(&self) -> usize {
        self.fan_in() * self.out_channels + self.out_channels
    }

    /// Output shape for `input`, or a configuration error naming the axis.
    pub fn output_shape(&self, input: Shape, layer: &str) -> Result<Shape> {
        Ok(self.geometry(input, layer)?.output_shape())
    }

    fn geometry(&self, input: Shape, layer: &str) -> Result<Geometry> {
        if self.kernel_height == 0 || self.kernel_width == 0 || self.out_channels == 0 {
            return Err(NnError::config(
                layer,
                "kernel extents and channel counts must be positive",
            ));
        }
        if self.stride.0 == 0 || self.stride.1 == 0 {
            return Err(NnError::config(layer, "strides must be positive"));
        }
        if input.channels != self.in_channels {
            return Err(NnError::shape(
                layer,
                "channels",
                self.in_channels,
                input.channels,
            ));
        }
        let same = self.padding == Padding::SameCeil;
        let rows = axis_window(input.height, self.kernel_height, self.stride.0, same).ok_or_else(
            || {
                NnError::config(
                    layer,
                    format!(
                        "height {} cannot host a {}-row kernel",
                        input.height, self.kernel_height
                    ),
                )
            },
        )?;
        let cols =
            axis_window(input.width, self.kernel_width, self.stride.1, same).ok_or_else(|| {
                NnError::config(
                    layer,
                    format!(
                        "width {} cannot host a {}-column kernel",
                        input.width, self.kernel_width
                    ),
                )
            })?;
        Ok(Geometry {
            input,
            spec: *self,
            out_h: rows.output,
            out_w: cols.output,
            pad_top: rows.pad_before,
            pad_left: cols.pad_before,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    input: Shape,
    spec: ConvSpec,
    out_h: usize,
    out_w: usize,
    pad_top: usize,
    pad_left: usize,
}

impl Geometry {
    fn output_shape(&self) -> Shape {
        Shape::new(
            self.input.batch,
            self.out_h,
            self.out_w,
            self.spec.out_channels,
        )
    }

    fn positions(&self) -> usize {
        self.input.batch * self.out_h * self.out_w
    }

    fn patch_len(&self) -> usize {
        self.spec.fan_in()
    }

    /// A 1×1 unit-stride convolution reads its input directly as the patch
    /// matrix.
    fn is_pointwise(&self) -> bool {
        self.spec.kernel_height == 1
            && self.spec.kernel_width == 1
            && self.spec.stride == (1, 1)
            && self.out_h == self.input.height
            && self.out_w == self.input.width
    }

    /// Visits every in-bounds (patch column block, input offset) pair for
    /// output position `(n, oh, ow)`.
    #[inline]
    fn for_each_tap(&self, n: usize, oh: usize, ow: usize, mut f: impl FnMut(usize, usize)) {
        let s = &self.spec;
        let cin = s.in_channels;
        for kh in 0..s.kernel_height {
            let ih = (oh * s.stride.0 + kh) as isize - self.pad_top as isize;
            if ih < 0 || ih >= self.input.height as isize {
                continue;
            }
            for kw in 0..s.kernel_width {
                let iw = (ow * s.stride.1 + kw) as isize - self.pad_left as isize;
                if iw < 0 || iw >= self.input.width as isize {
                    continue;
                }
                let col = (kh * s.kernel_width + kw) * cin;
                let src = self.input.offset(n, ih as usize, iw as usize, 0);
                f(col, src);
            }
        }
    }

    fn im2col<T: Scalar>(&self, input: &[T]) -> Vec<T> {
        let cin = self.spec.in_channels;
        let patch = self.patch_len();
        let mut cols = vec![T::zero(); self.positions() * patch];
        let mut p = 0;
        for n in 0..self.input.batch {
            for oh in 0..self.out_h {
                for ow in 0..self.out_w {
                    let row = &mut cols[p * patch..(p + 1) * patch];
                    self.for_each_tap(n, oh, ow, |col, src| {
                        row[col..col + cin].copy_from_slice(&input[src..src + cin]);
                    });
                    p += 1;
                }
            }
        }
        cols
    }

    fn col2im_add<T: Scalar>(&self, cols: &[T], grad_in: &mut [T]) {
        let cin = self.spec.in_channels;
        let patch = self.patch_len();
        let mut p = 0;
        for n in 0..self.input.batch {
            for oh in 0..self.out_h {
                for ow in 0..self.out_w {
                    let row = &cols[p * patch..(p + 1) * patch];
                    self.for_each_tap(n, oh, ow, |col, src| {
                        for (g, c) in grad_in[src..src + cin].iter_mut().zip(&row[col..col + cin]) {
                            *g = *g + *c;
                        }
                    });
                    p += 1;
                }
            }
        }
    }
}

fn check_params<T: Scalar>(
    spec: &ConvSpec,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    layer: &str,
) -> Result<()> {
    let ws = weight.shape();
    let expected = spec.weight_shape();
    for (axis, e, f) in [
        ("kernel height", expected.batch, ws.batch),
        ("kernel width", expected.height, ws.height),
        ("weight input channels", expected.width, ws.width),
        ("weight output channels", expected.channels, ws.channels),
    ] {
        if e != f {
            return Err(NnError::shape(layer, axis, e, f));
        }
    }
    if bias.len() != spec.out_channels {
        return Err(NnError::shape(
            layer,
            "bias length",
            spec.out_channels,
            bias.len(),
        ));
    }
    Ok(())
}

/// 2-D convolution over NHWC input: every output scalar is the dot product of
/// the kernel with its receptive field plus the channel bias.
pub fn conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    spec: &ConvSpec,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    layer: &str,
) -> Result<Tensor<T>> {
    check_params(spec, weight, bias, layer)?;
    let geo = spec.geometry(input.shape(), layer)?;
    let out_shape = geo.output_shape();
    let positions = geo.positions();
    let cout = spec.out_channels;

    let mut out = Vec::with_capacity(out_shape.len());
    for _ in 0..positions {
        out.extend_from_slice(bias.data());
    }
    let owned;
    let cols: &[T] = if geo.is_pointwise() {
        input.data()
    } else {
        owned = geo.im2col(input.data());
        &owned
    };
    gemm(
        positions,
        geo.patch_len(),
        cout,
        cols,
        Layout::Normal,
        weight.data(),
        Layout::Normal,
        T::one(),
        &mut out,
    );
    Tensor::from_vec(out_shape, out)
}

/// Convenience wrapper taking parameters directly.
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    spec: &ConvSpec,
    weights: &Parameter<T>,
    bias: &Parameter<T>,
) -> Result<Tensor<T>> {
    conv2d_forward(input, spec, &weights.value, &bias.value, "conv2d")
}

/// Gradients produced by [`conv2d_backward`]. Weight and bias gradients are
/// fresh buffers; callers accumulate them.
#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub input: Option<Vec<T>>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    spec: &ConvSpec,
    weight: &Tensor<T>,
    grad_out: &[T],
    need_input_grad: bool,
    layer: &str,
) -> Result<ConvGrads<T>> {
    let geo = spec.geometry(input.shape(), layer)?;
    let positions = geo.positions();
    let patch = geo.patch_len();
    let cout = spec.out_channels;
    if grad_out.len() != positions * cout {
        return Err(NnError::shape(
            layer,
            "upstream gradient",
            positions * cout,
            grad_out.len(),
        ));
    }
    let pointwise = geo.is_pointwise();
    let owned;
    let cols: &[T] = if pointwise {
        input.data()
    } else {
        owned = geo.im2col(input.data());
        &owned
    };

    let mut grad_w = vec![T::zero(); patch * cout];
    gemm(
        patch,
        positions,
        cout,
        cols,
        Layout::Transposed,
        grad_out,
        Layout::Normal,
        T::zero(),
        &mut grad_w,
    );

    let mut grad_b = vec![T::zero(); cout];
    for row in grad_out.chunks_exact(cout) {
        for (b, g) in grad_b.iter_mut().zip(row) {
            *b = *b + *g;
        }
    }

    let grad_in = if need_input_grad {
        let mut grad_cols = vec![T::zero(); positions * patch];
        gemm(
            positions,
            cout,
            patch,
            grad_out,
            Layout::Normal,
            weight.data(),
            Layout::Transposed,
            T::zero(),
            &mut grad_cols,
        );
        if pointwise {
            Some(grad_cols)
        } else {
            let mut g = vec![T::zero(); input.len()];
            geo.col2im_add(&grad_cols, &mut g);
            Some(g)
        }
    } else {
        None
    };

    Ok(ConvGrads {
        input: grad_in,
        weight: grad_w,
        bias: grad_b,
    })
}
