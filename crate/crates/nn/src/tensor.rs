use std::fmt;

use crate::error::{NnError, Result};
use crate::scalar::Scalar;

/// Extents of a rank-4 tensor in `(batch, height, width, channels)` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub batch: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Shape {
    pub const fn new(batch: usize, height: usize, width: usize, channels: usize) -> Self {
        Shape {
            batch,
            height,
            width,
            channels,
        }
    }

    pub fn len(&self) -> usize {
        self.batch * self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of scalars in one batch element.
    pub fn per_item(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn dims(&self) -> [usize; 4] {
        [self.batch, self.height, self.width, self.channels]
    }

    pub fn with_batch(self, batch: usize) -> Self {
        Shape { batch, ..self }
    }

    /// Flat offset of `(n, h, w, c)`.
    #[inline]
    pub fn offset(&self, n: usize, h: usize, w: usize, c: usize) -> usize {
        ((n * self.height + h) * self.width + w) * self.channels + c
    }
}

impl fmt::Display for Shape {
    /// Per-item extents, `H x W x C`, matching how layer outputs are tabulated.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} x {} x {}", self.height, self.width, self.channels)
    }
}

/// Dense NHWC tensor with an optional gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Shape,
    data: Vec<T>,
    grad: Option<Vec<T>>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: Shape) -> Self {
        Tensor {
            shape,
            data: vec![T::zero(); shape.len()],
            grad: None,
        }
    }

    pub fn filled(shape: Shape, value: T) -> Self {
        Tensor {
            shape,
            data: vec![value; shape.len()],
            grad: None,
        }
    }

    pub fn from_vec(shape: Shape, data: Vec<T>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(NnError::shape("tensor", "data", shape.len(), data.len()));
        }
        Ok(Tensor {
            shape,
            data,
            grad: None,
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, n: usize, h: usize, w: usize, c: usize) -> T {
        self.data[self.shape.offset(n, h, w, c)]
    }

    pub fn grad(&self) -> Option<&[T]> {
        self.grad.as_deref()
    }

    /// Gradient buffer, allocated as zeros on first access.
    pub fn grad_mut(&mut self) -> &mut [T] {
        let len = self.data.len();
        self.grad.get_or_insert_with(|| vec![T::zero(); len])
    }

    pub fn set_grad(&mut self, grad: Vec<T>) {
        assert_eq!(
            grad.len(),
            self.data.len(),
            "gradient length must match data"
        );
        self.grad = Some(grad);
    }

    pub fn take_grad(&mut self) -> Option<Vec<T>> {
        self.grad.take()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    /// Reinterprets the same data under a shape of equal length.
    pub fn reshape(mut self, shape: Shape) -> Result<Self> {
        if shape.len() != self.data.len() {
            return Err(NnError::shape(
                "reshape",
                "length",
                self.data.len(),
                shape.len(),
            ));
        }
        self.shape = shape;
        Ok(self)
    }

    /// Copies batch items `start..start + count` into a new tensor.
    pub fn slice_batch(&self, start: usize, count: usize) -> Tensor<T> {
        let per = self.shape.per_item();
        let end = (start + count).min(self.shape.batch);
        let count = end.saturating_sub(start);
        Tensor {
            shape: self.shape.with_batch(count),
            data: self.data[start * per..end * per].to_vec(),
            grad: None,
        }
    }

    /// Stacks per-item tensors that share `(height, width, channels)`.
    pub fn stack(items: &[Tensor<T>]) -> Result<Tensor<T>> {
        let first = items
            .first()
            .ok_or_else(|| NnError::config("stack", "no tensors to stack"))?
            .shape;
        let mut data = Vec::with_capacity(first.per_item() * items.len());
        let mut batch = 0;
        for t in items {
            let s = t.shape;
            if (s.height, s.width, s.channels) != (first.height, first.width, first.channels) {
                return Err(NnError::shape(
                    "stack",
                    "item",
                    first.per_item(),
                    s.per_item(),
                ));
            }
            batch += s.batch;
            data.extend_from_slice(&t.data);
        }
        Ok(Tensor {
            shape: first.with_batch(batch),
            data,
            grad: None,
        })
    }

    /// Converts between precisions element by element.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape,
            data: self
                .data
                .iter()
                .map(|v| U::from_f64_lossy(v.to_f64().unwrap()))
                .collect(),
            grad: None,
        }
    }
}
