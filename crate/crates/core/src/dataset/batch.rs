use chainnet_nn::{Scalar, Shape, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{write_frame, FrameRecord};
use crate::error::{Error, Result};
use crate::seed;

/// Visiting order of `indices` in a given epoch.
pub fn epoch_order(indices: &[usize], shuffle_seed: u64, epoch: u64) -> Vec<usize> {
    let mut order = indices.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed::derive(
        shuffle_seed,
        &[epoch],
    )));
    order
}

#[derive(Debug, Clone)]
pub struct Batch<T: Scalar> {
    /// `(n, 2, ℓ, 1)`
    pub inputs: Tensor<T>,
    /// One-hot `(n, 1, 1, classes)`
    pub targets: Tensor<T>,
    pub labels: Vec<u8>,
    pub snrs: Vec<i8>,
    /// Record indices in batch order.
    pub indices: Vec<usize>,
}

impl<T: Scalar> Batch<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Assembles the records at `indices` into one batch.
    pub fn assemble(
        records: &[FrameRecord],
        indices: &[usize],
        signal_len: usize,
        classes: usize,
    ) -> Result<Self> {
        let n = indices.len();
        let item = 2 * signal_len;
        let mut inputs = vec![T::zero(); n * item];
        let mut targets = vec![T::zero(); n * classes];
        let mut labels = Vec::with_capacity(n);
        let mut snrs = Vec::with_capacity(n);
        for (b, &idx) in indices.iter().enumerate() {
            let record = records.get(idx).ok_or_else(|| {
                Error::Length(format!(
                    "record {idx} out of range for {} records",
                    records.len()
                ))
            })?;
            if record.label as usize >= classes {
                return Err(Error::config(
                    "classes",
                    format!("label {} does not fit {classes} classes", record.label),
                ));
            }
            write_frame(record, signal_len, &mut inputs[b * item..(b + 1) * item])?;
            targets[b * classes + record.label as usize] = T::one();
            labels.push(record.label);
            snrs.push(record.snr_db);
        }
        Ok(Batch {
            inputs: Tensor::from_vec(Shape::new(n, 2, signal_len, 1), inputs)?,
            targets: Tensor::from_vec(Shape::new(n, 1, 1, classes), targets)?,
            labels,
            snrs,
            indices: indices.to_vec(),
        })
    }
}

/// One epoch of shuffled minibatches; the last batch may be short.
pub struct Minibatches<'a, T: Scalar> {
    records: &'a [FrameRecord],
    order: Vec<usize>,
    cursor: usize,
    batch_size: usize,
    signal_len: usize,
    classes: usize,
    _scalar: std::marker::PhantomData<T>,
}

impl<'a, T: Scalar> Minibatches<'a, T> {
    pub fn new(
        records: &'a [FrameRecord],
        indices: &[usize],
        batch_size: usize,
        shuffle_seed: u64,
        epoch: u64,
        signal_len: usize,
        classes: usize,
    ) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty {
                what: "minibatch index list".into(),
            });
        }
        if batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        Ok(Minibatches {
            records,
            order: epoch_order(indices, shuffle_seed, epoch),
            cursor: 0,
            batch_size,
            signal_len,
            classes,
            _scalar: std::marker::PhantomData,
        })
    }

    /// Order in which records are visited this epoch.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn batch_count(&self) -> usize {
        self.order.len().div_ceil(self.batch_size)
    }
}

impl<T: Scalar> Iterator for Minibatches<'_, T> {
    type Item = Result<Batch<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.cursor >= self.order.len() {
            return None;
        }
        let end = (self.cursor + self.batch_size).min(self.order.len());
        let chunk = &self.order[self.cursor..end];
        self.cursor = end;
        Some(Batch::assemble(
            self.records,
            chunk,
            self.signal_len,
            self.classes,
        ))
    }
}
