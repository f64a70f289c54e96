use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DatasetManifest;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.7,
            val: 0.1,
            test: 0.2,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("train", self.train),
            ("val", self.val),
            ("test", self.test),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::config(
                    format!("split.{name}"),
                    format!("{f} outside [0, 1]"),
                ));
            }
        }
        let sum = self.train + self.val + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "split",
                format!("fractions sum to {sum}, not 1"),
            ));
        }
        Ok(())
    }
}

/// Record indices of each partition, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles each (scheme, SNR) cell on its own and deals `round(n·train)`
/// frames to training, `round(n·val)` to validation and the rest to test.
pub fn split_dataset(manifest: &DatasetManifest, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let n = manifest.frames_per_cell;
    let n_train = ((n as f64 * spec.train).round() as usize).min(n);
    let n_val = ((n as f64 * spec.val).round() as usize).min(n - n_train);
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for cell in 0..manifest.cells() {
        let mut members: Vec<usize> = (cell * n..(cell + 1) * n).collect();
        members.shuffle(&mut ChaCha8Rng::seed_from_u64(seed::derive(
            spec.seed,
            &[cell as u64],
        )));
        split.train.extend_from_slice(&members[..n_train]);
        split
            .val
            .extend_from_slice(&members[n_train..n_train + n_val]);
        split.test.extend_from_slice(&members[n_train + n_val..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
