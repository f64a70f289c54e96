//! Labeled frame datasets: generation, the binary file format, splits and
//! minibatch assembly.

mod batch;
mod format;
mod split;

use std::fmt;

use chainnet_nn::{Scalar, Shape, Tensor};
use num_complex::Complex64;

pub use batch::{epoch_order, Batch, Minibatches};
pub use format::{
    generate_dataset, read_dataset, write_dataset, write_dataset_file, Dataset, DatasetReader,
    FOOTER_BYTES, MAGIC, VERSION,
};
pub use split::{split_dataset, Split, SplitSpec};

use crate::channel::{self, Scenario};
use crate::error::{Error, Result};
use crate::modem::{Modem, ModulationScheme};
use crate::seed;

/// SNR tag of frames generated without noise.
pub const CLEAN_SNR: i8 = 127;

/// Converts a stored SNR tag to decibels; the clean tag maps to +∞.
pub fn snr_db(tag: i8) -> f64 {
    if tag == CLEAN_SNR {
        f64::INFINITY
    } else {
        tag as f64
    }
}

/// -20, -18, ..., +20.
pub fn full_snr_grid() -> Vec<i8> {
    (-20..=20).step_by(2).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub frame_len: usize,
    pub schemes: Vec<ModulationScheme>,
    pub snrs_db: Vec<i8>,
    pub frames_per_cell: usize,
    pub scenario: Scenario,
    pub seed: u64,
}

impl DatasetManifest {
    /// 14 formats × 21 SNRs × 4000 frames under EPA fading.
    pub fn full_scale() -> Self {
        DatasetManifest {
            frame_len: 1024,
            schemes: ModulationScheme::ALL.to_vec(),
            snrs_db: full_snr_grid(),
            frames_per_cell: 4000,
            scenario: Scenario::Epa,
            seed: 0,
        }
    }

    /// 14 formats × {-10, 0, 10, 20} dB × 200 frames under EPA fading.
    pub fn desk_scale() -> Self {
        DatasetManifest {
            snrs_db: vec![-10, 0, 10, 20],
            frames_per_cell: 200,
            ..Self::full_scale()
        }
    }

    pub fn cells(&self) -> usize {
        self.schemes.len() * self.snrs_db.len()
    }

    pub fn record_count(&self) -> usize {
        self.cells() * self.frames_per_cell
    }

    /// Bytes per stored record.
    pub fn record_size(&self) -> usize {
        2 + self.frame_len * 2 * 4
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_len == 0 || self.frame_len > u32::MAX as usize {
            return Err(Error::config("frame_len", "must be in 1..=u32::MAX"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "no modulation formats selected"));
        }
        if self.schemes.len() > ModulationScheme::COUNT {
            return Err(Error::config("schemes", "too many formats"));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return Err(Error::config("schemes", format!("{s} listed twice")));
            }
        }
        if self.snrs_db.is_empty() {
            return Err(Error::config("snrs", "no SNR values selected"));
        }
        if self.snrs_db.len() > u8::MAX as usize {
            return Err(Error::config("snrs", "too many SNR values"));
        }
        for (i, s) in self.snrs_db.iter().enumerate() {
            if self.snrs_db[..i].contains(s) {
                return Err(Error::config("snrs", format!("{s} dB listed twice")));
            }
        }
        if self.frames_per_cell == 0 || self.frames_per_cell > u32::MAX as usize {
            return Err(Error::config("frames_per_cell", "must be in 1..=u32::MAX"));
        }
        Ok(())
    }

    /// Position of a record in generation order.
    pub fn record_index(&self, scheme: usize, snr: usize, frame: usize) -> usize {
        (scheme * self.snrs_db.len() + snr) * self.frames_per_cell + frame
    }

    /// `(scheme position, snr position, frame)` of a record index.
    pub fn locate(&self, index: usize) -> (usize, usize, usize) {
        let cell = index / self.frames_per_cell;
        (
            cell / self.snrs_db.len(),
            cell % self.snrs_db.len(),
            index % self.frames_per_cell,
        )
    }

    /// Human-readable `key = value` listing.
    pub fn to_kv(&self) -> String {
        let schemes: Vec<String> = self
            .schemes
            .iter()
            .map(|s| format!("{}:{}", s.label(), s.name()))
            .collect();
        let snrs: Vec<String> = self
            .snrs_db
            .iter()
            .map(|&s| {
                if s == CLEAN_SNR {
                    "clean".to_string()
                } else {
                    s.to_string()
                }
            })
            .collect();
        format!(
            "magic = CNDS\nversion = {VERSION}\nframe_len = {}\nschemes = {}\nsnrs_db = {}\nframes_per_cell = {}\nscenario = {}\nseed = {}\nrecord_count = {}\n",
            self.frame_len,
            schemes.join(","),
            snrs.join(","),
            self.frames_per_cell,
            self.scenario,
            self.seed,
            self.record_count()
        )
    }
}

impl fmt::Display for DatasetManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_kv())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub label: u8,
    pub snr_db: i8,
    /// I and Q interleaved per sample.
    pub iq: Vec<f32>,
}

impl FrameRecord {
    pub fn from_complex(label: u8, snr_db: i8, samples: &[Complex64]) -> Self {
        let mut iq = Vec::with_capacity(samples.len() * 2);
        for z in samples {
            iq.push(z.re as f32);
            iq.push(z.im as f32);
        }
        FrameRecord { label, snr_db, iq }
    }

    pub fn len(&self) -> usize {
        self.iq.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.iq.is_empty()
    }
}

/// Clean frame, fading, cut to the frame length, then noise measured on the
/// cut. The cut skips the fading channel's start-up samples.
pub fn synthesize_record(
    manifest: &DatasetManifest,
    modem: &Modem,
    scheme: ModulationScheme,
    snr_tag: i8,
    frame: usize,
) -> Result<FrameRecord> {
    let frame_seed = seed::derive(
        manifest.seed,
        &[scheme.label() as u64, snr_tag as u8 as u64, frame as u64],
    );
    let guard = manifest.scenario.guard();
    let clean = modem.clean_frame(
        scheme,
        manifest.frame_len + guard,
        seed::derive(frame_seed, &[0]),
    )?;
    let faded = manifest
        .scenario
        .apply(&clean, seed::derive(frame_seed, &[1]))?;
    let cut = &faded[guard..];
    let noisy = channel::add_awgn(
        cut,
        &channel::NoiseConfig {
            snr_db: snr_db(snr_tag),
            seed: seed::derive(frame_seed, &[2]),
        },
    )?;
    Ok(FrameRecord::from_complex(scheme.label(), snr_tag, &noisy))
}

/// `(1, 2, ℓ, 1)` tensor holding I in row 0 and Q in row 1 for the first
/// `target_len` samples, scaled to unit RMS.
pub fn frame_to_tensor<T: Scalar>(record: &FrameRecord, target_len: usize) -> Result<Tensor<T>> {
    let mut data = vec![T::zero(); 2 * target_len];
    write_frame(record, target_len, &mut data)?;
    Ok(Tensor::from_vec(Shape::new(1, 2, target_len, 1), data)?)
}

/// Fills one `2 × ℓ` item of a batch buffer.
pub(crate) fn write_frame<T: Scalar>(
    record: &FrameRecord,
    target_len: usize,
    out: &mut [T],
) -> Result<()> {
    if target_len == 0 {
        return Err(Error::Length("signal length must be at least 1".into()));
    }
    if target_len > record.len() {
        return Err(Error::Length(format!(
            "signal length {target_len} exceeds the stored frame length {}",
            record.len()
        )));
    }
    let iq = &record.iq[..2 * target_len];
    let energy: f64 = iq.iter().map(|&v| (v as f64) * (v as f64)).sum();
    let rms = (energy / iq.len() as f64).sqrt();
    let scale = if rms > 0.0 { rms.recip() } else { 1.0 };
    let (i_row, q_row) = out.split_at_mut(target_len);
    for (n, pair) in iq.chunks_exact(2).enumerate() {
        i_row[n] = T::from_f64_lossy(pair[0] as f64 * scale);
        q_row[n] = T::from_f64_lossy(pair[1] as f64 * scale);
    }
    Ok(())
}
