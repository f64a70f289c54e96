use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{normalize_power, ModulationScheme};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogSourceConfig {
    pub carrier_hz: f64,
    pub sample_rate_hz: f64,
    /// Upper edge of the message spectrum.
    pub envelope_bandwidth_hz: f64,
    /// Lower edge of the message spectrum.
    pub message_low_hz: f64,
    pub tones: usize,
    /// AM modulation index μ.
    pub am_index: f64,
    pub fm_deviation_hz: f64,
}

impl Default for AnalogSourceConfig {
    fn default() -> Self {
        AnalogSourceConfig {
            carrier_hz: 5e6,
            sample_rate_hz: 100e6,
            envelope_bandwidth_hz: 5e3,
            message_low_hz: 300.0,
            tones: 8,
            am_index: 0.5,
            fm_deviation_hz: 75e3,
        }
    }
}

impl AnalogSourceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate_hz.is_nan() || self.sample_rate_hz <= 2.0 * self.envelope_bandwidth_hz {
            return Err(Error::config(
                "sample_rate_hz",
                format!(
                    "{} Hz does not exceed twice the envelope bandwidth ({} Hz)",
                    self.sample_rate_hz, self.envelope_bandwidth_hz
                ),
            ));
        }
        if self.carrier_hz.is_nan() || self.carrier_hz <= 0.0 {
            return Err(Error::config("carrier_hz", "must be positive"));
        }
        if !(self.message_low_hz > 0.0 && self.message_low_hz < self.envelope_bandwidth_hz) {
            return Err(Error::config(
                "message_low_hz",
                "must lie inside (0, envelope bandwidth)",
            ));
        }
        if self.tones == 0 {
            return Err(Error::config("tones", "must be positive"));
        }
        if !(self.am_index > 0.0 && self.am_index < 1.0) {
            return Err(Error::config(
                "am_index",
                format!("{} outside (0, 1)", self.am_index),
            ));
        }
        Ok(())
    }

    /// Rate at which the baseband message is sampled. The carrier-to-sample
    /// rate ratio is carried over to the message: the message bandwidth
    /// plays the role of the carrier.
    pub fn baseband_rate_hz(&self) -> f64 {
        self.envelope_bandwidth_hz * self.sample_rate_hz / self.carrier_hz
    }
}

/// Real message and its Hilbert transform, both scaled by the same factor so
/// that `max |samples| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub samples: Vec<f64>,
    pub quadrature: Vec<f64>,
}

impl Message {
    pub fn silent(n: usize) -> Self {
        Message {
            samples: vec![0.0; n],
            quadrature: vec![0.0; n],
        }
    }
}

/// Sum of random-phase tones. The quadrature part is the exact Hilbert
/// transform of each tone.
pub fn synthesize_message(cfg: &AnalogSourceConfig, n_samples: usize, seed: u64) -> Message {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = cfg.baseband_rate_hz();
    let tones: Vec<(f64, f64, f64)> = (0..cfg.tones)
        .map(|_| {
            let freq = rng.random_range(cfg.message_low_hz..=cfg.envelope_bandwidth_hz);
            let amp = rng.random_range(0.2..=1.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            (2.0 * PI * freq / rate, amp, phase)
        })
        .collect();
    let mut samples = Vec::with_capacity(n_samples);
    let mut quadrature = Vec::with_capacity(n_samples);
    for n in 0..n_samples {
        let (mut re, mut im) = (0.0, 0.0);
        for &(w, a, p) in &tones {
            let arg = w * n as f64 + p;
            re += a * arg.cos();
            im += a * arg.sin();
        }
        samples.push(re);
        quadrature.push(im);
    }
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        samples.iter_mut().for_each(|v| *v /= peak);
        quadrature.iter_mut().for_each(|v| *v /= peak);
    }
    Message {
        samples,
        quadrature,
    }
}

/// Complex envelope of an analog format before power normalization.
pub fn modulate_message(
    scheme: ModulationScheme,
    cfg: &AnalogSourceConfig,
    msg: &Message,
) -> Result<Vec<Complex64>> {
    use ModulationScheme::*;
    let m = &msg.samples;
    let h = &msg.quadrature;
    let out = match scheme {
        AmDsbWc => m
            .iter()
            .map(|&v| Complex64::new(1.0 + cfg.am_index * v, 0.0))
            .collect(),
        AmDsbSc => m.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        AmSsbSc => m
            .iter()
            .zip(h)
            .map(|(&v, &q)| Complex64::new(v, q))
            .collect(),
        AmSsbWc => m
            .iter()
            .zip(h)
            .map(|(&v, &q)| Complex64::new(1.0 + v, q))
            .collect(),
        Fm => {
            let k = 2.0 * PI * cfg.fm_deviation_hz / cfg.baseband_rate_hz();
            let mut phase = 0.0;
            m.iter()
                .map(|&v| {
                    phase += k * v;
                    Complex64::from_polar(1.0, phase)
                })
                .collect()
        }
        digital => {
            return Err(Error::Usage(format!(
                "{} is a digital format",
                digital.name()
            )));
        }
    };
    Ok(out)
}

/// Unit-power complex envelope of an analog format. A message that yields a
/// zero-power signal is discarded and redrawn from a derived seed.
pub fn modulate_analog(
    scheme: ModulationScheme,
    cfg: &AnalogSourceConfig,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Complex64>> {
    if scheme.is_digital() {
        return Err(Error::Usage(format!(
            "{} is a digital format",
            scheme.name()
        )));
    }
    cfg.validate()?;
    const ATTEMPTS: u64 = 8;
    for attempt in 0..ATTEMPTS {
        let msg_seed = if attempt == 0 {
            seed
        } else {
            seed::derive(seed, &[attempt])
        };
        let msg = synthesize_message(cfg, n_samples, msg_seed);
        let mut signal = modulate_message(scheme, cfg, &msg)?;
        if normalize_power(&mut signal).is_ok() {
            return Ok(signal);
        }
    }
    Err(Error::Signal(format!(
        "{} produced a zero-power frame after {ATTEMPTS} attempts",
        scheme.name()
    )))
}
