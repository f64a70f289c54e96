//! Baseband waveform synthesis for the fourteen modulation formats.

mod analog;
mod constellation;
mod pulse;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use analog::{
    modulate_analog, modulate_message, synthesize_message, AnalogSourceConfig, Message,
};
pub use constellation::{
    make_constellation, make_constellation_with, ApskRadii, ConstellationSpec,
};
pub use pulse::{convolve, pulse_shape, rrc_taps, PulseShapeConfig};

use crate::error::{Error, Result};

/// Formats in label order (byte-wise sort of their names).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModulationScheme {
    Apsk128,
    Qam128,
    Apsk16,
    Pam16,
    Qam16,
    Apsk32,
    Qam32,
    Apsk64,
    Qam64,
    AmDsbSc,
    AmDsbWc,
    AmSsbSc,
    AmSsbWc,
    Fm,
}

impl ModulationScheme {
    pub const ALL: [ModulationScheme; 14] = [
        Self::Apsk128,
        Self::Qam128,
        Self::Apsk16,
        Self::Pam16,
        Self::Qam16,
        Self::Apsk32,
        Self::Qam32,
        Self::Apsk64,
        Self::Qam64,
        Self::AmDsbSc,
        Self::AmDsbWc,
        Self::AmSsbSc,
        Self::AmSsbWc,
        Self::Fm,
    ];

    pub const COUNT: usize = 14;

    pub fn name(self) -> &'static str {
        match self {
            Self::Apsk128 => "128APSK",
            Self::Qam128 => "128QAM",
            Self::Apsk16 => "16APSK",
            Self::Pam16 => "16PAM",
            Self::Qam16 => "16QAM",
            Self::Apsk32 => "32APSK",
            Self::Qam32 => "32QAM",
            Self::Apsk64 => "64APSK",
            Self::Qam64 => "64QAM",
            Self::AmDsbSc => "AM-DSB-SC",
            Self::AmDsbWc => "AM-DSB-WC",
            Self::AmSsbSc => "AM-SSB-SC",
            Self::AmSsbWc => "AM-SSB-WC",
            Self::Fm => "FM",
        }
    }

    pub fn label(self) -> u8 {
        self as u8
    }

    pub fn from_label(label: u8) -> Option<Self> {
        Self::ALL.get(label as usize).copied()
    }

    pub fn is_digital(self) -> bool {
        self.label() < Self::AmDsbSc.label()
    }
}

impl fmt::Display for ModulationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModulationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| Error::config("scheme", format!("unknown modulation format {wanted:?}")))
    }
}

/// Scales `signal` to unit mean power.
pub fn normalize_power(signal: &mut [Complex64]) -> Result<()> {
    if signal.is_empty() {
        return Err(Error::Signal("empty signal".into()));
    }
    let power = mean_power(signal);
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::Signal(format!(
            "cannot normalize a signal with power {power}"
        )));
    }
    let scale = power.sqrt().recip();
    signal.iter_mut().for_each(|z| *z *= scale);
    Ok(())
}

pub fn mean_power(signal: &[Complex64]) -> f64 {
    signal.iter().map(|z| z.norm_sqr()).sum::<f64>() / signal.len().max(1) as f64
}

/// A shaped digital frame together with the symbols behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalFrame {
    pub samples: Vec<Complex64>,
    /// `symbols[j]` is the constellation index whose pulse peaks at
    /// `samples[j * sps]`.
    pub symbols: Vec<usize>,
}

/// Waveform generator with tunable sub-configurations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Modem {
    pub pulse: PulseShapeConfig,
    pub analog: AnalogSourceConfig,
    pub apsk: ApskRadii,
}

impl Modem {
    pub fn digital_frame(
        &self,
        scheme: ModulationScheme,
        frame_len: usize,
        seed: u64,
    ) -> Result<DigitalFrame> {
        if frame_len == 0 {
            return Err(Error::Length("frame length must be at least 1".into()));
        }
        let constellation = make_constellation_with(scheme, &self.apsk)?;
        let count = self.pulse.required_symbols(frame_len);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let indices: Vec<usize> = (0..count)
            .map(|_| rng.random_range(0..constellation.len()))
            .collect();
        let points: Vec<Complex64> = indices.iter().map(|&i| constellation.map(i)).collect();
        let shaped = pulse_shape(&points, &self.pulse, frame_len)?;
        let start = self.pulse.transient();
        let mut samples = shaped[start..start + frame_len].to_vec();
        normalize_power(&mut samples)?;
        let sps = self.pulse.samples_per_symbol;
        let lead = self.pulse.span / 2;
        let symbols = indices[lead..]
            .iter()
            .take(frame_len.div_ceil(sps))
            .copied()
            .collect();
        Ok(DigitalFrame { samples, symbols })
    }

    pub fn clean_frame(
        &self,
        scheme: ModulationScheme,
        frame_len: usize,
        seed: u64,
    ) -> Result<Vec<Complex64>> {
        if scheme.is_digital() {
            Ok(self.digital_frame(scheme, frame_len, seed)?.samples)
        } else {
            if frame_len == 0 {
                return Err(Error::Length("frame length must be at least 1".into()));
            }
            modulate_analog(scheme, &self.analog, frame_len, seed)
        }
    }
}

/// Unit-power frame of `frame_len` samples with default modem settings.
pub fn generate_clean_frame(
    scheme: ModulationScheme,
    frame_len: usize,
    seed: u64,
) -> Result<Vec<Complex64>> {
    Modem::default().clean_frame(scheme, frame_len, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_follow_sorted_names() {
        let mut names: Vec<&str> = ModulationScheme::ALL.iter().map(|m| m.name()).collect();
        let listed = names.clone();
        names.sort();
        assert_eq!(names, listed);
        for (i, m) in ModulationScheme::ALL.iter().enumerate() {
            assert_eq!(m.label() as usize, i);
            assert_eq!(ModulationScheme::from_label(i as u8), Some(*m));
            assert_eq!(m.name().parse::<ModulationScheme>().unwrap(), *m);
        }
        assert_eq!(
            ModulationScheme::ALL
                .iter()
                .filter(|m| m.is_digital())
                .count(),
            9
        );
        assert!(ModulationScheme::from_label(14).is_none());
        assert!("QPSK".parse::<ModulationScheme>().is_err());
    }

    #[test]
    fn zero_power_is_rejected() {
        let mut zeros = vec![Complex64::default(); 8];
        assert!(normalize_power(&mut zeros).is_err());
    }
}
