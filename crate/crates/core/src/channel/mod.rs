//! Rayleigh fading (tapped delay line) and additive white Gaussian noise.

mod fading;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use fading::{FadingRealization, SosProcess, OSCILLATORS};

use crate::error::{Error, Result};
use crate::modem::mean_power;
use crate::seed;

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 100e6;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    pub path_delays_ns: Vec<f64>,
    pub path_gains_db: Vec<f64>,
    pub max_doppler_hz: f64,
    pub sample_rate_hz: f64,
}

impl ChannelProfile {
    /// Extended Pedestrian A.
    pub fn epa() -> Self {
        ChannelProfile {
            path_delays_ns: vec![0.0, 30.0, 70.0, 90.0, 110.0, 190.0, 410.0],
            path_gains_db: vec![0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8],
            max_doppler_hz: 10.0,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        }
    }

    /// Single 0 dB path.
    pub fn flat(max_doppler_hz: f64) -> Self {
        ChannelProfile {
            path_delays_ns: vec![0.0],
            path_gains_db: vec![0.0],
            max_doppler_hz,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.path_delays_ns.is_empty() {
            return Err(Error::config(
                "path_delays",
                "at least one path is required",
            ));
        }
        if self.path_delays_ns.len() != self.path_gains_db.len() {
            return Err(Error::config(
                "path_gains",
                format!(
                    "{} gains for {} delays",
                    self.path_gains_db.len(),
                    self.path_delays_ns.len()
                ),
            ));
        }
        if self.path_delays_ns[0] != 0.0 || self.path_delays_ns.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::config(
                "path_delays",
                "must start at 0 and be non-decreasing",
            ));
        }
        if self.max_doppler_hz.is_nan() || self.max_doppler_hz < 0.0 {
            return Err(Error::config("max_doppler", "must be non-negative"));
        }
        if self.sample_rate_hz.is_nan() || self.sample_rate_hz <= 0.0 {
            return Err(Error::config("sample_rate", "must be positive"));
        }
        Ok(())
    }

    /// Path delays on the sample grid; values within 1e-9 of an integer are
    /// snapped to it.
    pub fn delays_in_samples(&self) -> Vec<f64> {
        self.path_delays_ns
            .iter()
            .map(|d| {
                let s = d * self.sample_rate_hz / 1e9;
                if (s - s.round()).abs() < 1e-9 {
                    s.round()
                } else {
                    s
                }
            })
            .collect()
    }

    /// Linear amplitude of each path.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.path_gains_db
            .iter()
            .map(|g| 10f64.powf(g / 20.0))
            .collect()
    }

    /// Samples of history the longest path reaches back.
    pub fn memory(&self) -> usize {
        self.delays_in_samples()
            .iter()
            .fold(0.0f64, |m, d| m.max(*d))
            .ceil() as usize
    }
}

/// `x(t - d)` by linear interpolation, zero before the first sample.
fn delayed(x: &[Complex64], n: usize, delay: f64) -> Complex64 {
    let t = n as f64 - delay;
    if t < 0.0 {
        return Complex64::default();
    }
    let i = t.floor() as usize;
    let frac = t - i as f64;
    let a = x[i];
    if frac == 0.0 || i + 1 >= x.len() {
        return a;
    }
    a * (1.0 - frac) + x[i + 1] * frac
}

pub fn apply_multipath(
    x: &[Complex64],
    profile: &ChannelProfile,
    seed: u64,
) -> Result<Vec<Complex64>> {
    profile.validate()?;
    let fading = FadingRealization::draw(profile, seed);
    apply_multipath_with(x, profile, &fading)
}

/// Tapped delay line driven by an explicit fading realization.
pub fn apply_multipath_with(
    x: &[Complex64],
    profile: &ChannelProfile,
    fading: &FadingRealization,
) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(Error::Signal(
            "cannot apply a channel to an empty sequence".into(),
        ));
    }
    profile.validate()?;
    if fading.taps().len() != profile.path_delays_ns.len() {
        return Err(Error::Signal(format!(
            "fading realization has {} taps, profile has {}",
            fading.taps().len(),
            profile.path_delays_ns.len()
        )));
    }
    let delays = profile.delays_in_samples();
    let amps = profile.amplitudes();
    let mut y = vec![Complex64::default(); x.len()];
    for ((tap, &delay), &amp) in fading.taps().iter().zip(&delays).zip(&amps) {
        for (n, out) in y.iter_mut().enumerate() {
            *out += amp * tap.value(n) * delayed(x, n, delay);
        }
    }
    Ok(y)
}

pub fn apply_flat_fading(
    x: &[Complex64],
    max_doppler_hz: f64,
    seed: u64,
) -> Result<Vec<Complex64>> {
    apply_multipath(x, &ChannelProfile::flat(max_doppler_hz), seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// `f64::INFINITY` disables the noise.
    pub snr_db: f64,
    pub seed: u64,
}

/// `x` plus circular complex Gaussian noise at the requested SNR relative to
/// the measured power of `x`.
pub fn add_awgn(x: &[Complex64], cfg: &NoiseConfig) -> Result<Vec<Complex64>> {
    if cfg.snr_db == f64::INFINITY {
        return Ok(x.to_vec());
    }
    if cfg.snr_db.is_nan() {
        return Err(Error::config("snr_db", "not a number"));
    }
    let power = mean_power(x);
    if x.is_empty() || power <= 0.0 {
        return Err(Error::Signal(
            "SNR is undefined for a zero-power signal".into(),
        ));
    }
    let sigma = (power / 10f64.powf(cfg.snr_db / 10.0) / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(x.iter()
        .map(|&s| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            s + Complex64::new(re, im) * sigma
        })
        .collect())
}

/// Fading condition applied before the noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    None,
    Flat,
    Epa,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::None, Scenario::Flat, Scenario::Epa];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::None => "none",
            Scenario::Flat => "flat",
            Scenario::Epa => "epa",
        }
    }

    pub fn profile(self) -> Option<ChannelProfile> {
        match self {
            Scenario::None => None,
            Scenario::Flat => Some(ChannelProfile::flat(10.0)),
            Scenario::Epa => Some(ChannelProfile::epa()),
        }
    }

    /// Extra leading samples needed so that a cut of the channel output is
    /// free of the delay line's start-up.
    pub fn guard(self) -> usize {
        self.profile().map_or(0, |p| p.memory())
    }

    pub fn apply(self, x: &[Complex64], seed: u64) -> Result<Vec<Complex64>> {
        match self.profile() {
            None => Ok(x.to_vec()),
            Some(profile) => apply_multipath(x, &profile, seed),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::config("scenario", format!("expected none, flat or epa, got {s:?}"))
            })
    }
}

/// Fading then noise, with independent seeds for each stage.
pub fn impair(
    x: &[Complex64],
    scenario: Scenario,
    snr_db: f64,
    seed: u64,
) -> Result<Vec<Complex64>> {
    let faded = scenario.apply(x, seed::derive(seed, &[0]))?;
    add_awgn(
        &faded,
        &NoiseConfig {
            snr_db,
            seed: seed::derive(seed, &[1]),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epa_delays_in_samples() {
        let p = ChannelProfile::epa();
        let d: Vec<f64> = p.delays_in_samples().iter().map(|v| v.round()).collect();
        assert_eq!(d, vec![0.0, 3.0, 7.0, 9.0, 11.0, 19.0, 41.0]);
        assert_eq!(p.memory(), 41);
        assert_eq!(Scenario::None.guard(), 0);
    }

    #[test]
    fn fractional_delay_interpolates() {
        let x: Vec<Complex64> = (0..4).map(|v| Complex64::new(v as f64, 0.0)).collect();
        assert_eq!(delayed(&x, 2, 0.5).re, 1.5);
        assert_eq!(delayed(&x, 0, 0.5).re, 0.0);
    }

    #[test]
    fn invalid_profiles() {
        let mut p = ChannelProfile::epa();
        p.path_gains_db.pop();
        assert!(p.validate().is_err());
        let mut p = ChannelProfile::epa();
        p.path_delays_ns.swap(1, 2);
        assert!(p.validate().is_err());
        assert!(apply_multipath(&[], &ChannelProfile::epa(), 0).is_err());
    }

    #[test]
    fn scenario_codes() {
        for s in Scenario::ALL {
            assert_eq!(Scenario::from_code(s.code()), Some(s));
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("rician".parse::<Scenario>().is_err());
    }
}
