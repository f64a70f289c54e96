use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::ChannelProfile;
use crate::seed;

/// Oscillators per fading tap.
pub const OSCILLATORS: usize = 16;

/// Sum of complex sinusoids `Σ w_k exp(j ω_k n)`.
///
/// Frequencies follow the Jakes arrangement `ω_k = 2π f_D cos(α_k) / f_s`
/// with arrival angles `α_k = (2πk + θ) / N` and a random rotation `θ`.
/// Weights are independent circular Gaussians with variance `1/N`, so every
/// sample is exactly CN(0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SosProcess {
    weights: Vec<Complex64>,
    freqs: Vec<f64>,
}

impl SosProcess {
    pub fn draw(max_doppler_hz: f64, sample_rate_hz: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = rng.random_range(0.0..2.0 * PI);
        let scale = (0.5 / OSCILLATORS as f64).sqrt();
        let mut weights = Vec::with_capacity(OSCILLATORS);
        let mut freqs = Vec::with_capacity(OSCILLATORS);
        for k in 0..OSCILLATORS {
            let alpha = (2.0 * PI * k as f64 + theta) / OSCILLATORS as f64;
            freqs.push(2.0 * PI * max_doppler_hz * alpha.cos() / sample_rate_hz);
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            weights.push(Complex64::new(re, im) * scale);
        }
        SosProcess { weights, freqs }
    }

    /// Constant coefficient of 1.
    pub fn unity() -> Self {
        SosProcess {
            weights: vec![Complex64::new(1.0, 0.0)],
            freqs: vec![0.0],
        }
    }

    pub fn value(&self, n: usize) -> Complex64 {
        let t = n as f64;
        self.weights
            .iter()
            .zip(&self.freqs)
            .map(|(w, f)| w * Complex64::from_polar(1.0, f * t))
            .sum()
    }
}

/// One independent fading process per path.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingRealization {
    taps: Vec<SosProcess>,
}

impl FadingRealization {
    pub fn draw(profile: &ChannelProfile, seed: u64) -> Self {
        let taps = (0..profile.path_delays_ns.len())
            .map(|p| {
                SosProcess::draw(
                    profile.max_doppler_hz,
                    profile.sample_rate_hz,
                    seed::derive(seed, &[p as u64]),
                )
            })
            .collect();
        FadingRealization { taps }
    }

    pub fn unity(paths: usize) -> Self {
        FadingRealization {
            taps: vec![SosProcess::unity(); paths],
        }
    }

    pub fn taps(&self) -> &[SosProcess] {
        &self.taps
    }

    /// Coefficient time series of path `p` over `n` samples.
    pub fn series(&self, p: usize, n: usize) -> Vec<Complex64> {
        (0..n).map(|i| self.taps[p].value(i)).collect()
    }
}
