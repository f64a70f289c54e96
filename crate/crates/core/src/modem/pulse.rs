use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShapeConfig {
    pub samples_per_symbol: usize,
    /// Excess bandwidth in (0, 1].
    pub rolloff: f64,
    /// Filter length in symbols; the filter has `span · sps + 1` taps.
    pub span: usize,
}

impl Default for PulseShapeConfig {
    fn default() -> Self {
        PulseShapeConfig {
            samples_per_symbol: 8,
            rolloff: 0.35,
            span: 12,
        }
    }
}

impl PulseShapeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_symbol == 0 {
            return Err(Error::config("samples_per_symbol", "must be positive"));
        }
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(Error::config(
                "rolloff",
                format!("{} outside (0, 1]", self.rolloff),
            ));
        }
        if self.span == 0 || !self.span.is_multiple_of(2) {
            return Err(Error::config(
                "span",
                "must be a positive even number of symbols",
            ));
        }
        Ok(())
    }

    /// Samples discarded at each end of the shaped sequence.
    pub fn transient(&self) -> usize {
        self.span * self.samples_per_symbol
    }

    /// Symbols needed to obtain `steady_len` samples free of filter
    /// transients.
    pub fn required_symbols(&self, steady_len: usize) -> usize {
        steady_len.div_ceil(self.samples_per_symbol) + self.span
    }
}

/// Root-raised-cosine taps over `span` symbols, symmetric, scaled to unit
/// energy.
pub fn rrc_taps(cfg: &PulseShapeConfig) -> Vec<f64> {
    let sps = cfg.samples_per_symbol as f64;
    let beta = cfg.rolloff;
    let half = (cfg.span * cfg.samples_per_symbol / 2) as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| {
            let t = i as f64 / sps;
            if i == 0 {
                1.0 - beta + 4.0 * beta / PI
            } else if ((4.0 * beta * t).abs() - 1.0).abs() < 1e-12 {
                let a = PI / (4.0 * beta);
                beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos())
            } else {
                let num =
                    (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
                let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
                num / den
            }
        })
        .collect();
    let energy = taps.iter().map(|v| v * v).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|v| *v /= energy);
    taps
}

/// Full linear convolution of a complex sequence with real taps.
pub fn convolve(signal: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    if signal.is_empty() || taps.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::default(); signal.len() + taps.len() - 1];
    for (i, &s) in signal.iter().enumerate() {
        if s == Complex64::default() {
            continue;
        }
        for (o, &t) in out[i..].iter_mut().zip(taps) {
            *o += s * t;
        }
    }
    out
}

/// Upsamples `symbols` by `samples_per_symbol` and filters them with the RRC
/// pulse. Returns the full convolution (`len · sps + span · sps` samples),
/// scaled so that the steady-state region has unit mean power. The symbol
/// `k` peaks at sample `k · sps + span · sps / 2`.
///
/// `steady_len` is the number of transient-free samples the caller needs.
pub fn pulse_shape(
    symbols: &[Complex64],
    cfg: &PulseShapeConfig,
    steady_len: usize,
) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    if symbols.is_empty() {
        return Err(Error::Length(
            "pulse shaping needs at least one symbol".into(),
        ));
    }
    let required = cfg.required_symbols(steady_len);
    if symbols.len() < required {
        return Err(Error::Length(format!(
            "{} symbols cannot yield {steady_len} steady-state samples; {required} required",
            symbols.len()
        )));
    }
    let sps = cfg.samples_per_symbol;
    let mut upsampled = vec![Complex64::default(); symbols.len() * sps];
    for (k, s) in symbols.iter().enumerate() {
        upsampled[k * sps] = *s;
    }
    let mut out = convolve(&upsampled, &rrc_taps(cfg));
    let transient = cfg.transient();
    let steady = &out[transient..symbols.len() * sps];
    let region = if steady.is_empty() { &out[..] } else { steady };
    let power = region.iter().map(|z| z.norm_sqr()).sum::<f64>() / region.len() as f64;
    if power > 0.0 {
        let scale = power.sqrt().recip();
        out.iter_mut().for_each(|z| *z *= scale);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taps_are_symmetric_with_positive_sum() {
        let taps = rrc_taps(&PulseShapeConfig::default());
        assert_eq!(taps.len(), 97);
        for (a, b) in taps.iter().zip(taps.iter().rev()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(taps.iter().sum::<f64>() > 0.0);
        // 4βt = ±1 lands on a tap for β = 0.25, sps = 8 (t = ±1)
        let singular = rrc_taps(&PulseShapeConfig {
            rolloff: 0.25,
            ..Default::default()
        });
        assert!(singular.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn impulse_reproduces_taps() {
        let cfg = PulseShapeConfig::default();
        let mut symbols = vec![Complex64::default(); 12];
        symbols[0] = Complex64::new(1.0, 0.0);
        let out = pulse_shape(&symbols, &cfg, 0).unwrap();
        let taps = rrc_taps(&cfg);
        let gain = out[taps.len() / 2].re / taps[taps.len() / 2];
        for (o, t) in out.iter().zip(&taps) {
            assert!((o.re - gain * t).abs() < 1e-12 && o.im.abs() < 1e-15);
        }
    }

    #[test]
    fn short_sequence_reports_required_count() {
        let cfg = PulseShapeConfig::default();
        let symbols = vec![Complex64::new(1.0, 0.0); 100];
        let err = pulse_shape(&symbols, &cfg, 1024).unwrap_err();
        assert!(err.to_string().contains("140 required"), "{err}");
        assert!(pulse_shape(&[], &cfg, 0).is_err());
    }

    #[test]
    fn constant_symbols_give_flat_envelope() {
        let cfg = PulseShapeConfig::default();
        let symbols = vec![Complex64::new(0.6, -0.8); 300];
        let out = pulse_shape(&symbols, &cfg, 1024).unwrap();
        let steady = &out[cfg.transient()..300 * cfg.samples_per_symbol];
        // polyphase DC gain of the filter, computed independently
        let taps = rrc_taps(&cfg);
        let sps = cfg.samples_per_symbol;
        let phase_gains: Vec<f64> = (0..sps)
            .map(|p| taps.iter().skip(p).step_by(sps).sum())
            .collect();
        let mean_gain = phase_gains.iter().sum::<f64>() / sps as f64;
        for g in &phase_gains {
            assert!(((g - mean_gain) / mean_gain).abs() < 0.01);
        }
        let mean_mag = steady.iter().map(|z| z.norm()).sum::<f64>() / steady.len() as f64;
        for z in steady {
            assert!(((z.norm() - mean_mag) / mean_mag).abs() < 0.01);
        }
    }

    #[test]
    fn unit_power_after_shaping() {
        let cfg = PulseShapeConfig::default();
        let symbols: Vec<Complex64> = (0..200)
            .map(|k| Complex64::from_polar(1.0 + (k % 3) as f64, k as f64))
            .collect();
        let out = pulse_shape(&symbols, &cfg, 1024).unwrap();
        let steady = &out[cfg.transient()..200 * cfg.samples_per_symbol];
        let power = steady.iter().map(|z| z.norm_sqr()).sum::<f64>() / steady.len() as f64;
        assert!((power - 1.0).abs() < 1e-6);
    }
}
