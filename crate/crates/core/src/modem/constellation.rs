use std::f64::consts::PI;

use num_complex::Complex64;

use super::ModulationScheme;
use crate::error::{Error, Result};

/// Finite symbol alphabet; `points[i]` is the symbol for bit pattern `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSpec {
    pub points: Vec<Complex64>,
    pub bits_per_symbol: u32,
}

impl ConstellationSpec {
    fn normalized(points: Vec<Complex64>) -> Self {
        let power = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        let scale = power.sqrt().recip();
        let bits_per_symbol = points.len().trailing_zeros();
        ConstellationSpec {
            points: points.into_iter().map(|p| p * scale).collect(),
            bits_per_symbol,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn map(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    pub fn mean_power(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// Index of the closest point.
    pub fn nearest(&self, z: Complex64) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, p) in self.points.iter().enumerate() {
            let d = (p - z).norm_sqr();
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Smallest distance between two distinct points.
    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
        best
    }
}

/// Ring radii relative to an inner ring of radius 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ApskRadii {
    /// 4 + 12
    pub apsk16: f64,
    /// 4 + 12 + 16
    pub apsk32: [f64; 2],
    /// 4 + 12 + 20 + 28
    pub apsk64: [f64; 3],
    /// 8 + 16 + 20 + 36 + 48
    pub apsk128: [f64; 4],
}

impl Default for ApskRadii {
    fn default() -> Self {
        ApskRadii {
            apsk16: 2.57,
            apsk32: [2.53, 4.30],
            apsk64: [2.4, 4.3, 7.0],
            apsk128: [1.9, 2.8, 3.7, 4.6],
        }
    }
}

fn gray(k: usize) -> usize {
    k ^ (k >> 1)
}

fn pam_levels(count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |k| 2.0 * k as f64 - (count as f64 - 1.0))
}

fn pam(count: usize) -> Vec<Complex64> {
    let mut points = vec![Complex64::default(); count];
    for (k, level) in pam_levels(count).enumerate() {
        points[gray(k)] = Complex64::new(level, 0.0);
    }
    points
}

/// Square QAM with independent Gray codes on each axis; the in-phase bits
/// are the high half of the symbol index.
fn square_qam(side: usize) -> Vec<Complex64> {
    let bits = side.trailing_zeros();
    let mut points = vec![Complex64::default(); side * side];
    for (ki, i) in pam_levels(side).enumerate() {
        for (kq, q) in pam_levels(side).enumerate() {
            points[(gray(ki) << bits) | gray(kq)] = Complex64::new(i, q);
        }
    }
    points
}

/// Square grid of odd levels with `corner × corner` blocks removed from each
/// corner, enumerated row by row.
fn cross_qam(side: usize, corner: usize) -> Vec<Complex64> {
    let edge = side - corner;
    let levels: Vec<f64> = pam_levels(side).collect();
    let mut points = Vec::new();
    for (r, &q) in levels.iter().enumerate().rev() {
        for (c, &i) in levels.iter().enumerate() {
            let in_corner_rows = r < corner || r >= edge;
            let in_corner_cols = c < corner || c >= edge;
            if !(in_corner_rows && in_corner_cols) {
                points.push(Complex64::new(i, q));
            }
        }
    }
    points
}

/// Concentric rings; ring `r` with `n` points sits at phases `π/n + 2πk/n`.
fn apsk(rings: &[(usize, f64)]) -> Vec<Complex64> {
    let mut points = Vec::new();
    for &(count, radius) in rings {
        let offset = PI / count as f64;
        for k in 0..count {
            points.push(Complex64::from_polar(
                radius,
                offset + 2.0 * PI * k as f64 / count as f64,
            ));
        }
    }
    points
}

pub fn make_constellation(scheme: ModulationScheme) -> Result<ConstellationSpec> {
    make_constellation_with(scheme, &ApskRadii::default())
}

pub fn make_constellation_with(
    scheme: ModulationScheme,
    radii: &ApskRadii,
) -> Result<ConstellationSpec> {
    use ModulationScheme::*;
    let points = match scheme {
        Pam16 => pam(16),
        Qam16 => square_qam(4),
        Qam64 => square_qam(8),
        Qam32 => cross_qam(6, 1),
        Qam128 => cross_qam(12, 2),
        Apsk16 => apsk(&[(4, 1.0), (12, radii.apsk16)]),
        Apsk32 => apsk(&[(4, 1.0), (12, radii.apsk32[0]), (16, radii.apsk32[1])]),
        Apsk64 => {
            let r = radii.apsk64;
            apsk(&[(4, 1.0), (12, r[0]), (20, r[1]), (28, r[2])])
        }
        Apsk128 => {
            let r = radii.apsk128;
            apsk(&[(8, 1.0), (16, r[0]), (20, r[1]), (36, r[2]), (48, r[3])])
        }
        analog => {
            return Err(Error::Usage(format!(
                "{} is an analog format and has no constellation",
                analog.name()
            )))
        }
    };
    Ok(ConstellationSpec::normalized(points))
}
