//! Fidelity and similarity measures.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_io::{RgbImage, WatermarkBits};
use crate::plane::Plane;

/// Anything that can be viewed as one or more equally shaped channels.
pub trait Samples {
    /// `(width, height, channels)`.
    fn shape(&self) -> (usize, usize, usize);
    fn channels(&self) -> Vec<&[f64]>;
}

impl Samples for Plane {
    fn shape(&self) -> (usize, usize, usize) {
        (self.width(), self.height(), 1)
    }

    fn channels(&self) -> Vec<&[f64]> {
        vec![self.data()]
    }
}

impl Samples for RgbImage {
    fn shape(&self) -> (usize, usize, usize) {
        (self.width(), self.height(), 3)
    }

    fn channels(&self) -> Vec<&[f64]> {
        self.planes().iter().map(Plane::data).collect()
    }
}

impl Samples for [f64] {
    fn shape(&self) -> (usize, usize, usize) {
        (self.len(), 1, 1)
    }

    fn channels(&self) -> Vec<&[f64]> {
        vec![self]
    }
}

impl Samples for Vec<f64> {
    fn shape(&self) -> (usize, usize, usize) {
        self.as_slice().shape()
    }

    fn channels(&self) -> Vec<&[f64]> {
        vec![self.as_slice()]
    }
}

fn pairs<'a, A, B>(a: &'a A, b: &'a B) -> Result<impl Iterator<Item = (f64, f64)> + 'a>
where
    A: Samples + ?Sized,
    B: Samples + ?Sized,
{
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "shape mismatch: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.channels()
        .into_iter()
        .zip(b.channels())
        .flat_map(|(x, y)| x.iter().copied().zip(y.iter().copied())))
}

/// Mean squared difference over every sample of every channel.
pub fn mse<A, B>(a: &A, b: &B) -> Result<f64>
where
    A: Samples + ?Sized,
    B: Samples + ?Sized,
{
    let (w, h, c) = a.shape();
    let n = w * h * c;
    if n == 0 {
        return Err(Error::Degenerate("mse of empty inputs".into()));
    }
    let sum: f64 = pairs(a, b)?.map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / n as f64)
}

/// Peak value `R` in `10·log10(R² / MSE)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "u16", try_from = "u16")]
pub enum PeakMode {
    /// 255, the true peak of 8-bit samples.
    #[default]
    Standard,
    /// 511, for comparison with published tables computed that way.
    Compat511,
}

impl PeakMode {
    pub fn value(self) -> f64 {
        match self {
            PeakMode::Standard => 255.0,
            PeakMode::Compat511 => 511.0,
        }
    }
}

impl From<PeakMode> for u16 {
    fn from(p: PeakMode) -> u16 {
        p.value() as u16
    }
}

impl TryFrom<u16> for PeakMode {
    type Error = Error;

    fn try_from(v: u16) -> Result<Self> {
        match v {
            255 => Ok(PeakMode::Standard),
            511 => Ok(PeakMode::Compat511),
            other => Err(Error::Parameter(format!(
                "peak must be 255 or 511, got {other}"
            ))),
        }
    }
}

impl std::str::FromStr for PeakMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: u16 = s
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("peak must be 255 or 511, got '{s}'")))?;
        PeakMode::try_from(v)
    }
}

impl fmt::Display for PeakMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// PSNR in decibels; `f64::INFINITY` when `mse` is zero.
pub fn psnr(mse: f64, peak: PeakMode) -> Result<f64> {
    if mse.is_nan() || mse < 0.0 {
        return Err(Error::Parameter(format!("mse must be >= 0, got {mse}")));
    }
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let r = peak.value();
    Ok(10.0 * (r * r / mse).log10())
}

/// `Σ a·b / Σ a·a`. Normalizes by the first argument only, so
/// `ncc(a, 2a) == 2`.
pub fn ncc<A, B>(a: &A, b: &B) -> Result<f64>
where
    A: Samples + ?Sized,
    B: Samples + ?Sized,
{
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in pairs(a, b)? {
        num += x * y;
        den += x * x;
    }
    if den == 0.0 {
        return Err(Error::Degenerate("reference has zero energy".into()));
    }
    Ok(num / den)
}

/// Fraction of positions where the two bit strings differ.
pub fn ber(x: &WatermarkBits, y: &WatermarkBits) -> Result<f64> {
    ber_slices(x.bits(), y.bits())
}

pub fn ber_slices(x: &[i8], y: &[i8]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "bit strings differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Degenerate("empty bit strings".into()));
    }
    let wrong = x.iter().zip(y).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / x.len() as f64)
}

/// MSE, PSNR and NCC between a reference and a test image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub mse: f64,
    pub psnr_db: f64,
    pub peak: PeakMode,
    pub ncc: f64,
}

impl QualityReport {
    pub fn compare<A, B>(reference: &A, test: &B, peak: PeakMode) -> Result<Self>
    where
        A: Samples + ?Sized,
        B: Samples + ?Sized,
    {
        let mse = mse(reference, test)?;
        Ok(Self {
            mse,
            psnr_db: psnr(mse, peak)?,
            peak,
            ncc: ncc(reference, test)?,
        })
    }
}
