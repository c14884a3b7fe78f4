//! Blind embedding and extraction in a level-3 Haar detail band.
//!
//! Each watermark bit `x ∈ {−1, +1}` is written into one keyed coefficient
//! `t` of the chosen 64×64 band as
//!
//! ```text
//! t' = q * round(t / q) + alpha * x
//! ```
//!
//! where `alpha` comes from the fuzzy system fed with the texture sensitivity
//! of a window of neighboring coefficients. Extraction reads the sign of the
//! residual `t'' - q * round(t'' / q)`. Whenever `0 < alpha < q / 2` the
//! residual of an unmodified coefficient is exactly `alpha * x`, so decoding
//! needs only the key and the parameters.

use serde::{Deserialize, Serialize};

use crate::dwt::{analyze, reconstruct, Orientation, SubbandPyramid};
use crate::error::{Error, Result};
use crate::fuzzy::{texture_sensitivity, FuzzySystem};
use crate::image_io::{
    extract_blue, prepare_host, replace_blue, RgbImage, WatermarkBits, HOST_SIDE, WATERMARK_LEN,
    WATERMARK_SIDE,
};
use crate::metrics;
use crate::par;
use crate::plane::Plane;
use crate::prng::{partial_shuffle, SplitMix64};

/// Decomposition depth used for embedding. A 512×512 host gives 64×64 bands.
pub const EMBED_LEVELS: usize = 3;

/// Which coefficients feed the texture window of a selected position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowOrder {
    /// The `window` coefficients immediately before the position in the
    /// band's row-major order, wrapping at the start of the band.
    #[default]
    Raster,
    /// The `window` coefficients selected just before this one in keyed
    /// permutation order, wrapping.
    Permutation,
}

/// Everything that controls embedding and extraction. The key is kept out of
/// serialized parameter files and travels separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedParams {
    /// Quantization step of the embedding lattice.
    pub q: f64,
    #[serde(skip)]
    pub key: u64,
    /// Level-3 detail band that carries the payload.
    pub band: Orientation,
    /// Number of coefficients in each texture window.
    pub window: usize,
    pub window_order: WindowOrder,
    /// Integer added to each coefficient before the texture count rounds it.
    pub texture_offset: i64,
    /// `[alpha_min, alpha_max]` for the default fuzzy system. When absent,
    /// `[q / 8, 0.45 * q]` is used.
    pub alpha_bounds: Option<[f64; 2]>,
}

impl Default for EmbedParams {
    fn default() -> Self {
        Self {
            q: 16.0,
            key: 0,
            band: Orientation::Hl,
            window: 8,
            window_order: WindowOrder::Raster,
            texture_offset: 0,
            alpha_bounds: None,
        }
    }
}

impl EmbedParams {
    pub fn with_key(mut self, key: u64) -> Self {
        self.key = key;
        self
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    /// Explicit bounds if set, otherwise `(q / 8, 0.45 q)`.
    pub fn alpha_bounds(&self) -> (f64, f64) {
        match self.alpha_bounds {
            Some([lo, hi]) => (lo, hi),
            None => (0.5 * self.q / 4.0, 0.9 * self.q / 2.0),
        }
    }

    /// The standard three-rule system spanning [`alpha_bounds`](Self::alpha_bounds).
    pub fn default_fuzzy(&self) -> Result<FuzzySystem> {
        let (lo, hi) = self.alpha_bounds();
        FuzzySystem::standard(lo, hi)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::Parameter(format!("q must be > 0, got {}", self.q)));
        }
        if self.window == 0 {
            return Err(Error::Parameter(
                "texture window must hold at least 1 coefficient".into(),
            ));
        }
        if self.window >= WATERMARK_LEN {
            return Err(Error::Parameter(format!(
                "texture window must be smaller than the band ({WATERMARK_LEN})"
            )));
        }
        let (lo, hi) = self.alpha_bounds();
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Parameter(format!(
                "strength bounds need 0 < min <= max, got ({lo}, {hi})"
            )));
        }
        if hi >= self.q / 2.0 {
            return Err(Error::Parameter(format!(
                "alpha_max {hi} must stay below q/2 = {} for blind decoding",
                self.q / 2.0
            )));
        }
        Ok(())
    }

    /// Validates the parameters and checks that every strength `fs` can
    /// produce lies strictly inside `(0, q/2)`.
    pub fn check_decodable(&self, fs: &FuzzySystem) -> Result<()> {
        self.validate()?;
        let (lo, hi) = fs.output_range();
        if lo.is_nan() || lo <= 0.0 || hi >= self.q / 2.0 {
            return Err(Error::Parameter(format!(
                "fuzzy output range [{lo}, {hi}] must lie inside (0, q/2 = {})",
                self.q / 2.0
            )));
        }
        Ok(())
    }
}

/// Keyed order in which watermark bits visit band coefficients:
/// watermark index `j` lives at `positions[j]`, given as `(row, col)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientSelection {
    positions: Vec<(usize, usize)>,
}

impl CoefficientSelection {
    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    fn raster(&self, j: usize) -> usize {
        let (r, c) = self.positions[j];
        r * WATERMARK_SIDE + c
    }
}

/// Full keyed permutation of the 64×64 band: a Fisher–Yates shuffle of the
/// raster indices driven by SplitMix64 seeded with the key.
pub fn select_positions(
    params: &EmbedParams,
    band_dims: (usize, usize),
) -> Result<CoefficientSelection> {
    if band_dims != (WATERMARK_SIDE, WATERMARK_SIDE) {
        return Err(Error::Dimension(format!(
            "target band must be {WATERMARK_SIDE}x{WATERMARK_SIDE}, got {}x{}",
            band_dims.0, band_dims.1
        )));
    }
    let mut rng = SplitMix64::new(params.key);
    let positions = partial_shuffle(WATERMARK_LEN, WATERMARK_LEN, &mut rng)
        .into_iter()
        .map(|i| (i / WATERMARK_SIDE, i % WATERMARK_SIDE))
        .collect();
    Ok(CoefficientSelection { positions })
}

/// Nearest lattice point plus the signed strength.
#[inline]
pub fn lattice_embed(t: f64, q: f64, alpha: f64, bit: i8) -> f64 {
    q * (t / q).round() + alpha * f64::from(bit)
}

/// Signed distance from the nearest lattice point.
#[inline]
pub fn lattice_residual(t: f64, q: f64) -> f64 {
    t - q * (t / q).round()
}

#[inline]
pub fn decode_residual(residual: f64) -> i8 {
    if residual >= 0.0 {
        1
    } else {
        -1
    }
}

fn target_band<'a>(pyr: &'a SubbandPyramid, params: &EmbedParams) -> Result<&'a [f64]> {
    let band = pyr.band(EMBED_LEVELS, params.band).ok_or_else(|| {
        Error::Structure(format!(
            "pyramid has {} levels, embedding needs {EMBED_LEVELS}",
            pyr.levels()
        ))
    })?;
    if band.dims() != (WATERMARK_SIDE, WATERMARK_SIDE) {
        return Err(Error::Dimension(format!(
            "level-{EMBED_LEVELS} band is {}x{}, expected {WATERMARK_SIDE}x{WATERMARK_SIDE} (512x512 host)",
            band.width(),
            band.height()
        )));
    }
    Ok(band.data())
}

/// Strength for every watermark index, computed from the band as it is
/// before any coefficient changes. Positions are independent of each other.
pub fn embedding_strengths(
    band: &[f64],
    selection: &CoefficientSelection,
    params: &EmbedParams,
    fs: &FuzzySystem,
) -> Result<Vec<f64>> {
    params.validate()?;
    let n = selection.positions.len();
    let w = params.window;
    par::map_range(n, |j| {
        let window: Vec<f64> = (1..=w)
            .map(|k| {
                let idx = match params.window_order {
                    WindowOrder::Raster => (selection.raster(j) + n - k % n) % n,
                    WindowOrder::Permutation => selection.raster((j + n - k % n) % n),
                };
                band[idx]
            })
            .collect();
        let s = texture_sensitivity(&window, params.q, params.texture_offset)?;
        Ok(fs.infer(s.normalized))
    })
    .into_iter()
    .collect()
}

/// Writes `wm` into the selected band of a 3-level pyramid. Coefficients
/// outside the band, and the approximation, are left untouched.
pub fn embed(
    pyr: &SubbandPyramid,
    wm: &WatermarkBits,
    params: &EmbedParams,
    fs: &FuzzySystem,
) -> Result<SubbandPyramid> {
    params.check_decodable(fs)?;
    let band = target_band(pyr, params)?;
    let selection = select_positions(params, (WATERMARK_SIDE, WATERMARK_SIDE))?;
    let alphas = embedding_strengths(band, &selection, params, fs)?;

    let mut out = pyr.clone();
    let target = out
        .band_mut(EMBED_LEVELS, params.band)
        .expect("band checked above")
        .data_mut();
    for (j, (&bit, alpha)) in wm.bits().iter().zip(alphas).enumerate() {
        let idx = selection.raster(j);
        target[idx] = lattice_embed(band[idx], params.q, alpha, bit);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    /// Recovered bits in watermark row-major order.
    pub bits: WatermarkBits,
    /// Normalized correlation against the reference, with bits mapped to
    /// {0, 1}. `None` without a reference or when the reference has no ones.
    pub ncc_vs_original: Option<f64>,
    /// Fraction of mismatched bits; `None` without a reference.
    pub ber: Option<f64>,
}

impl ExtractionResult {
    fn score(bits: WatermarkBits, reference: Option<&WatermarkBits>) -> Result<Self> {
        let (ncc_vs_original, ber) = match reference {
            Some(r) => (
                metrics::ncc(&r.to_unipolar(), &bits.to_unipolar()).ok(),
                Some(metrics::ber(r, &bits)?),
            ),
            None => (None, None),
        };
        Ok(Self {
            bits,
            ncc_vs_original,
            ber,
        })
    }
}

/// Blind extraction from a (possibly attacked) pyramid.
pub fn extract(
    pyr: &SubbandPyramid,
    params: &EmbedParams,
    fs: &FuzzySystem,
) -> Result<ExtractionResult> {
    extract_with_reference(pyr, params, fs, None)
}

pub fn extract_with_reference(
    pyr: &SubbandPyramid,
    params: &EmbedParams,
    fs: &FuzzySystem,
    reference: Option<&WatermarkBits>,
) -> Result<ExtractionResult> {
    params.check_decodable(fs)?;
    let band = target_band(pyr, params)?;
    let selection = select_positions(params, (WATERMARK_SIDE, WATERMARK_SIDE))?;
    let bits = (0..WATERMARK_LEN)
        .map(|j| decode_residual(lattice_residual(band[selection.raster(j)], params.q)))
        .collect();
    ExtractionResult::score(WatermarkBits::new(bits)?, reference)
}

/// Resizes the host, embeds into its blue plane and returns the color result
/// with the blue plane rounded to 8-bit samples.
pub fn embed_image(
    host: &RgbImage,
    wm: &WatermarkBits,
    params: &EmbedParams,
    fs: &FuzzySystem,
) -> Result<RgbImage> {
    params.check_decodable(fs)?;
    let prepared = prepare_host(host)?;
    let pyr = analyze(&extract_blue(&prepared), EMBED_LEVELS)?;
    let marked = embed(&pyr, wm, params, fs)?;
    let band = marked
        .band(EMBED_LEVELS, params.band)
        .expect("embed checked the depth");
    let blue = quantize_keeping_band(&reconstruct(&marked)?, band, params.band)?;
    replace_blue(&prepared, &blue)
}

/// Weights of the 8×8 pixel block behind one level-3 coefficient, found by
/// analyzing unit impulses.
fn block_weights(o: Orientation) -> Result<[f64; 64]> {
    let side = 1 << EMBED_LEVELS;
    let mut w = [0.0; 64];
    for (i, wi) in w.iter_mut().enumerate() {
        let mut p = Plane::zeros(side, side);
        p.set(i % side, i / side, 1.0);
        *wi = analyze(&p, EMBED_LEVELS)?
            .band(EMBED_LEVELS, o)
            .expect("3 levels")
            .get(0, 0);
    }
    Ok(w)
}

/// Rounds a reconstructed plane to 8-bit samples so that every coefficient of
/// `band` survives within half a pixel step (1/16 for Haar).
///
/// Plain rounding fails here: one coefficient moves all 64 pixels of its block
/// by the same fraction, so independent rounding snaps the whole change to a
/// multiple of 8. Instead, each block is rounded and then nudged one pixel at
/// a time, cheapest rounding reversal first, until its coefficient is back on
/// target. Blocks are disjoint, so they are processed independently.
pub fn quantize_keeping_band(plane: &Plane, band: &Plane, o: Orientation) -> Result<Plane> {
    let side = 1 << EMBED_LEVELS;
    if plane.dims() != (band.width() * side, band.height() * side) {
        return Err(Error::Dimension(format!(
            "plane {}x{} does not match a {}x{} level-{EMBED_LEVELS} band",
            plane.width(),
            plane.height(),
            band.width(),
            band.height()
        )));
    }
    let weights = block_weights(o)?;
    let unit = weights
        .iter()
        .map(|w| w.abs())
        .filter(|&w| w > 0.0)
        .fold(f64::INFINITY, f64::min);
    let blocks = par::map_range(band.len(), |b| {
        let (bx, by) = (b % band.width() * side, b / band.width() * side);
        let cont: [f64; 64] = std::array::from_fn(|i| plane.get(bx + i % side, by + i / side));
        let mut cur = cont.map(|v| v.round().clamp(0.0, 255.0));
        let target = band.data()[b];
        loop {
            let need = target - cur.iter().zip(&weights).map(|(c, w)| c * w).sum::<f64>();
            if need.abs() <= unit / 2.0 {
                break;
            }
            let best = (0..64)
                .filter(|&i| weights[i] != 0.0)
                .map(|i| (i, weights[i].signum() * need.signum()))
                .filter(|&(i, d)| (0.0..=255.0).contains(&(cur[i] + d)))
                .map(|(i, d)| {
                    (
                        i,
                        d,
                        (cur[i] + d - cont[i]).abs() - (cur[i] - cont[i]).abs(),
                    )
                })
                .min_by(|a, b| a.2.total_cmp(&b.2));
            match best {
                Some((i, d, _)) => cur[i] += d,
                None => break,
            }
        }
        cur
    });
    let mut out = Plane::zeros(plane.width(), plane.height());
    for (b, block) in blocks.iter().enumerate() {
        let (bx, by) = (b % band.width() * side, b / band.width() * side);
        for (i, &v) in block.iter().enumerate() {
            out.set(bx + i % side, by + i / side, v);
        }
    }
    Ok(out)
}

/// Extracts from the blue plane of a 512×512 image. Other sizes are refused
/// rather than resized, since resampling would misalign the coefficients.
pub fn extract_image(
    img: &RgbImage,
    params: &EmbedParams,
    fs: &FuzzySystem,
    reference: Option<&WatermarkBits>,
) -> Result<ExtractionResult> {
    if img.dims() != (HOST_SIDE, HOST_SIDE) {
        return Err(Error::Dimension(format!(
            "extraction needs a {HOST_SIDE}x{HOST_SIDE} image, got {}x{}; resize or pad it explicitly first",
            img.width(),
            img.height()
        )));
    }
    let pyr = analyze(&extract_blue(img), EMBED_LEVELS)?;
    extract_with_reference(&pyr, params, fs, reference)
}
