//! Deterministic degradations used to probe robustness.
//!
//! Every attack keeps the image size and returns 8-bit samples (rounded and
//! clamped), as a real attacker's output file would contain. Attacks are
//! written on the command line as `kind:intensity[:option=value]`:
//!
//! | spec              | meaning                                        |
//! |-------------------|------------------------------------------------|
//! | `jpeg:10`         | JPEG round trip at quality 10                  |
//! | `median:3`        | 3×3 median filter                              |
//! | `crop:0.25`       | zero 25% of the area (`:anchor=center` etc.)   |
//! | `sp:0.05:seed=7`  | salt and pepper on 5% of pixels, PRNG seed 7   |
//! | `rot:8`           | rotate 8° counter-clockwise about the center   |

mod jpeg;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use jpeg::{fdct8x8, idct8x8, jpeg_attack, quant_table, round_trip_block, LUMA_QUANT};

use crate::error::{Error, Result};
use crate::image_io::RgbImage;
use crate::par;
use crate::plane::Plane;
use crate::prng::{partial_shuffle, SplitMix64};

pub const SPEC_GRAMMAR: &str =
    "jpeg:<1-100> | median:<odd>=3 | crop:<0-1)[:anchor=tl|tr|bl|br|center] \
| sp:<0-1>[:seed=N] | rot:<degrees>";

/// Corner or center the crop rectangle is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CropAnchor {
    #[default]
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
    Center,
}

impl CropAnchor {
    fn code(self) -> &'static str {
        match self {
            CropAnchor::TopLeft => "tl",
            CropAnchor::TopRight => "tr",
            CropAnchor::BottomLeft => "bl",
            CropAnchor::BottomRight => "br",
            CropAnchor::Center => "center",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "tl" | "topleft" => CropAnchor::TopLeft,
            "tr" | "topright" => CropAnchor::TopRight,
            "bl" | "bottomleft" => CropAnchor::BottomLeft,
            "br" | "bottomright" => CropAnchor::BottomRight,
            "center" | "c" => CropAnchor::Center,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AttackSpec {
    Jpeg { quality: u8 },
    Median { window: usize },
    Crop { fraction: f64, anchor: CropAnchor },
    SaltPepper { density: f64, seed: u64 },
    Rotation { degrees: f64 },
}

impl AttackSpec {
    /// Short family name used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            AttackSpec::Jpeg { .. } => "jpeg",
            AttackSpec::Median { .. } => "median",
            AttackSpec::Crop { .. } => "crop",
            AttackSpec::SaltPepper { .. } => "salt_pepper",
            AttackSpec::Rotation { .. } => "rotation",
        }
    }

    /// Human-readable intensity, e.g. `Q=10`, `3x3`, `5%`, `4deg`.
    pub fn intensity_label(&self) -> String {
        match *self {
            AttackSpec::Jpeg { quality } => format!("Q={quality}"),
            AttackSpec::Median { window } => format!("{window}x{window}"),
            AttackSpec::Crop { fraction, .. } => percent(fraction),
            AttackSpec::SaltPepper { density, .. } => percent(density),
            AttackSpec::Rotation { degrees } => format!("{degrees}deg"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AttackSpec::Jpeg { quality } => quant_table(quality).map(|_| ()),
            AttackSpec::Median { window } if window < 3 || window % 2 == 0 => Err(
                Error::Parameter(format!("median window must be odd and >= 3, got {window}")),
            ),
            AttackSpec::Crop { fraction, .. } if !(0.0..1.0).contains(&fraction) => Err(
                Error::Parameter(format!("crop fraction must be in [0, 1), got {fraction}")),
            ),
            AttackSpec::SaltPepper { density, .. } if !(0.0..=1.0).contains(&density) => Err(
                Error::Parameter(format!("noise density must be in [0, 1], got {density}")),
            ),
            AttackSpec::Rotation { degrees } if !degrees.is_finite() => {
                Err(Error::Parameter("rotation angle must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, img: &RgbImage) -> Result<RgbImage> {
        self.validate()?;
        match *self {
            AttackSpec::Jpeg { quality } => jpeg_attack(img, quality),
            AttackSpec::Median { window } => median_attack(img, window),
            AttackSpec::Crop { fraction, anchor } => crop_attack_anchored(img, fraction, anchor),
            AttackSpec::SaltPepper { density, seed } => salt_pepper_attack(img, density, seed),
            AttackSpec::Rotation { degrees } => Ok(rotation_attack(img, degrees)),
        }
    }

    /// The grid exercised by the robustness bench: JPEG Q=10, 3×3 median,
    /// cropping 5–35%, salt and pepper 5–20%, rotation 4–16°.
    pub fn default_grid() -> Vec<AttackSpec> {
        let mut grid = vec![
            AttackSpec::Jpeg { quality: 10 },
            AttackSpec::Median { window: 3 },
        ];
        grid.extend([0.05, 0.15, 0.25, 0.35].map(|fraction| AttackSpec::Crop {
            fraction,
            anchor: CropAnchor::TopLeft,
        }));
        grid.extend(
            [0.05, 0.10, 0.15, 0.20]
                .into_iter()
                .zip(1u64..)
                .map(|(density, seed)| AttackSpec::SaltPepper { density, seed }),
        );
        grid.extend([4.0, 8.0, 12.0, 16.0].map(|degrees| AttackSpec::Rotation { degrees }));
        grid
    }
}

fn percent(f: f64) -> String {
    format!("{}%", (f * 1e6).round() / 1e4)
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AttackSpec::Jpeg { quality } => write!(f, "jpeg:{quality}"),
            AttackSpec::Median { window } => write!(f, "median:{window}"),
            AttackSpec::Crop { fraction, anchor } => {
                write!(f, "crop:{fraction}")?;
                if anchor != CropAnchor::TopLeft {
                    write!(f, ":anchor={}", anchor.code())?;
                }
                Ok(())
            }
            AttackSpec::SaltPepper { density, seed } => write!(f, "sp:{density}:seed={seed}"),
            AttackSpec::Rotation { degrees } => write!(f, "rot:{degrees}"),
        }
    }
}

impl FromStr for AttackSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| {
            Error::Parameter(format!("bad attack '{s}': {why}; expected {SPEC_GRAMMAR}"))
        };
        let mut parts = s.trim().split(':');
        let kind = parts.next().unwrap_or_default().to_ascii_lowercase();
        let intensity = parts.next();
        let mut seed = 0u64;
        let mut anchor = CropAnchor::TopLeft;
        for opt in parts {
            let (k, v) = opt
                .split_once('=')
                .ok_or_else(|| bad("options look like key=value"))?;
            match k {
                "seed" => {
                    seed = v
                        .parse()
                        .map_err(|_| bad("seed must be an unsigned integer"))?
                }
                "anchor" => anchor = CropAnchor::parse(v).ok_or_else(|| bad("unknown anchor"))?,
                _ => return Err(bad("unknown option")),
            }
        }
        let num = |what: &str| -> Result<f64> {
            intensity
                .ok_or_else(|| bad(&format!("missing {what}")))?
                .parse::<f64>()
                .map_err(|_| bad(&format!("{what} must be a number")))
        };
        let spec = match kind.as_str() {
            "jpeg" | "jpg" => {
                let q = num("quality")?;
                if q.fract() != 0.0 || !(1.0..=100.0).contains(&q) {
                    return Err(bad("quality must be an integer 1-100"));
                }
                AttackSpec::Jpeg { quality: q as u8 }
            }
            "median" => {
                let w = if intensity.is_some() {
                    num("window")?
                } else {
                    3.0
                };
                if w.fract() != 0.0 || w < 0.0 {
                    return Err(bad("window must be a positive integer"));
                }
                AttackSpec::Median { window: w as usize }
            }
            "crop" => AttackSpec::Crop {
                fraction: num("fraction")?,
                anchor,
            },
            "sp" | "salt_pepper" | "saltpepper" => AttackSpec::SaltPepper {
                density: num("density")?,
                seed,
            },
            "rot" | "rotation" => AttackSpec::Rotation {
                degrees: num("angle")?,
            },
            _ => return Err(bad("unknown kind")),
        };
        spec.validate().map_err(|e| bad(&e.to_string()))?;
        Ok(spec)
    }
}

impl TryFrom<String> for AttackSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AttackSpec> for String {
    fn from(a: AttackSpec) -> String {
        a.to_string()
    }
}

fn median_plane(p: &Plane, window: usize) -> Plane {
    let (w, h) = p.dims();
    let r = (window / 2) as isize;
    let mut data = vec![0.0; w * h];
    par::for_each_row(&mut data, w, |y, row| {
        let mut buf = Vec::with_capacity(window * window);
        for (x, out) in row.iter_mut().enumerate() {
            buf.clear();
            for dy in -r..=r {
                for dx in -r..=r {
                    buf.push(p.get_clamped(x as isize + dx, y as isize + dy));
                }
            }
            let mid = buf.len() / 2;
            *out = *buf.select_nth_unstable_by(mid, f64::total_cmp).1;
        }
    });
    Plane::new(w, h, data).expect("same size")
}

/// Per-channel median over a `window`×`window` neighborhood with replicated
/// borders.
pub fn median_attack(img: &RgbImage, window: usize) -> Result<RgbImage> {
    AttackSpec::Median { window }.validate()?;
    Ok(img.map_planes(|p| median_plane(p, window)).quantized_u8())
}

/// Zeroes a top-left rectangle covering `fraction` of the area.
pub fn crop_attack(img: &RgbImage, fraction: f64) -> Result<RgbImage> {
    crop_attack_anchored(img, fraction, CropAnchor::TopLeft)
}

/// Zeroes a rectangle with the image's aspect ratio whose area is `fraction`
/// of the image (sides scaled by √fraction and rounded).
pub fn crop_attack_anchored(img: &RgbImage, fraction: f64, anchor: CropAnchor) -> Result<RgbImage> {
    AttackSpec::Crop { fraction, anchor }.validate()?;
    let (w, h) = img.dims();
    let s = fraction.sqrt();
    let (cw, ch) = (
        (w as f64 * s).round() as usize,
        (h as f64 * s).round() as usize,
    );
    let (x0, y0) = match anchor {
        CropAnchor::TopLeft => (0, 0),
        CropAnchor::TopRight => (w - cw, 0),
        CropAnchor::BottomLeft => (0, h - ch),
        CropAnchor::BottomRight => (w - cw, h - ch),
        CropAnchor::Center => ((w - cw) / 2, (h - ch) / 2),
    };
    let mut out = img.quantized_u8();
    for y in y0..y0 + ch {
        for x in x0..x0 + cw {
            out.set_pixel(x, y, [0.0; 3]);
        }
    }
    Ok(out)
}

/// Forces exactly `round(density · pixels)` sites to black or white in all
/// channels. Sites are the first draws of a keyed Fisher–Yates shuffle over
/// raster indices; the color of each site then comes from the top bit of the
/// next draw from the same stream (1 → 255, 0 → 0).
pub fn salt_pepper_attack(img: &RgbImage, density: f64, seed: u64) -> Result<RgbImage> {
    AttackSpec::SaltPepper { density, seed }.validate()?;
    let (w, h) = img.dims();
    let n = w * h;
    let count = (density * n as f64).round() as usize;
    let mut rng = SplitMix64::new(seed);
    let sites = partial_shuffle(n, count, &mut rng);
    let mut out = img.quantized_u8();
    for site in sites {
        let v = if rng.next_u64() >> 63 == 1 {
            255.0
        } else {
            0.0
        };
        out.set_pixel(site % w, site / w, [v; 3]);
    }
    Ok(out)
}

fn rotate_plane(p: &Plane, cos: f64, sin: f64) -> Plane {
    let (w, h) = p.dims();
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let mut data = vec![0.0; w * h];
    par::for_each_row(&mut data, w, |y, row| {
        let dy = y as f64 - cy;
        for (x, out) in row.iter_mut().enumerate() {
            let dx = x as f64 - cx;
            // inverse mapping: source = R(-θ) · (dest - center) + center
            let sx = cos * dx + sin * dy + cx;
            let sy = -sin * dx + cos * dy + cy;
            *out = bilinear_zero(p, sx, sy);
        }
    });
    Plane::new(w, h, data).expect("same size")
}

/// Bilinear sample treating everything outside the grid as 0.
fn bilinear_zero(p: &Plane, x: f64, y: f64) -> f64 {
    let (w, h) = (p.width() as isize, p.height() as isize);
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as isize, y0 as isize);
    let at = |xi: isize, yi: isize| {
        if xi < 0 || yi < 0 || xi >= w || yi >= h {
            0.0
        } else {
            p.get(xi as usize, yi as usize)
        }
    };
    let mut v = 0.0;
    for (xi, wx) in [(x0, 1.0 - fx), (x0 + 1, fx)] {
        for (yi, wy) in [(y0, 1.0 - fy), (y0 + 1, fy)] {
            let weight = wx * wy;
            if weight != 0.0 {
                v += weight * at(xi, yi);
            }
        }
    }
    v
}

/// Rotates counter-clockwise (in image coordinates with y pointing down this
/// appears clockwise) about the center with bilinear interpolation. Samples
/// that map outside the source become 0.
pub fn rotation_attack(img: &RgbImage, degrees: f64) -> RgbImage {
    let theta = degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    img.map_planes(|p| rotate_plane(p, cos, sin)).quantized_u8()
}
