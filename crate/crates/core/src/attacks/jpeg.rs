//! Lossy JPEG round trip without entropy coding: 8×8 DCT, quantization with
//! the scaled luminance table, dequantization and inverse DCT, per channel.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::image_io::RgbImage;
use crate::par;
use crate::plane::Plane;

/// Annex K luminance table, row-major.
pub const LUMA_QUANT: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Luminance table for `quality` using the IJG mapping: scale is
/// `5000 / quality` below 50 and `200 - 2 * quality` otherwise; entries are
/// `(base * scale + 50) / 100` in integer arithmetic, floored at 1.
pub fn quant_table(quality: u8) -> Result<[f64; 64]> {
    if !(1..=100).contains(&quality) {
        return Err(Error::Parameter(format!(
            "JPEG quality must be 1-100, got {quality}"
        )));
    }
    let q = u32::from(quality);
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    Ok(LUMA_QUANT.map(|base| ((u32::from(base) * scale + 50) / 100).max(1) as f64))
}

/// `basis[u][x] = c(u) / 2 * cos((2x + 1) u π / 16)` with `c(0) = 1/√2`.
fn basis() -> &'static [[f64; 8]; 8] {
    static BASIS: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut m = [[0.0; 8]; 8];
        for (u, row) in m.iter_mut().enumerate() {
            let c = if u == 0 { 1.0 / 2f64.sqrt() } else { 1.0 };
            for (x, v) in row.iter_mut().enumerate() {
                *v = c / 2.0 * ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos();
            }
        }
        m
    })
}

pub fn fdct8x8(block: &[f64; 64]) -> [f64; 64] {
    let m = basis();
    let mut tmp = [0.0; 64];
    // rows: tmp[y][u] = Σx m[u][x] f[y][x]
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|x| m[u][x] * block[y * 8 + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            out[v * 8 + u] = (0..8).map(|y| m[v][y] * tmp[y * 8 + u]).sum();
        }
    }
    out
}

pub fn idct8x8(coeffs: &[f64; 64]) -> [f64; 64] {
    let m = basis();
    let mut tmp = [0.0; 64];
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|v| m[v][y] * coeffs[v * 8 + u]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            out[y * 8 + x] = (0..8).map(|u| m[u][x] * tmp[y * 8 + u]).sum();
        }
    }
    out
}

/// Quantizes and restores one level-shifted 8×8 block of 0–255 samples.
pub fn round_trip_block(samples: &[f64; 64], table: &[f64; 64]) -> [f64; 64] {
    let shifted = samples.map(|s| s - 128.0);
    let mut coeffs = fdct8x8(&shifted);
    for (c, q) in coeffs.iter_mut().zip(table) {
        *c = (*c / q).round() * q;
    }
    idct8x8(&coeffs).map(|s| (s + 128.0).round().clamp(0.0, 255.0))
}

fn compress_plane(p: &Plane, table: &[f64; 64]) -> Plane {
    let (w, h) = p.dims();
    let (bw, bh) = (w.div_ceil(8), h.div_ceil(8));
    // partial edge blocks are padded by replicating the last row/column
    let strips = par::map_range(bh, |by| {
        (0..bw)
            .map(|bx| {
                let mut block = [0.0; 64];
                for y in 0..8 {
                    for x in 0..8 {
                        block[y * 8 + x] =
                            p.get_clamped((bx * 8 + x) as isize, (by * 8 + y) as isize);
                    }
                }
                round_trip_block(&block, table)
            })
            .collect::<Vec<_>>()
    });
    let mut out = Plane::zeros(w, h);
    for (by, strip) in strips.iter().enumerate() {
        for (bx, block) in strip.iter().enumerate() {
            for y in 0..8 {
                for x in 0..8 {
                    let (px, py) = (bx * 8 + x, by * 8 + y);
                    if px < w && py < h {
                        out.set(px, py, block[y * 8 + x]);
                    }
                }
            }
        }
    }
    out
}

pub fn jpeg_attack(img: &RgbImage, quality: u8) -> Result<RgbImage> {
    let table = quant_table(quality)?;
    Ok(img.map_planes(|p| compress_plane(p, &table)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook quadruple-sum DCT-II, independent of the separable code.
    fn brute_dct(f: &[f64; 64]) -> [f64; 64] {
        let c = |k: usize| if k == 0 { 1.0 / 2f64.sqrt() } else { 1.0 };
        let mut out = [0.0; 64];
        for v in 0..8 {
            for u in 0..8 {
                let mut s = 0.0;
                for y in 0..8 {
                    for x in 0..8 {
                        s += f[y * 8 + x]
                            * ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos()
                            * ((2 * y + 1) as f64 * v as f64 * PI / 16.0).cos();
                    }
                }
                out[v * 8 + u] = 0.25 * c(u) * c(v) * s;
            }
        }
        out
    }

    fn brute_idct(fq: &[f64; 64]) -> [f64; 64] {
        let c = |k: usize| if k == 0 { 1.0 / 2f64.sqrt() } else { 1.0 };
        let mut out = [0.0; 64];
        for y in 0..8 {
            for x in 0..8 {
                let mut s = 0.0;
                for v in 0..8 {
                    for u in 0..8 {
                        s += c(u)
                            * c(v)
                            * fq[v * 8 + u]
                            * ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos()
                            * ((2 * y + 1) as f64 * v as f64 * PI / 16.0).cos();
                    }
                }
                out[y * 8 + x] = 0.25 * s;
            }
        }
        out
    }

    #[test]
    fn table_scaling() {
        let t50 = quant_table(50).unwrap();
        assert_eq!(t50[0], 16.0);
        assert_eq!(t50[63], 99.0);
        let t10 = quant_table(10).unwrap();
        assert_eq!(t10[0], 80.0);
        assert_eq!(t10[1], 55.0);
        assert!(quant_table(100).unwrap().iter().all(|&v| v == 1.0));
        // quality 1: scale 5000, no upper cap
        assert_eq!(quant_table(1).unwrap()[0], 800.0);
        assert!(quant_table(0).is_err());
        assert!(quant_table(101).is_err());
    }

    #[test]
    fn separable_matches_brute_force() {
        let f: [f64; 64] = std::array::from_fn(|i| ((i * 37) % 101) as f64 - 50.0);
        let a = fdct8x8(&f);
        let b = brute_dct(&f);
        for i in 0..64 {
            assert!((a[i] - b[i]).abs() < 1e-9);
        }
        let back = idct8x8(&a);
        for i in 0..64 {
            assert!((back[i] - f[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn ramp_block_at_q50_matches_oracle() {
        let ramp: [f64; 64] = std::array::from_fn(|i| (i % 8 * 20 + i / 8 * 9) as f64);
        let table = quant_table(50).unwrap();
        let mut expected = brute_dct(&ramp.map(|s| s - 128.0));
        for (c, q) in expected.iter_mut().zip(&table) {
            *c = (*c / q).round() * q;
        }
        let expected = brute_idct(&expected).map(|s| (s + 128.0).round().clamp(0.0, 255.0));
        let plane = Plane::from_fn(8, 8, |x, y| ramp[y * 8 + x]);
        let img = RgbImage::from_planes(plane.clone(), plane.clone(), plane).unwrap();
        let out = jpeg_attack(&img, 50).unwrap();
        for c in 0..3 {
            assert_eq!(out.plane(c).data(), &expected[..]);
        }
    }

    #[test]
    fn constant_image_survives_q100() {
        let img = RgbImage::filled(24, 16, 173.0);
        assert_eq!(jpeg_attack(&img, 100).unwrap(), img);
    }

    #[test]
    fn odd_sizes_keep_dimensions() {
        let img = RgbImage::from_fn(13, 9, |x, y| [(x * 10) as f64, (y * 20) as f64, 100.0]);
        assert_eq!(jpeg_attack(&img, 75).unwrap().dims(), (13, 9));
    }
}
