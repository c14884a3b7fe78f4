//! Image loading and saving, blue-plane access, host preparation and
//! watermark binarization.
//!
//! Channel convention: planes are stored in RGB order, so the blue plane is
//! channel index 2.

use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::plane::Plane;

/// Side length every host is resized to before embedding.
pub const HOST_SIDE: usize = 512;
/// Side length of the watermark bitmap.
pub const WATERMARK_SIDE: usize = 64;
pub const WATERMARK_LEN: usize = WATERMARK_SIDE * WATERMARK_SIDE;

pub const BLUE: usize = 2;

/// Three equally sized planes in R, G, B order with samples on the 0–255 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    planes: [Plane; 3],
}

impl RgbImage {
    pub fn from_planes(red: Plane, green: Plane, blue: Plane) -> Result<Self> {
        red.ensure_same_dims(&green, "red/green")?;
        red.ensure_same_dims(&blue, "red/blue")?;
        Ok(Self {
            planes: [red, green, blue],
        })
    }

    /// An image with every channel set to `value`.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        let p = Plane::filled(width, height, value);
        Self {
            planes: [p.clone(), p.clone(), p],
        }
    }

    /// Builds an image from a per-pixel closure returning `[r, g, b]`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> Self {
        let planes = [0, 1, 2].map(|c| Plane::from_fn(width, height, |x, y| f(x, y)[c]));
        Self { planes }
    }

    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.planes[0].dims()
    }

    pub fn planes(&self) -> &[Plane; 3] {
        &self.planes
    }

    pub fn plane(&self, channel: usize) -> &Plane {
        &self.planes[channel]
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        [0, 1, 2].map(|c| self.planes[c].get(x, y))
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        for (plane, v) in self.planes.iter_mut().zip(rgb) {
            plane.set(x, y, v);
        }
    }

    /// Applies `f` to each channel independently.
    pub fn map_planes(&self, f: impl Fn(&Plane) -> Plane) -> RgbImage {
        RgbImage {
            planes: [0, 1, 2].map(|c| f(&self.planes[c])),
        }
    }

    pub fn quantized_u8(&self) -> RgbImage {
        self.map_planes(Plane::quantized_u8)
    }

    fn to_rgb8(&self) -> image::RgbImage {
        let (w, h) = self.dims();
        let mut out = image::RgbImage::new(w as u32, h as u32);
        for (x, y, px) in out.enumerate_pixels_mut() {
            let rgb = self.pixel(x as usize, y as usize);
            px.0 = rgb.map(to_u8);
        }
        out
    }

    fn from_rgb8(img: &image::RgbImage) -> Self {
        let (w, h) = (img.width() as usize, img.height() as usize);
        Self::from_fn(w, h, |x, y| {
            img.get_pixel(x as u32, y as u32).0.map(f64::from)
        })
    }
}

#[inline]
fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn decode(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let reader = reader
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn layout_name(img: &DynamicImage) -> String {
    format!("{:?}", img.color())
}

/// Loads an 8-bit RGB (or RGBA, alpha dropped) PNG or BMP file.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let img = decode(path)?;
    match img {
        DynamicImage::ImageRgb8(rgb) => Ok(RgbImage::from_rgb8(&rgb)),
        DynamicImage::ImageRgba8(_) => Ok(RgbImage::from_rgb8(&img.to_rgb8())),
        other => Err(Error::Channel {
            path: path.to_path_buf(),
            layout: layout_name(&other),
        }),
    }
}

fn format_for(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => Ok(ImageFormat::Png),
        Some("bmp") => Ok(ImageFormat::Bmp),
        _ => Err(Error::Encode {
            path: path.to_path_buf(),
            message: "only .png and .bmp outputs are supported".into(),
        }),
    }
}

/// Saves with samples rounded and clamped to 0–255. The format follows the
/// file extension (`.png` or `.bmp`).
pub fn save_image(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    img.to_rgb8()
        .save_with_format(path, format)
        .map_err(|e| Error::Encode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

/// Resizes to 512×512 with per-channel bilinear interpolation, then rounds to
/// 8-bit samples. An input that is already 512×512 is returned unchanged.
pub fn prepare_host(img: &RgbImage) -> Result<RgbImage> {
    let (w, h) = img.dims();
    if w < 2 || h < 2 {
        return Err(Error::Dimension(format!(
            "host must be at least 2x2, got {w}x{h}"
        )));
    }
    if (w, h) == (HOST_SIDE, HOST_SIDE) {
        return Ok(img.clone());
    }
    Ok(img
        .map_planes(|p| resize_bilinear(p, HOST_SIDE, HOST_SIDE))
        .quantized_u8())
}

/// Bilinear resampling with pixel-center alignment: output sample `i` reads
/// source coordinate `(i + 0.5) * src / dst - 0.5`, clamped to the edge.
pub fn resize_bilinear(src: &Plane, width: usize, height: usize) -> Plane {
    let (sw, sh) = src.dims();
    let sx = sw as f64 / width as f64;
    let sy = sh as f64 / height as f64;
    let axis = |i: usize, scale: f64, n: usize| -> (usize, usize, f64) {
        let c = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = c.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, c - i0 as f64)
    };
    Plane::from_fn(width, height, |x, y| {
        let (x0, x1, fx) = axis(x, sx, sw);
        let (y0, y1, fy) = axis(y, sy, sh);
        let top = src.get(x0, y0) * (1.0 - fx) + src.get(x1, y0) * fx;
        let bottom = src.get(x0, y1) * (1.0 - fx) + src.get(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

pub fn extract_blue(img: &RgbImage) -> Plane {
    img.plane(BLUE).clone()
}

/// Returns a copy of `img` whose blue channel is `blue`, rounded and clamped
/// to integers in 0–255.
pub fn replace_blue(img: &RgbImage, blue: &Plane) -> Result<RgbImage> {
    img.plane(BLUE).ensure_same_dims(blue, "replace_blue")?;
    let mut out = img.clone();
    out.planes[BLUE] = blue.quantized_u8();
    Ok(out)
}

/// A 64×64 bipolar watermark: every element is −1 or +1, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WatermarkBits {
    bits: Vec<i8>,
}

impl WatermarkBits {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if bits.len() != WATERMARK_LEN {
            return Err(Error::Dimension(format!(
                "watermark needs {WATERMARK_LEN} bits, got {}",
                bits.len()
            )));
        }
        if let Some(bad) = bits.iter().find(|&&b| b != 1 && b != -1) {
            return Err(Error::Parameter(format!(
                "watermark bits must be -1 or +1, found {bad}"
            )));
        }
        Ok(Self { bits })
    }

    pub fn from_fn(f: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(WATERMARK_LEN);
        for y in 0..WATERMARK_SIDE {
            for x in 0..WATERMARK_SIDE {
                bits.push(if f(x, y) { 1 } else { -1 });
            }
        }
        Self { bits }
    }

    /// Balanced-on-average random bits drawn from the keyed stream.
    pub fn random(seed: u64) -> Self {
        let mut rng = crate::prng::SplitMix64::new(seed);
        let bits = (0..WATERMARK_LEN)
            .map(|_| if rng.next_u64() >> 63 == 1 { 1 } else { -1 })
            .collect();
        Self { bits }
    }

    pub fn width(&self) -> usize {
        WATERMARK_SIDE
    }

    pub fn height(&self) -> usize {
        WATERMARK_SIDE
    }

    pub fn bits(&self) -> &[i8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Maps −1 → 0 and +1 → 1 for correlation against a {0,1} reference.
    pub fn to_unipolar(&self) -> Vec<f64> {
        self.bits
            .iter()
            .map(|&b| if b > 0 { 1.0 } else { 0.0 })
            .collect()
    }

    /// Grayscale rendering: −1 → 0, +1 → 255.
    pub fn to_plane(&self) -> Plane {
        Plane::from_fn(WATERMARK_SIDE, WATERMARK_SIDE, |x, y| {
            if self.bits[y * WATERMARK_SIDE + x] > 0 {
                255.0
            } else {
                0.0
            }
        })
    }
}

/// Loads a 64×64 watermark (PNG, BMP or PGM). Color images are averaged to
/// gray; gray ≥ 128 becomes +1, anything darker −1.
pub fn load_watermark(path: impl AsRef<Path>) -> Result<WatermarkBits> {
    let path = path.as_ref();
    let img = decode(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if (w, h) != (WATERMARK_SIDE, WATERMARK_SIDE) {
        return Err(Error::Dimension(format!(
            "{}: watermark must be {WATERMARK_SIDE}x{WATERMARK_SIDE}, got {w}x{h}",
            path.display()
        )));
    }
    let gray: Vec<f64> = match img {
        DynamicImage::ImageLuma8(g) => g.pixels().map(|p| f64::from(p.0[0])).collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| p.0.iter().map(|&c| f64::from(c)).sum::<f64>() / 3.0)
            .collect(),
    };
    let bits = gray
        .iter()
        .map(|&g| if g >= 128.0 { 1 } else { -1 })
        .collect();
    WatermarkBits::new(bits)
}

/// Writes the watermark as an 8-bit grayscale image (−1 → 0, +1 → 255).
pub fn save_watermark(wm: &WatermarkBits, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let gray = image::GrayImage::from_fn(WATERMARK_SIDE as u32, WATERMARK_SIDE as u32, |x, y| {
        let b = wm.bits[y as usize * WATERMARK_SIDE + x as usize];
        image::Luma([if b > 0 { 255 } else { 0 }])
    });
    gray.save_with_format(path, format)
        .map_err(|e| Error::Encode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_rgb(path: &Path, w: u32, h: u32, f: impl Fn(u32, u32) -> [u8; 3]) {
        image::RgbImage::from_fn(w, h, |x, y| image::Rgb(f(x, y)))
            .save(path)
            .unwrap();
    }

    fn write_gray(path: &Path, f: impl Fn(u32, u32) -> u8) {
        image::GrayImage::from_fn(64, 64, |x, y| image::Luma([f(x, y)]))
            .save(path)
            .unwrap();
    }

    #[test]
    fn single_pixel_png_readback() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("px.png");
        write_rgb(&p, 1, 1, |_, _| [10, 20, 30]);
        let img = load_image(&p).unwrap();
        assert_eq!(extract_blue(&img).data(), &[30.0]);
        assert_eq!(img.pixel(0, 0), [10.0, 20.0, 30.0]);
    }

    #[test]
    fn corrupt_file_is_decode_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.png");
        std::fs::write(&p, b"\x89PNG\r\n\x1a\nnot really a png").unwrap();
        assert!(matches!(load_image(&p), Err(Error::Decode { .. })));
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_image("/nonexistent/host.png").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/host.png"));
    }

    #[test]
    fn grayscale_host_is_channel_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.png");
        write_gray(&p, |_, _| 7);
        match load_image(&p) {
            Err(Error::Channel { layout, .. }) => assert!(layout.contains("L8"), "{layout}"),
            other => panic!("expected channel error, got {other:?}"),
        }
    }

    #[test]
    fn bmp_round_trip_is_sample_exact() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.bmp");
        let b = dir.path().join("b.bmp");
        write_rgb(&a, 3, 2, |x, y| {
            [(x * 40) as u8, (y * 90 + 3) as u8, (x * y * 77) as u8]
        });
        let first = load_image(&a).unwrap();
        save_image(&first, &b).unwrap();
        let second = load_image(&b).unwrap();
        assert_eq!(first, second);
        // and against the raw bytes of the fixture
        let raw = image::open(&a).unwrap().to_rgb8();
        for (x, y, px) in raw.enumerate_pixels() {
            assert_eq!(second.pixel(x as usize, y as usize), px.0.map(f64::from));
        }
    }

    #[test]
    fn unsupported_output_extension() {
        let img = RgbImage::filled(2, 2, 1.0);
        assert!(matches!(
            save_image(&img, "/tmp/x.gif"),
            Err(Error::Encode { .. })
        ));
    }

    #[test]
    fn prepare_host_identity_at_target() {
        let img = RgbImage::from_fn(512, 512, |x, y| [(x % 256) as f64, (y % 256) as f64, 9.0]);
        assert_eq!(prepare_host(&img).unwrap(), img);
    }

    #[test]
    fn prepare_host_keeps_constant() {
        let img = RgbImage::filled(1024, 1024, 77.0);
        let out = prepare_host(&img).unwrap();
        assert_eq!(out.dims(), (512, 512));
        assert!(out
            .planes()
            .iter()
            .all(|p| p.data().iter().all(|&v| v == 77.0)));
    }

    #[test]
    fn prepare_host_rejects_degenerate() {
        let img = RgbImage::filled(0, 0, 0.0);
        assert!(matches!(prepare_host(&img), Err(Error::Dimension(_))));
        let img = RgbImage::filled(1, 5, 0.0);
        assert!(matches!(prepare_host(&img), Err(Error::Dimension(_))));
    }

    #[test]
    fn bilinear_upscale_hand_weights() {
        let src = Plane::from_rows(&[[0.0, 100.0], [0.0, 100.0]]).unwrap();
        let up = resize_bilinear(&src, 4, 4);
        // source x = (i + 0.5) / 2 - 0.5 = -0.25, 0.25, 0.75, 1.25 → clamped 0, .25, .75, 1
        let expected_row = [0.0, 25.0, 75.0, 100.0];
        for y in 0..4 {
            assert_eq!(up.row(y), &expected_row);
        }
    }

    #[test]
    fn blue_of_black_image_is_zero() {
        let img = RgbImage::filled(4, 4, 0.0);
        assert!(extract_blue(&img).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn blue_mean_matches_independent_reduction() {
        let img = RgbImage::from_fn(13, 7, |x, y| [0.0, 1.0, ((x * 31 + y * 17) % 256) as f64]);
        let mut total = 0.0;
        for y in 0..7 {
            for x in 0..13 {
                total += ((x * 31 + y * 17) % 256) as f64;
            }
        }
        assert!((extract_blue(&img).mean() - total / 91.0).abs() < 1e-12);
    }

    #[test]
    fn extracted_blue_is_a_copy() {
        let img = RgbImage::filled(2, 2, 5.0);
        let mut b = extract_blue(&img);
        b.set(0, 0, 200.0);
        assert_eq!(img.plane(BLUE).get(0, 0), 5.0);
    }

    #[test]
    fn replace_blue_clamps_and_rounds() {
        let img = RgbImage::from_fn(2, 1, |x, _| [1.0, 2.0, x as f64]);
        let p = Plane::from_rows(&[[300.0, -4.2]]).unwrap();
        let out = replace_blue(&img, &p).unwrap();
        assert_eq!(out.plane(BLUE).data(), &[255.0, 0.0]);
        assert_eq!(out.plane(0), img.plane(0));
        assert_eq!(out.plane(1), img.plane(1));
        assert_eq!(replace_blue(&img, &extract_blue(&img)).unwrap(), img);
        assert!(matches!(
            replace_blue(&img, &Plane::zeros(3, 1)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn watermark_binarization() {
        let dir = tempfile::tempdir().unwrap();
        let white = dir.path().join("w.png");
        let black = dir.path().join("b.pgm");
        let checker = dir.path().join("c.bmp");
        write_gray(&white, |_, _| 255);
        image::GrayImage::from_pixel(64, 64, image::Luma([0]))
            .save(&black)
            .unwrap();
        write_rgb(&checker, 64, 64, |x, y| {
            if (x + y) % 2 == 0 {
                [255, 255, 255]
            } else {
                [0, 0, 0]
            }
        });
        assert!(load_watermark(&white)
            .unwrap()
            .bits()
            .iter()
            .all(|&b| b == 1));
        assert!(load_watermark(&black)
            .unwrap()
            .bits()
            .iter()
            .all(|&b| b == -1));
        let c = load_watermark(&checker).unwrap();
        assert_eq!(c.len(), 4096);
        assert_eq!(c.bits().iter().map(|&b| i32::from(b)).sum::<i32>(), 0);
        assert_eq!(c.bits()[0], 1);
        assert_eq!(c.bits()[1], -1);
    }

    #[test]
    fn watermark_gray_average_threshold() {
        // (128 + 128 + 127) / 3 < 128 → −1; (129 + 128 + 127) / 3 = 128 → +1
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("avg.png");
        write_rgb(&p, 64, 64, |x, _| {
            if x == 0 {
                [128, 128, 127]
            } else {
                [129, 128, 127]
            }
        });
        let wm = load_watermark(&p).unwrap();
        assert_eq!(wm.bits()[0], -1);
        assert_eq!(wm.bits()[1], 1);
    }

    #[test]
    fn watermark_wrong_size_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("small.png");
        image::GrayImage::new(32, 64).save(&p).unwrap();
        assert!(matches!(load_watermark(&p), Err(Error::Dimension(_))));
    }

    #[test]
    fn watermark_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("wm.png");
        let wm = WatermarkBits::random(3);
        save_watermark(&wm, &p).unwrap();
        assert_eq!(load_watermark(&p).unwrap(), wm);
    }

    #[test]
    fn watermark_constructor_validates() {
        assert!(WatermarkBits::new(vec![1; 10]).is_err());
        let mut v = vec![1i8; 4096];
        v[7] = 0;
        assert!(matches!(WatermarkBits::new(v), Err(Error::Parameter(_))));
    }
}
