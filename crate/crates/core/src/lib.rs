//! Blind image watermarking in the Haar wavelet domain.
//!
//! A 64×64 bipolar bitmap is written into one 64×64 level-3 detail band of
//! the blue plane of a 512×512 host. Each bit moves a keyed coefficient to
//! the nearest multiple of the quantization step plus or minus a strength
//! chosen by a small fuzzy rule base from the local texture. Extraction needs
//! only the key and the parameters.
//!
//! The crate also carries the attack set and metrics used to measure
//! robustness, and the bench that ties them together.
//!
//! ```no_run
//! use haarmark::{codec, image_io, EmbedParams};
//!
//! let host = image_io::load_image("assets/host.png")?;
//! let wm = image_io::load_watermark("assets/watermark.png")?;
//! let params = EmbedParams::default().with_key(2012);
//! let fs = params.default_fuzzy()?;
//! let marked = codec::embed_image(&host, &wm, &params, &fs)?;
//! let found = codec::extract_image(&marked, &params, &fs, Some(&wm))?;
//! assert_eq!(found.ber, Some(0.0));
//! # Ok::<(), haarmark::Error>(())
//! ```
//!
//! Inner loops (DWT rows, JPEG blocks, filter rows, bench cells) run on
//! rayon when the default `parallel` feature is enabled and sequentially
//! otherwise, with identical results.

pub mod attacks;
pub mod bench;
pub mod codec;
pub mod config;
pub mod dwt;
pub mod error;
pub mod fuzzy;
pub mod image_io;
pub mod metrics;
pub mod par;
pub mod plane;
pub mod prng;

pub use attacks::AttackSpec;
pub use codec::{EmbedParams, ExtractionResult, WindowOrder};
pub use dwt::{Orientation, SubbandPyramid};
pub use error::{Error, Result};
pub use fuzzy::FuzzySystem;
pub use image_io::{RgbImage, WatermarkBits};
pub use metrics::PeakMode;
pub use plane::Plane;
