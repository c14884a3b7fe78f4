//! Orthonormal 2-D Haar analysis and synthesis.
//!
//! For each 2×2 block `[[a, b], [c, d]]` the forward step produces
//!
//! ```text
//! ll = (a + b + c + d) / 2    lh = (a + b - c - d) / 2
//! hl = (a - b + c - d) / 2    hh = (a - b - c + d) / 2
//! ```
//!
//! which is its own inverse up to the block layout, so total energy is
//! preserved at every level. Rows of blocks are independent and are processed
//! in parallel when the `parallel` feature is on; the arithmetic inside each
//! block is fixed, so results do not depend on the thread count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::plane::Plane;

/// The four half-resolution subbands of a single analysis step.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub ll: Plane,
    pub lh: Plane,
    pub hl: Plane,
    pub hh: Plane,
}

/// Detail orientation within one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Lh,
    Hl,
    Hh,
}

impl Orientation {
    pub const ALL: [Orientation; 3] = [Orientation::Lh, Orientation::Hl, Orientation::Hh];
}

/// The three detail planes of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailSet {
    pub lh: Plane,
    pub hl: Plane,
    pub hh: Plane,
}

impl DetailSet {
    pub fn get(&self, o: Orientation) -> &Plane {
        match o {
            Orientation::Lh => &self.lh,
            Orientation::Hl => &self.hl,
            Orientation::Hh => &self.hh,
        }
    }

    pub fn get_mut(&mut self, o: Orientation) -> &mut Plane {
        match o {
            Orientation::Lh => &mut self.lh,
            Orientation::Hl => &mut self.hl,
            Orientation::Hh => &mut self.hh,
        }
    }
}

/// Multi-level decomposition: `details[0]` is level 1 (finest), the last
/// entry is level `levels()`, and `approx` is the LL band of that level.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandPyramid {
    pub details: Vec<DetailSet>,
    pub approx: Plane,
}

impl SubbandPyramid {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Detail band at 1-based `level`.
    pub fn band(&self, level: usize, o: Orientation) -> Option<&Plane> {
        level
            .checked_sub(1)
            .and_then(|i| self.details.get(i))
            .map(|d| d.get(o))
    }

    pub fn band_mut(&mut self, level: usize, o: Orientation) -> Option<&mut Plane> {
        level
            .checked_sub(1)
            .and_then(|i| self.details.get_mut(i))
            .map(|d| d.get_mut(o))
    }

    /// Every plane in the pyramid, approximation first.
    pub fn planes(&self) -> impl Iterator<Item = &Plane> {
        std::iter::once(&self.approx).chain(self.details.iter().flat_map(|d| [&d.lh, &d.hl, &d.hh]))
    }

    pub fn energy(&self) -> f64 {
        self.planes().map(Plane::energy).sum()
    }
}

fn ensure_even(p: &Plane) -> Result<()> {
    let (w, h) = p.dims();
    if w == 0 || h == 0 || w % 2 != 0 || h % 2 != 0 {
        return Err(Error::Dimension(format!(
            "Haar step needs non-zero even dimensions, got {w}x{h}"
        )));
    }
    Ok(())
}

/// One level of 2-D Haar analysis.
pub fn haar_forward(p: &Plane) -> Result<SubbandSet> {
    ensure_even(p)?;
    let (hw, hh) = (p.width() / 2, p.height() / 2);
    let rows = par::map_range(hh, |y| {
        let top = p.row(2 * y);
        let bottom = p.row(2 * y + 1);
        let mut out = [
            Vec::with_capacity(hw),
            Vec::with_capacity(hw),
            Vec::with_capacity(hw),
            Vec::with_capacity(hw),
        ];
        for x in 0..hw {
            let (a, b) = (top[2 * x], top[2 * x + 1]);
            let (c, d) = (bottom[2 * x], bottom[2 * x + 1]);
            out[0].push((a + b + c + d) / 2.0);
            out[1].push((a + b - c - d) / 2.0);
            out[2].push((a - b + c - d) / 2.0);
            out[3].push((a - b - c + d) / 2.0);
        }
        out
    });
    let mut bands: [Vec<f64>; 4] = Default::default();
    for row in rows {
        for (band, r) in bands.iter_mut().zip(row) {
            band.extend_from_slice(&r);
        }
    }
    let [ll, lh, hl, hhb] = bands.map(|d| Plane::new(hw, hh, d).expect("band size"));
    Ok(SubbandSet {
        ll,
        lh,
        hl,
        hh: hhb,
    })
}

/// Exact inverse of [`haar_forward`].
pub fn haar_inverse(s: &SubbandSet) -> Result<Plane> {
    s.ll.ensure_same_dims(&s.lh, "ll/lh")?;
    s.ll.ensure_same_dims(&s.hl, "ll/hl")?;
    s.ll.ensure_same_dims(&s.hh, "ll/hh")?;
    let (hw, hh) = s.ll.dims();
    let (w, h) = (2 * hw, 2 * hh);
    let mut data = vec![0.0; w * h];
    // each chunk holds the two output rows produced by one band row
    par::for_each_row(&mut data, 2 * w, |y, pair| {
        let (top, bottom) = pair.split_at_mut(w);
        let (ll, lh, hl, hhr) = (s.ll.row(y), s.lh.row(y), s.hl.row(y), s.hh.row(y));
        for x in 0..hw {
            let (l, v, hz, d) = (ll[x], lh[x], hl[x], hhr[x]);
            top[2 * x] = (l + v + hz + d) / 2.0;
            top[2 * x + 1] = (l + v - hz - d) / 2.0;
            bottom[2 * x] = (l - v + hz - d) / 2.0;
            bottom[2 * x + 1] = (l - v - hz + d) / 2.0;
        }
    });
    Plane::new(w, h, data)
}

/// Recursive analysis of the LL band, `levels` times.
pub fn analyze(p: &Plane, levels: usize) -> Result<SubbandPyramid> {
    if levels == 0 {
        return Err(Error::Parameter("at least one level is required".into()));
    }
    let unit = 1usize << levels;
    let (w, h) = p.dims();
    if w == 0 || h == 0 || w % unit != 0 || h % unit != 0 {
        return Err(Error::Dimension(format!(
            "{w}x{h} is not divisible by 2^{levels}"
        )));
    }
    let mut details = Vec::with_capacity(levels);
    let mut current = haar_forward(p)?;
    for _ in 1..levels {
        let next = haar_forward(&current.ll)?;
        details.push(DetailSet {
            lh: current.lh,
            hl: current.hl,
            hh: current.hh,
        });
        current = next;
    }
    details.push(DetailSet {
        lh: current.lh,
        hl: current.hl,
        hh: current.hh,
    });
    Ok(SubbandPyramid {
        details,
        approx: current.ll,
    })
}

/// Inverse of [`analyze`].
pub fn reconstruct(pyr: &SubbandPyramid) -> Result<Plane> {
    if pyr.details.is_empty() {
        return Err(Error::Structure("pyramid has no levels".into()));
    }
    let mut expected = pyr.approx.dims();
    for (i, d) in pyr.details.iter().enumerate().rev() {
        for o in Orientation::ALL {
            if d.get(o).dims() != expected {
                return Err(Error::Structure(format!(
                    "level {} {o:?} is {:?}, expected {expected:?}",
                    i + 1,
                    d.get(o).dims()
                )));
            }
        }
        expected = (expected.0 * 2, expected.1 * 2);
    }
    let mut ll = pyr.approx.clone();
    for d in pyr.details.iter().rev() {
        ll = haar_inverse(&SubbandSet {
            ll,
            lh: d.lh.clone(),
            hl: d.hl.clone(),
            hh: d.hh.clone(),
        })?;
    }
    Ok(ll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prng::SplitMix64;

    fn random_plane(w: usize, h: usize, seed: u64) -> Plane {
        let mut rng = SplitMix64::new(seed);
        Plane::from_fn(w, h, |_, _| {
            (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 255.0
        })
    }

    fn max_abs_diff(a: &Plane, b: &Plane) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_block_has_no_detail() {
        let s = haar_forward(&Plane::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap()).unwrap();
        assert_eq!(s.ll.data(), &[2.0]);
        assert_eq!(s.lh.data(), &[0.0]);
        assert_eq!(s.hl.data(), &[0.0]);
        assert_eq!(s.hh.data(), &[0.0]);
    }

    #[test]
    fn hand_evaluated_block() {
        let s = haar_forward(&Plane::from_rows(&[[4.0, 2.0], [2.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(s.ll.data(), &[4.0]);
        assert_eq!(s.lh.data(), &[2.0]);
        assert_eq!(s.hl.data(), &[2.0]);
        assert_eq!(s.hh.data(), &[0.0]);
    }

    #[test]
    fn inverse_of_pure_ll() {
        let s = SubbandSet {
            ll: Plane::filled(1, 1, 2.0),
            lh: Plane::zeros(1, 1),
            hl: Plane::zeros(1, 1),
            hh: Plane::zeros(1, 1),
        };
        assert_eq!(haar_inverse(&s).unwrap().data(), &[1.0, 1.0, 1.0, 1.0]);
        let z = SubbandSet {
            ll: Plane::zeros(3, 2),
            lh: Plane::zeros(3, 2),
            hl: Plane::zeros(3, 2),
            hh: Plane::zeros(3, 2),
        };
        assert!(haar_inverse(&z).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_level_round_trip_and_energy() {
        let p = random_plane(16, 10, 1);
        let s = haar_forward(&p).unwrap();
        let e: f64 = [&s.ll, &s.lh, &s.hl, &s.hh]
            .iter()
            .map(|b| b.energy())
            .sum();
        assert!((e - p.energy()).abs() <= 1e-9 * p.energy());
        assert!(max_abs_diff(&haar_inverse(&s).unwrap(), &p) <= 1e-9);
    }

    #[test]
    fn odd_sizes_rejected() {
        assert!(matches!(
            haar_forward(&Plane::zeros(3, 2)),
            Err(Error::Dimension(_))
        ));
        let s = SubbandSet {
            ll: Plane::zeros(2, 2),
            lh: Plane::zeros(2, 2),
            hl: Plane::zeros(1, 2),
            hh: Plane::zeros(2, 2),
        };
        assert!(matches!(haar_inverse(&s), Err(Error::Dimension(_))));
        assert!(matches!(
            analyze(&Plane::zeros(12, 12), 3),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn level_geometry() {
        let pyr = analyze(&random_plane(512, 512, 2), 3).unwrap();
        assert_eq!(pyr.levels(), 3);
        assert_eq!(pyr.approx.dims(), (64, 64));
        for (k, d) in pyr.details.iter().enumerate() {
            let side = 512 >> (k + 1);
            for o in Orientation::ALL {
                assert_eq!(d.get(o).dims(), (side, side));
            }
        }
        assert_eq!(pyr.band(3, Orientation::Hl).unwrap().dims(), (64, 64));
        assert!(pyr.band(0, Orientation::Hl).is_none());
        assert!(pyr.band(4, Orientation::Hl).is_none());
    }

    #[test]
    fn one_level_equals_haar_forward() {
        let p = random_plane(8, 8, 3);
        let pyr = analyze(&p, 1).unwrap();
        let s = haar_forward(&p).unwrap();
        assert_eq!(pyr.approx, s.ll);
        assert_eq!(pyr.details[0].lh, s.lh);
        assert_eq!(pyr.details[0].hl, s.hl);
        assert_eq!(pyr.details[0].hh, s.hh);
    }

    #[test]
    fn ramp_round_trip() {
        let p = Plane::from_fn(8, 8, |x, y| (x + 8 * y) as f64);
        let back = reconstruct(&analyze(&p, 3).unwrap()).unwrap();
        assert!(max_abs_diff(&back, &p) <= 1e-9);
    }

    #[test]
    fn constant_image_needs_only_approx() {
        let p = Plane::filled(32, 32, 93.0);
        let mut pyr = analyze(&p, 3).unwrap();
        for d in &mut pyr.details {
            for o in Orientation::ALL {
                d.get_mut(o).data_mut().fill(0.0);
            }
        }
        assert!(max_abs_diff(&reconstruct(&pyr).unwrap(), &p) <= 1e-12);
    }

    #[test]
    fn single_coefficient_perturbation_energy() {
        // a perturbation δ on one coefficient adds a pixel-domain error whose
        // energy is δ² (orthonormal synthesis)
        let p = random_plane(64, 64, 4);
        let mut pyr = analyze(&p, 3).unwrap();
        let delta = 3.7;
        let band = pyr.band_mut(3, Orientation::Hl).unwrap();
        let v = band.get(2, 5);
        band.set(2, 5, v + delta);
        let q = reconstruct(&pyr).unwrap();
        let err: f64 = p
            .data()
            .iter()
            .zip(q.data())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        assert!((err - delta * delta).abs() <= 1e-9);
    }

    #[test]
    fn malformed_pyramid_is_structure_error() {
        let mut pyr = analyze(&random_plane(16, 16, 5), 2).unwrap();
        pyr.details[0].hh = Plane::zeros(4, 4);
        assert!(matches!(reconstruct(&pyr), Err(Error::Structure(_))));
        let empty = SubbandPyramid {
            details: vec![],
            approx: Plane::zeros(2, 2),
        };
        assert!(matches!(reconstruct(&empty), Err(Error::Structure(_))));
    }

    #[test]
    fn linearity() {
        let p = random_plane(32, 16, 6);
        let q = random_plane(32, 16, 7);
        let (a, b) = (1.5, -0.25);
        let combo = Plane::from_fn(32, 16, |x, y| a * p.get(x, y) + b * q.get(x, y));
        let (pp, pq, pc) = (
            analyze(&p, 3).unwrap(),
            analyze(&q, 3).unwrap(),
            analyze(&combo, 3).unwrap(),
        );
        for ((x, y), z) in pp.planes().zip(pq.planes()).zip(pc.planes()) {
            for i in 0..x.len() {
                assert!((a * x.data()[i] + b * y.data()[i] - z.data()[i]).abs() <= 1e-9);
            }
        }
    }
}
