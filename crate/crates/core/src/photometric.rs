//! Brightness and contrast augmentation: histogram stretching and histogram
//! equalization.
//!
//! Both maps are evaluated with exact integer arithmetic and rounded to the
//! nearest level, ties away from zero.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_core::GrayImage;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub counts: [u64; 256],
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Lowest and highest occupied brightness.
    pub fn range(&self) -> Option<(u8, u8)> {
        let lo = self.counts.iter().position(|&c| c > 0)?;
        let hi = self.counts.iter().rposition(|&c| c > 0)?;
        Some((lo as u8, hi as u8))
    }
}

pub fn histogram(img: &GrayImage) -> Histogram {
    let mut counts = [0u64; 256];
    for &v in img.pixels() {
        counts[v as usize] += 1;
    }
    Histogram { counts }
}

/// Output range `[t_min, t_max]` of a histogram stretch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StretchParams {
    t_min: u8,
    t_max: u8,
}

impl StretchParams {
    pub fn new(t_min: u8, t_max: u8) -> Result<Self> {
        if t_min >= t_max {
            return Err(Error::InvalidParams(format!(
                "stretch range [{t_min}, {t_max}] is empty"
            )));
        }
        Ok(Self { t_min, t_max })
    }

    pub fn t_min(&self) -> u8 {
        self.t_min
    }

    pub fn t_max(&self) -> u8 {
        self.t_max
    }
}

/// Target range `[q0, qk]` of a histogram equalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EqualizeParams {
    q0: u8,
    qk: u8,
}

impl EqualizeParams {
    pub fn new(q0: u8, qk: u8) -> Result<Self> {
        if q0 >= qk {
            return Err(Error::InvalidParams(format!(
                "equalization range [{q0}, {qk}] is empty"
            )));
        }
        Ok(Self { q0, qk })
    }

    pub fn q0(&self) -> u8 {
        self.q0
    }

    pub fn qk(&self) -> u8 {
        self.qk
    }
}

impl Default for EqualizeParams {
    fn default() -> Self {
        Self { q0: 0, qk: 255 }
    }
}

/// Augmentation draw: `t_min` from {0, 10, ..., 50}, `t_max` from
/// {205, 215, ..., 255}.
pub fn sample_stretch<R: Rng + ?Sized>(rng: &mut R) -> StretchParams {
    StretchParams {
        t_min: 10 * rng.random_range(0..=5u8),
        t_max: 205 + 10 * rng.random_range(0..=5u8),
    }
}

/// `round(num / den)` for non-negative operands, halves rounded up.
#[inline]
fn div_round(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}

/// Linear map of the observed range `[p_min, p_max]` onto
/// `[t_min, t_max]`. A constant image becomes the midpoint of the target
/// range.
pub fn stretch(img: &GrayImage, p: StretchParams) -> GrayImage {
    let (p_min, p_max) = histogram(img).range().expect("images are never empty");
    let t_min = p.t_min as u64;
    let t_max = p.t_max as u64;
    if p_min == p_max {
        let mid = div_round(t_min + t_max, 2) as u8;
        return img.map(|_| mid);
    }
    let span = (p_max - p_min) as u64;
    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate().skip(p_min as usize).take(span as usize + 1) {
        let q = t_min + div_round((t_max - t_min) * (v as u64 - p_min as u64), span);
        *slot = q as u8;
    }
    img.map(|v| lut[v as usize])
}

/// Maps brightness `p` to `q0 + (qk - q0) / (w h) * sum_{i=p0}^{p} H(i)`,
/// where `p0` is the darkest level present.
pub fn equalize(img: &GrayImage, p: EqualizeParams) -> GrayImage {
    let hist = histogram(img);
    let total = hist.total();
    let q0 = p.q0 as u64;
    let spread = (p.qk - p.q0) as u64;
    let mut lut = [0u8; 256];
    let mut cumulative = 0u64;
    for (v, slot) in lut.iter_mut().enumerate() {
        cumulative += hist.counts[v];
        *slot = (q0 + div_round(spread * cumulative, total)) as u8;
    }
    img.map(|v| lut[v as usize])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts() {
        let h = histogram(&GrayImage::filled(4, 4, 100));
        assert_eq!(h.counts[100], 16);
        assert_eq!(h.total(), 16);
        let h = histogram(&GrayImage::new(2, 2, vec![0, 0, 255, 255]).unwrap());
        assert_eq!((h.counts[0], h.counts[255]), (2, 2));
        assert_eq!(h.counts[1..255].iter().sum::<u64>(), 0);
    }

    #[test]
    fn stretch_half_way_rounds_up() {
        let img = GrayImage::new(3, 1, vec![50, 100, 150]).unwrap();
        let out = stretch(&img, StretchParams::new(0, 255).unwrap());
        // 255 * 50 / 100 = 127.5
        assert_eq!(out.pixels(), &[0, 128, 255]);
    }

    #[test]
    fn stretch_full_range_is_identity() {
        let img = GrayImage::from_fn(16, 16, |x, y| (y * 16 + x) as u8);
        assert_eq!(stretch(&img, StretchParams::new(0, 255).unwrap()), img);
    }

    #[test]
    fn stretch_constant_goes_to_midpoint() {
        let out = stretch(&GrayImage::filled(3, 3, 42), StretchParams::new(0, 255).unwrap());
        assert!(out.pixels().iter().all(|&v| v == 128));
        let out = stretch(&GrayImage::filled(3, 3, 42), StretchParams::new(10, 20).unwrap());
        assert!(out.pixels().iter().all(|&v| v == 15));
    }

    #[test]
    fn params_reject_empty_ranges() {
        assert!(StretchParams::new(10, 10).is_err());
        assert!(EqualizeParams::new(200, 100).is_err());
    }

    #[test]
    fn equalize_constant_goes_to_top() {
        let out = equalize(&GrayImage::filled(5, 5, 77), EqualizeParams::new(20, 230).unwrap());
        assert!(out.pixels().iter().all(|&v| v == 230));
    }

    #[test]
    fn equalize_two_level() {
        let img = GrayImage::new(2, 2, vec![0, 0, 255, 255]).unwrap();
        let out = equalize(&img, EqualizeParams::default());
        // 255 / 4 * 2 = 127.5, 255 / 4 * 4 = 255
        assert_eq!(out.pixels(), &[128, 128, 255, 255]);
    }

    #[test]
    fn equalize_uniform_histogram_barely_moves() {
        let img = GrayImage::from_fn(256, 4, |x, _| x as u8);
        let out = equalize(&img, EqualizeParams::default());
        for (a, b) in img.pixels().iter().zip(out.pixels()) {
            assert!(a.abs_diff(*b) <= 1);
        }
    }
}
