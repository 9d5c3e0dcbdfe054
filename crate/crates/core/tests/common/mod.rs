#![allow(dead_code)]

use fpaug::align::prepare_extra;
use fpaug::fingerprint_area::PatchSpec;
use fpaug::geometric::{canvas_window_origin, rotation_canvas};
use fpaug::image_core::{crop, crop_padded, rotate_about_center, GrayImage, Region};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Low-frequency texture: a few random plane waves around mid-gray.
pub fn smooth_texture(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut r = rng(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                r.random_range(0.05..0.20),
                r.random_range(0.0..std::f64::consts::TAU),
                r.random_range(0.0..std::f64::consts::TAU),
                r.random_range(15.0..30.0),
            )
        })
        .collect();
    GrayImage::from_fn(width, height, |x, y| {
        let v: f64 = waves
            .iter()
            .map(|&(f, dir, phase, amp)| {
                amp * (f * (x as f64 * dir.cos() + y as f64 * dir.sin()) + phase).sin()
            })
            .sum();
        (128.0 + v).round().clamp(0.0, 255.0) as u8
    })
}

pub fn random_image(width: usize, height: usize, lo: u8, hi: u8, seed: u64) -> GrayImage {
    let mut r = rng(seed);
    GrayImage::from_fn(width, height, |_, _| r.random_range(lo..=hi))
}

/// Pearson correlation computed from scratch; 0 for a constant input.
pub fn pearson(a: &GrayImage, b: &GrayImage) -> f64 {
    let n = a.pixels().len() as f64;
    let ma = a.pixels().iter().map(|&v| v as f64).sum::<f64>() / n;
    let mb = b.pixels().iter().map(|&v| v as f64).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.pixels().iter().zip(b.pixels()) {
        let (dx, dy) = (x as f64 - ma, y as f64 - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// The window at `(x, y)` rotated about its center, built the long way:
/// pad out the canvas, rotate all of it, crop the middle.
pub fn candidate_long_way(img: &GrayImage, x: usize, y: usize, spec: PatchSpec, angle: f64) -> GrayImage {
    let center = Region::new(x, y, spec.width(), spec.height()).center();
    let canvas = rotation_canvas(spec);
    let square = crop_padded(
        img,
        center.x - (canvas.0 / 2) as i64,
        center.y - (canvas.1 / 2) as i64,
        canvas.0,
        canvas.1,
        255,
    );
    let rotated = rotate_about_center(&square, angle, 255);
    let (wx, wy) = canvas_window_origin(canvas, spec);
    crop(&rotated, Region::new(wx, wy, spec.width(), spec.height())).unwrap()
}

/// The same candidate sampled straight from `img`: bilinear, white outside
/// the image, rotated about the window center. Written from the definition
/// and only touches the window's own pixels.
pub fn candidate_direct(img: &GrayImage, x: usize, y: usize, spec: PatchSpec, angle: f64) -> GrayImage {
    let (w, h) = (spec.width(), spec.height());
    let (cx, cy) = (x as f64 + (w as f64 - 1.0) / 2.0, y as f64 + (h as f64 - 1.0) / 2.0);
    let (sin, cos) = angle.to_radians().sin_cos();
    let at = |px: i64, py: i64| -> f64 {
        if px < 0 || py < 0 || px >= img.width() as i64 || py >= img.height() as i64 {
            255.0
        } else {
            img.get(px as usize, py as usize) as f64
        }
    };
    GrayImage::from_fn(w, h, |u, v| {
        let dx = (x + u) as f64 - cx;
        let dy = (y + v) as f64 - cy;
        let sx = cx + dx * cos - dy * sin;
        let sy = cy + dx * sin + dy * cos;
        let (x0, y0) = (sx.floor(), sy.floor());
        let (fx, fy) = (sx - x0, sy - y0);
        let (x0, y0) = (x0 as i64, y0 as i64);
        let top = at(x0, y0) + (at(x0 + 1, y0) - at(x0, y0)) * fx;
        let bottom = at(x0, y0 + 1) + (at(x0 + 1, y0 + 1) - at(x0, y0 + 1)) * fx;
        let value = top + (bottom - top) * fy;
        // nearest, halves away from zero
        value.round().clamp(0.0, 255.0) as u8
    })
}

#[derive(Debug, Clone, Copy)]
pub struct OracleBest {
    pub x: usize,
    pub y: usize,
    pub angle: f64,
    pub score: f64,
}

/// Every corner in the extra's search domain at stride 1, every angle.
///
/// Samples like [`candidate_direct`] but accumulates the correlation sums on
/// the fly instead of building each candidate image.
pub fn brute_force_align(extra: &GrayImage, reference: &GrayImage, spec: PatchSpec, angles: &[f64]) -> OracleBest {
    let prepared = prepare_extra(extra, spec).unwrap();
    let img = &prepared.normalized;
    let d = prepared.domain;
    let (w, h) = (spec.width(), spec.height());
    let n = (w * h) as f64;
    let ref_mean = reference.pixels().iter().map(|&v| v as f64).sum::<f64>() / n;
    let centered: Vec<f64> = reference.pixels().iter().map(|&v| v as f64 - ref_mean).collect();
    let srr: f64 = centered.iter().map(|c| c * c).sum();
    // white margin wide enough for any rotated window corner
    let pad = w.max(h) as i64;
    let pw = img.width() + 2 * pad as usize;
    let padded: Vec<f64> = (0..pw * (img.height() + 2 * pad as usize))
        .map(|i| {
            let (px, py) = ((i % pw) as i64 - pad, (i / pw) as i64 - pad);
            if px < 0 || py < 0 || px >= img.width() as i64 || py >= img.height() as i64 {
                255.0
            } else {
                img.get(px as usize, py as usize) as f64
            }
        })
        .collect();
    let at = |px: i64, py: i64| padded[((py + pad) as usize) * pw + (px + pad) as usize];
    let trig: Vec<(f64, f64)> = angles.iter().map(|a| a.to_radians().sin_cos()).collect();

    let mut best = OracleBest {
        x: 0,
        y: 0,
        angle: 0.0,
        score: f64::NEG_INFINITY,
    };
    for y in d.y_lo..=d.y_hi {
        for x in d.x_lo..=d.x_hi {
            let (cx, cy) = (x as f64 + (w as f64 - 1.0) / 2.0, y as f64 + (h as f64 - 1.0) / 2.0);
            for (&angle, &(sin, cos)) in angles.iter().zip(&trig) {
                let (mut sum, mut sum_sq, mut cross) = (0.0, 0.0, 0.0);
                for v in 0..h {
                    let dy = (y + v) as f64 - cy;
                    for u in 0..w {
                        let dx = (x + u) as f64 - cx;
                        let sx = cx + dx * cos - dy * sin;
                        let sy = cy + dx * sin + dy * cos;
                        let (x0, y0) = (sx.floor(), sy.floor());
                        let (fx, fy) = (sx - x0, sy - y0);
                        let (x0, y0) = (x0 as i64, y0 as i64);
                        let top = at(x0, y0) + (at(x0 + 1, y0) - at(x0, y0)) * fx;
                        let bottom = at(x0, y0 + 1) + (at(x0 + 1, y0 + 1) - at(x0, y0 + 1)) * fx;
                        let c = (top + (bottom - top) * fy).round().clamp(0.0, 255.0);
                        sum += c;
                        sum_sq += c * c;
                        cross += c * centered[v * w + u];
                    }
                }
                let scc = sum_sq - sum * sum / n;
                let score = if scc <= 0.0 || srr == 0.0 { 0.0 } else { cross / (scc * srr).sqrt() };
                if score > best.score {
                    best = OracleBest { x, y, angle, score };
                }
            }
        }
    }
    best
}

/// Upper-tail probability of a chi-square statistic.
pub fn chi_square_p(observed: &[u64], expected: &[f64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

pub struct AlignInstance {
    pub extra: GrayImage,
    pub reference: GrayImage,
    pub spec: PatchSpec,
    pub truth: (usize, usize, f64),
}

/// A 64x64 textured extra with light noise, and a 32x32 reference cut from
/// its clean version at a random corner and angle from `angles`.
pub fn align_instance(seed: u64, angles: &[f64]) -> AlignInstance {
    use fpaug::fingerprint_area::{normalize, NormalizationParams};
    let spec = PatchSpec::square(32).unwrap();
    let clean = smooth_texture(64, 64, seed);
    let mut r = rng(seed ^ 0x5eed);
    let x = r.random_range(0..=32);
    let y = r.random_range(0..=32);
    let angle = angles[r.random_range(0..angles.len())];
    let reference = candidate_long_way(&normalize(&clean, &NormalizationParams::default()), x, y, spec, angle);
    let extra = GrayImage::from_fn(64, 64, |x, y| {
        (clean.get(x, y) as i32 + r.random_range(-6..=6)).clamp(0, 255) as u8
    });
    AlignInstance {
        extra,
        reference,
        spec,
        truth: (x, y, angle),
    }
}
