//! Synthetic ridge-pattern "fingers" for tests, examples and demos.
//!
//! Each finger is a continuous pattern of warped parallel ridges inside an
//! elliptical pad. Impressions of the same finger observe that pattern under
//! a small rigid motion (translation plus rotation) with a little sensor
//! noise, so several impressions share content the way real database
//! impressions do. Impression 1 is always unmoved.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::image_core::{save_image, GrayImage};
use crate::{item_seed, seeded_rng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerPattern {
    period: f64,
    orientation: f64,
    warp: [(f64, f64, f64); 3],
    pad: (f64, f64),
}

/// Rigid motion of one impression relative to the finger's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub dx: f64,
    pub dy: f64,
    /// Degrees, counterclockwise as displayed.
    pub angle: f64,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        dx: 0.0,
        dy: 0.0,
        angle: 0.0,
    };
}

impl FingerPattern {
    pub fn new(finger_id: u32, seed: u64) -> Self {
        let mut rng = seeded_rng(item_seed(seed, finger_id, 0, u32::MAX));
        let mut warp = [(0.0, 0.0, 0.0); 3];
        for w in &mut warp {
            *w = (
                rng.random_range(1.5..4.0),
                rng.random_range(50.0..110.0),
                rng.random_range(0.0..TAU),
            );
        }
        Self {
            period: rng.random_range(8.0..11.0),
            orientation: rng.random_range(0.0..PI),
            warp,
            pad: (rng.random_range(0.40..0.44), rng.random_range(0.42..0.46)),
        }
    }

    /// Ridge brightness in `[-1, 1]` at finger-frame coordinates relative to
    /// the pad center.
    fn ridge(&self, u: f64, v: f64) -> f64 {
        let (s, c) = self.orientation.sin_cos();
        let along = u * c + v * s;
        let across = -u * s + v * c;
        let bend: f64 = self
            .warp
            .iter()
            .enumerate()
            .map(|(i, &(amp, len, phase))| {
                let coord = if i % 2 == 0 { across } else { along };
                amp * (TAU * coord / len + phase).sin()
            })
            .sum();
        (TAU * along / self.period + bend + 0.002 * across * across / self.period).cos()
    }

    /// Renders one impression of size `width x height`.
    pub fn render(&self, width: usize, height: usize, pose: Pose, noise_seed: u64) -> GrayImage {
        let mut rng = seeded_rng(noise_seed);
        let cx = (width as f64 - 1.0) / 2.0;
        let cy = (height as f64 - 1.0) / 2.0;
        let (s, c) = pose.angle.to_radians().sin_cos();
        let ax = self.pad.0 * width as f64;
        let ay = self.pad.1 * height as f64;
        GrayImage::from_fn(width, height, |x, y| {
            // undo the impression's motion to find the finger-frame point
            let px = x as f64 - cx - pose.dx;
            let py = y as f64 - cy - pose.dy;
            let u = px * c - py * s;
            let v = px * s + py * c;
            let r = (u / ax).powi(2) + (v / ay).powi(2);
            let jitter: f64 = rng.random_range(-6.0..6.0);
            let value = if r >= 1.0 {
                250.0
            } else {
                let fade = ((1.0 - r) / 0.15).min(1.0);
                let ink = 125.0 - 105.0 * self.ridge(u, v);
                250.0 + (ink - 250.0) * fade
            };
            (value + jitter).round().clamp(0.0, 255.0) as u8
        })
    }
}

/// Motion of impression `impression` of `finger_id`; impression 1 is the
/// identity.
pub fn impression_pose(finger_id: u32, impression: u32, seed: u64) -> Pose {
    if impression == 1 {
        return Pose::IDENTITY;
    }
    let mut rng = seeded_rng(item_seed(seed, finger_id, impression, u32::MAX - 1));
    Pose {
        dx: rng.random_range(-10.0..10.0),
        dy: rng.random_range(-10.0..10.0),
        angle: rng.random_range(-5.0..5.0),
    }
}

pub fn impression(finger_id: u32, impression: u32, width: usize, height: usize, seed: u64) -> GrayImage {
    FingerPattern::new(finger_id, seed).render(
        width,
        height,
        impression_pose(finger_id, impression, seed),
        item_seed(seed, finger_id, impression, u32::MAX - 2),
    )
}

/// Writes `<finger>_<impression>.bmp` for fingers `1..=fingers` and
/// impressions `1..=impressions`.
pub fn write_database(
    dir: &Path,
    fingers: u32,
    impressions: u32,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for f in 1..=fingers {
        for i in 1..=impressions {
            let img = impression(f, i, width, height, seed);
            save_image(&img, dir.join(format!("{f}_{i}.bmp")))?;
        }
    }
    Ok(())
}
