//! Uniform noise and random-area ("sweat blot") noise.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_core::{GrayImage, Region};

/// Noise offset range `[a, b]`; each pixel receives an independent integer
/// offset drawn uniformly from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformNoiseParams {
    a: i32,
    b: i32,
}

impl UniformNoiseParams {
    pub fn new(a: i32, b: i32) -> Result<Self> {
        if a > b || a < -255 || b > 255 {
            return Err(Error::InvalidParams(format!(
                "uniform noise range [{a}, {b}] must be ordered within [-255, 255]"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> i32 {
        self.a
    }

    pub fn b(&self) -> i32 {
        self.b
    }
}

impl Default for UniformNoiseParams {
    fn default() -> Self {
        Self { a: -32, b: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomAreaNoiseParams {
    window: usize,
    dense_threshold: u8,
    circle_diameter: usize,
    circle_count: usize,
}

impl RandomAreaNoiseParams {
    pub fn new(
        window: usize,
        dense_threshold: u8,
        circle_diameter: usize,
        circle_count: usize,
    ) -> Result<Self> {
        if window < 4 || circle_diameter < 2 || circle_count < 1 {
            return Err(Error::InvalidParams(format!(
                "random area noise needs window >= 4, diameter >= 2, count >= 1 \
                 (got {window}, {circle_diameter}, {circle_count})"
            )));
        }
        Ok(Self {
            window,
            dense_threshold,
            circle_diameter,
            circle_count,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn dense_threshold(&self) -> u8 {
        self.dense_threshold
    }

    pub fn circle_diameter(&self) -> usize {
        self.circle_diameter
    }

    pub fn circle_count(&self) -> usize {
        self.circle_count
    }
}

impl Default for RandomAreaNoiseParams {
    fn default() -> Self {
        Self {
            window: 16,
            dense_threshold: 64,
            circle_diameter: 32,
            circle_count: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseOutcome {
    pub image: GrayImage,
    pub applied: bool,
    /// Dense tile the first disk was centered on.
    pub seed_window: Option<Region>,
    /// Pixels inside the painted disk union, whether or not they were
    /// already black.
    pub painted_pixels: usize,
    pub disk_centers: Vec<(f64, f64)>,
}

pub fn add_uniform_noise<R: Rng + ?Sized>(
    img: &GrayImage,
    p: UniformNoiseParams,
    rng: &mut R,
) -> GrayImage {
    let mut out = img.clone();
    for v in out.pixels_mut() {
        let z = rng.random_range(p.a..=p.b);
        *v = (*v as i32 + z).clamp(0, 255) as u8;
    }
    out
}

/// Complete `window x window` tiles whose mean brightness is below
/// `threshold`, in row-major order.
pub fn dense_tiles(img: &GrayImage, window: usize, threshold: u8) -> Result<Vec<Region>> {
    if window == 0 || window > img.width().min(img.height()) {
        return Err(Error::WindowTooLarge {
            window,
            width: img.width(),
            height: img.height(),
        });
    }
    let area = (window * window) as u64;
    let mut tiles = Vec::new();
    for ty in 0..img.height() / window {
        for tx in 0..img.width() / window {
            let (x0, y0) = (tx * window, ty * window);
            let mut sum = 0u64;
            for y in y0..y0 + window {
                let row = &img.pixels()[y * img.width() + x0..y * img.width() + x0 + window];
                sum += row.iter().map(|&v| v as u64).sum::<u64>();
            }
            // mean < threshold without leaving integers
            if sum < threshold as u64 * area {
                tiles.push(Region::new(x0, y0, window, window));
            }
        }
    }
    Ok(tiles)
}

/// Paints a chain of overlapping black disks seeded in a randomly chosen
/// dense tile.
///
/// The first disk is centered on the tile; each following disk moves from
/// the previous center by a distance in `[w_n/4, w_n/2]` in a uniformly
/// random direction. When no tile is dense enough the image is returned
/// untouched with `applied == false`.
pub fn random_area_noise<R: Rng + ?Sized>(
    img: &GrayImage,
    p: RandomAreaNoiseParams,
    rng: &mut R,
) -> NoiseOutcome {
    let tiles = dense_tiles(img, p.window, p.dense_threshold).unwrap_or_default();
    if tiles.is_empty() {
        return NoiseOutcome {
            image: img.clone(),
            applied: false,
            seed_window: None,
            painted_pixels: 0,
            disk_centers: Vec::new(),
        };
    }
    let seed = tiles[rng.random_range(0..tiles.len())];
    let half = (p.window as f64 - 1.0) / 2.0;
    let diameter = p.circle_diameter as f64;
    let mut centers = Vec::with_capacity(p.circle_count);
    let mut c = (seed.x as f64 + half, seed.y as f64 + half);
    centers.push(c);
    for _ in 1..p.circle_count {
        let step = rng.random_range(diameter / 4.0..=diameter / 2.0);
        let theta = rng.random_range(0.0..TAU);
        c = (c.0 + step * theta.cos(), c.1 + step * theta.sin());
        centers.push(c);
    }

    let radius = diameter / 2.0;
    let r2 = radius * radius;
    let (w, h) = (img.width(), img.height());
    let mut painted = vec![false; w * h];
    for &(cx, cy) in &centers {
        let x0 = (cx - radius).floor().max(0.0) as usize;
        let y0 = (cy - radius).floor().max(0.0) as usize;
        let x1 = ((cx + radius).ceil().max(0.0) as usize).min(w - 1);
        let y1 = ((cy + radius).ceil().max(0.0) as usize).min(h - 1);
        for y in y0..=y1 {
            let dy = y as f64 - cy;
            for x in x0..=x1 {
                let dx = x as f64 - cx;
                if dx * dx + dy * dy <= r2 {
                    painted[y * w + x] = true;
                }
            }
        }
    }
    let mut image = img.clone();
    let mut count = 0;
    for (v, &m) in image.pixels_mut().iter_mut().zip(&painted) {
        if m {
            *v = 0;
            count += 1;
        }
    }
    NoiseOutcome {
        image,
        applied: true,
        seed_window: Some(seed),
        painted_pixels: count,
        disk_centers: centers,
    }
}
