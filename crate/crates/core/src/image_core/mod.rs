//! Grayscale raster type and the pixel primitives the rest of the crate is
//! built from.
//!
//! Coordinates follow the usual raster convention: `x` grows to the right,
//! `y` grows downwards, and pixel `(x, y)` sits exactly at the integer point
//! `(x, y)`. The geometric center of a `w x h` image is therefore
//! `((w - 1) / 2, (h - 1) / 2)`, which is the pivot used by
//! [`rotate_about_center`].

mod io;

pub use io::{encode_bmp, load_image, save_image};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Brightness used for padding and rotation fill. Fingerprint backgrounds are
/// white.
pub const WHITE: u8 = 255;

/// 8-bit single-channel image stored row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} bytes for a {width}x{height} image",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// A constant image.
    ///
    /// # Panics
    /// If either dimension is zero.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    ///
    /// # Panics
    /// If either dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    pub fn pixels(&self) -> &[u8] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.data
    }

    pub fn full_region(&self) -> Region {
        Region::new(0, 0, self.width, self.height)
    }

    /// Applies `f` to every pixel value.
    pub fn map(&self, f: impl Fn(u8) -> u8) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Axis-aligned integer rectangle in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Region {
    /// # Panics
    /// If `w` or `h` is zero.
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        assert!(w > 0 && h > 0, "region dimensions must be positive");
        Self { x, y, w, h }
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.x + self.w <= width && self.y + self.h <= height
    }

    /// Integer center `(x + w/2, y + h/2)`.
    pub fn center(&self) -> Point {
        Point::new((self.x + self.w / 2) as i64, (self.y + self.h / 2) as i64)
    }

    /// A `w x h` region whose integer center is `center`; the top-left corner
    /// may be negative.
    pub fn centered_origin(center: Point, w: usize, h: usize) -> (i64, i64) {
        (center.x - (w / 2) as i64, center.y - (h / 2) as i64)
    }

    /// The `w x h` region centered on `center`, translated by the smallest
    /// amount that puts it inside a `width x height` image.
    pub fn centered_within(
        center: Point,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    ) -> Result<Region> {
        if w > width || h > height {
            return Err(Error::ImageTooSmall {
                width,
                height,
                patch_w: w,
                patch_h: h,
            });
        }
        let (x, y) = Self::centered_origin(center, w, h);
        let x = x.clamp(0, (width - w) as i64) as usize;
        let y = y.clamp(0, (height - h) as i64) as usize;
        Ok(Region::new(x, y, w, h))
    }
}

/// Integer image point; may lie outside an image while shifts are composed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i64, dy: i64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

/// Mean and population variance of an image's brightness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageStats {
    pub mean: f64,
    pub variance: f64,
}

pub fn stats(img: &GrayImage) -> ImageStats {
    let n = img.data.len() as f64;
    let sum: u64 = img.data.iter().map(|&v| v as u64).sum();
    let mean = sum as f64 / n;
    let variance = img
        .data
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    ImageStats { mean, variance }
}

/// Rounds to the nearest integer (ties away from zero) and clamps to a byte.
#[inline]
pub(crate) fn to_brightness(value: f64) -> u8 {
    value.round().clamp(0.0, 255.0) as u8
}

pub fn crop(img: &GrayImage, r: Region) -> Result<GrayImage> {
    if !r.fits(img.width, img.height) {
        return Err(Error::RegionOutOfBounds {
            region: r,
            width: img.width,
            height: img.height,
        });
    }
    let mut data = Vec::with_capacity(r.w * r.h);
    for y in r.y..r.y + r.h {
        let start = y * img.width + r.x;
        data.extend_from_slice(&img.data[start..start + r.w]);
    }
    Ok(GrayImage {
        width: r.w,
        height: r.h,
        data,
    })
}

/// Crops a `w x h` window whose top-left corner may lie outside the image;
/// pixels outside the source take `fill`.
pub fn crop_padded(img: &GrayImage, x: i64, y: i64, w: usize, h: usize, fill: u8) -> GrayImage {
    let view = PaddedView {
        img,
        origin_x: x,
        origin_y: y,
        width: w,
        height: h,
        fill,
    };
    GrayImage::from_fn(w, h, |u, v| view.at(u, v))
}

/// Rotates counterclockwise (as displayed, `y` down) by `angle` degrees about
/// the geometric center, with bilinear sampling. Output has the input's
/// dimensions; samples falling outside the source take `fill`.
pub fn rotate_about_center(img: &GrayImage, angle: f64, fill: u8) -> GrayImage {
    rotate_window(img, angle, fill, 0, 0, img.width, img.height)
}

/// Read-only pixel access shared by whole images and padded windows.
pub(crate) trait PixelSource {
    fn dims(&self) -> (usize, usize);
    fn at(&self, x: usize, y: usize) -> u8;
}

impl PixelSource for GrayImage {
    #[inline]
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> u8 {
        self.get(x, y)
    }
}

/// A window of an image that behaves as if the image were padded with
/// `fill` on every side.
pub(crate) struct PaddedView<'a> {
    pub img: &'a GrayImage,
    pub origin_x: i64,
    pub origin_y: i64,
    pub width: usize,
    pub height: usize,
    pub fill: u8,
}

impl PixelSource for PaddedView<'_> {
    #[inline]
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> u8 {
        let sx = self.origin_x + x as i64;
        let sy = self.origin_y + y as i64;
        if sx < 0 || sy < 0 || sx >= self.img.width as i64 || sy >= self.img.height as i64 {
            self.fill
        } else {
            self.img.get(sx as usize, sy as usize)
        }
    }
}

/// `(cos, sin)` of an angle in degrees, exact at quarter turns.
pub(crate) fn cos_sin_deg(angle: f64) -> (f64, f64) {
    let a = angle.rem_euclid(360.0);
    if a == 0.0 {
        (1.0, 0.0)
    } else if a == 90.0 {
        (0.0, 1.0)
    } else if a == 180.0 {
        (-1.0, 0.0)
    } else if a == 270.0 {
        (0.0, -1.0)
    } else {
        let r = a.to_radians();
        (r.cos(), r.sin())
    }
}

const EDGE_EPS: f64 = 1e-9;

/// Rotates `src` about its geometric center and returns only the
/// `out_w x out_h` window whose top-left sits at `(win_x, win_y)` in the
/// source frame.
pub(crate) fn rotate_window<S: PixelSource>(
    src: &S,
    angle: f64,
    fill: u8,
    win_x: usize,
    win_y: usize,
    out_w: usize,
    out_h: usize,
) -> GrayImage {
    RotationPlan::new(src.dims(), angle, win_x, win_y, out_w, out_h).render(src, fill)
}

/// Where one output pixel reads from, in source coordinates.
#[derive(Debug, Clone, Copy)]
enum Tap {
    Fill,
    Exact { x: u32, y: u32 },
    Blend { x0: u32, y0: u32, x1: u32, y1: u32, fx: f64, fy: f64 },
}

/// The sampling pattern of one rotation window. It depends only on the
/// source dimensions, so it can be reused for every source of that size.
pub(crate) struct RotationPlan {
    out_w: usize,
    out_h: usize,
    taps: Vec<Tap>,
}

impl RotationPlan {
    pub(crate) fn new(
        (sw, sh): (usize, usize),
        angle: f64,
        win_x: usize,
        win_y: usize,
        out_w: usize,
        out_h: usize,
    ) -> Self {
        let cx = (sw as f64 - 1.0) / 2.0;
        let cy = (sh as f64 - 1.0) / 2.0;
        let (cos, sin) = cos_sin_deg(angle);
        let max_x = sw as f64 - 1.0;
        let max_y = sh as f64 - 1.0;

        let mut taps = Vec::with_capacity(out_w * out_h);
        for v in 0..out_h {
            let dy = (win_y + v) as f64 - cy;
            for u in 0..out_w {
                let dx = (win_x + u) as f64 - cx;
                // inverse map: output pixel back to its source location
                let sx = cx + dx * cos - dy * sin;
                let sy = cy + dx * sin + dy * cos;
                taps.push(plan_tap(sx, sy, max_x, max_y));
            }
        }
        Self { out_w, out_h, taps }
    }

    pub(crate) fn render<S: PixelSource>(&self, src: &S, fill: u8) -> GrayImage {
        self.render_with(|x, y| src.at(x as usize, y as usize), fill)
    }

    /// Same result as [`render`](Self::render), reading the image directly
    /// when the view lies entirely inside it.
    pub(crate) fn render_padded(&self, view: &PaddedView<'_>) -> GrayImage {
        let img = view.img;
        let inside = view.origin_x >= 0
            && view.origin_y >= 0
            && view.origin_x as usize + view.width <= img.width
            && view.origin_y as usize + view.height <= img.height;
        if !inside {
            return self.render(view, view.fill);
        }
        let base = view.origin_y as usize * img.width + view.origin_x as usize;
        let stride = img.width;
        let data = &img.data;
        self.render_with(|x, y| data[base + y as usize * stride + x as usize], view.fill)
    }

    #[inline]
    fn render_with(&self, at: impl Fn(u32, u32) -> u8, fill: u8) -> GrayImage {
        let data = self
            .taps
            .iter()
            .map(|&tap| match tap {
                Tap::Fill => fill,
                Tap::Exact { x, y } => at(x, y),
                Tap::Blend { x0, y0, x1, y1, fx, fy } => {
                    let p00 = at(x0, y0) as f64;
                    let p10 = at(x1, y0) as f64;
                    let p01 = at(x0, y1) as f64;
                    let p11 = at(x1, y1) as f64;
                    let top = p00 + (p10 - p00) * fx;
                    let bottom = p01 + (p11 - p01) * fx;
                    to_brightness(top + (bottom - top) * fy)
                }
            })
            .collect();
        GrayImage {
            width: self.out_w,
            height: self.out_h,
            data,
        }
    }
}

#[inline]
fn plan_tap(sx: f64, sy: f64, max_x: f64, max_y: f64) -> Tap {
    if sx < -EDGE_EPS || sy < -EDGE_EPS || sx > max_x + EDGE_EPS || sy > max_y + EDGE_EPS {
        return Tap::Fill;
    }
    let sx = sx.clamp(0.0, max_x);
    let sy = sy.clamp(0.0, max_y);
    let x0 = sx.floor();
    let y0 = sy.floor();
    let fx = sx - x0;
    let fy = sy - y0;
    let x0 = x0 as u32;
    let y0 = y0 as u32;
    if fx == 0.0 && fy == 0.0 {
        return Tap::Exact { x: x0, y: y0 };
    }
    let x1 = if fx > 0.0 { x0 + 1 } else { x0 };
    let y1 = if fy > 0.0 { y0 + 1 } else { y0 };
    Tap::Blend { x0, y0, x1, y1, fx, fy }
}
