//! Locating the fingerprint inside a full-area impression.
//!
//! The image is first normalized to a fixed mean and variance, then
//! binarized (dark ridges become foreground). The fingerprint area is the
//! bounding box of all `block x block` tiles whose foreground density reaches
//! a minimum, and the network input patch is cut from the center of that box.

use crate::error::{Error, Result};
use crate::image_core::{stats, to_brightness, GrayImage, Point, Region};

pub const DEFAULT_TARGET_MEAN: f64 = 100.0;
pub const DEFAULT_TARGET_VARIANCE: f64 = 100.0;
pub const DEFAULT_BINARY_THRESHOLD: u8 = 100;
pub const DEFAULT_BLOCK: usize = 16;
pub const DEFAULT_MIN_DENSITY: f64 = 0.10;

/// Target mean `M0` and variance `V0` of the normalized image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationParams {
    target_mean: f64,
    target_variance: f64,
}

impl NormalizationParams {
    pub fn new(target_mean: f64, target_variance: f64) -> Result<Self> {
        if !(0.0..=255.0).contains(&target_mean) {
            return Err(Error::InvalidParams(format!(
                "target mean {target_mean} outside [0, 255]"
            )));
        }
        if !(target_variance > 0.0 && target_variance.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "target variance {target_variance} must be positive"
            )));
        }
        Ok(Self {
            target_mean,
            target_variance,
        })
    }

    pub fn target_mean(&self) -> f64 {
        self.target_mean
    }

    pub fn target_variance(&self) -> f64 {
        self.target_variance
    }
}

impl Default for NormalizationParams {
    fn default() -> Self {
        Self {
            target_mean: DEFAULT_TARGET_MEAN,
            target_variance: DEFAULT_TARGET_VARIANCE,
        }
    }
}

/// Per-pixel foreground mask; `true` marks dark (ridge) pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || mask.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "mask of {} entries for {width}x{height}",
                mask.len()
            )));
        }
        Ok(Self {
            width,
            height,
            mask,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

/// Size of the patch fed to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PatchSpec {
    width: usize,
    height: usize,
}

impl PatchSpec {
    pub const MIN_SIDE: usize = 16;

    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < Self::MIN_SIDE || height < Self::MIN_SIDE {
            return Err(Error::InvalidParams(format!(
                "patch {width}x{height} is below the {0}x{0} minimum",
                Self::MIN_SIDE
            )));
        }
        Ok(Self { width, height })
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::new(side, side)
    }

    /// Any size, including the tiny ones used to check the geometry formulas.
    pub(crate) fn unchecked(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

impl Default for PatchSpec {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
        }
    }
}

/// Maps every pixel to `M0 ± sqrt(V0 (I - M)^2 / V)`, choosing `+` for pixels
/// brighter than the image mean `M`. A constant image maps to `M0`.
pub fn normalize(img: &GrayImage, p: &NormalizationParams) -> GrayImage {
    let s = stats(img);
    if s.variance == 0.0 {
        return GrayImage::filled(img.width(), img.height(), to_brightness(p.target_mean));
    }
    let ratio = p.target_variance / s.variance;
    img.map(|v| {
        let d = v as f64 - s.mean;
        let spread = (ratio * d * d).sqrt();
        let n = if d > 0.0 {
            p.target_mean + spread
        } else {
            p.target_mean - spread
        };
        to_brightness(n)
    })
}

/// Foreground where brightness is strictly below `threshold`.
pub fn binarize(img: &GrayImage, threshold: u8) -> BinaryImage {
    BinaryImage {
        width: img.width(),
        height: img.height(),
        mask: img.pixels().iter().map(|&v| v < threshold).collect(),
    }
}

/// Bounding box of the tiles whose foreground fraction is at least
/// `min_density`. Edge tiles may be partial; their density uses the pixels
/// they actually cover.
pub fn fingerprint_bounding_region(
    bin: &BinaryImage,
    block: usize,
    min_density: f64,
) -> Result<Region> {
    if block == 0 {
        return Err(Error::InvalidParams("block size must be positive".into()));
    }
    let tiles_x = bin.width.div_ceil(block);
    let tiles_y = bin.height.div_ceil(block);
    let mut bounds: Option<(usize, usize, usize, usize)> = None;

    for ty in 0..tiles_y {
        let y0 = ty * block;
        let y1 = (y0 + block).min(bin.height);
        for tx in 0..tiles_x {
            let x0 = tx * block;
            let x1 = (x0 + block).min(bin.width);
            let mut fg = 0usize;
            for y in y0..y1 {
                fg += bin.mask[y * bin.width + x0..y * bin.width + x1]
                    .iter()
                    .filter(|&&m| m)
                    .count();
            }
            let area = (x1 - x0) * (y1 - y0);
            if fg as f64 >= min_density * area as f64 && fg > 0 {
                bounds = Some(match bounds {
                    None => (x0, y0, x1, y1),
                    Some((a, b, c, d)) => (a.min(x0), b.min(y0), c.max(x1), d.max(y1)),
                });
            }
        }
    }
    let (x0, y0, x1, y1) = bounds.ok_or(Error::NoFingerprintArea)?;
    Ok(Region::new(x0, y0, x1 - x0, y1 - y0))
}

/// The patch-sized region centered on the fingerprint area's center
/// `(fp.x + fp.w/2, fp.y + fp.h/2)`.
pub fn center_crop_region(fp: Region, spec: PatchSpec) -> Result<Region> {
    if spec.width > fp.w || spec.height > fp.h {
        return Err(Error::PatchLargerThanArea {
            area: fp,
            patch_w: spec.width,
            patch_h: spec.height,
        });
    }
    let c = fp.center();
    Ok(Region::new(
        c.x as usize - spec.width / 2,
        c.y as usize - spec.height / 2,
        spec.width,
        spec.height,
    ))
}

/// Settings for [`extract_area`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaParams {
    pub normalization: NormalizationParams,
    pub threshold: u8,
    pub block: usize,
    pub min_density: f64,
}

impl Default for AreaParams {
    fn default() -> Self {
        Self {
            normalization: NormalizationParams::default(),
            threshold: DEFAULT_BINARY_THRESHOLD,
            block: DEFAULT_BLOCK,
            min_density: DEFAULT_MIN_DENSITY,
        }
    }
}

/// Result of running the full area-location pipeline on one impression.
#[derive(Debug, Clone)]
pub struct AreaExtraction {
    pub normalized: GrayImage,
    /// Bounding box of the detected fingerprint.
    pub area: Region,
    /// Patch-sized region inside the source image.
    pub patch: Region,
    /// The patch was larger than the detected area and only fitted against
    /// the image bounds.
    pub oversized: bool,
}

impl AreaExtraction {
    pub fn center(&self) -> Point {
        self.patch.center()
    }
}

/// Normalize, binarize, bound and center-crop. When the centered patch
/// overflows the image it is translated back inside, never shrunk.
pub fn extract_area(img: &GrayImage, spec: PatchSpec, params: &AreaParams) -> Result<AreaExtraction> {
    let normalized = normalize(img, &params.normalization);
    let bin = binarize(&normalized, params.threshold);
    let area = fingerprint_bounding_region(&bin, params.block, params.min_density)?;
    let oversized = matches!(
        center_crop_region(area, spec),
        Err(Error::PatchLargerThanArea { .. })
    );
    let patch = Region::centered_within(
        area.center(),
        spec.width,
        spec.height,
        img.width(),
        img.height(),
    )?;
    Ok(AreaExtraction {
        normalized,
        area,
        patch,
        oversized,
    })
}
