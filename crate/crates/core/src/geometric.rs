//! Rotation and shift augmentation.
//!
//! A rotated patch is produced by cutting a square large enough to contain
//! the patch at any angle, rotating that square about its center, and keeping
//! the central `w_s x h_s` window. The square is padded with white where it
//! runs off the source image.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint_area::PatchSpec;
use crate::image_core::{crop, GrayImage, PaddedView, Point, Region, RotationPlan, WHITE};

/// Rotation angle in degrees, `0 <= angle < 360`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationAugment {
    angle: f64,
}

impl RotationAugment {
    pub fn new(angle: f64) -> Result<Self> {
        if !(0.0..360.0).contains(&angle) {
            return Err(Error::InvalidParams(format!(
                "rotation angle {angle} outside [0, 360)"
            )));
        }
        Ok(Self { angle })
    }

    /// Wraps any finite angle into `[0, 360)`.
    pub fn wrapped(angle: f64) -> Self {
        let a = angle.rem_euclid(360.0);
        // rem_euclid can round up to exactly 360 for tiny negative inputs
        Self {
            angle: if a >= 360.0 { 0.0 } else { a },
        }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }
}

/// Patch center displacement; bounded so the shifted patch overlaps the
/// original by at least 80%.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftAugment {
    dx: i64,
    dy: i64,
}

impl ShiftAugment {
    pub fn new(dx: i64, dy: i64, spec: PatchSpec) -> Result<Self> {
        let (bx, by) = shift_bounds(spec);
        if dx.abs() > bx || dy.abs() > by {
            return Err(Error::InvalidParams(format!(
                "shift ({dx}, {dy}) exceeds bounds (±{bx}, ±{by})"
            )));
        }
        Ok(Self { dx, dy })
    }

    pub fn dx(&self) -> i64 {
        self.dx
    }

    pub fn dy(&self) -> i64 {
        self.dy
    }

    /// Fraction of the patch area shared with the unshifted patch.
    pub fn overlap(&self, spec: PatchSpec) -> f64 {
        let w = spec.width() as f64;
        let h = spec.height() as f64;
        (w - self.dx.abs() as f64) * (h - self.dy.abs() as f64) / (w * h)
    }
}

/// `(⌊0.1 w_s⌋, ⌊0.1 h_s⌋)`.
pub fn shift_bounds(spec: PatchSpec) -> (i64, i64) {
    ((spec.width() / 10) as i64, (spec.height() / 10) as i64)
}

/// Side of the square that still covers a `w_s x h_s` patch after any
/// rotation: `ceil(2 sqrt((w_s/2)^2 + (h_s/2)^2))`.
pub fn enlarged_side(spec: PatchSpec) -> usize {
    let hw = spec.width() as f64 / 2.0;
    let hh = spec.height() as f64 / 2.0;
    (2.0 * (hw * hw + hh * hh).sqrt()).ceil() as usize
}

/// The padded canvas actually rotated: the enlarged square, one pixel wider
/// or taller where its parity differs from the patch so that the canvas and
/// the patch window share their center.
pub fn rotation_canvas(spec: PatchSpec) -> (usize, usize) {
    let side = enlarged_side(spec);
    (
        side + (side - spec.width()) % 2,
        side + (side - spec.height()) % 2,
    )
}

/// Rotated patch centered on `center`.
///
/// Equivalent to `crop_padded` of the [`rotation_canvas`] around `center`,
/// `rotate_about_center` of that canvas, then a crop of the `w_s x h_s`
/// window at [`canvas_window_origin`]; only the final window is computed.
/// At angle 0 the result equals the plain crop centered on `center`.
pub fn rotated_patch(
    img: &GrayImage,
    center: Point,
    spec: PatchSpec,
    rot: RotationAugment,
) -> Result<GrayImage> {
    check_center(img, center)?;
    Ok(patch_plan(spec, rot.angle).render_padded(&canvas_view(img, center, spec)))
}

/// Sampling pattern of [`rotated_patch`] for one angle, shared by every
/// center.
pub(crate) fn patch_plan(spec: PatchSpec, angle: f64) -> RotationPlan {
    let canvas = rotation_canvas(spec);
    let (wx, wy) = canvas_window_origin(canvas, spec);
    RotationPlan::new(canvas, angle, wx, wy, spec.width(), spec.height())
}

/// The white-padded canvas around `center`.
pub(crate) fn canvas_view(img: &GrayImage, center: Point, spec: PatchSpec) -> PaddedView<'_> {
    let canvas = rotation_canvas(spec);
    PaddedView {
        img,
        origin_x: center.x - (canvas.0 / 2) as i64,
        origin_y: center.y - (canvas.1 / 2) as i64,
        width: canvas.0,
        height: canvas.1,
        fill: WHITE,
    }
}

/// Top-left of the patch window inside the canvas; at angle zero the window
/// is the plain centered crop.
pub fn canvas_window_origin(canvas: (usize, usize), spec: PatchSpec) -> (usize, usize) {
    (
        canvas.0 / 2 - spec.width() / 2,
        canvas.1 / 2 - spec.height() / 2,
    )
}

fn check_center(img: &GrayImage, center: Point) -> Result<()> {
    if center.x < 0
        || center.y < 0
        || center.x >= img.width() as i64
        || center.y >= img.height() as i64
    {
        return Err(Error::CenterOutOfBounds {
            x: center.x,
            y: center.y,
            width: img.width(),
            height: img.height(),
        });
    }
    Ok(())
}

/// Patch centered on `center + (dx, dy)`, moved back inside the image if it
/// would overflow.
pub fn shifted_patch(
    img: &GrayImage,
    center: Point,
    spec: PatchSpec,
    sh: ShiftAugment,
) -> Result<GrayImage> {
    let region = shifted_region(img, center, spec, sh)?;
    crop(img, region)
}

pub fn shifted_region(
    img: &GrayImage,
    center: Point,
    spec: PatchSpec,
    sh: ShiftAugment,
) -> Result<Region> {
    Region::centered_within(
        center.offset(sh.dx, sh.dy),
        spec.width(),
        spec.height(),
        img.width(),
        img.height(),
    )
    .map_err(|_| Error::RegionOutOfBounds {
        region: Region::new(0, 0, spec.width(), spec.height()),
        width: img.width(),
        height: img.height(),
    })
}

/// Uniform whole-degree angle in `[0, 360)`.
pub fn sample_rotation<R: Rng + ?Sized>(rng: &mut R) -> RotationAugment {
    RotationAugment {
        angle: rng.random_range(0..360u32) as f64,
    }
}

/// Uniform integer shift within [`shift_bounds`].
pub fn sample_shift<R: Rng + ?Sized>(spec: PatchSpec, rng: &mut R) -> ShiftAugment {
    let (bx, by) = shift_bounds(spec);
    ShiftAugment {
        dx: rng.random_range(-bx..=bx),
        dy: rng.random_range(-by..=by),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image_core::{crop_padded, rotate_about_center};
    use crate::seeded_rng;

    fn textured(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| ((x * 7 + y * 13 + (x * y) % 31) % 256) as u8)
    }

    #[test]
    fn canvas_shares_the_window_center() {
        assert_eq!(rotation_canvas(PatchSpec::default()), (182, 182));
        assert_eq!(rotation_canvas(PatchSpec::unchecked(16, 16)), (24, 24));
        assert_eq!(rotation_canvas(PatchSpec::unchecked(33, 17)), (39, 39));
        assert_eq!(rotation_canvas(PatchSpec::unchecked(40, 24)), (48, 48));
        assert_eq!(rotation_canvas(PatchSpec::unchecked(40, 23)), (48, 47));
    }

    #[test]
    fn enlarged_side_examples() {
        assert_eq!(enlarged_side(PatchSpec::default()), 182);
        assert_eq!(enlarged_side(PatchSpec::unchecked(2, 2)), 3);
        for s in [16usize, 33, 64, 100] {
            let expected = (s as f64 * 2f64.sqrt()).ceil() as usize;
            assert_eq!(enlarged_side(PatchSpec::unchecked(s, s)), expected);
        }
    }

    #[test]
    fn rotation_validation() {
        assert!(RotationAugment::new(360.0).is_err());
        assert!(RotationAugment::new(-1.0).is_err());
        assert_eq!(RotationAugment::wrapped(-2.0).angle(), 358.0);
        assert_eq!(RotationAugment::wrapped(720.0).angle(), 0.0);
    }

    #[test]
    fn angle_zero_is_plain_crop() {
        let img = textured(300, 280);
        let spec = PatchSpec::default();
        let c = Point::new(150, 140);
        let r = Region::centered_within(c, 128, 128, 300, 280).unwrap();
        let rotated = rotated_patch(&img, c, spec, RotationAugment::new(0.0).unwrap()).unwrap();
        assert_eq!(rotated, crop(&img, r).unwrap());
    }

    #[test]
    fn matches_three_step_composition() {
        let img = textured(220, 210);
        for (w, h) in [(128usize, 128usize), (40, 24), (33, 17)] {
            let spec = PatchSpec::unchecked(w, h);
            let canvas = rotation_canvas(spec);
            let (ox, oy) = canvas_window_origin(canvas, spec);
            for angle in [17.0, 90.0, 211.5] {
                for c in [Point::new(110, 100), Point::new(3, 205)] {
                    let direct =
                        rotated_patch(&img, c, spec, RotationAugment::new(angle).unwrap()).unwrap();
                    let square = crop_padded(
                        &img,
                        c.x - (canvas.0 / 2) as i64,
                        c.y - (canvas.1 / 2) as i64,
                        canvas.0,
                        canvas.1,
                        WHITE,
                    );
                    let rotated = rotate_about_center(&square, angle, WHITE);
                    let expected = crop(&rotated, Region::new(ox, oy, w, h)).unwrap();
                    assert_eq!(direct, expected, "spec {w}x{h} angle {angle} center {c:?}");
                }
            }
        }
    }

    #[test]
    fn center_outside_is_rejected() {
        let img = textured(50, 50);
        let r = rotated_patch(
            &img,
            Point::new(50, 10),
            PatchSpec::unchecked(16, 16),
            RotationAugment::new(10.0).unwrap(),
        );
        assert!(matches!(r, Err(Error::CenterOutOfBounds { .. })));
    }

    #[test]
    fn figure_angles_give_distinct_patches() {
        let img = textured(300, 300);
        let c = Point::new(150, 150);
        let patches: Vec<_> = [0.0, 30.0, 140.0, 200.0, 310.0]
            .iter()
            .map(|&a| {
                rotated_patch(&img, c, PatchSpec::default(), RotationAugment::new(a).unwrap())
                    .unwrap()
            })
            .collect();
        for p in &patches {
            assert_eq!((p.width(), p.height()), (128, 128));
        }
        for i in 0..patches.len() {
            for j in i + 1..patches.len() {
                assert_ne!(patches[i], patches[j]);
            }
        }
    }

    #[test]
    fn zero_shift_is_center_crop() {
        let img = textured(200, 200);
        let spec = PatchSpec::default();
        let c = Point::new(100, 90);
        let s = shifted_patch(&img, c, spec, ShiftAugment::new(0, 0, spec).unwrap()).unwrap();
        assert_eq!(s, crop(&img, Region::new(36, 26, 128, 128)).unwrap());
    }

    #[test]
    fn shift_bounds_truncate() {
        assert_eq!(shift_bounds(PatchSpec::default()), (12, 12));
        assert_eq!(shift_bounds(PatchSpec::unchecked(10, 10)), (1, 1));
        assert!(ShiftAugment::new(13, 0, PatchSpec::default()).is_err());
    }

    #[test]
    fn max_shift_overlap() {
        let spec = PatchSpec::default();
        let s = ShiftAugment::new(12, 12, spec).unwrap();
        let expected = (116.0 / 128.0) * (116.0 / 128.0);
        assert!((s.overlap(spec) - expected).abs() < 1e-12);
        assert!(s.overlap(spec) >= 0.8);
    }

    #[test]
    fn shifted_patch_needs_big_enough_source() {
        let img = textured(100, 100);
        let spec = PatchSpec::default();
        let r = shifted_patch(&img, Point::new(50, 50), spec, ShiftAugment::new(0, 0, spec).unwrap());
        assert!(matches!(r, Err(Error::RegionOutOfBounds { .. })));
    }

    #[test]
    fn sampling_is_seeded() {
        let spec = PatchSpec::default();
        let draw = |seed| {
            let mut rng = seeded_rng(seed);
            (0..50)
                .map(|_| (sample_rotation(&mut rng).angle(), sample_shift(spec, &mut rng)))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn small_spec_shift_range() {
        let spec = PatchSpec::unchecked(10, 10);
        let mut rng = seeded_rng(3);
        for _ in 0..1000 {
            let s = sample_shift(spec, &mut rng);
            assert!((-1..=1).contains(&s.dx()) && (-1..=1).contains(&s.dy()));
        }
    }
}
