//! Locating the reference patch inside other impressions of the same finger.
//!
//! Both the reference and the extra impression are normalized; a
//! patch-sized window slides over the extra's fingerprint area at a coarse
//! stride for every angle of a small rotation set, each candidate is scored
//! by normalized cross-correlation against the reference patch, and the best
//! few coarse hits are refined at stride 1. The match is kept only when its score
//! clears the acceptance threshold.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fingerprint_area::{
    binarize, fingerprint_bounding_region, normalize, AreaParams, PatchSpec,
};
use crate::geometric::{canvas_view, patch_plan, rotated_patch, RotationAugment};
use crate::image_core::{crop, GrayImage, Point, Region, RotationPlan};

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTemplate {
    patch: GrayImage,
    finger_id: u32,
}

impl ReferenceTemplate {
    /// `patch` should already be normalized.
    pub fn new(patch: GrayImage, finger_id: u32) -> Self {
        Self { patch, finger_id }
    }

    /// Cuts `region` out of the normalized reference impression.
    pub fn from_normalized(normalized: &GrayImage, region: Region, finger_id: u32) -> Result<Self> {
        Ok(Self::new(crop(normalized, region)?, finger_id))
    }

    pub fn patch(&self) -> &GrayImage {
        &self.patch
    }

    pub fn finger_id(&self) -> u32 {
        self.finger_id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AlignmentResult {
    pub region: Region,
    /// Rotation applied to the extra's window to match the reference.
    pub angle: f64,
    pub score: f64,
}

impl AlignmentResult {
    pub fn center(&self) -> Point {
        self.region.center()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlignOutcome {
    Accepted(AlignmentResult),
    /// Best match found, at or below the threshold.
    Rejected(AlignmentResult),
}

impl AlignOutcome {
    pub fn best(&self) -> &AlignmentResult {
        match self {
            AlignOutcome::Accepted(r) | AlignOutcome::Rejected(r) => r,
        }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self, AlignOutcome::Accepted(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignSearchParams {
    pub coarse_stride: usize,
    pub refine_radius: usize,
    /// Coarse maxima refined, best first, each at least `refine_radius + 1`
    /// from the others (Chebyshev distance). Periodic ridges can put the
    /// global coarse maximum one ridge away from the true match, so a few
    /// starts are refined rather than one.
    pub refine_starts: usize,
    pub angle_set: Vec<f64>,
    pub accept_threshold: f64,
}

impl Default for AlignSearchParams {
    fn default() -> Self {
        Self {
            coarse_stride: 4,
            refine_radius: 4,
            refine_starts: 3,
            angle_set: (-5..=5).map(|k| (2 * k) as f64).collect(),
            accept_threshold: 0.35,
        }
    }
}

impl AlignSearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.coarse_stride == 0 {
            return Err(Error::InvalidParams("coarse stride must be at least 1".into()));
        }
        if self.refine_starts == 0 {
            return Err(Error::InvalidParams("at least one refinement start is needed".into()));
        }
        if !(self.accept_threshold > -1.0 && self.accept_threshold < 1.0) {
            return Err(Error::InvalidParams(format!(
                "accept threshold {} outside (-1, 1)",
                self.accept_threshold
            )));
        }
        if self.angle_set.is_empty() || self.angle_set.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParams("angle set must be non-empty and finite".into()));
        }
        Ok(())
    }
}

/// Pearson correlation of two equally sized images.
pub fn ncc(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::InvalidParams(format!(
            "ncc of {}x{} and {}x{} images",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let n = a.pixels().len() as f64;
    let ma = a.pixels().iter().map(|&v| v as f64).sum::<f64>() / n;
    let mb = b.pixels().iter().map(|&v| v as f64).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.pixels().iter().zip(b.pixels()) {
        let dx = x as f64 - ma;
        let dy = y as f64 - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Strictly greater than `threshold`.
pub fn accept(result: &AlignmentResult, threshold: f64) -> bool {
    result.score > threshold
}

/// Inclusive range of window top-left corners searched in an extra image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchDomain {
    pub x_lo: usize,
    pub x_hi: usize,
    pub y_lo: usize,
    pub y_hi: usize,
}

impl SearchDomain {
    pub fn positions(&self) -> usize {
        (self.x_hi - self.x_lo + 1) * (self.y_hi - self.y_lo + 1)
    }
}

/// Normalized extra impression plus the window positions to search.
#[derive(Debug, Clone)]
pub struct PreparedExtra {
    pub normalized: GrayImage,
    /// Detected fingerprint area; the whole image when nothing was detected.
    pub area: Region,
    pub domain: SearchDomain,
}

/// Normalizes `extra` and restricts window corners to its fingerprint area.
pub fn prepare_extra(extra: &GrayImage, spec: PatchSpec) -> Result<PreparedExtra> {
    let (w, h) = (extra.width(), extra.height());
    if spec.width() > w || spec.height() > h {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            patch_w: spec.width(),
            patch_h: spec.height(),
        });
    }
    let params = AreaParams::default();
    let normalized = normalize(extra, &params.normalization);
    let bin = binarize(&normalized, params.threshold);
    let area = fingerprint_bounding_region(&bin, params.block, params.min_density)
        .unwrap_or_else(|_| extra.full_region());

    let axis = |lo: usize, len: usize, patch: usize, limit: usize| -> (usize, usize) {
        let max_start = limit - patch;
        if len >= patch {
            (lo.min(max_start), (lo + len - patch).min(max_start))
        } else {
            let start = (lo + len / 2).saturating_sub(patch / 2).min(max_start);
            (start, start)
        }
    };
    let (x_lo, x_hi) = axis(area.x, area.w, spec.width(), w);
    let (y_lo, y_hi) = axis(area.y, area.h, spec.height(), h);
    Ok(PreparedExtra {
        normalized,
        area,
        domain: SearchDomain {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        },
    })
}

/// The extra's window at top-left `(x, y)`, rotated by `angle` about its
/// center.
pub fn candidate_patch(
    normalized: &GrayImage,
    x: usize,
    y: usize,
    spec: PatchSpec,
    angle: f64,
) -> Result<GrayImage> {
    let center = Region::new(x, y, spec.width(), spec.height()).center();
    rotated_patch(normalized, center, spec, RotationAugment::wrapped(angle))
}

/// Zero-mean reference with its norm, so each candidate costs one pass.
struct PreparedTemplate {
    centered: Vec<f64>,
    norm: f64,
}

impl PreparedTemplate {
    fn new(patch: &GrayImage) -> Self {
        let n = patch.pixels().len() as f64;
        let mean = patch.pixels().iter().map(|&v| v as f64).sum::<f64>() / n;
        let centered: Vec<f64> = patch.pixels().iter().map(|&v| v as f64 - mean).collect();
        let norm = centered.iter().map(|d| d * d).sum::<f64>().sqrt();
        Self { centered, norm }
    }

    /// Correlation with `candidate`; a constant candidate scores 0.
    fn score(&self, candidate: &GrayImage) -> f64 {
        let n = candidate.pixels().len() as f64;
        let (mut s, mut ss, mut cross) = (0.0, 0.0, 0.0);
        for (&v, &t) in candidate.pixels().iter().zip(&self.centered) {
            let v = v as f64;
            s += v;
            ss += v * v;
            cross += v * t;
        }
        let var = ss - s * s / n;
        if var <= 0.0 || self.norm == 0.0 {
            return 0.0;
        }
        (cross / (var.sqrt() * self.norm)).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Scored {
    x: usize,
    y: usize,
    angle: f64,
    score: f64,
}

/// Higher score wins; ties go to the lowest `(y, x, angle)`.
fn better(a: Scored, b: Scored) -> Scored {
    if a.score > b.score {
        return a;
    }
    if b.score > a.score {
        return b;
    }
    let ka = (a.y, a.x);
    let kb = (b.y, b.x);
    if ka < kb || (ka == kb && a.angle <= b.angle) {
        a
    } else {
        b
    }
}

fn score_all(
    normalized: &GrayImage,
    template: &PreparedTemplate,
    spec: PatchSpec,
    positions: &[(usize, usize)],
    angles: &[f64],
) -> Vec<Scored> {
    // one sampling pattern per angle, reused at every position
    let plans: Vec<RotationPlan> = angles
        .iter()
        .map(|&a| patch_plan(spec, RotationAugment::wrapped(a).angle()))
        .collect();
    let work: Vec<(usize, usize, usize)> = positions
        .iter()
        .flat_map(|&(x, y)| (0..angles.len()).map(move |k| (x, y, k)))
        .collect();
    work.par_iter()
        .map(|&(x, y, k)| {
            let center = Region::new(x, y, spec.width(), spec.height()).center();
            let patch = plans[k].render_padded(&canvas_view(normalized, center, spec));
            Scored {
                x,
                y,
                angle: angles[k],
                score: template.score(&patch),
            }
        })
        .collect()
}

fn best(scored: &[Scored]) -> Scored {
    scored
        .iter()
        .copied()
        .reduce(better)
        .expect("search set is never empty")
}

/// Up to `count` coarse hits, best first, no two within `radius` of each
/// other.
fn refine_seeds(coarse: &[Scored], count: usize, radius: usize) -> Vec<Scored> {
    let mut ranked = coarse.to_vec();
    // same order as `better`: score, then lowest (y, x, angle)
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then((a.y, a.x).cmp(&(b.y, b.x)))
            .then(a.angle.total_cmp(&b.angle))
    });
    let mut seeds: Vec<Scored> = Vec::with_capacity(count);
    for s in ranked {
        if seeds.len() == count {
            break;
        }
        if seeds
            .iter()
            .all(|t| t.x.abs_diff(s.x) > radius || t.y.abs_diff(s.y) > radius)
        {
            seeds.push(s);
        }
    }
    seeds
}

fn lattice(lo: usize, hi: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (lo..=hi).step_by(stride).collect();
    if *v.last().expect("lo <= hi") != hi {
        v.push(hi);
    }
    v
}

/// Coarse-to-fine search for the window of `extra` that best matches the
/// reference patch.
pub fn best_matching_region(
    extra: &GrayImage,
    reference: &ReferenceTemplate,
    spec: PatchSpec,
    sp: &AlignSearchParams,
) -> Result<AlignOutcome> {
    sp.validate()?;
    if reference.patch.width() != spec.width() || reference.patch.height() != spec.height() {
        return Err(Error::InvalidParams(format!(
            "reference patch {}x{} does not match the {}x{} patch spec",
            reference.patch.width(),
            reference.patch.height(),
            spec.width(),
            spec.height()
        )));
    }
    let prepared = prepare_extra(extra, spec)?;
    let template = PreparedTemplate::new(&reference.patch);
    let d = prepared.domain;
    let mut angles = sp.angle_set.clone();
    angles.sort_by(f64::total_cmp);
    angles.dedup();

    let xs = lattice(d.x_lo, d.x_hi, sp.coarse_stride);
    let ys = lattice(d.y_lo, d.y_hi, sp.coarse_stride);
    let coarse: Vec<(usize, usize)> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
        .collect();
    let coarse_scores = score_all(&prepared.normalized, &template, spec, &coarse, &angles);
    let coarse_best = best(&coarse_scores);

    let r = sp.refine_radius;
    let mut fine = BTreeSet::new();
    for seed in refine_seeds(&coarse_scores, sp.refine_starts, r) {
        let rx = (seed.x.saturating_sub(r).max(d.x_lo), (seed.x + r).min(d.x_hi));
        let ry = (seed.y.saturating_sub(r).max(d.y_lo), (seed.y + r).min(d.y_hi));
        for y in ry.0..=ry.1 {
            fine.extend((rx.0..=rx.1).map(|x| (x, y)));
        }
    }
    let fine: Vec<(usize, usize)> = fine.into_iter().collect();
    let best = better(
        coarse_best,
        best(&score_all(&prepared.normalized, &template, spec, &fine, &angles)),
    );

    let result = AlignmentResult {
        region: Region::new(best.x, best.y, spec.width(), spec.height()),
        angle: best.angle,
        score: best.score,
    };
    Ok(if accept(&result, sp.accept_threshold) {
        AlignOutcome::Accepted(result)
    } else {
        AlignOutcome::Rejected(result)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texture() -> GrayImage {
        GrayImage::from_fn(40, 30, |x, y| ((x * x + 3 * y * x + 7 * y) % 200) as u8 + 20)
    }

    #[test]
    fn self_correlation() {
        let t = texture();
        assert!((ncc(&t, &t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negated_correlation() {
        let t = texture();
        let neg = t.map(|v| 255 - v);
        assert!((ncc(&t, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_invariance() {
        let t = GrayImage::from_fn(20, 20, |x, y| (x * 3 + y * 2) as u8);
        let scaled = t.map(|v| v * 2 + 10);
        assert!((ncc(&t, &scaled).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_input_has_no_correlation() {
        let t = texture();
        let flat = GrayImage::filled(40, 30, 9);
        assert!(matches!(ncc(&t, &flat), Err(Error::ZeroVariance)));
        assert!(matches!(ncc(&flat, &t), Err(Error::ZeroVariance)));
    }

    #[test]
    fn prepared_template_matches_ncc() {
        let a = texture();
        let b = GrayImage::from_fn(40, 30, |x, y| ((x * 11 + y * y) % 256) as u8);
        let fast = PreparedTemplate::new(&a).score(&b);
        assert!((fast - ncc(&b, &a).unwrap()).abs() < 1e-9);
        assert_eq!(PreparedTemplate::new(&a).score(&GrayImage::filled(40, 30, 3)), 0.0);
    }

    #[test]
    fn accept_is_strict() {
        let r = |score| AlignmentResult {
            region: Region::new(0, 0, 1, 1),
            angle: 0.0,
            score,
        };
        assert!(accept(&r(0.36), 0.35));
        assert!(!accept(&r(0.35), 0.35));
        assert!(accept(&r(-0.99), -1.0));
        assert!(accept(&r(-1.0 + 1e-12), -1.0));
    }

    #[test]
    fn tie_break_prefers_lowest_key() {
        let s = |x, y, angle| Scored {
            x,
            y,
            angle,
            score: 0.5,
        };
        let b = better(s(5, 1, 0.0), s(1, 2, 0.0));
        assert_eq!((b.x, b.y), (5, 1));
        let b = better(s(3, 3, 2.0), s(3, 3, -2.0));
        assert_eq!(b.angle, -2.0);
    }

    #[test]
    fn lattice_includes_end() {
        assert_eq!(lattice(0, 20, 8), vec![0, 8, 16, 20]);
        assert_eq!(lattice(4, 4, 8), vec![4]);
        assert_eq!(lattice(0, 16, 8), vec![0, 8, 16]);
    }

    #[test]
    fn params_validation() {
        let mut p = AlignSearchParams::default();
        assert_eq!(p.angle_set.len(), 11);
        assert!(p.validate().is_ok());
        p.coarse_stride = 0;
        assert!(p.validate().is_err());
        let p = AlignSearchParams {
            accept_threshold: 1.0,
            ..AlignSearchParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn too_small_extra() {
        let spec = PatchSpec::square(32).unwrap();
        let reference = ReferenceTemplate::new(GrayImage::filled(32, 32, 1), 0);
        let r = best_matching_region(
            &GrayImage::filled(20, 40, 0),
            &reference,
            spec,
            &AlignSearchParams::default(),
        );
        assert!(matches!(r, Err(Error::ImageTooSmall { .. })));
    }
}
