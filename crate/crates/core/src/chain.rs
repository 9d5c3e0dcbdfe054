//! Replayable augmentation records.
//!
//! A chain is an ordered list of [`AugmentOp`]s with every parameter spelled
//! out. Rendering a chain against its source image first performs a single
//! geometric extraction (all rotations and shifts composed onto the patch
//! base), then applies the photometric and noise operations in order. Noise
//! draws from a stream derived from the item seed, so the chain plus the seed
//! reproduce the output exactly.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint_area::PatchSpec;
use crate::geometric::{
    rotated_patch, sample_rotation, sample_shift, RotationAugment, ShiftAugment,
};
use crate::image_core::{crop, GrayImage, Point, Region};
use crate::noise::{
    add_uniform_noise, random_area_noise, RandomAreaNoiseParams, UniformNoiseParams,
};
use crate::photometric::{equalize, sample_stretch, stretch, EqualizeParams, StretchParams};
use crate::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Rotation,
    Shift,
    Stretch,
    Equalize,
    UniformNoise,
    RandomAreaNoise,
}

impl OpKind {
    pub const ALL: [OpKind; 6] = [
        OpKind::Rotation,
        OpKind::Shift,
        OpKind::Stretch,
        OpKind::Equalize,
        OpKind::UniformNoise,
        OpKind::RandomAreaNoise,
    ];

    pub fn is_noise(self) -> bool {
        matches!(self, OpKind::UniformNoise | OpKind::RandomAreaNoise)
    }

    pub fn is_geometric(self) -> bool {
        matches!(self, OpKind::Rotation | OpKind::Shift)
    }

    /// Name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            OpKind::Rotation => "rotate",
            OpKind::Shift => "shift",
            OpKind::Stretch => "stretch",
            OpKind::Equalize => "equalize",
            OpKind::UniformNoise => "uniform-noise",
            OpKind::RandomAreaNoise => "area-noise",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for OpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "rotate" | "rotation" => OpKind::Rotation,
            "shift" => OpKind::Shift,
            "stretch" => OpKind::Stretch,
            "equalize" => OpKind::Equalize,
            "uniform-noise" | "uniform_noise" => OpKind::UniformNoise,
            "area-noise" | "random_area_noise" | "random-area-noise" => OpKind::RandomAreaNoise,
            other => {
                return Err(Error::InvalidParams(format!("unknown augmentation `{other}`")))
            }
        })
    }
}

/// Parses a `+`-joined chain such as `rotate+shift+stretch`.
pub fn parse_chain_kinds(spec: &str) -> Result<Vec<OpKind>> {
    spec.split('+').map(str::parse).collect()
}

/// One augmentation with its concrete parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AugmentOp {
    Rotation(RotationAugment),
    Shift(ShiftAugment),
    Stretch(StretchParams),
    Equalize(EqualizeParams),
    UniformNoise(UniformNoiseParams),
    RandomAreaNoise(RandomAreaNoiseParams),
}

impl AugmentOp {
    pub fn kind(&self) -> OpKind {
        match self {
            AugmentOp::Rotation(_) => OpKind::Rotation,
            AugmentOp::Shift(_) => OpKind::Shift,
            AugmentOp::Stretch(_) => OpKind::Stretch,
            AugmentOp::Equalize(_) => OpKind::Equalize,
            AugmentOp::UniformNoise(_) => OpKind::UniformNoise,
            AugmentOp::RandomAreaNoise(_) => OpKind::RandomAreaNoise,
        }
    }

    /// Re-checks parameters that may have come from an untrusted record.
    pub fn validate(&self, spec: PatchSpec) -> Result<()> {
        match *self {
            AugmentOp::Rotation(r) => RotationAugment::new(r.angle()).map(drop),
            AugmentOp::Shift(s) => ShiftAugment::new(s.dx(), s.dy(), spec).map(drop),
            AugmentOp::Stretch(p) => StretchParams::new(p.t_min(), p.t_max()).map(drop),
            AugmentOp::Equalize(p) => EqualizeParams::new(p.q0(), p.qk()).map(drop),
            AugmentOp::UniformNoise(p) => UniformNoiseParams::new(p.a(), p.b()).map(drop),
            AugmentOp::RandomAreaNoise(p) => RandomAreaNoiseParams::new(
                p.window(),
                p.dense_threshold(),
                p.circle_diameter(),
                p.circle_count(),
            )
            .map(drop),
        }
    }
}

/// Draws concrete parameters for one operation kind.
pub fn sample_op<R: Rng + ?Sized>(kind: OpKind, spec: PatchSpec, rng: &mut R) -> AugmentOp {
    match kind {
        OpKind::Rotation => AugmentOp::Rotation(sample_rotation(rng)),
        OpKind::Shift => AugmentOp::Shift(sample_shift(spec, rng)),
        OpKind::Stretch => AugmentOp::Stretch(sample_stretch(rng)),
        OpKind::Equalize => AugmentOp::Equalize(EqualizeParams::default()),
        OpKind::UniformNoise => AugmentOp::UniformNoise(UniformNoiseParams::default()),
        OpKind::RandomAreaNoise => AugmentOp::RandomAreaNoise(RandomAreaNoiseParams::default()),
    }
}

/// Parameters for every kind in `kinds`, drawn from the item's parameter
/// stream.
pub fn sample_chain(kinds: &[OpKind], spec: PatchSpec, item_seed: u64) -> Vec<AugmentOp> {
    let mut rng = seeded_rng(item_seed);
    kinds.iter().map(|&k| sample_op(k, spec, &mut rng)).collect()
}

/// Stream used by noise operations while rendering; independent of the
/// parameter stream.
pub fn noise_rng(item_seed: u64) -> ChaCha8Rng {
    let mut rng = seeded_rng(item_seed);
    rng.set_stream(1);
    rng
}

/// Where the untouched patch sits in its source image: a center and the
/// rotation that aligns it with the finger's reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchBase {
    pub center: Point,
    pub angle: f64,
}

impl PatchBase {
    pub fn from_region(region: Region, angle: f64) -> Self {
        Self {
            center: region.center(),
            angle,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub image: GrayImage,
    /// False when a random-area step found no dense tile and left the patch
    /// as it was.
    pub area_noise_applied: bool,
}

/// Applies `chain` to `source`.
///
/// With a net rotation of zero the patch is a plain crop, moved inside the
/// image if a shift pushed it over the edge. Otherwise it is a rotated patch
/// whose enlarged square is white-padded beyond the image.
pub fn render(
    source: &GrayImage,
    base: PatchBase,
    spec: PatchSpec,
    chain: &[AugmentOp],
    item_seed: u64,
) -> Result<Rendered> {
    for op in chain {
        op.validate(spec)?;
    }
    let mut angle = base.angle;
    let mut center = base.center;
    for op in chain {
        match op {
            AugmentOp::Rotation(r) => angle += r.angle(),
            AugmentOp::Shift(s) => center = center.offset(s.dx(), s.dy()),
            _ => {}
        }
    }
    let rotation = RotationAugment::wrapped(angle);
    let mut image = if rotation.angle() == 0.0 {
        let region = Region::centered_within(
            center,
            spec.width(),
            spec.height(),
            source.width(),
            source.height(),
        )?;
        crop(source, region)?
    } else {
        rotated_patch(source, center, spec, rotation)?
    };

    let mut rng = noise_rng(item_seed);
    let mut area_noise_applied = true;
    for op in chain {
        image = match *op {
            AugmentOp::Rotation(_) | AugmentOp::Shift(_) => continue,
            AugmentOp::Stretch(p) => stretch(&image, p),
            AugmentOp::Equalize(p) => equalize(&image, p),
            AugmentOp::UniformNoise(p) => add_uniform_noise(&image, p, &mut rng),
            AugmentOp::RandomAreaNoise(p) => {
                let outcome = random_area_noise(&image, p, &mut rng);
                area_noise_applied &= outcome.applied;
                outcome.image
            }
        };
    }
    Ok(Rendered {
        image,
        area_noise_applied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn source() -> GrayImage {
        GrayImage::from_fn(220, 200, |x, y| {
            let v = ((x as f64 * 0.7).sin() * (y as f64 * 0.3).cos() * 120.0) + 128.0;
            v as u8
        })
    }

    #[test]
    fn kinds_parse() {
        assert_eq!(
            parse_chain_kinds("rotate+shift+stretch").unwrap(),
            vec![OpKind::Rotation, OpKind::Shift, OpKind::Stretch]
        );
        assert_eq!("area-noise".parse::<OpKind>().unwrap(), OpKind::RandomAreaNoise);
        assert!(parse_chain_kinds("rotate+zoom").is_err());
        for k in OpKind::ALL {
            assert_eq!(k.cli_name().parse::<OpKind>().unwrap(), k);
        }
    }

    #[test]
    fn op_json_is_self_describing() {
        let op = AugmentOp::Stretch(StretchParams::new(10, 245).unwrap());
        let json = serde_json::to_string(&op).unwrap();
        assert_eq!(json, r#"{"op":"stretch","t_min":10,"t_max":245}"#);
        let back: AugmentOp = serde_json::from_str(&json).unwrap();
        assert_eq!(back, op);
        let rot: AugmentOp = serde_json::from_str(r#"{"op":"rotation","angle":30.0}"#).unwrap();
        assert_eq!(rot.kind(), OpKind::Rotation);
    }

    #[test]
    fn invalid_records_are_refused() {
        let spec = PatchSpec::default();
        let bad: AugmentOp = serde_json::from_str(r#"{"op":"stretch","t_min":200,"t_max":10}"#).unwrap();
        assert!(bad.validate(spec).is_err());
        let img = source();
        let base = PatchBase::from_region(Region::new(40, 30, 128, 128), 0.0);
        assert!(render(&img, base, spec, &[bad], 1).is_err());
        let far: AugmentOp = serde_json::from_str(r#"{"op":"shift","dx":40,"dy":0}"#).unwrap();
        assert!(far.validate(spec).is_err());
    }

    #[test]
    fn empty_chain_is_base_crop() {
        let img = source();
        let spec = PatchSpec::default();
        let region = Region::new(40, 30, 128, 128);
        let r = render(&img, PatchBase::from_region(region, 0.0), spec, &[], 5).unwrap();
        assert_eq!(r.image, crop(&img, region).unwrap());
    }

    #[test]
    fn rotations_compose_with_base_angle() {
        let img = source();
        let spec = PatchSpec::default();
        let region = Region::new(40, 30, 128, 128);
        let base = PatchBase::from_region(region, -30.0);
        let chain = [AugmentOp::Rotation(RotationAugment::new(30.0).unwrap())];
        let r = render(&img, base, spec, &chain, 5).unwrap();
        assert_eq!(r.image, crop(&img, region).unwrap());
    }

    #[test]
    fn sampled_chains_replay() {
        let img = source();
        let spec = PatchSpec::default();
        let base = PatchBase::from_region(Region::new(40, 30, 128, 128), 4.0);
        let kinds = [OpKind::Rotation, OpKind::Shift, OpKind::Stretch, OpKind::UniformNoise];
        let chain = sample_chain(&kinds, spec, 99);
        assert_eq!(chain, sample_chain(&kinds, spec, 99));
        let a = render(&img, base, spec, &chain, 99).unwrap();
        let b = render(&img, base, spec, &chain, 99).unwrap();
        assert_eq!(a, b);
        let c = render(&img, base, spec, &chain, 100).unwrap();
        assert_ne!(a.image, c.image);
    }
}
