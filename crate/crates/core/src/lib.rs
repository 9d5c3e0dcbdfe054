//! Turns a conventional full-area fingerprint database into a large dataset
//! of small-area fingerprint patches.
//!
//! The pipeline, stage by stage:
//!
//! - [`fingerprint_area`]: normalize an impression, binarize it, locate the
//!   fingerprint and cut the patch from its center.
//! - [`geometric`], [`photometric`], [`noise`]: rotation and shift,
//!   histogram stretching and equalization, uniform and random-area noise.
//! - [`align`]: find the reference patch inside the other impressions of the
//!   same finger.
//! - [`chain`]: replayable records of the augmentations applied to a patch.
//! - [`dataset`]: scan a source database, run the plan for every accepted
//!   impression, write the patches and manifest, split and validate.
//!
//! ```
//! use fpaug::fingerprint_area::{extract_area, AreaParams, PatchSpec};
//! use fpaug::image_core::crop;
//!
//! let img = fpaug::synth::impression(1, 1, 224, 240, 7);
//! let area = extract_area(&img, PatchSpec::default(), &AreaParams::default())?;
//! let patch = crop(&img, area.patch)?;
//! assert_eq!((patch.width(), patch.height()), (128, 128));
//! # Ok::<(), fpaug::Error>(())
//! ```

pub mod align;
pub mod chain;
pub mod dataset;
pub mod error;
pub mod fingerprint_area;
pub mod geometric;
pub mod image_core;
pub mod noise;
pub mod photometric;
pub mod synth;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed used when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 2002;

/// The random stream used everywhere in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-item seed for `(seed, finger, impression, index)`; does not
/// depend on scheduling or platform.
pub fn item_seed(seed: u64, finger_id: u32, impression_id: u32, index: u32) -> u64 {
    [finger_id as u64, impression_id as u64, index as u64]
        .into_iter()
        .fold(splitmix64(seed), |h, v| splitmix64(h ^ v))
}

// Chapters of the guide in book/; compiled as doctests so the snippets stay
// in sync with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fingerprint_area.md")]
    mod fingerprint_area {}
    #[doc = include_str!("../../../book/src/geometric.md")]
    mod geometric {}
    #[doc = include_str!("../../../book/src/photometric.md")]
    mod photometric {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/alignment.md")]
    mod alignment {}
    #[doc = include_str!("../../../book/src/dataset.md")]
    mod dataset {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
