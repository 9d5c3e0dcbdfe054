use std::path::PathBuf;

use crate::image_core::Region;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported raster format: {0}")]
    UnsupportedFormat(String),

    #[error("image is not grayscale: {0}")]
    NotGrayscale(String),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("region {region:?} does not fit a {width}x{height} image")]
    RegionOutOfBounds {
        region: Region,
        width: usize,
        height: usize,
    },

    #[error("no fingerprint area found")]
    NoFingerprintArea,

    #[error("patch {patch_w}x{patch_h} is larger than the fingerprint area {area:?}")]
    PatchLargerThanArea {
        area: Region,
        patch_w: usize,
        patch_h: usize,
    },

    #[error("center ({x}, {y}) lies outside the {width}x{height} image")]
    CenterOutOfBounds {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },

    #[error("window {window} exceeds image size {width}x{height}")]
    WindowTooLarge {
        window: usize,
        width: usize,
        height: usize,
    },

    #[error("correlation undefined for a constant image")]
    ZeroVariance,

    #[error("image {width}x{height} is smaller than the {patch_w}x{patch_h} patch")]
    ImageTooSmall {
        width: usize,
        height: usize,
        patch_w: usize,
        patch_h: usize,
    },

    #[error("no fingerprint images found in {0}")]
    EmptyDatabase(PathBuf),

    #[error("unknown preset `{0}` (expected dataset1, dataset2 or dataset3)")]
    UnknownPreset(String),

    #[error("verify count {requested} must be below the {available} eligible entries")]
    VerifyCountTooLarge { requested: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("malformed record: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
