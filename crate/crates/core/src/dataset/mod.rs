//! Building a training dataset from a source fingerprint database.
//!
//! Output layout:
//!
//! - `<finger>_<sequence>.bmp` patches, with
//!   `sequence = impression_id * per_image_count + augment_index`
//! - `manifest.jsonl`, one [`ManifestEntry`] per line
//! - `rejections.log`, extra impressions that failed alignment
//! - `plan.json`, the [`AugmentPlan`] used
//! - `report.txt`, written by validation

mod build;
mod manifest;
mod plan;
mod scan;
mod split;
mod validate;

pub use build::{build_dataset, BuildConfig, BuildOutput, SourceFailure};
pub use manifest::{
    output_name, parse_output_name, parse_rejections, rejections_to_text, Manifest,
    ManifestEntry, Rejection, Split, MANIFEST_FILE, PLAN_FILE, REJECTIONS_FILE, REPORT_FILE,
};
pub use plan::{preset_plan, AugmentPlan, Mix};
pub use scan::{
    default_pattern, scan_database, select_reference, Impression, ScanResult, SourceDatabase,
    DEFAULT_PATTERN,
};
pub use split::split_train_verify;
pub use validate::{
    validate_dataset, validate_output_dir, FingerComposition, ValidateOptions, ValidationReport,
    Violation, OUTPUT_NAME_PATTERN,
};
