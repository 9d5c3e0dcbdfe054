use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chain::{AugmentOp, OpKind, PatchBase};
use crate::error::{Error, Result};
use crate::image_core::Region;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const REJECTIONS_FILE: &str = "rejections.log";
pub const PLAN_FILE: &str = "plan.json";
pub const REPORT_FILE: &str = "report.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Verify,
}

/// Provenance of one emitted patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// `<finger_id>_<sequence>.bmp`
    pub output_file: String,
    pub finger_id: u32,
    pub impression_id: u32,
    pub source_file: PathBuf,
    /// Un-augmented patch window in the source image.
    pub region: Region,
    /// Rotation aligning the window with the finger's reference; 0 for the
    /// reference itself.
    pub align_angle: f64,
    /// Similarity to the reference; absent for the reference itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub align_score: Option<f64>,
    pub chain: Vec<AugmentOp>,
    pub item_seed: u64,
    pub split: Split,
}

impl ManifestEntry {
    pub fn base(&self) -> PatchBase {
        PatchBase::from_region(self.region, self.align_angle)
    }

    pub fn kinds(&self) -> impl Iterator<Item = OpKind> + '_ {
        self.chain.iter().map(AugmentOp::kind)
    }

    pub fn is_noisy(&self) -> bool {
        self.kinds().any(OpKind::is_noise)
    }

    pub fn has_random_area_noise(&self) -> bool {
        self.kinds().any(|k| k == OpKind::RandomAreaNoise)
    }

    /// The `<sequence>` part of the file name.
    pub fn sequence(&self) -> Option<u64> {
        parse_output_name(&self.output_file).map(|(_, seq)| seq)
    }
}

/// `(finger, sequence)` from a `<finger>_<sequence>.bmp` name.
pub fn parse_output_name(name: &str) -> Option<(u32, u64)> {
    let stem = name.strip_suffix(".bmp")?;
    let (finger, seq) = stem.split_once('_')?;
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(finger) || !digits(seq) {
        return None;
    }
    Some((finger.parse().ok()?, seq.parse().ok()?))
}

pub fn output_name(finger_id: u32, sequence: u64) -> String {
    format!("{finger_id}_{sequence}.bmp")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(mut entries: Vec<ManifestEntry>) -> Self {
        sort_entries(&mut entries);
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, split: Split) -> usize {
        self.entries.iter().filter(|e| e.split == split).count()
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let line = serde_json::to_string(e).expect("entries always serialize");
            let _ = writeln!(out, "{line}");
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let entries = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .map_err(|e| Error::Format(format!("manifest line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<ManifestEntry>>>()?;
        Ok(Self { entries })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(
                serde_json::from_str(&line)
                    .map_err(|e| Error::Format(format!("manifest line {}: {e}", i + 1)))?,
            );
        }
        Ok(Self { entries })
    }
}

/// Numeric `(finger, sequence)` order, falling back to the name for anything
/// that does not parse.
pub(crate) fn sort_entries(entries: &mut [ManifestEntry]) {
    entries.sort_by(|a, b| {
        let ka = parse_output_name(&a.output_file);
        let kb = parse_output_name(&b.output_file);
        ka.cmp(&kb).then_with(|| a.output_file.cmp(&b.output_file))
    });
}

/// An extra impression whose best match stayed at or below the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rejection {
    pub finger_id: u32,
    pub impression_id: u32,
    pub best_score: f64,
}

pub fn rejections_to_text(rejections: &[Rejection]) -> String {
    let mut out = String::from("# finger impression best_score\n");
    for r in rejections {
        let _ = writeln!(out, "{} {} {:.6}", r.finger_id, r.impression_id, r.best_score);
    }
    out
}

pub fn parse_rejections(text: &str) -> Result<Vec<Rejection>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            let bad = || Error::Format(format!("rejection record `{line}`"));
            let mut fields = line.split_whitespace();
            let mut next = || fields.next().ok_or_else(bad);
            Ok(Rejection {
                finger_id: next()?.parse().map_err(|_| bad())?,
                impression_id: next()?.parse().map_err(|_| bad())?,
                best_score: next()?.parse().map_err(|_| bad())?,
            })
        })
        .collect()
}
