use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use regex::Regex;

use super::manifest::{
    parse_output_name, parse_rejections, Manifest, Rejection, Split, MANIFEST_FILE, PLAN_FILE,
    REJECTIONS_FILE,
};
use super::plan::AugmentPlan;
use crate::chain::{render, OpKind};
use crate::error::{Error, Result};
use crate::fingerprint_area::PatchSpec;
use crate::image_core::{encode_bmp, load_image, GrayImage};
use crate::{seeded_rng, DEFAULT_SEED};

/// Output files must match this.
pub const OUTPUT_NAME_PATTERN: &str = r"^\d+_\d+\.bmp$";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidateOptions {
    /// Entries re-rendered from their chains and compared byte for byte.
    pub replay_count: usize,
    pub seed: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            replay_count: 20,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    BadFilename(String),
    FingerMismatch { file: String, finger_id: u32 },
    DuplicateEntry(String),
    MissingFile(String),
    UnlistedFile(String),
    Unreadable { file: String, reason: String },
    WrongSize { file: String, width: usize, height: usize, expected: (usize, usize) },
    IncompleteSource { finger_id: u32, impression_id: u32, count: usize, expected: usize },
    RecipeMismatch { file: String },
    Composition { finger_id: u32, noisy: usize, random_area: usize, total: usize },
    RejectedEmitted { finger_id: u32, impression_id: u32 },
    VerifyOnlyFinger(u32),
    ReplayMismatch(String),
    ReplayFailed { file: String, reason: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BadFilename(n) => write!(f, "bad file name: {n}"),
            Violation::FingerMismatch { file, finger_id } => {
                write!(f, "{file}: name does not start with finger {finger_id}")
            }
            Violation::DuplicateEntry(n) => write!(f, "duplicate manifest entry: {n}"),
            Violation::MissingFile(n) => write!(f, "missing file: {n}"),
            Violation::UnlistedFile(n) => write!(f, "file not in manifest: {n}"),
            Violation::Unreadable { file, reason } => write!(f, "{file}: unreadable ({reason})"),
            Violation::WrongSize {
                file,
                width,
                height,
                expected,
            } => write!(
                f,
                "{file}: {width}x{height}, expected {}x{}",
                expected.0, expected.1
            ),
            Violation::IncompleteSource {
                finger_id,
                impression_id,
                count,
                expected,
            } => write!(
                f,
                "finger {finger_id} impression {impression_id}: {count} outputs, expected {expected}"
            ),
            Violation::RecipeMismatch { file } => {
                write!(f, "{file}: chain does not match the plan recipe for its index")
            }
            Violation::Composition {
                finger_id,
                noisy,
                random_area,
                total,
            } => write!(
                f,
                "finger {finger_id}: {noisy}/{total} noisy, {random_area} random-area, off plan"
            ),
            Violation::RejectedEmitted {
                finger_id,
                impression_id,
            } => write!(
                f,
                "finger {finger_id} impression {impression_id} was rejected but has outputs"
            ),
            Violation::VerifyOnlyFinger(id) => write!(f, "finger {id} has no training data"),
            Violation::ReplayMismatch(n) => write!(f, "{n}: replay differs from file"),
            Violation::ReplayFailed { file, reason } => write!(f, "{file}: replay failed ({reason})"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FingerComposition {
    pub total: usize,
    pub noisy: usize,
    pub random_area: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub entries: usize,
    pub train: usize,
    pub verify: usize,
    pub fingers: BTreeMap<u32, FingerComposition>,
    /// `(noisy, per_image_count)` and `(random_area, noisy)` from the plan.
    pub plan_composition: Option<((usize, usize), (usize, usize))>,
    pub replayed: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// `(noisy outputs, all outputs)` over the whole dataset.
    pub fn noisy_fraction(&self) -> (usize, usize) {
        self.fingers
            .values()
            .fold((0, 0), |(n, t), c| (n + c.noisy, t + c.total))
    }

    /// `(random-area outputs, noisy outputs)` over the whole dataset.
    pub fn random_area_share(&self) -> (usize, usize) {
        self.fingers
            .values()
            .fold((0, 0), |(a, n), c| (a + c.random_area, n + c.noisy))
    }
}

fn ratio(num: usize, den: usize) -> String {
    if den == 0 {
        format!("{num}/{den}")
    } else {
        format!("{num}/{den} ({:.1}%)", 100.0 * num as f64 / den as f64)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "entries: {}", self.entries)?;
        writeln!(f, "fingers: {}", self.fingers.len())?;
        writeln!(f, "split: train {} / verify {}", self.train, self.verify)?;
        let (n, t) = self.noisy_fraction();
        let (a, na) = self.random_area_share();
        writeln!(f, "noisy fraction: {}", ratio(n, t))?;
        writeln!(f, "random-area share: {}", ratio(a, na))?;
        if let Some(((pn, pt), (pa, pna))) = self.plan_composition {
            writeln!(f, "plan per image: noisy {pn}/{pt}, random-area {pa}/{pna}")?;
        }
        writeln!(f, "replayed: {}", self.replayed)?;
        writeln!(f, "violations: {}", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// Checks an output directory against its manifest: names, sizes, the
/// manifest/file correspondence, the plan's composition for every finger,
/// rejected impressions, the split, and byte-exact replay of a random sample
/// of entries.
pub fn validate_dataset(
    outdir: &Path,
    manifest: &Manifest,
    plan: Option<&AugmentPlan>,
    rejections: &[Rejection],
    opts: ValidateOptions,
) -> ValidationReport {
    let name_re = Regex::new(OUTPUT_NAME_PATTERN).expect("static pattern");
    let mut violations = Vec::new();
    let mut listed = HashSet::new();
    let mut fingers: BTreeMap<u32, FingerComposition> = BTreeMap::new();
    let mut per_source: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    let mut has_train = BTreeSet::new();
    let recipes = plan.map(AugmentPlan::recipes);

    for e in &manifest.entries {
        let name = &e.output_file;
        if !listed.insert(name.clone()) {
            violations.push(Violation::DuplicateEntry(name.clone()));
            continue;
        }
        if !name_re.is_match(name) {
            violations.push(Violation::BadFilename(name.clone()));
        } else if parse_output_name(name).map(|(f, _)| f) != Some(e.finger_id) {
            violations.push(Violation::FingerMismatch {
                file: name.clone(),
                finger_id: e.finger_id,
            });
        }

        let c = fingers.entry(e.finger_id).or_default();
        c.total += 1;
        c.noisy += e.is_noisy() as usize;
        c.random_area += e.has_random_area_noise() as usize;
        *per_source.entry((e.finger_id, e.impression_id)).or_default() += 1;
        if e.split == Split::Train {
            has_train.insert(e.finger_id);
        }

        if let (Some(recipes), Some(seq)) = (&recipes, e.sequence()) {
            let n = recipes.len() as u64;
            let index = seq.checked_sub(e.impression_id as u64 * n);
            let kinds: Vec<OpKind> = e.kinds().collect();
            match index {
                Some(i) if i < n && recipes[i as usize] == kinds => {}
                _ => violations.push(Violation::RecipeMismatch { file: name.clone() }),
            }
        }

        let path = outdir.join(name);
        if !path.is_file() {
            violations.push(Violation::MissingFile(name.clone()));
            continue;
        }
        match load_image(&path) {
            Ok(img) if (img.width(), img.height()) != (e.region.w, e.region.h) => {
                violations.push(Violation::WrongSize {
                    file: name.clone(),
                    width: img.width(),
                    height: img.height(),
                    expected: (e.region.w, e.region.h),
                })
            }
            Ok(_) => {}
            Err(err) => violations.push(Violation::Unreadable {
                file: name.clone(),
                reason: err.to_string(),
            }),
        }
    }

    if let Ok(dir) = std::fs::read_dir(outdir) {
        let mut unlisted: Vec<String> = dir
            .filter_map(|d| d.ok())
            .filter_map(|d| d.file_name().into_string().ok())
            .filter(|n| n.to_ascii_lowercase().ends_with(".bmp") && !listed.contains(n))
            .collect();
        unlisted.sort();
        violations.extend(unlisted.into_iter().map(Violation::UnlistedFile));
    }

    if let Some(plan) = plan {
        let per_image = plan.per_image_count;
        for (&(finger_id, impression_id), &count) in &per_source {
            if count != per_image {
                violations.push(Violation::IncompleteSource {
                    finger_id,
                    impression_id,
                    count,
                    expected: per_image,
                });
            }
        }
        let (noisy, area) = (plan.noisy_count(), plan.random_area_count());
        for (&finger_id, c) in &fingers {
            // exact rational comparison against the per-image composition
            let noisy_ok = c.noisy * per_image == noisy * c.total;
            let area_ok = c.random_area * noisy == area * c.noisy;
            if !(noisy_ok && area_ok) {
                violations.push(Violation::Composition {
                    finger_id,
                    noisy: c.noisy,
                    random_area: c.random_area,
                    total: c.total,
                });
            }
        }
    }

    for r in rejections {
        if per_source.contains_key(&(r.finger_id, r.impression_id)) {
            violations.push(Violation::RejectedEmitted {
                finger_id: r.finger_id,
                impression_id: r.impression_id,
            });
        }
    }
    for &finger in fingers.keys() {
        if !has_train.contains(&finger) {
            violations.push(Violation::VerifyOnlyFinger(finger));
        }
    }

    let replayed = replay_sample(outdir, manifest, opts, &mut violations);

    ValidationReport {
        entries: manifest.len(),
        train: manifest.count(Split::Train),
        verify: manifest.count(Split::Verify),
        fingers,
        plan_composition: plan.map(|p| {
            (
                (p.noisy_count(), p.per_image_count),
                (p.random_area_count(), p.noisy_count()),
            )
        }),
        replayed,
        violations,
    }
}

fn replay_sample(
    outdir: &Path,
    manifest: &Manifest,
    opts: ValidateOptions,
    violations: &mut Vec<Violation>,
) -> usize {
    let k = opts.replay_count.min(manifest.len());
    let mut picks = sample(&mut seeded_rng(opts.seed), manifest.len(), k).into_vec();
    picks.sort_unstable();
    let mut sources: HashMap<PathBuf, GrayImage> = HashMap::new();
    for i in picks {
        let e = &manifest.entries[i];
        let fail = |reason: String| Violation::ReplayFailed {
            file: e.output_file.clone(),
            reason,
        };
        let source = match sources.get(&e.source_file) {
            Some(s) => s,
            None => match load_image(&e.source_file) {
                Ok(img) => sources.entry(e.source_file.clone()).or_insert(img),
                Err(err) => {
                    violations.push(fail(err.to_string()));
                    continue;
                }
            },
        };
        let spec = PatchSpec::unchecked(e.region.w, e.region.h);
        let replayed = match render(source, e.base(), spec, &e.chain, e.item_seed) {
            Ok(r) => encode_bmp(&r.image),
            Err(err) => {
                violations.push(fail(err.to_string()));
                continue;
            }
        };
        match std::fs::read(outdir.join(&e.output_file)) {
            Ok(bytes) if bytes == replayed => {}
            Ok(_) => violations.push(Violation::ReplayMismatch(e.output_file.clone())),
            Err(err) => violations.push(fail(err.to_string())),
        }
    }
    k
}

/// Loads `manifest.jsonl` (required) plus `plan.json` and `rejections.log`
/// (when present) from `outdir` and validates it.
pub fn validate_output_dir(outdir: &Path, opts: ValidateOptions) -> Result<ValidationReport> {
    let manifest = Manifest::read(&outdir.join(MANIFEST_FILE))?;
    let plan_path = outdir.join(PLAN_FILE);
    let plan = if plan_path.exists() {
        Some(AugmentPlan::load(&plan_path)?)
    } else {
        None
    };
    let rejections_path = outdir.join(REJECTIONS_FILE);
    let rejections = if rejections_path.exists() {
        let text = std::fs::read_to_string(&rejections_path)
            .map_err(|e| Error::io(&rejections_path, e))?;
        parse_rejections(&text)?
    } else {
        Vec::new()
    };
    Ok(validate_dataset(outdir, &manifest, plan.as_ref(), &rejections, opts))
}
