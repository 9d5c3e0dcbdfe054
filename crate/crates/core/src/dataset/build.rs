use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use super::manifest::{
    output_name, rejections_to_text, Manifest, ManifestEntry, Rejection, Split, MANIFEST_FILE,
    PLAN_FILE, REJECTIONS_FILE,
};
use super::plan::AugmentPlan;
use super::scan::{select_reference, Impression, SourceDatabase};
use crate::align::{best_matching_region, AlignOutcome, AlignSearchParams, ReferenceTemplate};
use crate::chain::{render, sample_chain, PatchBase};
use crate::error::{Error, Result};
use crate::fingerprint_area::{extract_area, AreaParams, PatchSpec};
use crate::image_core::{load_image, save_image, Region};
use crate::{item_seed, DEFAULT_SEED};

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub plan: AugmentPlan,
    pub spec: PatchSpec,
    pub search: AlignSearchParams,
    pub seed: u64,
    /// Worker threads; output never depends on it.
    pub jobs: usize,
}

impl BuildConfig {
    pub fn new(plan: AugmentPlan) -> Self {
        Self {
            plan,
            spec: PatchSpec::default(),
            search: AlignSearchParams::default(),
            seed: DEFAULT_SEED,
            jobs: 1,
        }
    }
}

/// A source image that could not be processed and was left out.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceFailure {
    pub finger_id: u32,
    pub impression_id: u32,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    /// All entries, labelled [`Split::Train`] until split.
    pub manifest: Manifest,
    pub rejections: Vec<Rejection>,
    pub failures: Vec<SourceFailure>,
    pub fingers: usize,
    /// Source images that produced their full set of augments.
    pub accepted_sources: usize,
    pub accepted_extras: usize,
}

/// An accepted source image and where its patch sits.
#[derive(Debug, Clone)]
struct SourceJob {
    finger_id: u32,
    impression_id: u32,
    path: PathBuf,
    region: Region,
    align_angle: f64,
    align_score: Option<f64>,
}

#[derive(Default)]
struct FingerOutcome {
    jobs: Vec<SourceJob>,
    rejections: Vec<Rejection>,
    failures: Vec<SourceFailure>,
}

/// Runs the whole pipeline over `db`, writing patches, `manifest.jsonl`,
/// `rejections.log` and `plan.json` into `outdir`, which must be empty or
/// absent.
///
/// Per finger: the lowest impression is the reference and its patch is cut
/// from the center of the fingerprint area; every other impression is
/// aligned against it and skipped when the match is rejected. Each accepted
/// image then receives the plan's augments. A failing source image is
/// logged and left out; the batch carries on.
pub fn build_dataset(db: &SourceDatabase, cfg: &BuildConfig, outdir: &Path) -> Result<BuildOutput> {
    cfg.plan.validate()?;
    cfg.search.validate()?;
    prepare_outdir(outdir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParams(format!("worker pool: {e}")))?;

    let fingers: Vec<(u32, &Vec<Impression>)> = db.fingers.iter().map(|(&f, g)| (f, g)).collect();
    let outcomes: Vec<FingerOutcome> = pool.install(|| {
        fingers
            .par_iter()
            .map(|&(finger, group)| locate_sources(finger, group, cfg))
            .collect()
    });

    let mut jobs = Vec::new();
    let mut rejections = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        jobs.extend(o.jobs);
        rejections.extend(o.rejections);
        failures.extend(o.failures);
    }

    let recipes = cfg.plan.recipes();
    let emitted: Vec<std::result::Result<Vec<ManifestEntry>, SourceFailure>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| emit_source(job, &recipes, cfg, outdir))
            .collect()
    });

    let mut entries = Vec::new();
    let mut accepted_sources = 0;
    let mut accepted_extras = 0;
    for (job, result) in jobs.iter().zip(emitted) {
        match result {
            Ok(e) => {
                entries.extend(e);
                accepted_sources += 1;
                if job.align_score.is_some() {
                    accepted_extras += 1;
                }
            }
            Err(f) => failures.push(f),
        }
    }
    failures.sort_by_key(|f| (f.finger_id, f.impression_id));

    let manifest = Manifest::new(entries);
    manifest.write(&outdir.join(MANIFEST_FILE))?;
    write_file(&outdir.join(REJECTIONS_FILE), &rejections_to_text(&rejections))?;
    write_file(&outdir.join(PLAN_FILE), &cfg.plan.to_json())?;

    Ok(BuildOutput {
        manifest,
        rejections,
        failures,
        fingers: db.fingers.len(),
        accepted_sources,
        accepted_extras,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn prepare_outdir(outdir: &Path) -> Result<()> {
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let mut entries = std::fs::read_dir(outdir).map_err(|e| Error::io(outdir, e))?;
    if entries.next().is_some() {
        return Err(Error::InvalidParams(format!(
            "output directory {} is not empty",
            outdir.display()
        )));
    }
    Ok(())
}

fn locate_sources(finger: u32, group: &[Impression], cfg: &BuildConfig) -> FingerOutcome {
    let mut out = FingerOutcome::default();
    let Some(reference) = select_reference(group) else {
        return out;
    };
    let fail = |impression_id: u32, e: Error| {
        warn!("finger {finger} impression {impression_id}: {e}");
        SourceFailure {
            finger_id: finger,
            impression_id,
            message: e.to_string(),
        }
    };

    let template = match reference_patch(finger, reference, cfg.spec) {
        Ok((region, template)) => {
            out.jobs.push(SourceJob {
                finger_id: finger,
                impression_id: reference.id,
                path: reference.path.clone(),
                region,
                align_angle: 0.0,
                align_score: None,
            });
            template
        }
        Err(e) => {
            out.failures.push(fail(reference.id, e));
            return out;
        }
    };

    for imp in group.iter().filter(|imp| imp.id != reference.id) {
        let outcome = load_image(&imp.path)
            .and_then(|img| best_matching_region(&img, &template, cfg.spec, &cfg.search));
        match outcome {
            Ok(AlignOutcome::Accepted(r)) => out.jobs.push(SourceJob {
                finger_id: finger,
                impression_id: imp.id,
                path: imp.path.clone(),
                region: r.region,
                align_angle: r.angle,
                align_score: Some(r.score),
            }),
            Ok(AlignOutcome::Rejected(r)) => {
                info!(
                    "finger {finger} impression {}: rejected, best score {:.4}",
                    imp.id, r.score
                );
                out.rejections.push(Rejection {
                    finger_id: finger,
                    impression_id: imp.id,
                    best_score: r.score,
                });
            }
            Err(e) => out.failures.push(fail(imp.id, e)),
        }
    }
    info!("finger {finger}: {} of {} impressions usable", out.jobs.len(), group.len());
    out
}

fn reference_patch(
    finger: u32,
    reference: &Impression,
    spec: PatchSpec,
) -> Result<(Region, ReferenceTemplate)> {
    let img = load_image(&reference.path)?;
    let area = extract_area(&img, spec, &AreaParams::default())?;
    if area.oversized {
        warn!(
            "finger {finger}: fingerprint area {:?} is smaller than the patch; using the image-clamped window",
            area.area
        );
    }
    let template = ReferenceTemplate::from_normalized(&area.normalized, area.patch, finger)?;
    Ok((area.patch, template))
}

fn emit_source(
    job: &SourceJob,
    recipes: &[Vec<crate::chain::OpKind>],
    cfg: &BuildConfig,
    outdir: &Path,
) -> std::result::Result<Vec<ManifestEntry>, SourceFailure> {
    let mut written = Vec::with_capacity(recipes.len());
    let result = (|| -> Result<Vec<ManifestEntry>> {
        let source = load_image(&job.path)?;
        let base = PatchBase::from_region(job.region, job.align_angle);
        let per_image = recipes.len() as u64;
        let mut entries = Vec::with_capacity(recipes.len());
        for (index, kinds) in recipes.iter().enumerate() {
            let seed = item_seed(cfg.seed, job.finger_id, job.impression_id, index as u32);
            let chain = sample_chain(kinds, cfg.spec, seed);
            let rendered = render(&source, base, cfg.spec, &chain, seed)?;
            let name = output_name(
                job.finger_id,
                job.impression_id as u64 * per_image + index as u64,
            );
            if !rendered.area_noise_applied {
                log::warn!("{name}: no dense tile for random-area noise, patch left without it");
            }
            let path = outdir.join(&name);
            save_image(&rendered.image, &path)?;
            written.push(path);
            entries.push(ManifestEntry {
                output_file: name,
                finger_id: job.finger_id,
                impression_id: job.impression_id,
                source_file: job.path.clone(),
                region: job.region,
                align_angle: job.align_angle,
                align_score: job.align_score,
                chain,
                item_seed: seed,
                split: Split::Train,
            });
        }
        Ok(entries)
    })();
    result.map_err(|e| {
        for path in &written {
            let _ = std::fs::remove_file(path);
        }
        warn!("finger {} impression {}: {e}", job.finger_id, job.impression_id);
        SourceFailure {
            finger_id: job.finger_id,
            impression_id: job.impression_id,
            message: e.to_string(),
        }
    })
}
