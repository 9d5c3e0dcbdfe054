use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use log::{info, warn, LevelFilter};

use fpaug::align::AlignSearchParams;
use fpaug::chain::{parse_chain_kinds, render, sample_chain, AugmentOp, OpKind, PatchBase};
use fpaug::dataset::{
    build_dataset, default_pattern, preset_plan, scan_database, split_train_verify,
    validate_output_dir, AugmentPlan, BuildConfig, Split, ValidateOptions, MANIFEST_FILE,
    REPORT_FILE,
};
use fpaug::fingerprint_area::{extract_area, AreaParams, PatchSpec};
use fpaug::geometric::RotationAugment;
use fpaug::image_core::{load_image, save_image, GrayImage, Point, Region};
use fpaug::{item_seed, Error, DEFAULT_SEED};

const EXIT_IO: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INVALID: u8 = 3;

/// Small-area fingerprint patch extraction, augmentation and dataset building.
#[derive(Parser)]
#[command(name = "fpaug", version)]
struct Cli {
    /// More log output on standard error (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut the centered patch from an image's fingerprint area.
    Extract(ExtractArgs),
    /// Apply an operation or a `+`-joined chain of operations to one image.
    Augment(AugmentArgs),
    /// Build a dataset from a directory of `<finger>_<impression>` images.
    Build(BuildArgs),
    /// Check an output directory against its manifest.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ExtractArgs {
    image: PathBuf,
    /// Patch side in pixels.
    #[arg(long, default_value_t = 128)]
    size: usize,
    /// Output BMP path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AugmentArgs {
    image: PathBuf,
    /// rotate, shift, stretch, equalize, uniform-noise, area-noise, or a
    /// chain such as `rotate+stretch`.
    #[arg(long)]
    ops: String,
    /// Fixed rotation angles in degrees, one output each.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    angles: Vec<f64>,
    /// Number of outputs with sampled parameters (ignored with --angles).
    #[arg(long, default_value_t = 1)]
    count: u32,
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    /// Source database directory.
    #[arg(long)]
    input: PathBuf,
    /// Output directory; must be empty or absent.
    #[arg(long)]
    output: PathBuf,
    /// dataset1, dataset2 or dataset3.
    #[arg(long, default_value = "dataset1", conflicts_with = "plan")]
    preset: String,
    /// Custom plan file (JSON).
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Entries labelled for verification; the rest are training data.
    #[arg(long, default_value_t = 0)]
    verify_count: usize,
    /// Minimum correlation for accepting an aligned impression.
    #[arg(long)]
    threshold: Option<f64>,
    /// Worker threads (default: logical CPUs).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    outdir: PathBuf,
    /// Entries re-rendered and compared byte for byte.
    #[arg(long, default_value_t = 20)]
    replay: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. }
            | Error::UnsupportedFormat(_)
            | Error::NotGrayscale(_)
            | Error::InvalidImage(_)
            | Error::Format(_)
            | Error::EmptyDatabase(_) => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Extract(a) => cmd_extract(&a),
        Command::Augment(a) => cmd_augment(&a),
        Command::Build(a) => cmd_build(&a),
        Command::Validate(a) => cmd_validate(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn square_spec(size: usize) -> Result<PatchSpec, Failure> {
    Ok(PatchSpec::square(size)?)
}

fn print_region(r: Region) {
    println!("region x={} y={} w={} h={}", r.x, r.y, r.w, r.h);
}

fn cmd_extract(a: &ExtractArgs) -> Result<u8, Failure> {
    let spec = square_spec(a.size)?;
    let img = load_image(&a.image)?;
    let area = extract_area(&img, spec, &AreaParams::default())?;
    if area.oversized {
        warn!("fingerprint area {:?} is smaller than the patch", area.area);
    }
    let patch = fpaug::image_core::crop(&img, area.patch)?;
    save_image(&patch, &a.out)?;
    print_region(area.patch);
    Ok(0)
}

/// Patch placement for a single image: the fingerprint area's center, or the
/// image center when no fingerprint is found.
fn locate_patch(img: &GrayImage, spec: PatchSpec) -> Result<Region, Failure> {
    match extract_area(img, spec, &AreaParams::default()) {
        Ok(area) => Ok(area.patch),
        Err(Error::NoFingerprintArea) => {
            warn!("no fingerprint area found; using the image center");
            let center = Point::new((img.width() / 2) as i64, (img.height() / 2) as i64);
            Ok(Region::centered_within(
                center,
                spec.width(),
                spec.height(),
                img.width(),
                img.height(),
            )?)
        }
        Err(e) => Err(e.into()),
    }
}

fn with_angle(chain: &mut [AugmentOp], angle: f64) {
    for op in chain {
        if let AugmentOp::Rotation(r) = op {
            *r = RotationAugment::wrapped(angle);
        }
    }
}

fn cmd_augment(a: &AugmentArgs) -> Result<u8, Failure> {
    let kinds = parse_chain_kinds(&a.ops).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: e.to_string(),
    })?;
    if !a.angles.is_empty() && !kinds.contains(&OpKind::Rotation) {
        return Err(Failure {
            code: EXIT_USAGE,
            message: "--angles needs a rotate operation".into(),
        });
    }
    let spec = square_spec(a.size)?;
    let img = load_image(&a.image)?;
    let base = PatchBase::from_region(locate_patch(&img, spec)?, 0.0);
    std::fs::create_dir_all(&a.out).map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("cannot create {}: {e}", a.out.display()),
    })?;

    let stem = a
        .image
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("patch");
    let count = if a.angles.is_empty() {
        a.count as usize
    } else {
        a.angles.len()
    };
    let mut written = 0;
    for i in 0..count {
        let seed = item_seed(a.seed, 0, 0, i as u32);
        let mut chain = sample_chain(&kinds, spec, seed);
        if let Some(&angle) = a.angles.get(i) {
            with_angle(&mut chain, angle);
        }
        let rendered = render(&img, base, spec, &chain, seed)?;
        if !rendered.area_noise_applied {
            warn!("output {i}: no dense tile for random-area noise; skipped");
            continue;
        }
        let path = a.out.join(format!("{stem}_{i}.bmp"));
        save_image(&rendered.image, &path)?;
        info!("wrote {}", path.display());
        written += 1;
    }
    println!("wrote {written} of {count} patches to {}", a.out.display());
    Ok(0)
}

fn load_plan(a: &BuildArgs) -> Result<AugmentPlan, Failure> {
    match &a.plan {
        Some(path) => Ok(AugmentPlan::load(path)?),
        None => Ok(preset_plan(&a.preset)?),
    }
}

fn cmd_build(a: &BuildArgs) -> Result<u8, Failure> {
    let plan = load_plan(a)?;
    let mut cfg = BuildConfig::new(plan);
    cfg.spec = square_spec(a.size)?;
    cfg.seed = a.seed;
    cfg.jobs = a
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cfg.search = AlignSearchParams {
        accept_threshold: a.threshold.unwrap_or(cfg.search.accept_threshold),
        ..cfg.search
    };

    let scan = scan_database(&a.input, &default_pattern())?;
    if !scan.skipped.is_empty() {
        warn!("{} files skipped while scanning", scan.skipped.len());
    }
    let out = build_dataset(&scan.database, &cfg, &a.output)?;
    let manifest = if a.verify_count > 0 {
        let split = split_train_verify(&out.manifest, a.verify_count, a.seed)?;
        split.write(&a.output.join(MANIFEST_FILE))?;
        split
    } else {
        out.manifest
    };

    let plan = &cfg.plan;
    println!("fingers: {}", out.fingers);
    println!("source images: {}", scan.database.image_count());
    println!(
        "extras: {} accepted, {} rejected",
        out.accepted_extras,
        out.rejections.len()
    );
    println!("failed sources: {}", out.failures.len());
    println!("per image: {}", plan.per_image_count);
    println!(
        "noisy: {}/{} per image, area-noise: {}/{}",
        plan.noisy_count(),
        plan.per_image_count,
        plan.random_area_count(),
        plan.noisy_count()
    );
    println!("outputs: {}", manifest.len());
    println!(
        "split: train {} / verify {}",
        manifest.count(Split::Train),
        manifest.count(Split::Verify)
    );
    Ok(0)
}

fn cmd_validate(a: &ValidateArgs) -> Result<u8, Failure> {
    let manifest = a.outdir.join(MANIFEST_FILE);
    if !manifest.is_file() {
        return Err(Failure {
            code: EXIT_IO,
            message: format!("no manifest at {}", manifest.display()),
        });
    }
    let opts = ValidateOptions {
        replay_count: a.replay,
        seed: a.seed,
    };
    let report = validate_output_dir(&a.outdir, opts)?;
    let text = report.to_string();
    print!("{text}");
    write_report(&a.outdir, &text)?;
    Ok(if report.is_clean() { 0 } else { EXIT_INVALID })
}

fn write_report(outdir: &Path, text: &str) -> Result<(), Failure> {
    let path = outdir.join(REPORT_FILE);
    std::fs::write(&path, text).map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("cannot write {}: {e}", path.display()),
    })
}
