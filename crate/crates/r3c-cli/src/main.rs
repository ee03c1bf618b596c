//! Batch front end: synthetic suite generation, standalone enhancement,
//! recursive refinement, blend-weight sweeps, and mask scoring.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors (the
//! offending file or case is named on stderr). Every run logs its fully
//! resolved configuration to stderr as one `config:` JSON line.

mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use r3c::classifiers::{Classifier, FftClassifier, GaborClassifier, InputPolicy, StubClassifier};
use r3c::engine::{run_r3c, BlendOverlay};
use r3c::eval::SweepOptions;
use r3c::eval::{alpha_sweep, count_components, overlap_metrics, skeleton_recall, Connectivity};
use r3c::image::GrayImage;
use r3c::io::{load_image, load_mask, save_image, save_mask, ImageFormat};
use r3c::synth::{materialize_case, SuiteManifest};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "r3c",
    version,
    about = "Recursive class connectivity classification for binary segmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Materialize degraded images and ground-truth masks from a manifest.
    Synth(SynthArgs),
    /// Run a classifier once (no recursion).
    Enhance(EnhanceArgs),
    /// Run the recursive refinement loop on one image.
    R3c(R3cArgs),
    /// Grid-search the blend weight over a generated suite.
    Sweep(SweepArgs),
    /// Score a predicted mask against a ground-truth mask.
    Eval(EvalArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// JSON suite manifest listing {id, synth, degrade} cases.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for `<id>.<ext>` and `<id>.gt.<ext>`.
    #[arg(long)]
    out: PathBuf,
    /// Offset added to every case seed (R3C_SEED supplies the default).
    #[arg(long)]
    seed: Option<u64>,
    /// Output file format.
    #[arg(long, value_enum, default_value_t = FormatArg::Pgm)]
    format: FormatArg,
}

#[derive(Args)]
struct EnhanceArgs {
    #[arg(long, value_enum)]
    classifier: ClassifierKind,
    /// Input image (.pgm or .png).
    #[arg(long = "in")]
    input: PathBuf,
    /// Output mask path.
    #[arg(long)]
    out: PathBuf,
    /// TOML config supplying classifier parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Skip the classifier's preferred/fixed input resize.
    #[arg(long)]
    native_shape: bool,
    /// Invert mask rendering on save.
    #[arg(long)]
    invert: bool,
    /// Mask file for the fixed stub classifier.
    #[arg(long)]
    stub_mask: Option<PathBuf>,
}

#[derive(Args)]
struct R3cArgs {
    #[arg(long, value_enum)]
    classifier: ClassifierKind,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Write the per-iteration trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Blend weight in [0, 1]; defaults to the config value.
    #[arg(long)]
    alpha: Option<f64>,
    /// Stopping threshold on the difference rate.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Per-iteration decay factor on alpha.
    #[arg(long)]
    gamma: Option<f64>,
    /// Consecutive quiet iterations required to stop.
    #[arg(long)]
    required: Option<usize>,
    /// Safety cap on classifier calls.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Overlay blended into the composite.
    #[arg(long, value_enum)]
    overlay: Option<OverlayArg>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    native_shape: bool,
    #[arg(long)]
    invert: bool,
    #[arg(long)]
    stub_mask: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum)]
    classifier: ClassifierKind,
    /// Comma-separated alpha grid, e.g. 0.05,0.25,0.5,0.75,1.0.
    #[arg(long)]
    grid: Option<String>,
    /// Report CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Summary JSON path (per-alpha means and the chosen alpha).
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Worker threads; results are identical for any value.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stub_mask: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted mask file.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth mask file.
    #[arg(long)]
    gt: PathBuf,
    /// Chebyshev radius for skeleton recall.
    #[arg(long, default_value_t = 2)]
    radius: usize,
    /// Read the prediction with inverted rendering.
    #[arg(long)]
    invert_pred: bool,
    /// Read the ground truth with inverted rendering.
    #[arg(long)]
    invert_gt: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassifierKind {
    Gabor,
    Fft,
    /// Scripted test double: dark pixels below the stub threshold.
    StubThreshold,
    /// Scripted test double: bright pixels dilated by the stub radius.
    StubDilating,
    /// Scripted test double: returns the --stub-mask file regardless of input.
    StubFixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Pgm,
    Png,
}

impl From<FormatArg> for ImageFormat {
    fn from(f: FormatArg) -> ImageFormat {
        match f {
            FormatArg::Pgm => ImageFormat::Pgm,
            FormatArg::Png => ImageFormat::Png,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OverlayArg {
    Skeleton,
    Raw,
}

impl From<OverlayArg> for BlendOverlay {
    fn from(o: OverlayArg) -> BlendOverlay {
        match o {
            OverlayArg::Skeleton => BlendOverlay::Skeleton,
            OverlayArg::Raw => BlendOverlay::Raw,
        }
    }
}

enum CliError {
    Usage(String),
    Data(String),
}

impl From<r3c::Error> for CliError {
    fn from(e: r3c::Error) -> CliError {
        CliError::Data(e.to_string())
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            return 1;
        }
    };
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Enhance(args) => cmd_enhance(args),
        Command::R3c(args) => cmd_r3c(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Eval(args) => cmd_eval(args),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

/// Seed precedence: flag, then the R3C_SEED environment variable, then 0.
fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("R3C_SEED") {
        Ok(text) => text
            .parse()
            .map_err(|_| CliError::Usage(format!("R3C_SEED must be an integer, got {:?}", text))),
        Err(_) => Ok(0),
    }
}

fn load_run_config(path: &Option<PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => RunConfig::load(p).map_err(CliError::Data),
    }
}

fn load_manifest(path: &Path) -> Result<SuiteManifest, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read manifest {}: {}", path.display(), e)))?;
    SuiteManifest::from_json(&text)
        .map_err(|e| CliError::Data(format!("manifest {}: {}", path.display(), e)))
}

/// Applies the global seed offset to every case in the manifest.
fn offset_seeds(manifest: &mut SuiteManifest, offset: u64) {
    if offset == 0 {
        return;
    }
    for case in &mut manifest.cases {
        case.synth.seed = case.synth.seed.wrapping_add(offset);
        case.degrade.seed = case.degrade.seed.wrapping_add(offset);
    }
}

fn build_classifier(
    kind: ClassifierKind,
    cfg: &RunConfig,
    native_shape: bool,
    stub_mask: &Option<PathBuf>,
) -> Result<Box<dyn Classifier>, CliError> {
    match kind {
        ClassifierKind::Gabor => {
            let classifier = if native_shape {
                GaborClassifier::with_policy(cfg.gabor.clone(), InputPolicy::AnyShape)?
            } else {
                GaborClassifier::new(cfg.gabor.clone())?
            };
            Ok(Box::new(classifier))
        }
        ClassifierKind::Fft => {
            let classifier = if native_shape {
                FftClassifier::with_policy(cfg.fft.clone(), InputPolicy::AnyShape)?
            } else {
                FftClassifier::new(cfg.fft.clone())?
            };
            Ok(Box::new(classifier))
        }
        ClassifierKind::StubThreshold => {
            Ok(Box::new(StubClassifier::threshold(cfg.stub.threshold)))
        }
        ClassifierKind::StubDilating => Ok(Box::new(StubClassifier::dilating(
            cfg.stub.threshold,
            cfg.stub.radius,
        ))),
        ClassifierKind::StubFixed => {
            let path = stub_mask.as_ref().ok_or_else(|| {
                CliError::Usage("--classifier stub-fixed requires --stub-mask".to_string())
            })?;
            let mask = load_mask(path, ImageFormat::from_path(path)?, false)?;
            Ok(Box::new(StubClassifier::fixed(mask)))
        }
    }
}

fn read_image(path: &Path) -> Result<GrayImage, CliError> {
    Ok(load_image(path, ImageFormat::from_path(path)?)?)
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    let mut manifest = load_manifest(&args.manifest)?;
    offset_seeds(&mut manifest, seed);
    eprintln!(
        "config: {{\"command\":\"synth\",\"manifest\":{:?},\"out\":{:?},\"seed\":{},\"cases\":{}}}",
        args.manifest.display().to_string(),
        args.out.display().to_string(),
        seed,
        manifest.cases.len()
    );

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {}", args.out.display(), e)))?;
    let format: ImageFormat = args.format.into();
    let ext = match args.format {
        FormatArg::Pgm => "pgm",
        FormatArg::Png => "png",
    };
    for case in &manifest.cases {
        let output = materialize_case(case)
            .map_err(|e| CliError::Data(format!("case {}: {}", case.id, e)))?;
        let image_path = args.out.join(format!("{}.{ext}", case.id));
        let gt_path = args.out.join(format!("{}.gt.{ext}", case.id));
        save_image(&output.image, &image_path, format)?;
        save_mask(&output.ridge_mask, &gt_path, format, false)?;
    }
    Ok(())
}

fn cmd_enhance(args: EnhanceArgs) -> Result<(), CliError> {
    let cfg = load_run_config(&args.config)?;
    eprintln!("config: {}", cfg.resolved_json());
    let classifier = build_classifier(args.classifier, &cfg, args.native_shape, &args.stub_mask)?;
    let image = read_image(&args.input)?;
    let mask = r3c::classifiers::enhance_with_policy(classifier.as_ref(), &image)?;
    save_mask(
        &mask,
        &args.out,
        ImageFormat::from_path(&args.out)?,
        args.invert,
    )?;
    Ok(())
}

fn cmd_r3c(args: R3cArgs) -> Result<(), CliError> {
    let cfg = load_run_config(&args.config)?;
    let mut loop_config = cfg.r3c.clone();
    if let Some(alpha) = args.alpha {
        loop_config.alpha = alpha;
    }
    if let Some(epsilon) = args.epsilon {
        loop_config.epsilon = epsilon;
    }
    if let Some(gamma) = args.gamma {
        loop_config.gamma = gamma;
    }
    if let Some(required) = args.required {
        loop_config.consecutive_stops_required = required;
    }
    if let Some(cap) = args.max_iterations {
        loop_config.max_iterations = cap;
    }
    if let Some(overlay) = args.overlay {
        loop_config.overlay = overlay.into();
    }
    let resolved = RunConfig {
        r3c: loop_config.clone(),
        ..cfg.clone()
    };
    eprintln!("config: {}", resolved.resolved_json());

    let classifier = build_classifier(args.classifier, &cfg, args.native_shape, &args.stub_mask)?;
    let image = read_image(&args.input)?;
    let (mask, trace) = run_r3c(&image, classifier.as_ref(), &loop_config)?;
    save_mask(
        &mask,
        &args.out,
        ImageFormat::from_path(&args.out)?,
        args.invert,
    )?;
    if let Some(trace_path) = &args.trace {
        let file = std::fs::File::create(trace_path).map_err(|e| {
            CliError::Data(format!("cannot create {}: {}", trace_path.display(), e))
        })?;
        trace
            .write_jsonl(std::io::BufWriter::new(file))
            .map_err(|e| CliError::Data(format!("writing {}: {}", trace_path.display(), e)))?;
    }
    Ok(())
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad grid value {:?}", tok)))
        })
        .collect()
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let cfg = load_run_config(&args.config)?;
    let seed = resolve_seed(args.seed)?;
    let grid = match &args.grid {
        Some(text) => parse_grid(text)?,
        None => cfg.sweep.grid.clone(),
    };
    if grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(CliError::Usage(format!(
            "grid values must be in [0, 1]: {:?}",
            grid
        )));
    }
    let jobs = args.jobs.unwrap_or(cfg.sweep.jobs).max(1);
    let resolved = RunConfig {
        sweep: config::SweepConfig {
            grid: grid.clone(),
            jobs,
            recall_radius: cfg.sweep.recall_radius,
        },
        ..cfg.clone()
    };
    eprintln!("config: {}", resolved.resolved_json());

    let mut manifest = load_manifest(&args.manifest)?;
    offset_seeds(&mut manifest, seed);

    // Predictions are scored against same-size ground truth, so the sweep
    // always runs classifiers at the suite's native shape.
    let classifier = build_classifier(args.classifier, &cfg, true, &args.stub_mask)?;
    let report = alpha_sweep(
        &manifest,
        classifier.as_ref(),
        &grid,
        &cfg.r3c,
        &SweepOptions {
            recall_radius: cfg.sweep.recall_radius,
            jobs,
        },
    )?;

    std::fs::write(&args.out, report.to_csv())
        .map_err(|e| CliError::Data(format!("writing {}: {}", args.out.display(), e)))?;
    if let Some(summary_path) = &args.summary {
        std::fs::write(summary_path, report.summary_json())
            .map_err(|e| CliError::Data(format!("writing {}: {}", summary_path.display(), e)))?;
    }
    for failure in &report.failures {
        eprintln!(
            "warning: case {} (alpha {:?}) failed: {}",
            failure.case_id, failure.alpha, failure.message
        );
    }
    eprintln!("chosen_alpha: {}", report.chosen_alpha);
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let pred = load_mask(
        &args.pred,
        ImageFormat::from_path(&args.pred)?,
        args.invert_pred,
    )?;
    let gt = load_mask(&args.gt, ImageFormat::from_path(&args.gt)?, args.invert_gt)?;
    let (iou, dice) = overlap_metrics(&pred, &gt)?;
    let components = count_components(&pred.to_ridge_polarity(), Connectivity::Eight);
    let recall = skeleton_recall(&pred, &gt, args.radius)?;
    println!(
        "iou={:.6} dice={:.6} component_count={} skeleton_recall={:.6}",
        iou, dice, components, recall
    );
    Ok(())
}
