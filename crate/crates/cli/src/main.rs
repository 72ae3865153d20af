//! `aerial-sar` command-line tool.
//!
//! Exit codes: 0 success, 2 bad input (arguments, files, config), 3 a
//! processing stage failed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use aerial_sar::anchors::{assign_yolo, dataset_coverage, generate_anchors, kmeans_anchors, AnchorConfig};
use aerial_sar::bbox::Detection;
use aerial_sar::evaluation::Annotation;
use aerial_sar::io::{self, CalibrationFile, HistogramEntry, IoError, LocalizationRecord};
use aerial_sar::pipeline::{self, PipelineInputs, RunConfig, RunManifest, RunSource, Stage, StageError};
use aerial_sar::sim::{simulate, NoiseModel, ScenarioSpec};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Stage(#[from] StageError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Stage(e) if e.stage == Stage::Input => 2,
            CliError::Stage(_) => 3,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "aerial-sar",
    version,
    about = "Aerial optical/thermal person search post-processing"
)]
struct Cli {
    /// Seed for simulation and particle filters (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// YAML run configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Anchor coverage of a box dataset under the standard and small-object scale sets.
    AnalyzeAnchors(AnchorArgs),
    /// Cross-spectral matching and merging.
    Fuse(FuseArgs),
    /// IOU tracking of fused detections.
    Track(CameraArgs),
    /// Triangulation and metric-area rejection of tracked detections.
    Localize(CameraArgs),
    /// Re-identification of localizations.
    Reid(ReidArgs),
    /// Miss rate / fppi evaluation against annotations.
    Evaluate(EvalArgs),
    /// Writes a simulated scenario in the pipeline's input formats.
    Simulate(SimArgs),
    /// Every stage end to end; simulates the default scenario when no inputs are given.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
struct AnchorArgs {
    /// CSV with columns image,x_min,y_min,x_max,y_max.
    #[arg(long)]
    boxes: PathBuf,
    #[arg(long, default_value_t = 640)]
    width: u32,
    #[arg(long, default_value_t = 512)]
    height: u32,
    /// Also cluster the box shapes into this many anchors.
    #[arg(long)]
    kmeans: Option<usize>,
}

#[derive(Debug, Args)]
struct CameraArgs {
    /// Detection JSONL (fused for `track`, tracked for `localize`).
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    poses: PathBuf,
    #[arg(long)]
    calibration: PathBuf,
}

#[derive(Debug, Args)]
struct FuseArgs {
    #[arg(long)]
    optical: PathBuf,
    #[arg(long)]
    thermal: PathBuf,
    #[arg(long)]
    poses: PathBuf,
    #[arg(long)]
    calibration: PathBuf,
}

#[derive(Debug, Args)]
struct ReidArgs {
    #[arg(long)]
    localizations: PathBuf,
    #[arg(long)]
    histograms: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    /// Number of frames; defaults to one past the highest frame seen.
    #[arg(long)]
    frames: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioKind {
    /// Survey leg under the noisy detector model.
    Default,
    Survey,
    Revisit,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long, value_enum, default_value = "default")]
    scenario: ScenarioKind,
    /// People along the survey leg (default and survey scenarios).
    #[arg(long, default_value_t = 6)]
    humans: usize,
    /// Apply the noisy detector model (miss 0.5, 0.5 false positives per image, 1 px jitter).
    #[arg(long)]
    noisy: bool,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Directory holding optical.jsonl, thermal.jsonl, poses.csv, calibration.yaml
    /// and optionally histograms.csv and annotations.jsonl.
    #[arg(long, conflicts_with = "from_manifest")]
    inputs: Option<PathBuf>,
    /// Re-run the run described by a manifest and compare output hashes.
    #[arg(long)]
    from_manifest: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let s = std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            RunConfig::from_yaml(&s).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<()> {
    io::write_bytes(path, &pipeline::to_json(v)?)?;
    Ok(())
}

fn analyze_anchors(args: &AnchorArgs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let images = io::read_gt_boxes_file(&args.boxes)?;
    let strides = AnchorConfig::standard_strides();
    let bad = |e: aerial_sar::anchors::AnchorError| CliError::Input(e.to_string());
    let mut report = serde_json::Map::new();
    for (name, ac) in [
        ("standard", AnchorConfig::standard()),
        ("custom", AnchorConfig::custom()),
    ] {
        let dual = dataset_coverage(&images, &ac, args.width, args.height, &strides).map_err(bad)?;
        let anchors = generate_anchors(&ac, args.width, args.height, &strides).map_err(bad)?;
        let best: usize = images.iter().map(|g| assign_yolo(g, &anchors).report.assigned).sum();
        println!(
            "{name:<8} dual-threshold coverage {:.1}% ({}/{}), best-match {}",
            100.0 * dual.coverage,
            dual.assigned,
            dual.total_gt,
            best
        );
        report.insert(
            name.into(),
            json!({ "config": ac, "dual_threshold": dual, "best_match_assigned": best }),
        );
    }
    if let Some(k) = args.kmeans {
        let all: Vec<_> = images.iter().flatten().copied().collect();
        let km = kmeans_anchors(&all, k, cfg.seed).map_err(bad)?;
        let shapes: Vec<String> = km.anchors.iter().map(|(w, h)| format!("{w:.1}x{h:.1}")).collect();
        println!("k-means anchors (w x h): {}", shapes.join(" "));
        report.insert(
            "kmeans".into(),
            json!({ "anchors": km.anchors, "objective_history": km.objective_history, "iterations": km.iterations }),
        );
    }
    ensure_dir(out)?;
    write_json(&out.join("anchor_report.json"), &report)
}

fn fuse(args: &FuseArgs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let optical = io::read_detections(&args.optical)?;
    let thermal = io::read_detections(&args.thermal)?;
    let poses = io::read_poses_file(&args.poses)?;
    let cal = io::read_calibration(&args.calibration)?;
    let fused = pipeline::fuse_frames(&optical, &thermal, &poses, &cal, cfg)?;
    ensure_dir(out)?;
    io::write_detections(&out.join("fused.jsonl"), &fused)?;
    println!(
        "{} optical + {} thermal -> {} fused detections",
        optical.len(),
        thermal.len(),
        fused.len()
    );
    Ok(())
}

fn camera_inputs(args: &CameraArgs) -> Result<(Vec<Detection>, Vec<aerial_sar::geometry::Pose>, CalibrationFile)> {
    Ok((
        io::read_detections(&args.detections)?,
        io::read_poses_file(&args.poses)?,
        io::read_calibration(&args.calibration)?,
    ))
}

fn track(args: &CameraArgs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let (dets, poses, cal) = camera_inputs(args)?;
    let tracked = pipeline::track_detections(&dets, &poses, &cal, cfg)?;
    ensure_dir(out)?;
    io::write_detections(&out.join("tracks.jsonl"), &tracked)?;
    let ids: std::collections::BTreeSet<u64> = tracked.iter().filter_map(|d| d.human_id).collect();
    println!("{} detections in {} tracks", tracked.len(), ids.len());
    Ok(())
}

fn localize(args: &CameraArgs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let (dets, poses, cal) = camera_inputs(args)?;
    if dets.iter().any(|d| d.human_id.is_none()) {
        return Err(CliError::Input(
            "localize needs tracked detections (every record with an id)".into(),
        ));
    }
    let locs = pipeline::localize_tracks(&dets, &poses, &cal, cfg)?;
    ensure_dir(out)?;
    io::write_jsonl_file(&out.join("localizations.jsonl"), &locs)?;
    let kept = locs.iter().filter(|l| l.kept).count();
    println!(
        "{} localizations, {} kept, {} rejected by area",
        locs.len(),
        kept,
        locs.len() - kept
    );
    Ok(())
}

fn reid(args: &ReidArgs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let locs: Vec<LocalizationRecord> = io::read_jsonl_file(&args.localizations)?;
    let hists: Vec<HistogramEntry> = match &args.histograms {
        Some(p) => io::read_histograms_file(p)?,
        None => Vec::new(),
    };
    let outcome = pipeline::reidentify(&locs, &hists, cfg)?;
    ensure_dir(out)?;
    io::write_jsonl_file(&out.join("identities.jsonl"), &outcome.identities)?;
    let humans = pipeline::summarize_humans(&outcome.registry, &outcome.identities);
    write_json(&out.join("humans.json"), &humans)?;
    if let Some(p) = &outcome.particles_csv {
        io::write_string(&out.join("particles.csv"), p)?;
    }
    println!(
        "{} identities, {} distinct people",
        outcome.identities.len(),
        humans.len()
    );
    Ok(())
}

fn evaluate(args: &EvalArgs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let dets = io::read_detections(&args.detections)?;
    let anns = io::read_annotations(&args.annotations)?;
    let frames = args.frames.unwrap_or_else(|| {
        let max = dets.iter().map(|d| d.frame).chain(anns.iter().map(|a| a.frame)).max();
        max.map_or(0, |m| m as usize + 1)
    });
    let report = pipeline::evaluate(frames, &dets, &anns, cfg)?;
    ensure_dir(out)?;
    write_eval(out, &report)?;
    print_summary(&report.summary);
    Ok(())
}

fn write_eval(out: &Path, report: &pipeline::EvalReport) -> Result<()> {
    io::write_string(&out.join("eval_curve.csv"), &report.curve.to_csv())?;
    write_json(&out.join("eval_summary.json"), &report.summary)?;
    io::write_string(
        &out.join("curve.svg"),
        &aerial_sar::evaluation::curve_svg(&[("detections", &report.curve)]),
    )?;
    Ok(())
}

fn print_summary(s: &pipeline::EvalSummary) {
    println!(
        "frames {} | gt {} tp {} fp {} fn {} | fppi {:.3} miss rate {:.3} | per-ID miss rate {:.3} | LAMR {:.3}",
        s.frames, s.ground_truth, s.tp, s.fp, s.fn_, s.fppi, s.missrate, s.per_id_missrate, s.log_average_missrate
    );
}

fn scenario(args: &SimArgs, seed: u64) -> ScenarioSpec {
    let mut spec = match args.scenario {
        ScenarioKind::Default => ScenarioSpec {
            humans: ScenarioSpec::survey(seed, args.humans).humans,
            ..pipeline::default_scenario(seed)
        },
        ScenarioKind::Survey => ScenarioSpec::survey(seed, args.humans),
        ScenarioKind::Revisit => ScenarioSpec::revisit(seed),
    };
    if args.noisy {
        spec.noise = NoiseModel::noisy();
    }
    spec
}

fn simulate_cmd(args: &SimArgs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let spec = scenario(args, cfg.seed);
    let sim = simulate(&spec).map_err(|e| CliError::Input(e.to_string()))?;
    let truth = sim.truth.clone();
    let inputs = PipelineInputs::from_sim(sim);
    let written = pipeline::write_inputs(out, &inputs)?;
    write_json(&out.join("scenario.json"), &spec)?;
    io::write_jsonl(io::create_file(&out.join("truth.jsonl"))?, &truth)?;
    println!(
        "{} frames, {} optical / {} thermal detections, {} annotations -> {} files in {}",
        inputs.poses.len(),
        inputs.optical.len(),
        inputs.thermal.len(),
        inputs.annotations.as_ref().map_or(0, Vec::len),
        written.len() + 2,
        out.display()
    );
    Ok(())
}

fn load_inputs(dir: &Path) -> Result<(PipelineInputs, BTreeMap<String, String>)> {
    let mut used = BTreeMap::new();
    let mut path = |role: &str, name: &str| {
        let p = dir.join(name);
        used.insert(role.to_string(), p.display().to_string());
        p
    };
    let optical = io::read_detections(&path("optical", "optical.jsonl"))?;
    let thermal = io::read_detections(&path("thermal", "thermal.jsonl"))?;
    let poses = io::read_poses_file(&path("poses", "poses.csv"))?;
    let calibration = io::read_calibration(&path("calibration", "calibration.yaml"))?;
    let hist_path = dir.join("histograms.csv");
    let histograms = if hist_path.exists() {
        used.insert("histograms".into(), hist_path.display().to_string());
        io::read_histograms_file(&hist_path)?
    } else {
        Vec::new()
    };
    let ann_path = dir.join("annotations.jsonl");
    let annotations: Option<Vec<Annotation>> = if ann_path.exists() {
        used.insert("annotations".into(), ann_path.display().to_string());
        Some(io::read_annotations(&ann_path)?)
    } else {
        None
    };
    Ok((
        PipelineInputs {
            optical,
            thermal,
            poses,
            calibration,
            histograms,
            annotations,
        },
        used,
    ))
}

fn run_pipeline(args: &PipelineArgs, cli: &Cli) -> Result<()> {
    let (cfg, source, expected) = match &args.from_manifest {
        Some(p) => {
            let s = std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            let m: RunManifest =
                serde_json::from_str(&s).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            (m.config, m.source, Some(m.outputs))
        }
        None => {
            let cfg = load_config(cli)?;
            let source = match &args.inputs {
                Some(dir) => RunSource::Files {
                    inputs: load_inputs(dir)?.1,
                },
                None => RunSource::Scenario {
                    scenario: pipeline::default_scenario(cfg.seed),
                },
            };
            (cfg, source, None)
        }
    };
    let inputs = match &source {
        RunSource::Scenario { scenario } => {
            PipelineInputs::from_sim(simulate(scenario).map_err(|e| CliError::Input(e.to_string()))?)
        }
        RunSource::Files { inputs } => {
            let dir = inputs
                .get("optical")
                .and_then(|p| Path::new(p).parent())
                .ok_or_else(|| CliError::Input("manifest lists no optical input".into()))?;
            load_inputs(dir)?.0
        }
    };

    let out_dir = &cli.out_dir;
    let (output, failure) = match pipeline::run(&inputs, &cfg) {
        Ok(o) => (o, None),
        Err(f) => (*f.partial, Some(f.error)),
    };
    let manifest = pipeline::write_run(out_dir, &output, &cfg, source, failure.as_ref().map(|e| e.stage))?;
    if let Some(e) = failure {
        eprintln!("partial outputs written to {}", out_dir.display());
        return Err(e.into());
    }
    println!(
        "{} frames, {} fused, {} tracked, {} localized, {} people identified",
        output.frames,
        output.fused.len(),
        output.tracked.len(),
        output.localizations.iter().filter(|l| l.kept).count(),
        output.humans.len()
    );
    if let Some(ev) = &output.evaluation {
        print_summary(&ev.summary);
    }
    println!(
        "{} artifacts + manifest.json in {}",
        manifest.outputs.len(),
        out_dir.display()
    );
    if let Some(expected) = expected {
        let same = expected == manifest.outputs;
        println!(
            "reproduced manifest outputs: {}",
            if same { "identical" } else { "DIFFERENT" }
        );
        if !same {
            return Err(StageError::new(Stage::Output, "outputs differ from the manifest").into());
        }
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Command::Pipeline(args) = &cli.command {
        return run_pipeline(args, cli);
    }
    let cfg = load_config(cli)?;
    let out = &cli.out_dir;
    match &cli.command {
        Command::AnalyzeAnchors(a) => analyze_anchors(a, &cfg, out),
        Command::Fuse(a) => fuse(a, &cfg, out),
        Command::Track(a) => track(a, &cfg, out),
        Command::Localize(a) => localize(a, &cfg, out),
        Command::Reid(a) => reid(a, &cfg, out),
        Command::Evaluate(a) => evaluate(a, &cfg, out),
        Command::Simulate(a) => simulate_cmd(a, &cfg, out),
        Command::Pipeline(_) => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
