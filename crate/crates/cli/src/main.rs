use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use panospa::io::FileReport;
use panospa::{
    evaluate_ps, evaluate_pt, generate, load_taxonomy, perturb, save_manifest, save_sequence, synth_taxonomy,
    validate_manifest, EvalOptions, EvalReport, Error, LoadOptions, Manifest, ManifestEntry, PerturbParams, Subset,
    SynthParams, TemporalWindow, Violation, World,
};

#[derive(Parser)]
#[command(name = "panospa", version, about = "OSPA-based panoptic segmentation and tracking evaluation")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "PANOSPA_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Panoptic segmentation: O_PS family and PQ.
    EvalPs(EvalArgs),
    /// Panoptic tracking: O²_PT family, STQ, IDF1, Frag.
    EvalPt {
        #[command(flatten)]
        eval: EvalArgs,
        /// Frames over which two tracks are averaged.
        #[arg(long, value_enum, default_value_t = WindowArg::Union)]
        window: WindowArg,
    },
    /// Check every file of a manifest against the format and invariants.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        taxonomy: PathBuf,
        /// Require track ids on thing segments.
        #[arg(long)]
        tracking: bool,
        #[arg(long, value_enum, default_value_t = WorldArg::Closed)]
        world: WorldArg,
    },
    /// Write a synthetic dataset and optionally a perturbed prediction.
    Synth(SynthArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Ground-truth manifest.
    #[arg(long)]
    gt: PathBuf,
    /// Prediction manifest.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    taxonomy: PathBuf,
    #[arg(long, value_enum, default_value_t = SubsetArg::All)]
    subset: SubsetArg,
    /// Add small/medium/large O_PS buckets.
    #[arg(long)]
    scale_breakdown: bool,
    /// auto: OSPA on multi-label gt, PQ/STQ/IDF1 on flattened gt.
    #[arg(long, value_enum, default_value_t = FlattenArg::Auto)]
    flatten: FlattenArg,
    /// open: unknown predicted class names are dropped with a warning.
    #[arg(long, value_enum, default_value_t = WorldArg::Closed)]
    world: WorldArg,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    /// Output directory (taxonomy.json, gt/, pred/).
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    sequences: usize,
    #[arg(long, default_value_t = 10)]
    frames: usize,
    #[arg(long, default_value_t = 128)]
    height: u32,
    #[arg(long, default_value_t = 128)]
    width: u32,
    #[arg(long, default_value_t = 2)]
    thing_classes: usize,
    #[arg(long, default_value_t = 1)]
    stuff_classes: usize,
    #[arg(long, default_value_t = 1)]
    objects_min: usize,
    #[arg(long, default_value_t = 3)]
    objects_max: usize,
    #[arg(long, default_value_t = 8)]
    size_min: u32,
    #[arg(long, default_value_t = 24)]
    size_max: u32,
    #[arg(long, default_value_t = 2)]
    motion_step: u32,
    /// Also write a prediction (implied by any noise flag).
    #[arg(long)]
    pred: bool,
    /// Seed of the noise stream (default: --seed).
    #[arg(long)]
    noise_seed: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    drop_prob: f64,
    #[arg(long, default_value_t = 0)]
    shift_px: u32,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    iou_jitter: i32,
    #[arg(long, default_value_t = 0.0)]
    id_switch_prob: f64,
    #[arg(long, default_value_t = 0.0)]
    class_flip_prob: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubsetArg {
    All,
    Thing,
    Stuff,
    Known,
    Unknown,
}

impl From<SubsetArg> for Subset {
    fn from(s: SubsetArg) -> Self {
        match s {
            SubsetArg::All => Subset::All,
            SubsetArg::Thing => Subset::Thing,
            SubsetArg::Stuff => Subset::Stuff,
            SubsetArg::Known => Subset::Known,
            SubsetArg::Unknown => Subset::Unknown,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FlattenArg {
    Auto,
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum WorldArg {
    Closed,
    Open,
}

impl From<WorldArg> for World {
    fn from(w: WorldArg) -> Self {
        match w {
            WorldArg::Closed => World::Closed,
            WorldArg::Open => World::Open,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Union,
    Sequence,
}

/// Machine-readable failure written to stderr.
#[derive(Serialize)]
struct ErrorList {
    errors: Vec<Violation>,
}

fn error_list(err: &Error) -> ErrorList {
    let errors = match err {
        Error::Validation(v) => v.clone(),
        other => vec![Violation {
            source: String::new(),
            frame: None,
            segment: None,
            kind: other.kind().to_string(),
            message: other.to_string(),
        }],
    };
    ErrorList { errors }
}

fn eval_options(args: &EvalArgs, window: TemporalWindow) -> EvalOptions {
    EvalOptions {
        subset: args.subset.into(),
        world: args.world.into(),
        flatten: match args.flatten {
            FlattenArg::Auto => panospa::Flatten::Auto,
            FlattenArg::On => panospa::Flatten::On,
            FlattenArg::Off => panospa::Flatten::Off,
        },
        scale_breakdown: args.scale_breakdown,
        window,
    }
}

fn emit(report: &EvalReport, args: &EvalArgs) -> Result<(), Error> {
    let text = match args.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv()?,
    };
    match &args.out {
        Some(path) => write_file(path, &text),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn validate(input: &Path, taxonomy: &Path, options: LoadOptions) -> Result<(), Error> {
    let tax = load_taxonomy(taxonomy)?;
    let files: Vec<FileReport> = validate_manifest(input, &tax, options)?;
    let mut all = Vec::new();
    for f in &files {
        if f.violations.is_empty() {
            println!(
                "ok    {} ({}): {} frames, {} segments, {} warnings",
                f.sequence,
                f.path,
                f.frames,
                f.segments,
                f.warnings.len()
            );
        } else {
            println!("FAIL  {} ({}): {} violations", f.sequence, f.path, f.violations.len());
        }
        all.extend(f.violations.iter().cloned());
    }
    if all.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(all))
    }
}

fn synth(args: &SynthArgs) -> Result<(), Error> {
    let noise = PerturbParams {
        drop_prob: args.drop_prob,
        shift_px: args.shift_px,
        iou_jitter: args.iou_jitter,
        id_switch_prob: args.id_switch_prob,
        class_flip_prob: args.class_flip_prob,
    };
    noise.validate()?;
    let write_pred = args.pred || noise != PerturbParams::default();
    let taxonomy = synth_taxonomy(args.thing_classes, args.stuff_classes);
    write_file(&args.out_dir.join("taxonomy.json"), &(taxonomy.to_json() + "\n"))?;

    let mut gt_manifest = Manifest::new("synth");
    let mut pred_manifest = Manifest::new("synth");
    for i in 0..args.sequences {
        let id = format!("seq-{i:03}");
        let params = SynthParams {
            seed: args.seed.wrapping_add(i as u64),
            sequence_id: id.clone(),
            frames: args.frames,
            height: args.height,
            width: args.width,
            thing_classes: args.thing_classes,
            stuff_classes: args.stuff_classes,
            objects_per_class: (args.objects_min, args.objects_max),
            object_size: (args.size_min, args.size_max),
            motion_step: args.motion_step,
        };
        let gt = generate(&params)?;
        let file = PathBuf::from(format!("{id}.json"));
        let entry = ManifestEntry {
            id: id.clone(),
            path: file.clone(),
            frames: Some(gt.frames.len()),
            height: Some(gt.height),
            width: Some(gt.width),
        };
        save_sequence(args.out_dir.join("gt").join(&file), &gt)?;
        gt_manifest.sequences.push(entry.clone());
        if write_pred {
            let seed = args.noise_seed.unwrap_or(args.seed).wrapping_add(i as u64);
            let pred = perturb(&gt, &noise, &taxonomy, seed)?;
            save_sequence(args.out_dir.join("pred").join(&file), &pred)?;
            pred_manifest.sequences.push(entry);
        }
    }
    save_manifest(args.out_dir.join("gt").join("manifest.json"), &gt_manifest)?;
    if write_pred {
        save_manifest(args.out_dir.join("pred").join("manifest.json"), &pred_manifest)?;
    }
    Ok(())
}

fn run(command: &Command) -> Result<(), Error> {
    match command {
        Command::EvalPs(args) => {
            let report = evaluate_ps(&args.gt, &args.pred, &args.taxonomy, &eval_options(args, TemporalWindow::Union))?;
            emit(&report, args)
        }
        Command::EvalPt { eval, window } => {
            let window = match window {
                WindowArg::Union => TemporalWindow::Union,
                WindowArg::Sequence => TemporalWindow::Sequence,
            };
            let report = evaluate_pt(&eval.gt, &eval.pred, &eval.taxonomy, &eval_options(eval, window))?;
            emit(&report, eval)
        }
        Command::Validate {
            input,
            taxonomy,
            tracking,
            world,
        } => validate(
            input,
            taxonomy,
            LoadOptions {
                tracking: *tracking,
                world: (*world).into(),
            },
        ),
        Command::Synth(args) => synth(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("--workers must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let list = serde_json::to_string_pretty(&error_list(&err)).expect("error list serializes");
            eprintln!("{list}");
            ExitCode::from(if err.is_validation() { 2 } else { 1 })
        }
    }
}
