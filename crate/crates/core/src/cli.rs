//! Command-line front end.
//!
//! Four subcommands cover the workflow: `generate` writes a synthetic
//! dataset, `transform` applies one point-set transform to files on disk,
//! `train` runs meta-training or one of its baselines, and `eval` scores a
//! checkpoint on a dataset. [`run`] returns the process exit code so the
//! binary stays a one-liner and tests can drive the CLI in-process.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::RngCore;

use crate::data::{
    generate_synthetic_dataset, load_dataset, save_dataset, split_train_val, ShapeFamily,
    MANIFEST_FILE,
};
use crate::error::Error;
use crate::geometry::{apply_transform, read_cloud, write_cloud, TransformKind, TransformSpec};
use crate::meta::{
    build_task_set, evaluate, parse_config, train_with_mode, write_history_csv, write_summary,
    TaskParamMode, TrainConfig, TrainMode,
};
use crate::nn::{load_checkpoint, save_checkpoint};
use crate::rng::{seeded, Purpose, SeedStreams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const HISTORY_FILE: &str = "history.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PROVENANCE_FILE: &str = "provenance.txt";

#[derive(Debug, Parser)]
#[command(name = "metasets", version, about = "Meta-learning on transformed point sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic shape dataset and its manifest.
    Generate(GenerateArgs),
    /// Apply one transform to a point cloud file or a dataset.
    Transform(TransformArgs),
    /// Train a classifier and write checkpoint, history and summary.
    Train(TrainArgs),
    /// Report overall and per-class accuracy of a checkpoint.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Number of shape classes (2 to 5).
    #[arg(long, default_value_t = 5)]
    classes: usize,
    #[arg(long, default_value_t = 200)]
    per_class: usize,
    /// Points sampled per cloud.
    #[arg(long, default_value_t = 1024)]
    points: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TransformArgs {
    /// identity, density, dropping or occlusion.
    #[arg(long)]
    kind: String,
    /// Dropping percentage.
    #[arg(long)]
    x: Option<f64>,
    /// Density gate.
    #[arg(long)]
    g: Option<f64>,
    /// Occlusion grid width.
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    seed: u64,
    /// A single cloud file, a manifest, or a dataset directory.
    #[arg(long)]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: PathBuf,
    /// Overrides the mode given in the config file.
    #[arg(long)]
    mode: Option<String>,
    /// Overrides the task parameter mode given in the config file.
    #[arg(long)]
    task_params: Option<String>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Failed(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Failed(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Failed(Error::Parse { .. }) => EXIT_PARSE,
            Failure::Failed(_) => EXIT_RUNTIME,
        }
    }
}

/// Parses `args` (program name first), runs the command, prints its report
/// to stdout and any error to stderr, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(cli.command) {
        Ok(report) => {
            print!("{report}");
            EXIT_OK
        }
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Failed(e) => eprintln!("error: {e}"),
            }
            failure.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<String, Failure> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Transform(args) => transform(args),
        Command::Train(args) => train(args),
        Command::Eval(args) => eval(args),
    }
}

fn generate(args: GenerateArgs) -> Result<String, Failure> {
    if !(2..=ShapeFamily::defaults().len()).contains(&args.classes) {
        return Err(Failure::Usage(format!(
            "--classes must be between 2 and {}, got {}",
            ShapeFamily::defaults().len(),
            args.classes
        )));
    }
    if args.per_class == 0 {
        return Err(Failure::Usage("--per-class must be at least 1".into()));
    }
    let families = ShapeFamily::first(args.classes)?;
    let dataset = generate_synthetic_dataset(&families, args.per_class, args.points, args.seed)
        .map_err(|e| match e {
            Error::InvalidInput(msg) => Failure::Usage(msg),
            other => Failure::Failed(other),
        })?;
    let manifest = save_dataset(&dataset, &args.out)?;
    let mut report = format!(
        "wrote {} clouds ({} points each) to {}\n",
        dataset.len(),
        args.points,
        manifest.display()
    );
    for (name, count) in dataset.class_names.iter().zip(dataset.class_histogram()) {
        let _ = writeln!(report, "  {name:<10} {count}");
    }
    Ok(report)
}

fn transform_spec(args: &TransformArgs) -> Result<TransformSpec, Failure> {
    let kind: TransformKind = args
        .kind
        .parse()
        .map_err(|_| Failure::Usage(format!("unknown transform kind `{}`", args.kind)))?;
    let given = [("--x", args.x), ("--g", args.g), ("--w", args.w)];
    let wanted = match kind {
        TransformKind::Identity => None,
        TransformKind::Dropping => Some("--x"),
        TransformKind::Density => Some("--g"),
        TransformKind::Occlusion => Some("--w"),
    };
    for (flag, value) in given {
        if value.is_some() && Some(flag) != wanted {
            return Err(Failure::Usage(format!("{flag} does not apply to {kind}")));
        }
    }
    let param = match wanted {
        None => 0.0,
        Some(flag) => given
            .iter()
            .find(|(f, _)| *f == flag)
            .and_then(|(_, v)| *v)
            .ok_or_else(|| Failure::Usage(format!("{kind} requires {flag}")))?,
    };
    TransformSpec::new(kind, param).map_err(|e| Failure::Usage(e.to_string()))
}

fn transform(args: TransformArgs) -> Result<String, Failure> {
    let spec = transform_spec(&args)?;
    let mut rng = seeded(args.seed);
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;

    let is_dataset = args.input.is_dir()
        || args.input.file_name().is_some_and(|n| n == MANIFEST_FILE);
    let report = if is_dataset {
        let mut dataset = load_dataset(&args.input)?;
        let before: usize = dataset.items.iter().map(|c| c.len()).sum();
        dataset.items = dataset
            .items
            .iter()
            .map(|c| apply_transform(&spec, c, &mut rng))
            .collect::<crate::Result<_>>()?;
        let after: usize = dataset.items.iter().map(|c| c.len()).sum();
        let manifest = save_dataset(&dataset, &args.out)?;
        format!(
            "{spec}: {} clouds, {before} -> {after} points, written to {}\n",
            dataset.len(),
            manifest.display()
        )
    } else {
        let cloud = read_cloud(&args.input)?;
        let out = apply_transform(&spec, &cloud, &mut rng)?;
        let name = args
            .input
            .file_name()
            .ok_or_else(|| Failure::Usage(format!("{} is not a file", args.input.display())))?;
        let target = args.out.join(name);
        write_cloud(&target, &out)?;
        format!("{spec}: {} -> {} points, written to {}\n", cloud.len(), out.len(), target.display())
    };

    let provenance = args.out.join(PROVENANCE_FILE);
    let line = format!(
        "kind={} param={} seed={} input={}\n",
        spec.kind(),
        spec.param().map_or_else(|| "none".to_string(), |p| p.to_string()),
        args.seed,
        args.input.display()
    );
    fs::write(&provenance, line).map_err(|e| Error::io(&provenance, e))?;
    Ok(report)
}

fn train_config(args: &TrainArgs) -> Result<TrainConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_config(&text, path)?
        }
        None => TrainConfig::default(),
    };
    if let Some(mode) = &args.mode {
        config.mode = mode
            .parse::<TrainMode>()
            .map_err(|_| Failure::Usage(format!("unknown mode `{mode}`")))?;
    }
    if let Some(task_params) = &args.task_params {
        config.task_params = task_params
            .parse::<TaskParamMode>()
            .map_err(|_| Failure::Usage(format!("unknown task parameter mode `{task_params}`")))?;
    }
    config.seed = args.seed;
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(config)
}

fn train(args: TrainArgs) -> Result<String, Failure> {
    let config = train_config(&args)?;
    let source = load_dataset(&args.manifest)?;
    let split_seed = SeedStreams::new(config.seed).fork(Purpose::Split).next_u64();
    let (train_set, val_set) = split_train_val(&source, split_seed)?;
    let task_set = build_task_set(&config.ranges, config.task_params, config.seed)?;

    let outcome = train_with_mode(&config, &train_set, &val_set, &task_set, config.mode, false)?;

    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    save_checkpoint(&args.out.join(CHECKPOINT_FILE), &outcome.params, &outcome.adam)?;
    write_history_csv(&args.out.join(HISTORY_FILE), &outcome)?;
    write_summary(&args.out.join(SUMMARY_FILE), &config, &outcome)?;

    let train_report = evaluate(&outcome.params, &train_set)?;
    let val_report = evaluate(&outcome.params, &val_set)?;
    let mut report = format!(
        "{} training on {} clouds ({} validation), {} tasks, {} epochs{}\n",
        config.mode,
        train_set.len(),
        val_set.len(),
        task_set.len(),
        outcome.history.len(),
        if outcome.converged { ", converged" } else { ", not converged" }
    );
    let _ = writeln!(report, "train accuracy {:.4}", train_report.accuracy);
    let _ = writeln!(report, "validation accuracy {:.4}", val_report.accuracy);
    let _ = writeln!(report, "outputs in {}", args.out.display());
    Ok(report)
}

fn eval(args: EvalArgs) -> Result<String, Failure> {
    let (params, _) = load_checkpoint(&args.checkpoint)?;
    let dataset = load_dataset(&args.manifest)?;
    Ok(evaluate(&params, &dataset)?.render())
}
