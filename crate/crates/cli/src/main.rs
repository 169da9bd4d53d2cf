use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use vsd_cli::commands::{self, EvalMode, Manifest, VideoInput};
use vsd_cli::error::{CliError, EXIT_USAGE};
use vsd_cli::{Context, PipelineConfig};
use vsd_core::dataset::SplitRole;

#[derive(Parser)]
#[command(name = "vsd", version, about = "Multimodal violent scene detection")]
struct Cli {
    /// Pipeline config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Multiclass,
    Binary,
}

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    Train,
    Validation,
    Test,
}

#[derive(Subcommand)]
enum Command {
    /// Build blood and non-blood color models from PPM corpora.
    BuildBloodModel {
        #[arg(long)]
        blood_dir: PathBuf,
        #[arg(long)]
        nonblood_dir: PathBuf,
        /// Unlabeled images used to extend the blood model.
        #[arg(long)]
        extend_dir: Option<PathBuf>,
        #[arg(long)]
        out_blood: PathBuf,
        #[arg(long)]
        out_nonblood: PathBuf,
    },
    /// Extract per-segment features into a JSON Lines table.
    Extract {
        /// JSON manifest listing the videos.
        #[arg(long, conflicts_with = "video_id")]
        manifest: Option<PathBuf>,
        #[arg(long)]
        video_id: Option<String>,
        #[arg(long)]
        frames_dir: Option<PathBuf>,
        #[arg(long)]
        wav: Option<PathBuf>,
        #[arg(long)]
        sidecar: Option<PathBuf>,
        #[arg(long)]
        concepts: Option<PathBuf>,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        frame_count: Option<u64>,
        #[arg(long)]
        blood_model: Option<PathBuf>,
        #[arg(long)]
        nonblood_model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the four channel classifiers.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        split: Option<PathBuf>,
        /// Defaults to `paths.models_dir` of the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Search per-class fusion weights on the validation videos.
    FuseSearch {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        split: Option<PathBuf>,
        /// Defaults to `paths.models_dir` of the config.
        #[arg(long)]
        classifiers: Option<PathBuf>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score segments and apply the decision rules.
    Predict {
        #[arg(long)]
        features: PathBuf,
        /// Defaults to `paths.models_dir` of the config.
        #[arg(long)]
        classifiers: Option<PathBuf>,
        #[arg(long)]
        weights: PathBuf,
        /// Only predict the videos of this split role.
        #[arg(long, value_enum)]
        role: Option<Role>,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute ROC curves and metrics of predictions.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        /// Feature table holding the ground-truth labels.
        #[arg(long)]
        ground_truth: PathBuf,
        #[arg(long, value_enum, default_value = "multiclass")]
        mode: Mode,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write SVG plots.
        #[arg(long)]
        svg: bool,
        /// Evaluate a balanced random subset of the configured size.
        #[arg(long)]
        balanced: bool,
    },
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("summary serializes"));
}

fn models_dir(arg: Option<PathBuf>, ctx: &Context) -> Result<PathBuf, CliError> {
    arg.or_else(|| ctx.config.paths.models_dir.clone())
        .ok_or_else(|| CliError::Config("no classifier directory given and no paths.models_dir configured".into()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    }
    let ctx = Context::new(config)?;

    match cli.command {
        Command::BuildBloodModel {
            blood_dir,
            nonblood_dir,
            extend_dir,
            out_blood,
            out_nonblood,
        } => {
            let s = commands::build_blood_model(
                &ctx,
                &commands::BuildBloodArgs {
                    blood_dir,
                    nonblood_dir,
                    extend_dir,
                    out_blood,
                    out_nonblood,
                },
            )?;
            println!(
                "blood model: {} pixels from {} images; non-blood model: {} pixels from {} images",
                s.blood_total, s.blood_images, s.nonblood_total, s.nonblood_images
            );
        }
        Command::Extract {
            manifest,
            video_id,
            frames_dir,
            wav,
            sidecar,
            concepts,
            annotations,
            frame_count,
            blood_model,
            nonblood_model,
            out,
        } => {
            let videos = match (manifest, video_id) {
                (Some(m), _) => Manifest::load(&m)?.videos,
                (None, Some(video_id)) => vec![VideoInput {
                    video_id,
                    frames_dir,
                    wav,
                    sidecar,
                    concepts,
                    annotations,
                    frame_count,
                    ..Default::default()
                }],
                (None, None) => {
                    return Err(CliError::Config("give --manifest or --video-id".into()))
                }
            };
            let s = commands::extract(
                &ctx,
                &commands::ExtractArgs {
                    videos,
                    blood_model,
                    nonblood_model,
                    out,
                },
            )?;
            print_json(&s);
        }
        Command::Train {
            features,
            split,
            out_dir,
        } => {
            let s = commands::train(
                &ctx,
                &commands::TrainArgs {
                    features,
                    split,
                    out_dir: models_dir(out_dir, &ctx)?,
                },
            )?;
            for c in &s.channels {
                println!(
                    "{}: {} C={} validation EER {:.4} ({} train, {} validation)",
                    c.channel, c.kernel, c.c, c.validation_eer, c.train_samples, c.validation_samples
                );
            }
        }
        Command::FuseSearch {
            features,
            split,
            classifiers,
            step,
            out,
            report,
        } => {
            let s = commands::fuse_search(
                &ctx,
                &commands::FuseSearchArgs {
                    features,
                    split,
                    classifiers: models_dir(classifiers, &ctx)?,
                    step,
                    out,
                    report,
                },
            )?;
            for c in &s.classes {
                match c.eer {
                    Some(eer) => println!(
                        "{}: weights {:?} EER {:.4} ({} tuples evaluated)",
                        c.class, c.weights, eer, c.tuples_evaluated
                    ),
                    None => println!("{}: skipped, uniform weights", c.class),
                }
            }
        }
        Command::Predict {
            features,
            classifiers,
            weights,
            role,
            split,
            out,
        } => {
            let role = role.map(|r| match r {
                Role::Train => SplitRole::Train,
                Role::Validation => SplitRole::Validation,
                Role::Test => SplitRole::Test,
            });
            let s = commands::predict(
                &ctx,
                &commands::PredictArgs {
                    features,
                    classifiers: models_dir(classifiers, &ctx)?,
                    weights,
                    role,
                    split,
                    out,
                },
            )?;
            print_json(&s);
        }
        Command::Evaluate {
            predictions,
            ground_truth,
            mode,
            out_dir,
            svg,
            balanced,
        } => {
            let mode = match mode {
                Mode::Multiclass => EvalMode::Multiclass,
                Mode::Binary => EvalMode::Binary,
            };
            let s = commands::evaluate(
                &ctx,
                &commands::EvaluateArgs {
                    predictions,
                    ground_truth,
                    mode,
                    out_dir,
                    svg,
                    balanced,
                },
            )?;
            print_json(&s);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
