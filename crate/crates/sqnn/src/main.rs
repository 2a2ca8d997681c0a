use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sqnn::commands::{eval, gradcheck, preview, train};
use sqnn::config::ExperimentConfig;
use sqnn::error::{exit, CliError, Result};
use sqnn::idx::Split;
use sqnn::presets;
use sqnn_core::partition::PartitionStrategy;

#[derive(Parser)]
#[command(name = "sqnn", version, about = "Scalable quantum neural networks on MNIST 3 vs 6")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write metrics and checkpoints.
    Train(TrainArgs),
    /// Accuracy of a checkpoint on a data split.
    Eval(EvalArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Show how an image is split across extractor devices.
    PartitionPreview(PreviewArgs),
    /// List the built-in experiment presets.
    Presets,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, conflicts_with_all = ["preset", "resume"])]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "resume")]
    preset: Option<String>,
    /// Continue from a checkpoint.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Total epochs, counting those already done when resuming.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    train_limit: Option<usize>,
    #[arg(long)]
    val_limit: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Defaults to runs/<experiment name>.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Overrides SQNN_DATA_DIR and the config's data.dir.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Write zero epoch times so the metrics file is reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Defaults to the limit the checkpoint was trained with.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Defaults to 4qb_3blk.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Even,
    Uneven,
    Overlap,
}

impl From<StrategyArg> for PartitionStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Even => PartitionStrategy::EvenNoOverlap,
            StrategyArg::Uneven => PartitionStrategy::UnevenNoOverlap,
            StrategyArg::Overlap => PartitionStrategy::EvenOverlap,
        }
    }
}

#[derive(Args)]
struct PreviewArgs {
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Image size, e.g. 4x4.
    #[arg(long, conflicts_with_all = ["config", "preset"], requires = "capacities")]
    image: Option<String>,
    /// Comma-separated data-qubit capacities of the extractors.
    #[arg(long, value_delimiter = ',', requires = "image")]
    capacities: Vec<usize>,
    #[arg(long, value_enum, default_value = "even")]
    strategy: StrategyArg,
}

fn parse_image(text: &str) -> Result<(usize, usize)> {
    let bad = || CliError::Usage(format!("--image expects HxW, got `{text}`"));
    let (h, w) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((
        h.trim().parse().map_err(|_| bad())?,
        w.trim().parse().map_err(|_| bad())?,
    ))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let source = match (a.resume, a.config, a.preset) {
                (Some(path), _, _) => train::Source::Resume(path),
                (None, Some(path), _) => train::Source::Config(Box::new(ExperimentConfig::from_file(&path)?)),
                (None, None, Some(name)) => train::Source::Config(Box::new(ExperimentConfig::preset(&name)?)),
                (None, None, None) => return Err(CliError::Usage("pass --config, --preset or --resume".into())),
            };
            let opts = train::TrainOptions {
                source,
                seed: a.seed,
                epochs: a.epochs,
                train_limit: a.train_limit,
                val_limit: a.val_limit,
                threads: a.threads,
                out_dir: a.out_dir,
                data_dir: a.data_dir,
                timing: !a.no_timing,
            };
            let outcome = train::run(&opts, &mut std::io::stderr())?;
            println!("best validation accuracy {:.4}", outcome.best_accuracy);
            println!("outputs in {}", outcome.out_dir.display());
        }
        Command::Eval(a) => {
            let opts = eval::EvalOptions {
                checkpoint: a.checkpoint,
                data_dir: a.data_dir,
                split: match a.split {
                    SplitArg::Train => Split::Train,
                    SplitArg::Test => Split::Test,
                },
                limit: a.limit,
                threads: a.threads,
            };
            let out = eval::run(&opts)?;
            println!("accuracy {:.4} ({}/{} samples)", out.accuracy, out.correct, out.samples);
        }
        Command::Gradcheck(a) => {
            let config = match (a.config, a.preset) {
                (Some(path), _) => ExperimentConfig::from_file(&path)?,
                (None, name) => ExperimentConfig::preset(name.as_deref().unwrap_or("4qb_3blk"))?,
            };
            let opts = gradcheck::GradCheckOptions {
                config,
                trials: a.trials,
                tolerance: a.tolerance,
                eps: a.eps,
                seed: a.seed,
            };
            println!("{}", gradcheck::run(&opts)?);
        }
        Command::PartitionPreview(a) => {
            let text = match (a.image, a.config, a.preset) {
                (Some(image), _, _) => preview::from_geometry(parse_image(&image)?, &a.capacities, a.strategy.into())?,
                (None, Some(path), _) => preview::from_config(&ExperimentConfig::from_file(&path)?)?,
                (None, None, Some(name)) => preview::from_config(&ExperimentConfig::preset(&name)?)?,
                (None, None, None) => return Err(CliError::Usage("pass --config, --preset or --image".into())),
            };
            print!("{text}");
        }
        Command::Presets => {
            for name in presets::NAMES {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
