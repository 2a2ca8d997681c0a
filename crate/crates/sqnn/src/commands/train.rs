use std::io::Write;
use std::path::{Path, PathBuf};

use sqnn_core::training::{train, Clock, EpochMetrics, FrozenClock, TrainProgress};

use crate::checkpoint::{self, CheckpointBody};
use crate::config::ExperimentConfig;
use crate::data::{load_experiment_sets, resolve_data_dir};
use crate::error::{CliError, Result};
use crate::exec::{RayonExecutor, WallClock};
use crate::metrics::MetricsWriter;

pub const METRICS_FILE: &str = "metrics.csv";
pub const BEST_CHECKPOINT: &str = "best.json";
pub const LAST_CHECKPOINT: &str = "last.json";

/// Where the experiment comes from.
#[derive(Debug, Clone)]
pub enum Source {
    Config(Box<ExperimentConfig>),
    /// Continue from a checkpoint written by an earlier run.
    Resume(PathBuf),
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub source: Source,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub train_limit: Option<usize>,
    pub val_limit: Option<usize>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
    /// Record wall-clock seconds per epoch; off makes the CSV reproducible byte for byte.
    pub timing: bool,
}

impl TrainOptions {
    pub fn new(source: Source) -> Self {
        TrainOptions {
            source,
            seed: None,
            epochs: None,
            train_limit: None,
            val_limit: None,
            threads: None,
            out_dir: None,
            data_dir: None,
            timing: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub out_dir: PathBuf,
    pub best_accuracy: f64,
    pub history: Vec<EpochMetrics>,
}

pub fn run(opts: &TrainOptions, log: &mut dyn Write) -> Result<TrainOutcome> {
    let (mut config, resumed) = match &opts.source {
        Source::Config(c) => ((**c).clone(), None),
        Source::Resume(path) => {
            let body = checkpoint::load(path)?;
            (body.config.clone(), Some((body, path.clone())))
        }
    };
    if resumed.is_some() && (opts.seed.is_some() || opts.train_limit.is_some() || opts.val_limit.is_some()) {
        return Err(CliError::Usage(
            "--seed, --train-limit and --val-limit cannot change a resumed run".into(),
        ));
    }
    if let Some(seed) = opts.seed {
        config.training.seed = seed;
    }
    if let Some(epochs) = opts.epochs {
        config.training.epochs = epochs;
    }
    if opts.train_limit.is_some() {
        config.data.train_limit = opts.train_limit;
    }
    if opts.val_limit.is_some() {
        config.data.val_limit = opts.val_limit;
    }
    config.validate()?;

    let (mut model, mut progress) = match resumed {
        None => {
            let (model, rng) = config.build_model()?;
            (model, TrainProgress::new(rng))
        }
        Some((body, path)) => {
            let progress = body
                .progress()
                .map_err(|message| CliError::Checkpoint { path, message })?;
            (body.model, progress)
        }
    };

    let exec = RayonExecutor::new(opts.threads)?;
    let data_dir = resolve_data_dir(opts.data_dir.as_deref(), &config);
    let (train_set, val_set) = load_experiment_sets(&data_dir, &config)?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(CliError::Usage(format!(
            "empty dataset: {} training and {} validation samples",
            train_set.len(),
            val_set.len()
        )));
    }

    let out_dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| Path::new("runs").join(&config.name));
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::io(format!("creating {}", out_dir.display()), e))?;
    writeln!(
        log,
        "{}: {} training / {} validation samples, {} epochs, {} threads",
        config.name,
        train_set.len(),
        val_set.len(),
        config.training.epochs,
        exec.threads()
    )
    .ok();

    let mut metrics = MetricsWriter::create(&out_dir.join(METRICS_FILE), &progress.history)?;
    let wall = WallClock::start();
    let clock: &dyn Clock = if opts.timing { &wall } else { &FrozenClock };
    let mut failure: Option<CliError> = None;
    let result = train(
        &mut model,
        &train_set,
        &val_set,
        &config.training,
        &exec,
        &DynClock(clock),
        &mut progress,
        |model, progress, improved| {
            let mut step = || -> Result<()> {
                let m = progress.history.last().expect("epoch recorded");
                metrics.append(m)?;
                let body = CheckpointBody::new(&config, model, progress)?;
                checkpoint::save(&out_dir.join(LAST_CHECKPOINT), &body)?;
                if improved {
                    checkpoint::save(&out_dir.join(BEST_CHECKPOINT), &body)?;
                }
                writeln!(
                    log,
                    "epoch {:>3}/{}  loss {:.4}  val_acc {:.4}{}",
                    m.epoch,
                    config.training.epochs,
                    m.mean_train_loss,
                    m.val_accuracy,
                    if improved { "  *" } else { "" }
                )
                .ok();
                Ok(())
            };
            step().map_err(|e| {
                let msg = e.to_string();
                failure = Some(e);
                sqnn_core::Error::Validation(msg)
            })
        },
    );
    if let Err(e) = result {
        return Err(failure.take().unwrap_or(CliError::Core(e)));
    }
    let best_accuracy = progress.best_accuracy.expect("at least one epoch ran");
    Ok(TrainOutcome {
        out_dir,
        best_accuracy,
        history: progress.history,
    })
}

struct DynClock<'a>(&'a dyn Clock);

impl Clock for DynClock<'_> {
    fn now(&self) -> f64 {
        self.0.now()
    }
}
