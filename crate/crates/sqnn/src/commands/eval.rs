use std::path::{Path, PathBuf};

use sqnn_core::training::evaluate_accuracy;

use crate::checkpoint;
use crate::data::{load_set, resolve_data_dir};
use crate::error::{CliError, Result};
use crate::exec::RayonExecutor;
use crate::idx::Split;

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub checkpoint: PathBuf,
    pub data_dir: Option<PathBuf>,
    pub split: Split,
    /// Defaults to the validation limit stored in the checkpoint.
    pub limit: Option<usize>,
    pub threads: Option<usize>,
}

impl EvalOptions {
    pub fn new(checkpoint: &Path) -> Self {
        EvalOptions {
            checkpoint: checkpoint.to_path_buf(),
            data_dir: None,
            split: Split::Test,
            limit: None,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOutcome {
    pub accuracy: f64,
    pub correct: usize,
    pub samples: usize,
}

pub fn run(opts: &EvalOptions) -> Result<EvalOutcome> {
    let body = checkpoint::load(&opts.checkpoint)?;
    let config = &body.config;
    let limit = opts.limit.or(match opts.split {
        Split::Test => config.data.val_limit,
        Split::Train => config.data.train_limit,
    });
    let dir = resolve_data_dir(opts.data_dir.as_deref(), config);
    let set = load_set(&dir, opts.split, limit, config)?;
    if set.is_empty() {
        return Err(CliError::Usage("evaluation set is empty".into()));
    }
    let exec = RayonExecutor::new(opts.threads)?;
    let accuracy = evaluate_accuracy(&body.model, &exec, &set)?;
    Ok(EvalOutcome {
        accuracy,
        correct: (accuracy * set.len() as f64).round() as usize,
        samples: set.len(),
    })
}
