//! Locating and preparing the MNIST digit sets for an experiment.

use std::path::{Path, PathBuf};

use sqnn_core::dataset::{filter_and_relabel, ImageSet};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::idx::{load_split, Split};

pub const DATA_DIR_ENV: &str = "SQNN_DATA_DIR";
pub const DEFAULT_DATA_DIR: &str = "data/mnist";

/// Digit mapped to label −1, digit mapped to label +1.
pub const DIGITS: (u8, u8) = (3, 6);

/// Command-line flag, then `SQNN_DATA_DIR`, then the config, then `data/mnist`.
pub fn resolve_data_dir(flag: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .or_else(|| config.data.dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR))
}

/// Filtered, truncated and downscaled split.
pub fn load_set(dir: &Path, split: Split, limit: Option<usize>, config: &ExperimentConfig) -> Result<ImageSet> {
    if !dir.is_dir() {
        return Err(CliError::Data(format!(
            "data directory {} does not exist",
            dir.display()
        )));
    }
    let raw = load_split(dir, split)?;
    let set = filter_and_relabel(&raw, DIGITS).map_err(|e| CliError::Data(e.to_string()))?;
    let set = match limit {
        Some(n) => set.take(n),
        None => set,
    };
    set.downscaled(config.image_shape()).map_err(CliError::from)
}

/// Training split and validation (test) split for `config`.
pub fn load_experiment_sets(dir: &Path, config: &ExperimentConfig) -> Result<(ImageSet, ImageSet)> {
    Ok((
        load_set(dir, Split::Train, config.data.train_limit, config)?,
        load_set(dir, Split::Test, config.data.val_limit, config)?,
    ))
}
