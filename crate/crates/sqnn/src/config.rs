//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sqnn_core::encoding::AngleEncodingConfig;
use sqnn_core::orchestrator::{CircuitShape, Model, QnnModel, SqnnModel};
use sqnn_core::partition::{make_partition, DeviceSpec, PartitionPlan, PartitionStrategy, Role};
use sqnn_core::training::TrainConfig;

use crate::error::{CliError, Result};
use crate::presets;

/// Largest supported downscaled side (the source images are 28×28).
pub const MAX_SIDE: usize = 28;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelConfig,
    #[serde(default)]
    pub encoding: AngleEncodingConfig,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub data: DataConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    /// One device sees the whole downscaled image.
    Qnn { image: [usize; 2], circuit: CircuitShape },
    /// Extractor devices on image segments feeding one predictor device.
    Sqnn {
        image: [usize; 2],
        strategy: PartitionStrategy,
        extractor_capacities: Vec<usize>,
        predictor_capacity: usize,
        extractor: CircuitShape,
        predictor: CircuitShape,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory holding the four MNIST IDX files.
    pub dir: Option<PathBuf>,
    /// Use only the first `n` filtered training samples.
    pub train_limit: Option<usize>,
    /// Use only the first `n` filtered test samples for validation.
    pub val_limit: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config {
                path,
                message: e.into_inner().message().trim().to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = presets::get(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown preset `{name}` (available: {})",
                presets::NAMES.join(", ")
            ))
        })?;
        Self::from_toml(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |path: &str, message: String| CliError::Config {
            path: path.to_string(),
            message,
        };
        let [h, w] = self.image();
        if !(1..=MAX_SIDE).contains(&h) || !(1..=MAX_SIDE).contains(&w) {
            return Err(invalid(
                "model.image",
                format!("sides must be in 1..={MAX_SIDE}, got {h}x{w}"),
            ));
        }
        self.encoding
            .validate()
            .map_err(|e| invalid("encoding", e.to_string()))?;
        self.training
            .validate()
            .map_err(|e| invalid("training", e.to_string()))?;
        let circuits: Vec<(&str, &CircuitShape)> = match &self.model {
            ModelConfig::Qnn { circuit, .. } => vec![("model.circuit", circuit)],
            ModelConfig::Sqnn {
                extractor,
                predictor,
                extractor_capacities,
                predictor_capacity,
                ..
            } => {
                if extractor_capacities.is_empty() || extractor_capacities.contains(&0) {
                    return Err(invalid(
                        "model.extractor_capacities",
                        "need at least one extractor, each with capacity >= 1".into(),
                    ));
                }
                if *predictor_capacity == 0 {
                    return Err(invalid("model.predictor_capacity", "must be at least 1".into()));
                }
                vec![("model.extractor", extractor), ("model.predictor", predictor)]
            }
        };
        for (path, c) in circuits {
            if c.blocks == 0 {
                return Err(invalid(&format!("{path}.blocks"), "must be at least 1".into()));
            }
            if c.axes.is_empty() {
                return Err(invalid(&format!("{path}.axes"), "must list at least one axis".into()));
            }
        }
        if let ModelConfig::Sqnn { .. } = self.model {
            self.partition_plan().map_err(|e| invalid("model", e.to_string()))?;
        }
        Ok(())
    }

    pub fn image(&self) -> [usize; 2] {
        match &self.model {
            ModelConfig::Qnn { image, .. } | ModelConfig::Sqnn { image, .. } => *image,
        }
    }

    pub fn image_shape(&self) -> (usize, usize) {
        let [h, w] = self.image();
        (h, w)
    }

    /// Device roster: extractors in order, then the predictor.
    pub fn devices(&self) -> Vec<DeviceSpec> {
        match &self.model {
            ModelConfig::Qnn { image, .. } => vec![DeviceSpec::new("device-0", image[0] * image[1], Role::Predictor)],
            ModelConfig::Sqnn {
                extractor_capacities,
                predictor_capacity,
                ..
            } => extractor_capacities
                .iter()
                .enumerate()
                .map(|(i, &c)| DeviceSpec::new(format!("extractor-{i}"), c, Role::Extractor))
                .chain(std::iter::once(DeviceSpec::new(
                    "predictor",
                    *predictor_capacity,
                    Role::Predictor,
                )))
                .collect(),
        }
    }

    /// The image partition; a single-device model gets one whole-image tile.
    pub fn partition_plan(&self) -> sqnn_core::Result<PartitionPlan> {
        match &self.model {
            ModelConfig::Qnn { image, .. } => {
                let whole = DeviceSpec::new("device-0", image[0] * image[1], Role::Extractor);
                make_partition(self.image_shape(), &[whole], PartitionStrategy::EvenNoOverlap)
            }
            ModelConfig::Sqnn { strategy, .. } => make_partition(self.image_shape(), &self.devices(), *strategy),
        }
    }

    /// Freshly initialized model plus the generator that continues into training.
    pub fn build_model(&self) -> Result<(Model, ChaCha8Rng)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.training.seed);
        let model = match &self.model {
            ModelConfig::Qnn { circuit, .. } => Model::Qnn(QnnModel::initialize(
                self.image_shape(),
                self.devices().remove(0),
                circuit,
                self.encoding,
                &mut rng,
            )?),
            ModelConfig::Sqnn {
                strategy,
                extractor,
                predictor,
                ..
            } => Model::Sqnn(SqnnModel::initialize(
                self.image_shape(),
                &self.devices(),
                *strategy,
                extractor,
                predictor,
                self.encoding,
                &mut rng,
            )?),
        };
        Ok((model, rng))
    }
}
