//! Self-verifying JSON checkpoints.
//!
//! The file is `{"content_hash": "<sha256 hex>", "body": {...}}` where the hash
//! covers the compact JSON encoding of `body`.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sqnn_core::orchestrator::Model;
use sqnn_core::partition::PartitionPlan;
use sqnn_core::training::{EpochMetrics, TrainProgress};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::metrics::METRICS_SCHEMA;

pub const FORMAT_VERSION: u32 = 1;

/// Position of a ChaCha8 stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    /// 32-byte key, hex.
    pub seed: String,
    pub stream: u64,
    /// 68-bit word position, decimal.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: hex::encode(rng.get_seed()),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> std::result::Result<ChaCha8Rng, String> {
        use rand::SeedableRng;
        let bytes = hex::decode(&self.seed).map_err(|e| format!("rng seed: {e}"))?;
        let seed: [u8; 32] = bytes.try_into().map_err(|_| "rng seed must be 32 bytes".to_string())?;
        let word_pos: u128 = self.word_pos.parse().map_err(|e| format!("rng word_pos: {e}"))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(word_pos);
        Ok(rng)
    }
}

/// Which digit became which label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub negative: u8,
    pub positive: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointBody {
    pub format_version: u32,
    pub metrics_schema: u32,
    pub config: ExperimentConfig,
    pub labels: LabelMap,
    pub partition: PartitionPlan,
    pub model: Model,
    pub epochs_done: usize,
    pub best_accuracy: Option<f64>,
    pub history: Vec<EpochMetrics>,
    pub rng: RngState,
}

impl CheckpointBody {
    pub fn new(config: &ExperimentConfig, model: &Model, progress: &TrainProgress<ChaCha8Rng>) -> Result<Self> {
        let partition = match model {
            Model::Sqnn(m) => m.partition().clone(),
            Model::Qnn(_) => config.partition_plan()?,
        };
        Ok(CheckpointBody {
            format_version: FORMAT_VERSION,
            metrics_schema: METRICS_SCHEMA,
            config: config.clone(),
            labels: LabelMap {
                negative: crate::data::DIGITS.0,
                positive: crate::data::DIGITS.1,
            },
            partition,
            model: model.clone(),
            epochs_done: progress.epochs_done,
            best_accuracy: progress.best_accuracy,
            history: progress.history.clone(),
            rng: RngState::capture(&progress.rng),
        })
    }

    pub fn progress(&self) -> std::result::Result<TrainProgress<ChaCha8Rng>, String> {
        Ok(TrainProgress {
            epochs_done: self.epochs_done,
            best_accuracy: self.best_accuracy,
            history: self.history.clone(),
            rng: self.rng.restore()?,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    content_hash: String,
    body: CheckpointBody,
}

fn digest(body: &CheckpointBody) -> String {
    let bytes = serde_json::to_vec(body).expect("checkpoint body serializes");
    hex::encode(Sha256::digest(bytes))
}

/// Writes via a temporary file and rename so readers never see a partial file.
pub fn save(path: &Path, body: &CheckpointBody) -> Result<()> {
    let envelope = Envelope {
        content_hash: digest(body),
        body: body.clone(),
    };
    let text = serde_json::to_string_pretty(&envelope).expect("checkpoint serializes");
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, text).map_err(|e| CliError::io(format!("writing {}", tmp.display()), e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(format!("renaming to {}", path.display()), e))
}

pub fn load(path: &Path) -> Result<CheckpointBody> {
    let corrupt = |message: String| CliError::Checkpoint {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| corrupt(format!("cannot read: {e}")))?;
    let envelope: Envelope = serde_json::from_str(&text).map_err(|e| corrupt(format!("malformed: {e}")))?;
    let actual = digest(&envelope.body);
    if actual != envelope.content_hash {
        return Err(corrupt(format!(
            "content hash mismatch (stored {}, computed {actual})",
            envelope.content_hash
        )));
    }
    let body = envelope.body;
    if body.format_version != FORMAT_VERSION {
        return Err(corrupt(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            body.format_version
        )));
    }
    body.model
        .validate()
        .map_err(|e| corrupt(format!("invalid model: {e}")))?;
    body.partition
        .validate()
        .map_err(|e| corrupt(format!("invalid partition: {e}")))?;
    body.rng.restore().map_err(corrupt)?;
    Ok(body)
}
