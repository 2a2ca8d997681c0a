//! Per-epoch metrics CSV.
//!
//! Schema 1 columns: `epoch,mean_train_loss,val_accuracy,seconds`. Floats use
//! the shortest representation that reads back to the same value; `seconds`
//! has millisecond resolution and is `0.000` when timing is disabled.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use sqnn_core::training::EpochMetrics;

use crate::error::{CliError, Result};

pub const METRICS_SCHEMA: u32 = 1;
pub const HEADER: &str = "epoch,mean_train_loss,val_accuracy,seconds";

pub fn format_row(m: &EpochMetrics) -> String {
    format!("{},{},{},{:.3}", m.epoch, m.mean_train_loss, m.val_accuracy, m.seconds)
}

/// Appends one row per finished epoch, flushing each row.
pub struct MetricsWriter {
    out: BufWriter<File>,
    context: String,
}

impl MetricsWriter {
    /// Starts a fresh file holding the header and any rows already recorded.
    pub fn create(path: &Path, existing: &[EpochMetrics]) -> Result<Self> {
        let context = format!("writing {}", path.display());
        let file = File::create(path).map_err(|e| CliError::io(&context, e))?;
        let mut w = MetricsWriter {
            out: BufWriter::new(file),
            context,
        };
        w.line(HEADER)?;
        for m in existing {
            w.append(m)?;
        }
        Ok(w)
    }

    pub fn append(&mut self, m: &EpochMetrics) -> Result<()> {
        self.line(&format_row(m))
    }

    fn line(&mut self, text: &str) -> Result<()> {
        writeln!(self.out, "{text}")
            .and_then(|_| self.out.flush())
            .map_err(|e| CliError::io(&self.context, e))
    }
}

/// Parses a metrics file written by [`MetricsWriter`].
pub fn read(path: &Path) -> Result<Vec<EpochMetrics>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let bad = |line: usize, msg: &str| CliError::Data(format!("{}:{line}: {msg}", path.display()));
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(i + 2, "expected 4 columns"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 2, "not a number"));
            Ok(EpochMetrics {
                epoch: f[0].parse().map_err(|_| bad(i + 2, "bad epoch"))?,
                mean_train_loss: num(f[1])?,
                val_accuracy: num(f[2])?,
                seconds: num(f[3])?,
            })
        })
        .collect()
}
