//! Training, evaluation and file formats for scalable quantum neural network
//! experiments on MNIST digits.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod exec;
pub mod idx;
pub mod metrics;
pub mod presets;

pub use error::{CliError, Result};
