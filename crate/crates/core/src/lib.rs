//! Simulation and training core for scalable quantum neural networks (SQNN).
//!
//! A classical input image is cut into segments, each segment is angle-encoded
//! onto a small simulated device whose variational circuit measures one local
//! feature, and a predictor circuit fuses the features into a binary score.
//! Every variational parameter is trained end to end with parameter-shift
//! gradients routed through the classical channel between devices.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. File formats, the CLI and thread pools live in the `sqnn` crate.
//!
//! Qubit 0 is the most significant bit of a basis-state index throughout.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dataset;
pub mod encoding;
pub mod error;
pub mod exec;
pub mod gates;
pub mod gradients;
pub mod orchestrator;
pub mod partition;
pub mod product;
pub mod statevector;
pub mod training;
pub mod vqc;

mod branched;
mod math;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use statevector::Statevector;
