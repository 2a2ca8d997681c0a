use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the simulation and training core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A register or device is asked to hold more qubits than it can.
    Capacity { requested: usize, limit: usize },
    /// A value is outside its admissible domain (non-finite angle, non-unitary gate, ...).
    Validation(String),
    /// A qubit or parameter index is out of range, or two indices collide.
    Index { index: usize, len: usize },
    /// Two lengths that must agree do not.
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// No tiling of the image satisfies the requested device capacities.
    Partition(String),
    /// An unknown or inconsistent configuration value.
    Config(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Capacity { requested, limit } => {
                write!(f, "capacity exceeded: {requested} qubits requested, limit is {limit}")
            }
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::Index { index, len } => write!(f, "index {index} out of range for length {len}"),
            Error::Shape { what, expected, found } => {
                write!(f, "shape mismatch for {what}: expected {expected}, found {found}")
            }
            Error::Partition(msg) => write!(f, "partition error: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Shape { what, expected, found })
    }
}

pub(crate) fn check_index(index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::Index { index, len })
    }
}

pub(crate) fn check_finite(what: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::Validation(alloc::format!(
            "{what}[{i}] is not finite ({})",
            values[i]
        ))),
    }
}
