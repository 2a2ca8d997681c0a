//! Classical-to-quantum encodings.
//!
//! Angle encoding is the one used by the training pipeline: it is the only
//! encoding here that is differentiable in its input.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{check_finite, Error, Result};
use crate::gates::Axis;
use crate::math::sqrt;
use crate::product::ProductState;
use crate::statevector::Statevector;
use crate::C64;

/// How a value in `[0, 1]` becomes a rotation angle.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct AngleEncodingConfig {
    pub axis: Axis,
    /// Radians per unit of input; must lie in `(0, 2π]`.
    pub scale: f64,
}

impl Default for AngleEncodingConfig {
    fn default() -> Self {
        AngleEncodingConfig {
            axis: Axis::X,
            scale: PI,
        }
    }
}

impl AngleEncodingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale > 0.0 && self.scale <= TAU {
            Ok(())
        } else {
            Err(Error::Config(alloc::format!(
                "angle scale {} outside (0, 2π]",
                self.scale
            )))
        }
    }

    pub fn angles(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        check_finite("input", x)?;
        Ok(x.iter().map(|v| v * self.scale).collect())
    }
}

/// Angle encoding as a product state; the cheap form the orchestrator uses.
pub fn angle_encode_product(x: &[f64], config: &AngleEncodingConfig) -> Result<ProductState> {
    ProductState::from_angles(&config.angles(x)?, config.axis)
}

/// `⊗_j R_axis(scale·x_j)|0⟩` as a dense statevector.
pub fn angle_encode(x: &[f64], config: &AngleEncodingConfig) -> Result<Statevector> {
    angle_encode_product(x, config)?.to_statevector()
}

/// `|b_1…b_n⟩` with `b_j = 1` iff `x_j ≥ threshold`.
pub fn basis_encode(x: &[f64], threshold: f64) -> Result<Statevector> {
    check_finite("input", x)?;
    check_finite("threshold", &[threshold])?;
    let index = x
        .iter()
        .fold(0usize, |acc, &v| (acc << 1) | usize::from(v >= threshold));
    Statevector::basis(x.len(), index)
}

/// Amplitudes `x_i / ‖x‖₂` on `log₂ n` qubits. No implicit padding.
pub fn amplitude_encode(x: &[f64]) -> Result<Statevector> {
    check_finite("input", x)?;
    if !x.len().is_power_of_two() || x.len() < 2 {
        return Err(Error::Shape {
            what: "amplitude encoding length (power of two ≥ 2)",
            expected: x.len().next_power_of_two().max(2),
            found: x.len(),
        });
    }
    let norm = sqrt(x.iter().map(|v| v * v).sum());
    if norm == 0.0 {
        return Err(Error::Validation("cannot amplitude-encode the zero vector".into()));
    }
    Statevector::from_amplitudes(x.iter().map(|v| C64::new(v / norm, 0.0)).collect())
}

/// `dθ/df` of [`feature_to_angle`] inside its unclamped range.
pub const FEATURE_ANGLE_SLOPE: f64 = FRAC_PI_2;

/// Maps a measured feature in `[−1, 1]` affinely onto `[0, π]`; values
/// outside the interval are clamped.
pub fn feature_to_angle(f: f64) -> f64 {
    (f.clamp(-1.0, 1.0) + 1.0) * FEATURE_ANGLE_SLOPE
}
