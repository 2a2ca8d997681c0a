//! Parameter-shift derivatives of circuit expectations, plus a central
//! finite-difference oracle.
//!
//! Every trainable gate and every encoding rotation is generated by a Pauli
//! product with eigenvalues ±1, so
//! `∂E/∂θ = [E(θ + π/2) − E(θ − π/2)] / 2` holds exactly.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;
use core::ops::Deref;

use crate::error::{check_index, check_len, Error, Result};
use crate::gates::Axis;
use crate::product::ProductState;
use crate::vqc::{CircuitInput, CircuitSpec};

/// Shift applied on each side of the parameter.
pub const SHIFT: f64 = FRAC_PI_2;

/// Default step for [`finite_diff_grad`].
pub const DEFAULT_EPS: f64 = 1e-5;

/// Partial derivatives aligned with a parameter or input vector.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        GradientVector(alloc::vec![0.0; len])
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.0.iter_mut().for_each(|g| *g *= factor);
        self
    }

    /// `self += other`, elementwise.
    pub fn accumulate(&mut self, other: &GradientVector) -> Result<()> {
        check_len("gradient", self.0.len(), other.0.len())?;
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GradientVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for GradientVector {
    fn from(v: Vec<f64>) -> Self {
        GradientVector(v)
    }
}

/// `∂E/∂θ_k` by the two-term shift rule.
pub fn param_shift_grad<I: CircuitInput>(spec: &CircuitSpec, params: &[f64], input: &I, k: usize) -> Result<f64> {
    check_len("parameter vector", spec.num_params(), params.len())?;
    check_index(k, params.len())?;
    let mut shifted = params.to_vec();
    shifted[k] = params[k] + SHIFT;
    let plus = input.expectation(spec, &shifted)?;
    shifted[k] = params[k] - SHIFT;
    let minus = input.expectation(spec, &shifted)?;
    Ok((plus - minus) / 2.0)
}

/// All parameter partials.
///
/// Product-state inputs take a single backward sweep over the readout
/// branches; other inputs use the shift rule, `2·|params|` evaluations.
pub fn full_gradient<I: CircuitInput>(spec: &CircuitSpec, params: &[f64], input: &I) -> Result<GradientVector> {
    if let Some(g) = input.sweep_gradient(spec, params) {
        return g.map(GradientVector);
    }
    shift_gradient(spec, params, input)
}

/// All parameter partials by the shift rule alone.
pub fn shift_gradient<I: CircuitInput>(spec: &CircuitSpec, params: &[f64], input: &I) -> Result<GradientVector> {
    (0..params.len())
        .map(|k| param_shift_grad(spec, params, input, k))
        .collect::<Result<Vec<_>>>()
        .map(GradientVector)
}

/// `∂E/∂a_i` where data qubit `i` was prepared as `R_axis(a_i)|0⟩`.
pub fn input_grad(spec: &CircuitSpec, params: &[f64], input_angles: &[f64], axis: Axis, i: usize) -> Result<f64> {
    check_len("input angles", spec.num_data_qubits(), input_angles.len())?;
    check_index(i, input_angles.len())?;
    let mut shifted = input_angles.to_vec();
    shifted[i] = input_angles[i] + SHIFT;
    let plus = spec.evaluate_product(params, &ProductState::from_angles(&shifted, axis)?)?;
    shifted[i] = input_angles[i] - SHIFT;
    let minus = spec.evaluate_product(params, &ProductState::from_angles(&shifted, axis)?)?;
    Ok((plus - minus) / 2.0)
}

/// [`input_grad`] for every input angle.
pub fn input_gradient(spec: &CircuitSpec, params: &[f64], input_angles: &[f64], axis: Axis) -> Result<GradientVector> {
    (0..input_angles.len())
        .map(|i| input_grad(spec, params, input_angles, axis, i))
        .collect::<Result<Vec<_>>>()
        .map(GradientVector)
}

/// Central difference `[f(x + ε·e_i) − f(x − ε·e_i)] / 2ε`, with `ε ∈ [1e-7, 1e-3]`.
pub fn finite_diff_grad<F>(f: F, point: &[f64], i: usize, eps: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::Validation(alloc::format!(
            "finite-difference step {eps} outside [1e-7, 1e-3]"
        )));
    }
    check_index(i, point.len())?;
    let mut x = point.to_vec();
    x[i] = point[i] + eps;
    let plus = f(&x);
    x[i] = point[i] - eps;
    let minus = f(&x);
    Ok((plus - minus) / (2.0 * eps))
}
