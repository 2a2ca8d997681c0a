//! Layered variational circuits ("basic model").
//!
//! A circuit has `n` data qubits followed by one readout qubit (index `n`).
//! Each block applies one Ising coupling `R_PP(θ)` between every data qubit
//! and the readout, data qubits in ascending order, one parameter per gate.
//! The output is `⟨Z⟩` on the readout.

use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use rand::Rng;

use crate::error::{check_finite, check_len, Error, Result};
use crate::gates::{hadamard, ising_raw, Axis, Matrix4};
use crate::product::ProductState;
use crate::statevector::Statevector;

/// Preparation of the readout qubit before the first block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ReadoutPrep {
    /// `|0⟩`; an all-zero-parameter circuit outputs +1.
    ZeroState,
    /// `H|0⟩`; an all-zero-parameter circuit outputs 0.
    #[default]
    PlusState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Block {
    pub axis: Axis,
    /// `param_offsets[j]` is the parameter of the gate on data qubit `j`.
    pub param_offsets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CircuitSpec {
    num_data_qubits: usize,
    readout_prep: ReadoutPrep,
    blocks: Vec<Block>,
}

/// Trainable rotation angles, in radians.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite("param", &values)?;
        Ok(ParamVector(values))
    }

    pub fn zeros(len: usize) -> Self {
        ParamVector(alloc::vec![0.0; len])
    }

    /// Independent draws from `U[−π, π)`.
    pub fn random_uniform<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        use core::f64::consts::PI;
        ParamVector((0..len).map(|_| rng.gen_range(-PI..PI)).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

/// One concrete gate of a bound circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundGate {
    pub matrix: Matrix4,
    /// `(data qubit, readout qubit)`.
    pub qubits: (usize, usize),
    pub param_index: usize,
}

/// Builds `n_blocks` blocks on `n_data` data qubits, block `k` using
/// `axis_sequence[k mod len]`. Parameter `k·n_data + j` drives the gate on
/// data qubit `j` in block `k`.
pub fn build_basic_model(n_data: usize, n_blocks: usize, axis_sequence: &[Axis]) -> Result<CircuitSpec> {
    if n_data == 0 || n_blocks == 0 || axis_sequence.is_empty() {
        return Err(Error::Validation(alloc::format!(
            "basic model needs n_data ≥ 1, n_blocks ≥ 1 and a nonempty axis sequence \
             (got {n_data}, {n_blocks}, {} axes)",
            axis_sequence.len()
        )));
    }
    let blocks = (0..n_blocks)
        .map(|k| Block {
            axis: axis_sequence[k % axis_sequence.len()],
            param_offsets: (k * n_data..(k + 1) * n_data).collect(),
        })
        .collect();
    CircuitSpec::new(n_data, ReadoutPrep::default(), blocks)
}

/// The inputs a circuit can be evaluated on.
pub trait CircuitInput {
    fn num_qubits(&self) -> usize;

    fn expectation(&self, spec: &CircuitSpec, params: &[f64]) -> Result<f64>;

    /// Every parameter partial at once, when the input admits something
    /// cheaper than shifting each parameter.
    fn sweep_gradient(&self, _spec: &CircuitSpec, _params: &[f64]) -> Option<Result<Vec<f64>>> {
        None
    }
}

impl CircuitInput for Statevector {
    fn num_qubits(&self) -> usize {
        Statevector::num_qubits(self)
    }

    fn expectation(&self, spec: &CircuitSpec, params: &[f64]) -> Result<f64> {
        spec.evaluate(params, self)
    }
}

impl CircuitInput for ProductState {
    fn num_qubits(&self) -> usize {
        ProductState::num_qubits(self)
    }

    fn expectation(&self, spec: &CircuitSpec, params: &[f64]) -> Result<f64> {
        spec.evaluate_product(params, self)
    }

    fn sweep_gradient(&self, spec: &CircuitSpec, params: &[f64]) -> Option<Result<Vec<f64>>> {
        if crate::branched::branch_bound(spec) > spec.num_qubits() {
            return None;
        }
        Some(
            check_len("input qubits", spec.num_data_qubits, self.num_qubits())
                .and_then(|_| spec.check_params(params))
                .map(|_| crate::branched::gradient(spec, params, self)),
        )
    }
}

impl CircuitSpec {
    pub fn new(num_data_qubits: usize, readout_prep: ReadoutPrep, blocks: Vec<Block>) -> Result<Self> {
        let spec = CircuitSpec {
            num_data_qubits,
            readout_prep,
            blocks,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the structural invariants; deserialized specs should be run
    /// through this before use.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_data_qubits;
        if n == 0 {
            return Err(Error::Validation("circuit needs at least one data qubit".into()));
        }
        if self.blocks.is_empty() {
            return Err(Error::Validation("circuit needs at least one block".into()));
        }
        let total = self.num_params();
        let mut seen = alloc::vec![false; total];
        for block in &self.blocks {
            check_len("block gates", n, block.param_offsets.len())?;
            for &k in &block.param_offsets {
                if k >= total || seen[k] {
                    return Err(Error::Validation(alloc::format!(
                        "parameter offset {k} is out of range or reused"
                    )));
                }
                seen[k] = true;
            }
        }
        Ok(())
    }

    pub fn with_readout(mut self, prep: ReadoutPrep) -> Self {
        self.readout_prep = prep;
        self
    }

    pub fn num_data_qubits(&self) -> usize {
        self.num_data_qubits
    }

    /// Always 1: the circuits here serve binary tasks.
    pub fn num_readout_qubits(&self) -> usize {
        1
    }

    pub fn num_qubits(&self) -> usize {
        self.num_data_qubits + 1
    }

    pub fn readout_qubit(&self) -> usize {
        self.num_data_qubits
    }

    pub fn readout_prep(&self) -> ReadoutPrep {
        self.readout_prep
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_params(&self) -> usize {
        self.blocks.len() * self.num_data_qubits
    }

    pub(crate) fn check_params(&self, params: &[f64]) -> Result<()> {
        check_len("parameter vector", self.num_params(), params.len())?;
        check_finite("param", params)
    }

    /// Concrete gate list in application order.
    pub fn bind(&self, params: &[f64]) -> Result<Vec<BoundGate>> {
        self.check_params(params)?;
        let readout = self.readout_qubit();
        Ok(self
            .blocks
            .iter()
            .flat_map(|b| {
                b.param_offsets.iter().enumerate().map(move |(j, &k)| BoundGate {
                    matrix: ising_raw(b.axis, params[k]),
                    qubits: (j, readout),
                    param_index: k,
                })
            })
            .collect())
    }

    /// `⟨Z_readout⟩` after running the circuit on a dense input register.
    pub fn evaluate(&self, params: &[f64], input: &Statevector) -> Result<f64> {
        check_len("input qubits", self.num_data_qubits, input.num_qubits())?;
        let gates = self.bind(params)?;
        let mut readout = Statevector::zero(1)?;
        if self.readout_prep == ReadoutPrep::PlusState {
            readout.apply_single_unchecked(&hadamard(), 0)?;
        }
        let mut state = input.tensor(&readout)?;
        for g in &gates {
            state.apply_two_unchecked(&g.matrix, g.qubits.0, g.qubits.1)?;
        }
        Ok(state.expectation_z(self.readout_qubit())?.clamp(-1.0, 1.0))
    }

    /// Same value as [`evaluate`](Self::evaluate) for a product-state input,
    /// computed without materializing the `2^(n+1)` register.
    pub fn evaluate_product(&self, params: &[f64], input: &ProductState) -> Result<f64> {
        check_len("input qubits", self.num_data_qubits, input.num_qubits())?;
        self.check_params(params)?;
        if crate::branched::branch_bound(self) > self.num_qubits() {
            let e = self.evaluate(params, &input.to_statevector()?)?;
            return Ok(e);
        }
        Ok(crate::branched::expectation(self, params, input).clamp(-1.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{angle_encode_product, AngleEncodingConfig};
    use core::f64::consts::PI;

    const DEFAULT_AXES: [Axis; 2] = [Axis::X, Axis::Z];

    #[test]
    fn parameter_counts() {
        assert_eq!(build_basic_model(16, 3, &DEFAULT_AXES).unwrap().num_params(), 48);
        assert_eq!(build_basic_model(4, 6, &DEFAULT_AXES).unwrap().num_params(), 24);
        let one = build_basic_model(4, 1, &[Axis::X]).unwrap();
        assert_eq!(one.blocks().len(), 1);
        assert_eq!(one.blocks()[0].axis, Axis::X);
        assert_eq!(one.bind(&[0.1; 4]).unwrap().len(), 4);
        assert!(matches!(
            build_basic_model(0, 3, &DEFAULT_AXES),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            build_basic_model(4, 0, &DEFAULT_AXES),
            Err(Error::Validation(_))
        ));
        assert!(matches!(build_basic_model(4, 3, &[]), Err(Error::Validation(_))));
    }

    #[test]
    fn axis_sequence_cycles() {
        let spec = build_basic_model(2, 5, &[Axis::X, Axis::Y, Axis::Z]).unwrap();
        let axes: Vec<Axis> = spec.blocks().iter().map(|b| b.axis).collect();
        assert_eq!(axes, [Axis::X, Axis::Y, Axis::Z, Axis::X, Axis::Y]);
    }

    #[test]
    fn bind_structure() {
        let spec = build_basic_model(16, 3, &DEFAULT_AXES).unwrap();
        let zeros = ParamVector::zeros(48);
        let gates = spec.bind(&zeros).unwrap();
        assert_eq!(gates.len(), 48);
        assert!(gates
            .iter()
            .all(|g| g.matrix.max_abs_diff(&Matrix4::identity()) < 1e-12));
        assert_eq!(gates[17].qubits, (1, 16));
        assert_eq!(gates[17].param_index, 17);

        let mut p = zeros.clone();
        p[20] = 0.9;
        let moved = spec.bind(&p).unwrap();
        for (i, (a, b)) in gates.iter().zip(&moved).enumerate() {
            assert_eq!(a == b, i != 20, "gate {i}");
        }
        assert!(matches!(spec.bind(&[0.0; 3]), Err(Error::Shape { .. })));
    }

    #[test]
    fn zero_params_output_readout_prep() {
        let cfg = AngleEncodingConfig::default();
        let x = [0.2, 0.9, 0.4];
        let input = angle_encode_product(&x, &cfg).unwrap();
        let spec = build_basic_model(3, 2, &DEFAULT_AXES).unwrap();
        let zeros = ParamVector::zeros(6);
        assert!(spec.evaluate_product(&zeros, &input).unwrap().abs() < 1e-12);
        assert!(spec.evaluate(&zeros, &input.to_statevector().unwrap()).unwrap().abs() < 1e-12);
        let spec = spec.with_readout(ReadoutPrep::ZeroState);
        assert!((spec.evaluate_product(&zeros, &input).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rxx_pi_flips_readout() {
        let spec = build_basic_model(1, 1, &[Axis::X])
            .unwrap()
            .with_readout(ReadoutPrep::ZeroState);
        let input = Statevector::zero(1).unwrap();
        assert!((spec.evaluate(&[PI], &input).unwrap() + 1.0).abs() < 1e-12);
        let product = ProductState::from_angles(&[0.0], Axis::X).unwrap();
        assert!((spec.evaluate_product(&[PI], &product).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let spec = build_basic_model(2, 1, &[Axis::Y]).unwrap();
        let wrong = Statevector::zero(3).unwrap();
        assert!(matches!(spec.evaluate(&[0.0, 0.0], &wrong), Err(Error::Shape { .. })));
        let input = Statevector::zero(2).unwrap();
        assert!(matches!(spec.evaluate(&[0.0], &input), Err(Error::Shape { .. })));
        assert!(matches!(
            spec.evaluate(&[0.0, f64::NAN], &input),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let dup = alloc::vec![Block {
            axis: Axis::X,
            param_offsets: alloc::vec![0, 0],
        }];
        assert!(CircuitSpec::new(2, ReadoutPrep::PlusState, dup).is_err());
        let short = alloc::vec![Block {
            axis: Axis::X,
            param_offsets: alloc::vec![0],
        }];
        assert!(CircuitSpec::new(2, ReadoutPrep::PlusState, short).is_err());
        assert!(CircuitSpec::new(2, ReadoutPrep::PlusState, Vec::new()).is_err());
    }

    #[test]
    fn x_and_z_blocks_cannot_move_a_plus_readout() {
        // X_r·∏X_j and the Y-Z-plane data states together force ⟨Z_r⟩ = 0
        // whenever no block uses Y
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for axes in [[Axis::X, Axis::Z], [Axis::Z, Axis::X], [Axis::X, Axis::X]] {
            let spec = build_basic_model(3, 3, &axes).unwrap();
            for _ in 0..10 {
                let params: Vec<f64> = (0..9).map(|_| rng.gen_range(-PI..PI)).collect();
                let angles: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..PI)).collect();
                let input = ProductState::from_angles(&angles, Axis::X).unwrap();
                assert!(spec.evaluate_product(&params, &input).unwrap().abs() < 1e-12);
            }
        }
        let with_y = build_basic_model(3, 3, &[Axis::Y, Axis::Z]).unwrap();
        let input = ProductState::from_angles(&[0.4, 1.3, 2.2], Axis::X).unwrap();
        assert!(with_y.evaluate_product(&[0.7; 9], &input).unwrap().abs() > 1e-3);
    }
}
