//! Dense statevector of an n-qubit register.
//!
//! Qubit 0 is the most significant bit of the basis index, so qubit `q` of an
//! `n`-qubit register lives at bit `n − 1 − q`. A two-qubit gate applied to
//! `(q_a, q_b)` sees `q_a` as the high bit of its 4×4 index.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_index, Error, Result};
use crate::gates::{Matrix2, Matrix4, UNITARITY_TOL};
use crate::math::sqrt;
use crate::C64;

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 24;

const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

fn check_budget(num_qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&num_qubits) {
        Ok(())
    } else {
        Err(Error::Capacity {
            requested: num_qubits,
            limit: MAX_QUBITS,
        })
    }
}

impl Statevector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_budget(num_qubits)?;
        let dim = 1usize << num_qubits;
        check_index(index, dim)?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Statevector { num_qubits, amplitudes })
    }

    /// Wraps amplitudes whose L2 norm is 1 within 1e-9.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let state = Self::from_amplitudes_unnormalized(amplitudes)?;
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(alloc::format!(
                "amplitude vector has norm {norm}, expected 1"
            )));
        }
        Ok(state)
    }

    /// Wraps amplitudes without a norm check. Gate application stays linear,
    /// which is what superposition tests need.
    pub fn from_amplitudes_unnormalized(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::Validation(alloc::format!(
                "amplitude vector length {len} is not a power of two ≥ 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_budget(num_qubits)?;
        Ok(Statevector { num_qubits, amplitudes })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.amplitudes.iter().map(|a| a.norm_sqr()).sum())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Result<C64> {
        crate::error::check_len("statevector", self.amplitudes.len(), other.amplitudes.len())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `self ⊗ other`; `other`'s qubits are appended after `self`'s.
    pub fn tensor(&self, other: &Statevector) -> Result<Statevector> {
        check_budget(self.num_qubits + other.num_qubits)?;
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * other.amplitudes.len());
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        Ok(Statevector {
            num_qubits: self.num_qubits + other.num_qubits,
            amplitudes,
        })
    }

    fn mask(&self, qubit: usize) -> Result<usize> {
        check_index(qubit, self.num_qubits)?;
        Ok(1 << (self.num_qubits - 1 - qubit))
    }

    /// Applies a 2×2 unitary to `target`. Fails if the matrix is not unitary
    /// within 1e-10.
    pub fn apply_single(&mut self, gate: &Matrix2, target: usize) -> Result<()> {
        if !gate.is_unitary(UNITARITY_TOL) {
            return Err(Error::Validation("single-qubit gate is not unitary".into()));
        }
        self.apply_single_unchecked(gate, target)
    }

    /// As [`apply_single`](Self::apply_single) without the unitarity check.
    pub fn apply_single_unchecked(&mut self, gate: &Matrix2, target: usize) -> Result<()> {
        let mask = self.mask(target)?;
        let [[a, b], [c, d]] = gate.0;
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let (x, y) = (self.amplitudes[i], self.amplitudes[i | mask]);
                self.amplitudes[i] = a * x + b * y;
                self.amplitudes[i | mask] = c * x + d * y;
            }
        }
        Ok(())
    }

    /// Applies a 4×4 unitary to the ordered pair `(q_a, q_b)`.
    pub fn apply_two(&mut self, gate: &Matrix4, q_a: usize, q_b: usize) -> Result<()> {
        if !gate.is_unitary(UNITARITY_TOL) {
            return Err(Error::Validation("two-qubit gate is not unitary".into()));
        }
        self.apply_two_unchecked(gate, q_a, q_b)
    }

    pub fn apply_two_unchecked(&mut self, gate: &Matrix4, q_a: usize, q_b: usize) -> Result<()> {
        let ma = self.mask(q_a)?;
        let mb = self.mask(q_b)?;
        if q_a == q_b {
            return Err(Error::Index {
                index: q_b,
                len: self.num_qubits,
            });
        }
        let g = &gate.0;
        for i in 0..self.amplitudes.len() {
            if i & (ma | mb) != 0 {
                continue;
            }
            let idx = [i, i | mb, i | ma, i | ma | mb];
            let v = idx.map(|k| self.amplitudes[k]);
            for (row, &k) in idx.iter().enumerate() {
                self.amplitudes[k] = g[row][0] * v[0] + g[row][1] * v[1] + g[row][2] * v[2] + g[row][3] * v[3];
            }
        }
        Ok(())
    }

    /// Exact `⟨Z⟩` on `readout`: Σ |amp_i|²·(±1) by the readout bit of `i`.
    pub fn expectation_z(&self, readout: usize) -> Result<f64> {
        let mask = self.mask(readout)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }
}
