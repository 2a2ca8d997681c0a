//! Unentangled (product) register states.

use alloc::vec::Vec;

use crate::error::{check_finite, Error, Result};
use crate::gates::{rotation_raw, Axis};
use crate::statevector::{Statevector, MAX_QUBITS};
use crate::C64;

/// `⊗_j |φ_j⟩`, stored one two-component factor per qubit (qubit 0 first).
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    qubits: Vec<[C64; 2]>,
}

impl ProductState {
    pub fn new(qubits: Vec<[C64; 2]>) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::Validation("product state needs at least one qubit".into()));
        }
        Ok(ProductState { qubits })
    }

    /// `⊗_j R_axis(angle_j)|0⟩`.
    pub fn from_angles(angles: &[f64], axis: Axis) -> Result<Self> {
        check_finite("angle", angles)?;
        let qubits = angles
            .iter()
            .map(|&a| {
                let r = rotation_raw(axis, a);
                [r.0[0][0], r.0[1][0]]
            })
            .collect();
        Self::new(qubits)
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubits(&self) -> &[[C64; 2]] {
        &self.qubits
    }

    /// Dense expansion, qubit 0 as the most significant bit.
    pub fn to_statevector(&self) -> Result<Statevector> {
        if self.qubits.len() > MAX_QUBITS {
            return Err(Error::Capacity {
                requested: self.qubits.len(),
                limit: MAX_QUBITS,
            });
        }
        let mut amps: Vec<C64> = alloc::vec![C64::new(1.0, 0.0)];
        for q in &self.qubits {
            amps = amps.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
        }
        Statevector::from_amplitudes_unnormalized(amps)
    }
}
