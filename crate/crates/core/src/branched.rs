// Exact evaluation of basic-model circuits on product-state inputs.
//
// Every gate is exp(−iθ/2·P_j⊗P_r) between a data qubit j and the readout r.
// If the readout is in an eigenstate of P_r with eigenvalue s, the gate acts on
// the data qubit alone as R_P(s·θ). The joint state is therefore kept as a sum
// of branches c_b·|e_b⟩_r ⊗ ⊗_j |φ_bj⟩, where |e_b⟩ is a readout eigenvector of
// the current block axis. A block whose axis differs from the branch basis
// splits each branch in two; blocks sharing the basis cost nothing extra.
// The number of branches is at most 2^(axis changes).

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use crate::gates::{rotation_raw, Axis, Matrix2};
use crate::product::ProductState;
use crate::vqc::{CircuitSpec, ReadoutPrep};
use crate::C64;

#[derive(Clone)]
struct Branch {
    coeff: C64,
    basis: Axis,
    positive: bool,
    data: Vec<[C64; 2]>,
}

fn eigvec(axis: Axis, positive: bool) -> [C64; 2] {
    let h = FRAC_1_SQRT_2;
    let s = if positive { 1.0 } else { -1.0 };
    match axis {
        Axis::X => [C64::new(h, 0.0), C64::new(s * h, 0.0)],
        Axis::Y => [C64::new(h, 0.0), C64::new(0.0, s * h)],
        Axis::Z => {
            if positive {
                [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
            } else {
                [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
            }
        }
    }
}

fn inner2(a: &[C64; 2], b: &[C64; 2]) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

fn apply2(m: &Matrix2, v: &[C64; 2]) -> [C64; 2] {
    [m.0[0][0] * v[0] + m.0[0][1] * v[1], m.0[1][0] * v[0] + m.0[1][1] * v[1]]
}

/// log2 of the worst-case branch count for `spec`.
pub(crate) fn branch_bound(spec: &CircuitSpec) -> usize {
    let mut basis = match spec.readout_prep() {
        ReadoutPrep::ZeroState => Axis::Z,
        ReadoutPrep::PlusState => Axis::X,
    };
    let mut changes = 0;
    for b in spec.blocks() {
        if b.axis != basis {
            changes += 1;
            basis = b.axis;
        }
    }
    changes
}

/// Caller has validated shapes and finiteness.
pub(crate) fn expectation(spec: &CircuitSpec, params: &[f64], input: &ProductState) -> f64 {
    let (basis, positive) = match spec.readout_prep() {
        ReadoutPrep::ZeroState => (Axis::Z, true),
        ReadoutPrep::PlusState => (Axis::X, true),
    };
    let mut branches = alloc::vec![Branch {
        coeff: C64::new(1.0, 0.0),
        basis,
        positive,
        data: input.qubits().to_vec(),
    }];

    for block in spec.blocks() {
        let axis = block.axis;
        if branches.iter().any(|b| b.basis != axis) {
            branches = split(branches, axis);
        }
        for (j, &k) in block.param_offsets.iter().enumerate() {
            let plus = rotation_raw(axis, params[k]);
            let minus = rotation_raw(axis, -params[k]);
            for b in &mut branches {
                let r = if b.positive { &plus } else { &minus };
                b.data[j] = apply2(r, &b.data[j]);
            }
        }
    }

    let readouts: Vec<[C64; 2]> = branches
        .iter()
        .map(|b| {
            let e = eigvec(b.basis, b.positive);
            [b.coeff * e[0], b.coeff * e[1]]
        })
        .collect();
    let mut total = 0.0;
    for (i, bi) in branches.iter().enumerate() {
        let ri = &readouts[i];
        total += ri[0].norm_sqr() - ri[1].norm_sqr();
        for (bj, rj) in branches.iter().zip(&readouts).skip(i + 1) {
            let z = ri[0].conj() * rj[0] - ri[1].conj() * rj[1];
            if z == C64::new(0.0, 0.0) {
                continue;
            }
            let overlap = bi.data.iter().zip(&bj.data).fold(z, |acc, (a, b)| acc * inner2(a, b));
            total += 2.0 * overlap.re;
        }
    }
    total
}

/// `∂⟨Z_r⟩/∂θ` for every parameter in one sweep.
///
/// Branch coefficients do not depend on θ, and the data qubits of a branch
/// evolve independently, so each parameter only enters the overlaps of its
/// own qubit. For each branch `b′` and qubit the sweep runs backwards through
/// the blocks, carrying `S†μ` where `S` is the rest of `b′`'s path and `μ`
/// sums the other branches' final states weighted by their pair terms.
pub(crate) fn gradient(spec: &CircuitSpec, params: &[f64], input: &ProductState) -> Vec<f64> {
    let n = spec.num_data_qubits();
    let blocks = spec.blocks();
    let (basis, positive) = match spec.readout_prep() {
        ReadoutPrep::ZeroState => (Axis::Z, true),
        ReadoutPrep::PlusState => (Axis::X, true),
    };
    let mut paths = alloc::vec![Branch {
        coeff: C64::new(1.0, 0.0),
        basis,
        positive,
        data: Vec::new(),
    }];
    // signs[b][m]: readout eigenvalue of branch b during block m
    let mut signs: Vec<Vec<bool>> = alloc::vec![Vec::new()];
    for block in blocks {
        if paths.iter().any(|b| b.basis != block.axis) {
            let mut next_signs = Vec::with_capacity(signs.len() * 2);
            let mut next = Vec::with_capacity(paths.len() * 2);
            for (b, history) in split_tracked(paths, block.axis) {
                next_signs.push(signs[history].clone());
                next.push(b);
            }
            paths = next;
            signs = next_signs;
        }
        for (b, history) in paths.iter().zip(&mut signs) {
            history.push(b.positive);
        }
    }

    // states[b][j][m]: data qubit j of branch b after block m
    let rot = |m: usize, j: usize, positive: bool| {
        let t = params[blocks[m].param_offsets[j]];
        rotation_raw(blocks[m].axis, if positive { t } else { -t })
    };
    let states: Vec<Vec<Vec<[C64; 2]>>> = signs
        .iter()
        .map(|history| {
            (0..n)
                .map(|j| {
                    let mut v = input.qubits()[j];
                    history
                        .iter()
                        .enumerate()
                        .map(|(m, &pos)| {
                            v = apply2(&rot(m, j, pos), &v);
                            v
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let last = |b: usize, j: usize| states[b][j].last().copied().unwrap_or(input.qubits()[j]);

    let readouts: Vec<[C64; 2]> = paths
        .iter()
        .map(|b| {
            let e = eigvec(b.basis, b.positive);
            [b.coeff * e[0], b.coeff * e[1]]
        })
        .collect();
    // mu[b′][j] = Σ_b conj(H) φ_bj, where H is the pair weight with qubit j's
    // overlap left out; the backward pass of b′ is linear in it.
    let zero = C64::new(0.0, 0.0);
    let mut mu = alloc::vec![alloc::vec![[zero; 2]; n]; paths.len()];
    let mut prefix = alloc::vec![zero; n + 1];
    for (b, rb) in readouts.iter().enumerate() {
        for (b2, rb2) in readouts.iter().enumerate() {
            let k = rb[0].conj() * rb2[0] - rb[1].conj() * rb2[1];
            if k == zero {
                continue;
            }
            let overlaps: Vec<C64> = (0..n).map(|j| inner2(&last(b, j), &last(b2, j))).collect();
            prefix[0] = k;
            for j in 0..n {
                prefix[j + 1] = prefix[j] * overlaps[j];
            }
            let mut suffix = C64::new(1.0, 0.0);
            for j in (0..n).rev() {
                let h = (prefix[j] * suffix).conj();
                suffix *= overlaps[j];
                let phi = last(b, j);
                mu[b2][j][0] += h * phi[0];
                mu[b2][j][1] += h * phi[1];
            }
        }
    }

    let half_i = C64::new(0.0, -0.5);
    let mut grad = alloc::vec![0.0; params.len()];
    for (b2, history) in signs.iter().enumerate() {
        for j in 0..n {
            let mut lambda = mu[b2][j];
            for m in (0..blocks.len()).rev() {
                let pos = history[m];
                let p = pauli_apply(blocks[m].axis, &states[b2][j][m]);
                let s = if pos { half_i } else { -half_i };
                grad[blocks[m].param_offsets[j]] += 2.0 * (inner2(&lambda, &p) * s).re;
                lambda = apply2(&rot(m, j, !pos), &lambda);
            }
        }
    }
    grad
}

fn pauli_apply(axis: Axis, v: &[C64; 2]) -> [C64; 2] {
    match axis {
        Axis::X => [v[1], v[0]],
        Axis::Y => [C64::new(0.0, -1.0) * v[1], C64::new(0.0, 1.0) * v[0]],
        Axis::Z => [v[0], -v[1]],
    }
}

/// [`split`] that also reports which input branch each output came from.
fn split_tracked(branches: Vec<Branch>, axis: Axis) -> Vec<(Branch, usize)> {
    let mut out = Vec::with_capacity(branches.len() * 2);
    for (i, b) in branches.into_iter().enumerate() {
        out.extend(split(alloc::vec![b], axis).into_iter().map(|s| (s, i)));
    }
    out
}

fn split(branches: Vec<Branch>, axis: Axis) -> Vec<Branch> {
    let targets = [eigvec(axis, true), eigvec(axis, false)];
    let mut out = Vec::with_capacity(branches.len() * 2);
    for b in branches {
        if b.basis == axis {
            out.push(b);
            continue;
        }
        let current = eigvec(b.basis, b.positive);
        for (positive, target) in [(true, &targets[0]), (false, &targets[1])] {
            let c = inner2(target, &current) * b.coeff;
            if c != C64::new(0.0, 0.0) {
                out.push(Branch {
                    coeff: c,
                    basis: axis,
                    positive,
                    data: b.data.clone(),
                });
            }
        }
    }
    out
}
