//! Fixed and parameterized gate matrices.
//!
//! Rotations use the closed form `cos(θ/2)·I − i·sin(θ/2)·P` and Ising
//! couplings `cos(θ/2)·I₄ − i·sin(θ/2)·(P⊗P)`. Global phase is kept as is.

use core::fmt;
use core::ops::{Add, Mul};

use crate::error::{check_finite, Result};
use crate::math::sin_cos;
use crate::C64;

/// Tolerance used when a caller hands a gate to the statevector.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Pauli axis used by rotations, Ising couplings and encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Axis {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(Axis::X),
            "Y" | "y" => Ok(Axis::Y),
            "Z" | "z" => Ok(Axis::Z),
            other => Err(crate::Error::Config(alloc::format!(
                "unknown axis {other:?}, expected X, Y or Z"
            ))),
        }
    }
}

/// Dense square complex matrix; `N` is 2 for one-qubit and 4 for two-qubit gates.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix<const N: usize>(pub [[C64; N]; N]);

pub type Matrix2 = Matrix<2>;
pub type Matrix4 = Matrix<4>;

impl<const N: usize> fmt::Debug for Matrix<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl<const N: usize> Matrix<N> {
    pub fn zeros() -> Self {
        Matrix([[C64::new(0.0, 0.0); N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for (i, row) in m.0.iter_mut().enumerate() {
            row[i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                out.0[j][i] = self.0[i][j].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `U†U = I` within `tol` (entrywise).
    pub fn is_unitary(&self, tol: f64) -> bool {
        (self.dagger() * *self).max_abs_diff(&Self::identity()) <= tol
    }

    pub fn apply(&self, v: &[C64; N]) -> [C64; N] {
        let mut out = [C64::new(0.0, 0.0); N];
        for (o, row) in out.iter_mut().zip(self.0.iter()) {
            *o = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
        out
    }
}

impl<const N: usize> Mul for Matrix<N> {
    type Output = Matrix<N>;

    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                out.0[i][j] = (0..N).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        out
    }
}

impl<const N: usize> Add for Matrix<N> {
    type Output = Matrix<N>;

    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for (a, b) in out.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a += b;
        }
        out
    }
}

impl Matrix2 {
    /// `self ⊗ rhs`, with `self` acting on the more significant qubit.
    pub fn kron(&self, rhs: &Matrix2) -> Matrix4 {
        let mut out = Matrix4::zeros();
        for (i, j, k, l) in quad() {
            out.0[2 * i + k][2 * j + l] = self.0[i][j] * rhs.0[k][l];
        }
        out
    }
}

fn quad() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..16).map(|b| (b >> 3 & 1, b >> 2 & 1, b >> 1 & 1, b & 1))
}

const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli(axis: Axis) -> Matrix2 {
    match axis {
        Axis::X => Matrix([[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]),
        Axis::Y => Matrix([[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]]),
        Axis::Z => Matrix([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]),
    }
}

pub fn hadamard() -> Matrix2 {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    Matrix([[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]])
}

/// `R_P(θ) = exp(−i·P·θ/2)`.
pub fn rotation(axis: Axis, theta: f64) -> Result<Matrix2> {
    check_finite("theta", &[theta])?;
    Ok(rotation_raw(axis, theta))
}

pub(crate) fn rotation_raw(axis: Axis, theta: f64) -> Matrix2 {
    let (s, co) = sin_cos(theta / 2.0);
    // cos·I − i·sin·P, written out per axis so no rounding enters the zeros
    match axis {
        Axis::X => Matrix([[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]),
        Axis::Y => Matrix([[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]),
        Axis::Z => Matrix([[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]]),
    }
}

/// Ising coupling `R_PP(θ) = exp(−i·(P⊗P)·θ/2)`.
pub fn ising(axis: Axis, theta: f64) -> Result<Matrix4> {
    check_finite("theta", &[theta])?;
    Ok(ising_raw(axis, theta))
}

pub(crate) fn ising_raw(axis: Axis, theta: f64) -> Matrix4 {
    let (s, co) = sin_cos(theta / 2.0);
    let pp = pauli(axis).kron(&pauli(axis));
    let mut out = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let id = if i == j { co } else { 0.0 };
            // −i·s·pp[i][j]; pp entries are 0, ±1 so this is exact
            let p = pp.0[i][j];
            out.0[i][j] = c(id + s * p.im, -s * p.re);
        }
    }
    out
}
