//! Discrete quadratures of an `N`-qubit qudit.
//!
//! The qudit has dimension `M = 2^N`. Its levels `|x_k>` are labelled by the
//! half-integers `k ∈ K = {-(M-1)/2, ..., -1/2, +1/2, ..., +(M-1)/2}` and are
//! realised by the qubit logical basis ordered by binary value, with qubit 1
//! (`j_1`) least significant:
//!
//! ```text
//! k = Σ_n j_n 2^(n-1) - (M-1)/2
//! ```
//!
//! Array index `i` therefore corresponds to level `k = i - (M-1)/2`.
//!
//! The position quadrature is `X_N = -Σ_n 2^(n-2) σ_z^(n)` (with
//! `σ_z|0> = +|0>`), which is diagonal with spectrum `K`. The centered Fourier
//! transform `F_N` maps it to the conjugate quadrature `Y_N = F_N X_N F_N†`,
//! and `D_x(s) = exp(-i 2π Y_N s / M)` translates the qudit through `X_N`.

mod circuit;
mod interp;
mod vstate;

pub use circuit::{qft_circuit, u_v_circuit, Circuit, Gate, U_V_MIN_FIDELITY};
pub use interp::{fourier_coeff, interpolate, Interpolant};
pub use vstate::{build_v_state, peak_width, PeakStats, VPrepParams, VALIDATED_THETA};

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of qubits `N` forming a qudit of dimension `M = 2^N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct QuditDims {
    n_qubits: usize,
}

impl QuditDims {
    pub const MAX_QUBITS: usize = 8;

    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > Self::MAX_QUBITS {
            return Err(Error::param(
                "n_qubits",
                format!("must lie in 1..={}, got {n_qubits}", Self::MAX_QUBITS),
            ));
        }
        Ok(Self { n_qubits })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Qudit dimension `M`.
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Level label `k` of array index `i`.
    pub fn level(&self, index: usize) -> f64 {
        index as f64 - (self.dim() as f64 - 1.0) / 2.0
    }

    /// Array index of level `k`, if `k ∈ K`.
    pub fn index_of(&self, k: f64) -> Option<usize> {
        let i = k + (self.dim() as f64 - 1.0) / 2.0;
        if i.fract() == 0.0 && i >= 0.0 && (i as usize) < self.dim() {
            Some(i as usize)
        } else {
            None
        }
    }

    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim()).map(move |i| self.level(i))
    }
}

impl TryFrom<usize> for QuditDims {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Self::new(n)
    }
}

impl From<QuditDims> for usize {
    fn from(d: QuditDims) -> usize {
        d.n_qubits
    }
}

/// The ordered level set `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexSet {
    values: Vec<f64>,
}

impl IndexSet {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }
}

pub fn index_set(dims: QuditDims) -> IndexSet {
    IndexSet {
        values: dims.levels().collect(),
    }
}

/// Normalised amplitude vector over `K`, in ascending order of `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuditState {
    dims: QuditDims,
    amplitudes: Array1<C64>,
}

impl QuditState {
    const NORM_TOL: f64 = 1e-12;

    /// Wraps an already normalised amplitude vector.
    pub fn new(dims: QuditDims, amplitudes: Array1<C64>) -> Result<Self> {
        check_len(dims, amplitudes.len())?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::param("amplitudes", format!("norm is {norm}, expected 1")));
        }
        Ok(Self { dims, amplitudes })
    }

    /// Normalises `amplitudes` and wraps them.
    pub fn normalized(dims: QuditDims, mut amplitudes: Array1<C64>) -> Result<Self> {
        check_len(dims, amplitudes.len())?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::param("amplitudes", "cannot normalise a zero vector"));
        }
        amplitudes.mapv_inplace(|a| a / norm);
        Ok(Self { dims, amplitudes })
    }

    /// Computational basis state `|x_k>` given by array index.
    pub fn basis(dims: QuditDims, index: usize) -> Result<Self> {
        if index >= dims.dim() {
            return Err(Error::param("index", format!("{index} out of range")));
        }
        let mut a = Array1::zeros(dims.dim());
        a[index] = C64::new(1.0, 0.0);
        Ok(Self { dims, amplitudes: a })
    }

    pub fn dims(&self) -> QuditDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    /// Amplitude `v_k` of level `k`.
    pub fn amplitude(&self, k: f64) -> Option<C64> {
        self.dims.index_of(k).map(|i| self.amplitudes[i])
    }

    pub fn inner(&self, other: &QuditState) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|²`.
    pub fn fidelity(&self, other: &QuditState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn check_len(dims: QuditDims, len: usize) -> Result<()> {
    if len != dims.dim() {
        return Err(Error::DimensionMismatch {
            expected: dims.dim(),
            actual: len,
        });
    }
    Ok(())
}

/// Dense `M × M` operator on the qudit.
#[derive(Clone, Debug, PartialEq)]
pub struct QuditOperator {
    matrix: Array2<C64>,
    diagonal: bool,
}

impl QuditOperator {
    pub fn from_matrix(matrix: Array2<C64>) -> Self {
        let diagonal = matrix
            .indexed_iter()
            .all(|((i, j), v)| i == j || *v == C64::new(0.0, 0.0));
        Self { matrix, diagonal }
    }

    pub fn from_diagonal(diag: impl IntoIterator<Item = C64>) -> Self {
        let d: Vec<C64> = diag.into_iter().collect();
        Self {
            matrix: Array2::from_diag(&Array1::from(d)),
            diagonal: true,
        }
    }

    pub fn identity(dims: QuditDims) -> Self {
        Self::from_diagonal(std::iter::repeat_n(C64::new(1.0, 0.0), dims.dim()))
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.t().mapv(|z| z.conj()),
            diagonal: self.diagonal,
        }
    }

    /// Operator product `self · rhs`.
    pub fn compose(&self, rhs: &QuditOperator) -> Self {
        Self {
            matrix: self.matrix.dot(&rhs.matrix),
            diagonal: self.diagonal && rhs.diagonal,
        }
    }

    pub fn apply(&self, state: &QuditState) -> QuditState {
        let amplitudes = if self.diagonal {
            &self.matrix.diag() * state.amplitudes()
        } else {
            self.matrix.dot(state.amplitudes())
        };
        QuditState {
            dims: state.dims,
            amplitudes,
        }
    }

    pub fn max_abs_diff(&self, other: &QuditOperator) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `U†U - I`.
    pub fn unitarity_error(&self) -> f64 {
        let prod = self.adjoint().matrix.dot(&self.matrix);
        prod.indexed_iter()
            .map(|((i, j), v)| (v - if i == j { 1.0 } else { 0.0 }).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `A - A†`.
    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Ascending eigenvalues of a Hermitian operator.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| self.matrix[[i, j]]);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// `σ_z` eigenvalue (`+1` for `|0>`) of qubit `n` (0-based, `n = 0` is `j_1`)
/// in basis state `index`.
pub(crate) fn sigma_z(index: usize, n: usize) -> f64 {
    if (index >> n) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `X_N = -Σ_n 2^(n-2) σ_z^(n)`, assembled qubit by qubit.
pub fn x_operator(dims: QuditDims) -> QuditOperator {
    let diag = (0..dims.dim()).map(|i| {
        let x: f64 = (0..dims.n_qubits())
            .map(|n| -(2f64).powi(n as i32 - 1) * sigma_z(i, n))
            .sum();
        C64::new(x, 0.0)
    });
    QuditOperator::from_diagonal(diag)
}

/// Centered Fourier transform
/// `F_N = M^(-1/2) Σ_{n,m∈K} exp(i2π(n-1/2)(m-1/2)/M) |x_m><x_n|`.
pub fn qft_matrix(dims: QuditDims) -> QuditOperator {
    let m = dims.dim();
    let scale = 1.0 / (m as f64).sqrt();
    let mf = m as f64;
    let matrix = Array2::from_shape_fn((m, m), |(row, col)| {
        // Integer offsets (n - 1/2) and (m - 1/2); reduce mod M before the
        // exponential to keep the phase argument small.
        let a = dims.level(row) - 0.5;
        let b = dims.level(col) - 0.5;
        let prod = (a * b).rem_euclid(mf);
        C64::from_polar(scale, 2.0 * PI * prod / mf)
    });
    QuditOperator {
        matrix,
        diagonal: m == 1,
    }
}

/// Conjugate quadrature `Y_N = F_N X_N F_N†`.
pub fn y_operator(dims: QuditDims) -> QuditOperator {
    let f = qft_matrix(dims);
    f.compose(&x_operator(dims)).compose(&f.adjoint())
}

/// Qudit translation `D_x(s) = exp(-i 2π Y_N s / M)`, evaluated in the
/// eigenbasis of `Y_N`.
pub fn displacement_dx(dims: QuditDims, s: f64) -> QuditOperator {
    let mf = dims.dim() as f64;
    let f = qft_matrix(dims);
    let phases = QuditOperator::from_diagonal(
        dims.levels()
            .map(|k| C64::from_polar(1.0, -2.0 * PI * k * s / mf)),
    );
    let mut d = f.compose(&phases).compose(&f.adjoint());
    d.diagonal = false;
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(n: usize) -> QuditDims {
        QuditDims::new(n).unwrap()
    }

    #[test]
    fn index_set_small_cases() {
        assert_eq!(index_set(dims(1)).values(), &[-0.5, 0.5]);
        assert_eq!(index_set(dims(2)).values(), &[-1.5, -0.5, 0.5, 1.5]);
        let k3 = index_set(dims(3));
        assert_eq!(k3.len(), 8);
        assert_eq!(k3.values()[0], -3.5);
        assert_eq!(k3.values()[7], 3.5);
        assert!(k3.iter().all(|k| k.fract() != 0.0));
    }

    #[test]
    fn dims_rejects_out_of_range() {
        assert!(QuditDims::new(0).is_err());
        assert!(QuditDims::new(9).is_err());
    }

    #[test]
    fn x_operator_matches_label_map() {
        let x2 = x_operator(dims(2));
        let d: Vec<f64> = x2.matrix().diag().iter().map(|z| z.re).collect();
        assert_eq!(d, vec![-1.5, -0.5, 0.5, 1.5]);
        let x1 = x_operator(dims(1));
        assert_eq!(x1.matrix()[[0, 0]].re, -0.5);
        assert_eq!(x1.matrix()[[1, 1]].re, 0.5);
        for n in 1..=6 {
            let tr: C64 = x_operator(dims(n)).matrix().diag().sum();
            assert!(tr.norm() < 1e-12);
        }
    }

    #[test]
    fn qft_single_qubit_entries() {
        let f = qft_matrix(dims(1));
        let s = 1.0 / 2f64.sqrt();
        let expected = [[-s, s], [s, s]];
        for (i, row) in expected.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                assert!((f.matrix()[[i, j]] - C64::new(e, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn qft_is_unitary() {
        for n in 1..=5 {
            assert!(qft_matrix(dims(n)).unitarity_error() < 1e-12, "N={n}");
        }
    }

    #[test]
    fn y_spectrum_is_index_set() {
        for n in 1..=4 {
            let y = y_operator(dims(n));
            assert!(y.hermiticity_error() < 1e-12);
            let ev = y.hermitian_eigenvalues();
            for (e, k) in ev.iter().zip(index_set(dims(n)).iter()) {
                assert!((e - k).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn displacement_identity_at_zero() {
        let d = displacement_dx(dims(3), 0.0);
        assert!(d.max_abs_diff(&QuditOperator::identity(dims(3))) < 1e-12);
    }

    #[test]
    fn displacement_by_m_is_minus_identity() {
        for n in 1..=4 {
            let d = displacement_dx(dims(n), dims(n).dim() as f64);
            let minus = QuditOperator::from_diagonal(
                std::iter::repeat_n(C64::new(-1.0, 0.0), dims(n).dim()),
            );
            assert!(d.max_abs_diff(&minus) < 1e-10);
        }
    }

    #[test]
    fn unit_step_raises_level() {
        for n in [2, 3] {
            let d = dims(n);
            let m = d.dim();
            let op = displacement_dx(d, 1.0);
            let phase = C64::from_polar(1.0, -PI / m as f64);
            for i in 0..m {
                let out = op.apply(&QuditState::basis(d, i).unwrap());
                let target = (i + 1) % m;
                for j in 0..m {
                    let want = if j == target { phase } else { C64::new(0.0, 0.0) };
                    assert!((out.amplitudes()[j] - want).norm() < 1e-10, "N={n} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn state_constructors_validate() {
        let d = dims(2);
        assert!(QuditState::new(d, Array1::from_elem(4, C64::new(1.0, 0.0))).is_err());
        assert!(QuditState::new(d, Array1::from_elem(3, C64::new(0.5, 0.0))).is_err());
        assert!(QuditState::normalized(d, Array1::zeros(4)).is_err());
        let s = QuditState::normalized(d, Array1::from_elem(4, C64::new(1.0, 1.0))).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert_eq!(s.amplitude(0.5), Some(s.amplitudes()[2]));
        assert_eq!(s.amplitude(1.0), None);
    }
}
