//! Joint qubit–oscillator density matrices and the master equation in the
//! displaced frame.
//!
//! The joint index is `b·F + n` for qubit basis state `b` and Fock level
//! `n < F`. Every operator in the equation is either diagonal in `b` or, for
//! qubit decay, maps block `(b, c)` onto blocks with more bits set, so the
//! state is stored and evolved as its upper blocks `b ≤ c` only.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::oscillator::FockVector;
use crate::qudit::{sigma_z, QuditState};
use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

fn upper_index(b: usize, c: usize, m: usize) -> usize {
    b * m - b * b.saturating_sub(1) / 2 + (c - b)
}

/// Density matrix of `N` qubits and one oscillator truncated at `cutoff`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDensityMatrix {
    n_qubits: usize,
    fock_dim: usize,
    /// Upper blocks `(b, c)`, `b ≤ c`, row-major `F × F` each.
    upper: Vec<Vec<C64>>,
}

impl JointDensityMatrix {
    /// `|q><q| ⊗ |f><f|`.
    pub fn product(qubits: &QuditState, osc: &FockVector) -> Self {
        let m = qubits.dims().dim();
        let f = osc.cutoff() + 1;
        let (v, c) = (qubits.amplitudes(), osc.coeffs());
        let mut upper = Vec::with_capacity(m * (m + 1) / 2);
        for b in 0..m {
            for cc in b..m {
                let w = v[b] * v[cc].conj();
                let mut blk = vec![ZERO; f * f];
                if w != ZERO {
                    for n in 0..f {
                        for k in 0..f {
                            blk[n * f + k] = w * c[n] * c[k].conj();
                        }
                    }
                }
                upper.push(blk);
            }
        }
        Self {
            n_qubits: qubits.dims().n_qubits(),
            fock_dim: f,
            upper,
        }
    }

    /// Builds from a dense `(M·F) × (M·F)` matrix, keeping its upper blocks.
    pub fn from_dense(n_qubits: usize, cutoff: usize, dense: &Array2<C64>) -> Result<Self> {
        let m = 1usize << n_qubits;
        let f = cutoff + 1;
        if dense.dim() != (m * f, m * f) {
            return Err(Error::DimensionMismatch {
                expected: m * f,
                actual: dense.nrows(),
            });
        }
        let mut upper = Vec::with_capacity(m * (m + 1) / 2);
        for b in 0..m {
            for c in b..m {
                let mut blk = vec![ZERO; f * f];
                for n in 0..f {
                    for k in 0..f {
                        blk[n * f + k] = dense[[b * f + n, c * f + k]];
                    }
                }
                upper.push(blk);
            }
        }
        Ok(Self {
            n_qubits,
            fock_dim: f,
            upper,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn qubit_dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn cutoff(&self) -> usize {
        self.fock_dim - 1
    }

    fn idx(&self, b: usize, c: usize) -> usize {
        upper_index(b, c, self.qubit_dim())
    }

    /// Block `ρ_bc` as an `F × F` matrix.
    pub fn block(&self, b: usize, c: usize) -> Array2<C64> {
        let f = self.fock_dim;
        if b <= c {
            let blk = &self.upper[self.idx(b, c)];
            Array2::from_shape_fn((f, f), |(n, k)| blk[n * f + k])
        } else {
            let blk = &self.upper[self.idx(c, b)];
            Array2::from_shape_fn((f, f), |(n, k)| blk[k * f + n].conj())
        }
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let (m, f) = (self.qubit_dim(), self.fock_dim);
        let mut out = Array2::zeros((m * f, m * f));
        for b in 0..m {
            for c in 0..m {
                let blk = self.block(b, c);
                out.slice_mut(ndarray::s![b * f..(b + 1) * f, c * f..(c + 1) * f])
                    .assign(&blk);
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        let f = self.fock_dim;
        (0..self.qubit_dim())
            .map(|b| {
                let blk = &self.upper[self.idx(b, b)];
                (0..f).map(|n| blk[n * f + n].re).sum::<f64>()
            })
            .sum()
    }

    /// Largest deviation of the diagonal blocks from Hermiticity; the
    /// off-diagonal blocks are Hermitian by construction.
    pub fn hermiticity_error(&self) -> f64 {
        let f = self.fock_dim;
        let mut err: f64 = 0.0;
        for b in 0..self.qubit_dim() {
            let blk = &self.upper[self.idx(b, b)];
            for n in 0..f {
                for k in n..f {
                    err = err.max((blk[n * f + k] - blk[k * f + n].conj()).norm());
                }
            }
        }
        err
    }

    /// Oscillator state `Σ_b ρ_bb` in the Fock basis.
    pub fn reduce_oscillator(&self) -> Array2<C64> {
        let f = self.fock_dim;
        let mut out = Array2::zeros((f, f));
        for b in 0..self.qubit_dim() {
            let blk = &self.upper[self.idx(b, b)];
            for n in 0..f {
                for k in 0..f {
                    out[[n, k]] += blk[n * f + k];
                }
            }
        }
        out
    }

    /// Qubit state `σ_bc = Tr ρ_bc`.
    pub fn reduce_qubits(&self) -> Array2<C64> {
        let f = self.fock_dim;
        Array2::from_shape_fn((self.qubit_dim(), self.qubit_dim()), |(b, c)| {
            let blk = self.block(b, c);
            (0..f).map(|n| blk[[n, n]]).sum()
        })
    }

    /// Population of the two highest Fock levels.
    pub fn fock_tail(&self) -> f64 {
        let rho = self.reduce_oscillator();
        let f = self.fock_dim;
        (f.saturating_sub(2)..f).map(|n| rho[[n, n]].re).sum()
    }

    /// `(U ⊗ I) ρ (U† ⊗ I)` for a qubit unitary `U`.
    pub fn apply_qubit_unitary(&mut self, u: &Array2<C64>) {
        let m = self.qubit_dim();
        let f = self.fock_dim;
        let full: Vec<Array2<C64>> = (0..m * m).map(|i| self.block(i / m, i % m)).collect();
        let mut upper = Vec::with_capacity(self.upper.len());
        for b in 0..m {
            for c in b..m {
                let mut acc = Array2::<C64>::zeros((f, f));
                for bp in 0..m {
                    let ub = u[[b, bp]];
                    if ub == ZERO {
                        continue;
                    }
                    for cp in 0..m {
                        let w = ub * u[[c, cp]].conj();
                        if w == ZERO {
                            continue;
                        }
                        acc.scaled_add(w, &full[bp * m + cp]);
                    }
                }
                upper.push(acc.iter().copied().collect());
            }
        }
        self.upper = upper;
    }

    /// Restores exact Hermiticity of the diagonal blocks.
    fn symmetrize(&mut self) {
        let f = self.fock_dim;
        for b in 0..self.qubit_dim() {
            let i = self.idx(b, b);
            let blk = &mut self.upper[i];
            for n in 0..f {
                blk[n * f + n].im = 0.0;
                for k in n + 1..f {
                    let avg = 0.5 * (blk[n * f + k] + blk[k * f + n].conj());
                    blk[n * f + k] = avg;
                    blk[k * f + n] = avg.conj();
                }
            }
        }
    }
}

/// Tridiagonal `F × F` operator.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Tridiagonal {
    pub diag: Vec<C64>,
    /// `T[n][n+1]`.
    pub upper: Vec<C64>,
    /// `T[n+1][n]`.
    pub lower: Vec<C64>,
}

impl Tridiagonal {
    /// `s·a†a + α a† + α* a`.
    pub(crate) fn displaced_number(f: usize, number: f64, alpha: C64) -> Self {
        Self {
            diag: (0..f).map(|n| C64::new(number * n as f64, 0.0)).collect(),
            upper: (0..f - 1)
                .map(|n| alpha.conj() * ((n + 1) as f64).sqrt())
                .collect(),
            lower: (0..f - 1).map(|n| alpha * ((n + 1) as f64).sqrt()).collect(),
        }
    }

    pub(crate) fn to_dense(&self) -> Array2<C64> {
        let f = self.diag.len();
        Array2::from_shape_fn((f, f), |(r, c)| {
            if r == c {
                self.diag[r]
            } else if c == r + 1 {
                self.upper[r]
            } else if r == c + 1 {
                self.lower[c]
            } else {
                ZERO
            }
        })
    }

    /// `out = T x`.
    fn left(&self, x: &[C64], out: &mut [C64]) {
        let f = self.diag.len();
        for n in 0..f {
            let row = &mut out[n * f..(n + 1) * f];
            let d = self.diag[n];
            let xr = &x[n * f..(n + 1) * f];
            for j in 0..f {
                row[j] = d * xr[j];
            }
            if n + 1 < f {
                let u = self.upper[n];
                let xn = &x[(n + 1) * f..(n + 2) * f];
                for j in 0..f {
                    row[j] += u * xn[j];
                }
            }
            if n > 0 {
                let l = self.lower[n - 1];
                let xp = &x[(n - 1) * f..n * f];
                for j in 0..f {
                    row[j] += l * xp[j];
                }
            }
        }
    }

    /// `out = x T`.
    fn right(&self, x: &[C64], out: &mut [C64]) {
        let f = self.diag.len();
        for i in 0..f {
            let xr = &x[i * f..(i + 1) * f];
            let row = &mut out[i * f..(i + 1) * f];
            for m in 0..f {
                let mut acc = xr[m] * self.diag[m];
                if m > 0 {
                    acc += xr[m - 1] * self.upper[m - 1];
                }
                if m + 1 < f {
                    acc += xr[m + 1] * self.lower[m];
                }
                row[m] = acc;
            }
        }
    }
}

/// Rates entering the master equation, in units of `χ`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Rates {
    pub kappa_l: f64,
    pub kappa_phi: f64,
    pub gamma_l: f64,
    pub gamma_phi: f64,
}

/// Generator for one constant-`α` segment.
pub(crate) struct Lindbladian {
    m: usize,
    f: usize,
    n_qubits: usize,
    /// `Z_b/2 = ½ Σ_n χ⁽ⁿ⁾ z_n(b)`.
    half_z: Vec<f64>,
    h0: Tridiagonal,
    /// Dephasing operator when it differs from `h0`.
    dephasing: Option<Tridiagonal>,
    rates: Rates,
    pairs: Vec<(usize, usize)>,
}

impl Lindbladian {
    pub(crate) fn new(
        n_qubits: usize,
        fock_dim: usize,
        chi: f64,
        alpha: C64,
        number_term: bool,
        rates: Rates,
    ) -> Self {
        let m = 1usize << n_qubits;
        let half_z = (0..m)
            .map(|b| {
                0.5 * (0..n_qubits)
                    .map(|j| chi * 2f64.powi(j as i32 - 1) * sigma_z(b, j))
                    .sum::<f64>()
            })
            .collect();
        let h0 = Tridiagonal::displaced_number(fock_dim, if number_term { 1.0 } else { 0.0 }, alpha);
        let dephasing = (!number_term && rates.kappa_phi > 0.0)
            .then(|| Tridiagonal::displaced_number(fock_dim, 1.0, alpha));
        let pairs = (0..m).flat_map(|b| (b..m).map(move |c| (b, c))).collect();
        Self {
            m,
            f: fock_dim,
            n_qubits,
            half_z,
            h0,
            dephasing,
            rates,
            pairs,
        }
    }

    /// Effective Hamiltonian block `H_b = (Z_b/2)(s·a†a + α a† + α* a)`.
    pub(crate) fn hamiltonian_block(&self, b: usize) -> Array2<C64> {
        self.h0.to_dense().mapv(|x| x * self.half_z[b])
    }

    pub(crate) fn rhs(&self, rho: &[Vec<C64>]) -> Vec<Vec<C64>> {
        self.pairs
            .par_iter()
            .map(|&(b, c)| self.rhs_block(rho, b, c))
            .collect()
    }

    fn rhs_block(&self, rho: &[Vec<C64>], b: usize, c: usize) -> Vec<C64> {
        let (f, m) = (self.f, self.m);
        let x = &rho[upper_index(b, c, m)];
        let r = &self.rates;
        let mut out = vec![ZERO; f * f];

        let mut a = vec![ZERO; f * f];
        let mut bm = vec![ZERO; f * f];
        self.h0.left(x, &mut a);
        self.h0.right(x, &mut bm);
        let (zb, zc) = (self.half_z[b], self.half_z[c]);
        let mi = C64::new(0.0, -1.0);
        for i in 0..f * f {
            out[i] = mi * (zb * a[i] - zc * bm[i]);
        }

        if r.kappa_phi > 0.0 {
            let (la, lb) = match &self.dephasing {
                Some(l) => {
                    let mut la = vec![ZERO; f * f];
                    let mut lb = vec![ZERO; f * f];
                    l.left(x, &mut la);
                    l.right(x, &mut lb);
                    (la, lb)
                }
                None => (a.clone(), bm.clone()),
            };
            let l = self.dephasing.as_ref().unwrap_or(&self.h0);
            let mut lxl = vec![ZERO; f * f];
            let mut llx = vec![ZERO; f * f];
            let mut xll = vec![ZERO; f * f];
            l.left(&lb, &mut lxl);
            l.left(&la, &mut llx);
            l.right(&lb, &mut xll);
            let k = 2.0 * r.kappa_phi;
            for i in 0..f * f {
                out[i] += k * (lxl[i] - 0.5 * (llx[i] + xll[i]));
            }
        }

        if r.kappa_l > 0.0 {
            for n in 0..f {
                for k in 0..f {
                    let mut v = -0.5 * (n + k) as f64 * x[n * f + k];
                    if n + 1 < f && k + 1 < f {
                        v += (((n + 1) * (k + 1)) as f64).sqrt() * x[(n + 1) * f + k + 1];
                    }
                    out[n * f + k] += r.kappa_l * v;
                }
            }
        }

        if r.gamma_l > 0.0 {
            let zeros = |s: usize| (0..self.n_qubits).filter(|j| s >> j & 1 == 0).count();
            let damp = -0.5 * r.gamma_l * (zeros(b) + zeros(c)) as f64;
            for i in 0..f * f {
                out[i] += damp * x[i];
            }
            for j in 0..self.n_qubits {
                let bit = 1 << j;
                if b & bit != 0 && c & bit != 0 {
                    let src = &rho[upper_index(b ^ bit, c ^ bit, m)];
                    for i in 0..f * f {
                        out[i] += r.gamma_l * src[i];
                    }
                }
            }
        }

        if r.gamma_phi > 0.0 {
            let differing = (b ^ c).count_ones() as f64;
            let k = -r.gamma_phi * differing;
            for i in 0..f * f {
                out[i] += k * x[i];
            }
        }
        out
    }

    /// Advances `rho` by `steps` classical Runge–Kutta steps of size `dt`,
    /// returning the Hermiticity error accumulated before symmetrization.
    pub(crate) fn evolve(&self, rho: &mut JointDensityMatrix, dt: f64, steps: usize) -> f64 {
        let axpy = |y: &[Vec<C64>], k: &[Vec<C64>], h: f64| -> Vec<Vec<C64>> {
            y.iter()
                .zip(k)
                .map(|(a, b)| a.iter().zip(b).map(|(x, d)| x + d * h).collect())
                .collect()
        };
        for _ in 0..steps {
            let y = &rho.upper;
            let k1 = self.rhs(y);
            let k2 = self.rhs(&axpy(y, &k1, dt / 2.0));
            let k3 = self.rhs(&axpy(y, &k2, dt / 2.0));
            let k4 = self.rhs(&axpy(y, &k3, dt));
            for (i, blk) in rho.upper.iter_mut().enumerate() {
                for (j, v) in blk.iter_mut().enumerate() {
                    *v += (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]) * (dt / 6.0);
                }
            }
        }
        let err = rho.hermiticity_error();
        rho.symmetrize();
        err
    }

    /// `dρ/dt` as a joint density matrix.
    pub(crate) fn apply(&self, rho: &JointDensityMatrix) -> JointDensityMatrix {
        JointDensityMatrix {
            n_qubits: rho.n_qubits,
            fock_dim: rho.fock_dim,
            upper: self.rhs(&rho.upper),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_indexing_is_dense() {
        for m in [1, 2, 4, 8] {
            let mut seen = Vec::new();
            for b in 0..m {
                for c in b..m {
                    seen.push(upper_index(b, c, m));
                }
            }
            let expect: Vec<usize> = (0..m * (m + 1) / 2).collect();
            assert_eq!(seen, expect);
        }
    }

    #[test]
    fn tridiagonal_products_match_dense() {
        let f = 6;
        let t = Tridiagonal::displaced_number(f, 1.0, C64::new(0.3, -1.2));
        let x: Vec<C64> = (0..f * f)
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let xd = Array2::from_shape_vec((f, f), x.clone()).unwrap();
        let td = t.to_dense();
        let mut l = vec![ZERO; f * f];
        let mut r = vec![ZERO; f * f];
        t.left(&x, &mut l);
        t.right(&x, &mut r);
        let (el, er) = (td.dot(&xd), xd.dot(&td));
        for i in 0..f * f {
            assert!((l[i] - el[[i / f, i % f]]).norm() < 1e-12);
            assert!((r[i] - er[[i / f, i % f]]).norm() < 1e-12);
        }
    }
}
