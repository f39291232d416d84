//! Truncated Fock basis and its bridge to the position grid.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use super::{MixedState, PositionGrid, WaveFunction};
use crate::{Error, Result};

/// Largest population allowed beyond the cutoff when projecting onto the
/// Fock basis.
pub const FOCK_TAIL_TOL: f64 = 1e-8;

/// Normalised Hermite functions `h_n(q_i)` for `n = 0..=n_max`, one row
/// per `n`.
///
/// Each column runs the three-term recurrence with a separate log scale so
/// large `n` and large `|q|` neither overflow nor lose the small values.
pub fn hermite_functions(grid: &PositionGrid, n_max: usize) -> Array2<f64> {
    let mut out = Array2::zeros((n_max + 1, grid.n_points()));
    let norm0 = std::f64::consts::PI.powf(-0.25);
    for i in 0..grid.n_points() {
        let q = grid.q(i);
        let mut log_scale = -0.5 * q * q;
        let (mut prev, mut cur) = (0.0, norm0);
        out[[0, i]] = cur * log_scale.exp();
        for n in 0..n_max {
            let nf = n as f64;
            let next = (2.0 / (nf + 1.0)).sqrt() * q * cur - (nf / (nf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            let mag = cur.abs().max(prev.abs());
            if mag > 1e100 || (mag < 1e-100 && mag > 0.0) {
                prev /= mag;
                cur /= mag;
                log_scale += mag.ln();
            }
            out[[n + 1, i]] = cur * log_scale.exp();
        }
    }
    out
}

/// Coefficients `c_n`, `n = 0..=cutoff`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    coeffs: Array1<C64>,
}

impl FockVector {
    const NORM_TOL: f64 = 1e-6;

    pub fn new(coeffs: Array1<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::param("coeffs", "empty Fock vector"));
        }
        let n: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (n - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::param("coeffs", format!("norm² is {n}, expected 1")));
        }
        Ok(Self { coeffs })
    }

    pub fn basis(cutoff: usize, n: usize) -> Result<Self> {
        if n > cutoff {
            return Err(Error::param("n", format!("{n} exceeds cutoff {cutoff}")));
        }
        let mut c = Array1::zeros(cutoff + 1);
        c[n] = C64::new(1.0, 0.0);
        Ok(Self { coeffs: c })
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &Array1<C64> {
        &self.coeffs
    }

    pub fn inner(&self, other: &FockVector) -> C64 {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Projects `ψ` onto `|0>..|n_max>`, failing when more than
/// [`FOCK_TAIL_TOL`] of the population is lost.
pub fn to_fock(psi: &WaveFunction, n_max: usize) -> Result<FockVector> {
    to_fock_with_tol(psi, n_max, FOCK_TAIL_TOL)
}

pub fn to_fock_with_tol(psi: &WaveFunction, n_max: usize, tol: f64) -> Result<FockVector> {
    let grid = psi.grid();
    let h = hermite_functions(grid, n_max);
    let dq = grid.dq();
    let mut c: Array1<C64> = h
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .zip(psi.samples().iter())
                .map(|(hn, a)| a * *hn)
                .sum::<C64>()
                * dq
        })
        .collect();
    let kept: f64 = c.iter().map(|x| x.norm_sqr()).sum();
    let tail = (1.0 - kept).max(c[n_max].norm_sqr());
    if tail > tol {
        return Err(Error::InsufficientCutoff {
            cutoff: n_max,
            tail,
        });
    }
    let s = 1.0 / kept.sqrt();
    c.mapv_inplace(|x| x * s);
    Ok(FockVector { coeffs: c })
}

/// Evaluates `Σ c_n h_n(q)` on `grid`.
pub fn from_fock(f: &FockVector, grid: PositionGrid) -> Result<WaveFunction> {
    let h = hermite_functions(&grid, f.cutoff());
    let samples: Array1<C64> = (0..grid.n_points())
        .map(|i| {
            f.coeffs
                .iter()
                .enumerate()
                .map(|(n, c)| c * h[[n, i]])
                .sum()
        })
        .collect();
    let w = WaveFunction::normalized(grid, samples.clone())?;
    let raw: f64 = samples.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dq();
    if (raw - 1.0).abs() > 1e-6 {
        return Err(Error::GridTooSmall {
            required: (2.0 * f.cutoff() as f64 + 1.0).sqrt(),
            actual: grid.half_width(),
        });
    }
    Ok(w)
}

/// Position-grid representation of a Fock-basis density matrix, as a sum of
/// its weighted eigenvectors.
pub fn fock_density_to_grid(rho: &Array2<C64>, grid: PositionGrid) -> Result<MixedState> {
    let f = rho.nrows();
    if rho.ncols() != f {
        return Err(Error::DimensionMismatch {
            expected: f,
            actual: rho.ncols(),
        });
    }
    let m = nalgebra::DMatrix::from_fn(f, f, |i, j| 0.5 * (rho[[i, j]] + rho[[j, i]].conj()));
    let eig = m.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let h = hermite_functions(&grid, f - 1);
    let keep: Vec<usize> = (0..f)
        .filter(|&k| eig.eigenvalues[k] > 1e-14 * lmax)
        .collect();
    let mut comps = Array2::<C64>::zeros((grid.n_points(), keep.len()));
    for (col, &k) in keep.iter().enumerate() {
        let w = eig.eigenvalues[k].sqrt();
        for i in 0..grid.n_points() {
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..f {
                acc += eig.eigenvectors[(n, k)] * h[[n, i]];
            }
            comps[[i, col]] = acc * w;
        }
    }
    MixedState::from_components(grid, comps)
}

/// Truncated ladder and quadrature matrices on `|0>..|n_max>`.
#[derive(Clone, Debug)]
pub struct LadderOps {
    pub a: Array2<C64>,
    pub adag: Array2<C64>,
    /// `(a + a†)/√2`.
    pub q: Array2<C64>,
    /// `i(a† - a)/√2`.
    pub p: Array2<C64>,
}

pub fn ladder_ops(n_max: usize) -> Result<LadderOps> {
    if n_max < 1 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    let d = n_max + 1;
    let a = Array2::from_shape_fn((d, d), |(i, j)| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let adag = a.t().to_owned();
    let s = 1.0 / 2f64.sqrt();
    let q = (&a + &adag).mapv(|x| x * s);
    let p = (&adag - &a).mapv(|x| x * C64::new(0.0, s));
    Ok(LadderOps { a, adag, q, p })
}
