//! Single-mode oscillator states on a position grid and in a truncated Fock
//! basis.
//!
//! Quadratures obey `[q, p] = i`, so the vacuum has `<q²> = 1/2`.
//! Wavefunctions are sampled on a uniform periodic grid and normalised as
//! `Σ|ψ(q_i)|² dq = 1`; density matrices as `Σ ρ(q_i, q_i) dq = 1`.

mod density;
mod fft;
mod fock;
mod wigner;

pub use density::{fidelity_pure, DensityOperator, GridDensityMatrix, MixedState};
pub use fock::{
    fock_density_to_grid, from_fock, hermite_functions, ladder_ops, to_fock, to_fock_with_tol,
    FockVector, LadderOps, FOCK_TAIL_TOL,
};
pub use wigner::{wigner, wigner_window, WignerGrid};

use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest mass allowed outside a grid for a state to count as covered.
pub const OUTSIDE_MASS_TOL: f64 = 1e-3;

/// Boundary mass above which a shifted state is reported as overflowing.
pub const BOUNDARY_MASS_WARN: f64 = 1e-6;

/// Uniform periodic sampling `q_i = q_min + i·dq`, `i < n_points`, with
/// `dq = (q_max - q_min)/n_points`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct PositionGrid {
    q_min: f64,
    q_max: f64,
    n_points: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct GridSpec {
    q_min: f64,
    q_max: f64,
    n_points: usize,
}

impl TryFrom<GridSpec> for PositionGrid {
    type Error = Error;
    fn try_from(s: GridSpec) -> Result<Self> {
        PositionGrid::new(s.q_min, s.q_max, s.n_points)
    }
}

impl From<PositionGrid> for GridSpec {
    fn from(g: PositionGrid) -> Self {
        GridSpec {
            q_min: g.q_min,
            q_max: g.q_max,
            n_points: g.n_points,
        }
    }
}

impl Default for PositionGrid {
    fn default() -> Self {
        Self {
            q_min: -12.0,
            q_max: 12.0,
            n_points: 2048,
        }
    }
}

impl PositionGrid {
    pub fn new(q_min: f64, q_max: f64, n_points: usize) -> Result<Self> {
        if !(q_min.is_finite() && q_max.is_finite()) || q_max <= q_min {
            return Err(Error::param("grid", format!("bounds [{q_min}, {q_max}] are empty")));
        }
        if n_points < 4 || !n_points.is_power_of_two() {
            return Err(Error::param(
                "n_points",
                format!("{n_points} is not a power of two >= 4"),
            ));
        }
        let g = Self {
            q_min,
            q_max,
            n_points,
        };
        let origin = 2.0 * -q_min / g.dq();
        if (origin - origin.round()).abs() > 1e-9 {
            return Err(Error::param(
                "grid",
                "q = 0 must be a sample or lie halfway between two samples",
            ));
        }
        Ok(g)
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.n_points as f64
    }

    pub fn q(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.dq()
    }

    pub fn points(&self) -> Array1<f64> {
        (0..self.n_points).map(|i| self.q(i)).collect()
    }

    /// Distance from the origin to the nearer grid edge.
    pub fn half_width(&self) -> f64 {
        (-self.q_min).min(self.q_max)
    }

    /// Angular momenta of the discrete Fourier modes, in FFT order.
    pub fn momenta(&self) -> Array1<f64> {
        let n = self.n_points as i64;
        let dp = 2.0 * PI / (self.q_max - self.q_min);
        (0..n)
            .map(|k| if k < n / 2 { k } else { k - n })
            .map(|k| k as f64 * dp)
            .collect()
    }

    /// Requires a Gaussian mass profile `∝ exp(-(q/scale)²)` to leave at most
    /// [`OUTSIDE_MASS_TOL`] outside the grid.
    pub(crate) fn require_gaussian_cover(&self, scale: f64) -> Result<()> {
        let outside = libm::erfc(self.half_width() / scale);
        if outside > OUTSIDE_MASS_TOL {
            return Err(Error::GridTooSmall {
                required: scale * erfc_inverse_bound(),
                actual: self.half_width(),
            });
        }
        Ok(())
    }
}

/// `x` with `erfc(x) = OUTSIDE_MASS_TOL`.
fn erfc_inverse_bound() -> f64 {
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if libm::erfc(mid) > OUTSIDE_MASS_TOL {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Squeezing in dB of a width `w` relative to the vacuum.
pub fn width_to_db(w: f64) -> f64 {
    20.0 * w.log10()
}

pub fn db_to_width(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Normalised wavefunction sampled on a [`PositionGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    grid: PositionGrid,
    samples: Array1<C64>,
}

impl WaveFunction {
    const NORM_TOL: f64 = 1e-8;

    pub fn new(grid: PositionGrid, samples: Array1<C64>) -> Result<Self> {
        check_samples(&grid, samples.len())?;
        let w = Self { grid, samples };
        let n = w.norm_sqr();
        if (n - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::param("samples", format!("norm² is {n}, expected 1")));
        }
        Ok(w)
    }

    pub fn normalized(grid: PositionGrid, samples: Array1<C64>) -> Result<Self> {
        check_samples(&grid, samples.len())?;
        let mut w = Self { grid, samples };
        let n = w.norm_sqr();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::param("samples", "cannot normalise a zero function"));
        }
        let s = 1.0 / n.sqrt();
        w.samples.mapv_inplace(|a| a * s);
        Ok(w)
    }

    pub fn from_fn(grid: PositionGrid, f: impl Fn(f64) -> C64) -> Result<Self> {
        let samples = (0..grid.n_points).map(|i| f(grid.q(i))).collect();
        Self::normalized(grid, samples)
    }

    pub fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    pub fn samples(&self) -> &Array1<C64> {
        &self.samples
    }

    pub fn into_samples(self) -> Array1<C64> {
        self.samples
    }

    pub fn norm_sqr(&self) -> f64 {
        self.samples.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dq()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &WaveFunction) -> Result<C64> {
        same_grid(&self.grid, &other.grid)?;
        let s: C64 = self
            .samples
            .iter()
            .zip(other.samples.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.dq())
    }

    pub fn fidelity(&self, other: &WaveFunction) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn mean_q(&self) -> f64 {
        let dq = self.grid.dq();
        self.samples
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * self.grid.q(i))
            .sum::<f64>()
            * dq
    }

    pub fn variance_q(&self) -> f64 {
        let m = self.mean_q();
        let dq = self.grid.dq();
        self.samples
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * (self.grid.q(i) - m).powi(2))
            .sum::<f64>()
            * dq
    }

    /// `<p>` from the discrete Fourier spectrum.
    pub fn mean_p(&self) -> f64 {
        let spec = fft::forward(self.samples.to_vec());
        let total: f64 = spec.iter().map(|a| a.norm_sqr()).sum();
        self.grid
            .momenta()
            .iter()
            .zip(&spec)
            .map(|(p, a)| p * a.norm_sqr())
            .sum::<f64>()
            / total
    }

    pub fn variance_p(&self) -> f64 {
        let spec = fft::forward(self.samples.to_vec());
        let total: f64 = spec.iter().map(|a| a.norm_sqr()).sum();
        let m = self.mean_p();
        self.grid
            .momenta()
            .iter()
            .zip(&spec)
            .map(|(p, a)| (p - m).powi(2) * a.norm_sqr())
            .sum::<f64>()
            / total
    }

    /// Probability in the outer sixteenth of the grid at either end.
    pub fn boundary_mass(&self) -> f64 {
        let n = self.grid.n_points;
        let edge = (n / 32).max(1);
        let dq = self.grid.dq();
        self.samples
            .iter()
            .enumerate()
            .filter(|(i, _)| *i < edge || *i >= n - edge)
            .map(|(_, a)| a.norm_sqr())
            .sum::<f64>()
            * dq
    }

    /// Multiplies by `e^{i p0 q}`, shifting `<p>` by `p0`.
    pub fn momentum_displace(&self, p0: f64) -> WaveFunction {
        let mut out = self.clone();
        for (i, a) in out.samples.iter_mut().enumerate() {
            *a *= C64::from_polar(1.0, p0 * self.grid.q(i));
        }
        out
    }

    /// Applies `e^{-i p a}`, mapping `ψ(q)` to `ψ(q - a)` by multiplication in
    /// the Fourier representation.
    pub fn position_shift(&self, a: f64) -> WaveFunction {
        let mut out = self.clone();
        shift_in_place(&self.grid, out.samples.as_slice_mut().expect("contiguous"), a);
        let b = out.boundary_mass();
        if b > BOUNDARY_MASS_WARN {
            log::warn!("shifted state reaches the grid boundary (mass {b:.2e})");
        }
        out
    }
}

/// `ψ(q) → ψ(q - a)` on raw samples.
pub(crate) fn shift_in_place(grid: &PositionGrid, samples: &mut [C64], a: f64) {
    if a == 0.0 {
        return;
    }
    let mut spec = fft::forward(samples.to_vec());
    for (s, p) in spec.iter_mut().zip(grid.momenta().iter()) {
        *s *= C64::from_polar(1.0, -p * a);
    }
    samples.copy_from_slice(&fft::inverse(spec));
}

/// Vacuum stretched to width `w`: `ψ_W(q) ∝ exp(-q²/(2W²))`.
pub fn squeezed_vacuum(w: f64, grid: PositionGrid) -> Result<WaveFunction> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::param("W", format!("{w} must be positive")));
    }
    grid.require_gaussian_cover(w)?;
    WaveFunction::from_fn(grid, |q| C64::new((-q * q / (2.0 * w * w)).exp(), 0.0))
}

fn check_samples(grid: &PositionGrid, len: usize) -> Result<()> {
    if len != grid.n_points {
        return Err(Error::DimensionMismatch {
            expected: grid.n_points,
            actual: len,
        });
    }
    Ok(())
}

pub(crate) fn same_grid(a: &PositionGrid, b: &PositionGrid) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_grid_contains_origin() {
        let g = PositionGrid::default();
        assert_eq!(g.q(1024), 0.0);
        assert!((g.dq() - 24.0 / 2048.0).abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(PositionGrid::new(-12.0, 12.0, 1000).is_err());
        assert!(PositionGrid::new(1.0, -1.0, 64).is_err());
        assert!(PositionGrid::new(-1.0, 2.0, 64).is_err());
        assert!(PositionGrid::new(-8.0, 8.0, 64).is_ok());
    }

    #[test]
    fn vacuum_variance() {
        let v = squeezed_vacuum(1.0, PositionGrid::default()).unwrap();
        assert!((v.variance_q() - 0.5).abs() < 1e-10);
        assert!((v.variance_p() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn squeezed_variance_and_db() {
        let s = squeezed_vacuum(3.2, PositionGrid::default()).unwrap();
        assert!((s.variance_q() - 3.2f64.powi(2) / 2.0).abs() < 1e-3);
        assert!((width_to_db(3.2) - 10.1).abs() < 0.01);
        assert!((width_to_db(5.01) - 14.0).abs() < 0.01);
        assert!((db_to_width(10.0) - 3.1623).abs() < 1e-4);
    }

    #[test]
    fn grid_too_small() {
        let e = squeezed_vacuum(5.2, PositionGrid::default());
        assert!(matches!(e, Err(Error::GridTooSmall { .. })));
        assert!(squeezed_vacuum(5.15, PositionGrid::default()).is_ok());
    }

    #[test]
    fn momentum_kick_moves_mean_p() {
        let s = squeezed_vacuum(1.5, PositionGrid::default()).unwrap();
        assert_eq!(s.momentum_displace(0.0), s);
        let k = s.momentum_displace(-0.886);
        assert!((k.mean_p() + 0.886).abs() < 1e-8);
        assert!((k.norm_sqr() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn shift_round_trip(a in -3.0..3.0f64, w in 1.0..2.0f64) {
            let s = squeezed_vacuum(w, PositionGrid::default()).unwrap();
            let back = s.position_shift(a).position_shift(-a);
            let err = back.samples().iter().zip(s.samples()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-10);
        }

        #[test]
        fn shift_moves_mean(a in -3.0..3.0f64) {
            let s = squeezed_vacuum(1.2, PositionGrid::default()).unwrap();
            let t = s.position_shift(a);
            prop_assert!((t.mean_q() - a).abs() < 1e-8);
            prop_assert!((t.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn shifted_gaussian_matches_closed_form() {
        let g = PositionGrid::default();
        let s = squeezed_vacuum(1.3, g).unwrap().position_shift(0.4321);
        let exact = WaveFunction::from_fn(g, |q| {
            C64::new((-(q - 0.4321f64).powi(2) / (2.0 * 1.69)).exp(), 0.0)
        })
        .unwrap();
        assert!((s.fidelity(&exact).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_mass_detects_overflow() {
        let s = squeezed_vacuum(1.0, PositionGrid::default()).unwrap();
        assert!(s.boundary_mass() < 1e-30);
        assert!(s.position_shift(11.5).boundary_mass() > 0.1);
    }
}
