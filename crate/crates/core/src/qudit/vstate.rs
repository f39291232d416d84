//! The two-peak qudit state `|v>` whose interpolation is mapped onto the
//! oscillator.
//!
//! Each peak occupies the four levels closest to its center. The inner pair
//! carries amplitude `sin(θ_v/2)` and the outer pair `cos(θ_v/2)`; near
//! `θ_v = 2.6` this shape minimises the oscillations of `v(y)` between the
//! samples. The peak at `y = 0` (levels `±1/2, ±3/2`) becomes the logical-0
//! comb, the peak at `y = M/2` (levels `±(M-1)/2, ±(M-3)/2`, adjacent under
//! the period-`M` wrap) the logical-1 comb.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{Interpolant, QuditDims, QuditState};
use crate::{Error, Result};

/// Range of `θ_v` for which `v(y)` is free of pronounced side lobes.
pub const VALIDATED_THETA: RangeInclusive<f64> = 2.5..=2.7;

/// Angles of the `|v>` preparation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VPrepParams {
    /// Peak-shape angle.
    pub theta_v: f64,
    /// Logical amplitude angle: weight `cos²(φ_v/2)` on logical 0.
    pub phi_v: f64,
    /// Logical relative phase.
    pub omega_v: f64,
}

impl Default for VPrepParams {
    fn default() -> Self {
        Self {
            theta_v: 2.6,
            phi_v: 0.0,
            omega_v: 0.0,
        }
    }
}

impl VPrepParams {
    pub fn new(theta_v: f64, phi_v: f64, omega_v: f64) -> Result<Self> {
        let p = Self {
            theta_v,
            phi_v,
            omega_v,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta_v.is_finite() {
            return Err(Error::param("theta_v", "must be finite"));
        }
        if !(0.0..=PI).contains(&self.phi_v) {
            return Err(Error::param("phi_v", format!("{} not in [0, π]", self.phi_v)));
        }
        if !(0.0..2.0 * PI).contains(&self.omega_v) {
            return Err(Error::param("omega_v", format!("{} not in [0, 2π)", self.omega_v)));
        }
        Ok(())
    }

    pub fn theta_validated(&self) -> bool {
        VALIDATED_THETA.contains(&self.theta_v)
    }
}

/// Synthesises `|v>` directly from its amplitudes.
pub fn build_v_state(dims: QuditDims, params: VPrepParams) -> Result<QuditState> {
    params.validate()?;
    let m = dims.dim();
    if dims.n_qubits() < 2 {
        return Err(Error::param(
            "n_qubits",
            "two peaks need at least two qubits",
        ));
    }
    let (inner, outer) = ((params.theta_v / 2.0).sin(), (params.theta_v / 2.0).cos());
    let norm = 1.0 / 2f64.sqrt();
    let w0 = (params.phi_v / 2.0).cos() * norm;
    let w1 = C64::from_polar((params.phi_v / 2.0).sin() * norm, params.omega_v);

    let mut amps = Array1::<C64>::zeros(m);
    let mid = m / 2;
    amps[mid - 1] += w0 * inner;
    amps[mid] += w0 * inner;
    amps[mid - 2] += w0 * outer;
    amps[mid + 1] += w0 * outer;
    amps[0] += w1 * inner;
    amps[m - 1] += w1 * inner;
    amps[1] += w1 * outer;
    amps[m - 2] += w1 * outer;
    QuditState::normalized(dims, amps)
}

/// Shape of one peak of `v`, measured inside the half period around its
/// center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakStats {
    /// Standard deviation of the sampled amplitudes `|v_k|`, read as a
    /// distribution over the levels.
    pub discrete_sigma: f64,
    /// Standard deviation of the continuous `|v(y)|` within `±2.5` of the
    /// center.
    pub continuous_sigma: f64,
    /// Probability `Σ|v_k|²` of the levels in the window.
    pub weight: f64,
}

/// Half-width of the window over which the continuous `|v(y)|` is sampled.
const CONTINUOUS_REACH: f64 = 2.5;

/// Peak statistics of `state` around `center` (`0` or `M/2`).
pub fn peak_width(state: &QuditState, center: f64) -> PeakStats {
    let dims = state.dims();
    let mf = dims.dim() as f64;
    let wrap = |y: f64| (y - center + mf / 2.0).rem_euclid(mf) - mf / 2.0;
    let window = mf / 4.0;

    let (mut w_sum, mut w_var, mut weight) = (0.0, 0.0, 0.0);
    for (i, v) in state.amplitudes().iter().enumerate() {
        let d = wrap(dims.level(i));
        if d.abs() < window {
            w_sum += v.norm();
            w_var += v.norm() * d * d;
            weight += v.norm_sqr();
        }
    }

    let interp = Interpolant::new(state);
    let reach = window.min(CONTINUOUS_REACH);
    let samples = 2000;
    let h = 2.0 * reach / samples as f64;
    let (mut c_sum, mut c_var) = (0.0, 0.0);
    for j in 0..samples {
        let d = -reach + (j as f64 + 0.5) * h;
        let a = interp.eval(center + d).norm();
        c_sum += a;
        c_var += a * d * d;
    }

    PeakStats {
        discrete_sigma: (w_var / w_sum).sqrt(),
        continuous_sigma: (c_var / c_sum).sqrt(),
        weight,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(n: usize) -> QuditDims {
        QuditDims::new(n).unwrap()
    }

    #[test]
    fn logical_zero_peak_width() {
        for n in 3..=6 {
            let v = build_v_state(dims(n), VPrepParams::default()).unwrap();
            let p = peak_width(&v, 0.0);
            // sqrt((sin 1.3 · 1/4 + cos 1.3 · 9/4) / (sin 1.3 + cos 1.3))
            assert!((p.discrete_sigma - 0.827_396).abs() < 1e-5, "{}", p.discrete_sigma);
            assert!((p.discrete_sigma - 0.83).abs() <= 0.05);
            assert!((0.7..=1.0).contains(&p.continuous_sigma), "{}", p.continuous_sigma);
            assert!((p.weight - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn logical_one_occupies_edge() {
        let d = dims(4);
        let v = build_v_state(d, VPrepParams::new(2.6, PI, 0.0).unwrap()).unwrap();
        assert!((peak_width(&v, 8.0).weight - 1.0).abs() < 1e-12);
        assert!(peak_width(&v, 0.0).weight < 1e-12);
    }

    #[test]
    fn equal_superposition_with_phase() {
        let d = dims(4);
        let v = build_v_state(d, VPrepParams::new(2.6, PI / 2.0, PI / 2.0).unwrap()).unwrap();
        assert!((peak_width(&v, 0.0).weight - 0.5).abs() < 1e-12);
        assert!((peak_width(&v, 8.0).weight - 0.5).abs() < 1e-12);
        let ratio = v.amplitude(7.5).unwrap() / v.amplitude(0.5).unwrap();
        assert!((ratio - C64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn peak_weights_follow_phi() {
        let d = dims(5);
        for phi in [0.3, 1.1, 2.0, 2.9] {
            let v = build_v_state(d, VPrepParams::new(2.6, phi, 1.0).unwrap()).unwrap();
            let w0 = peak_width(&v, 0.0).weight;
            let w1 = peak_width(&v, 16.0).weight;
            assert!((w0 - (phi / 2.0).cos().powi(2)).abs() < 1e-12);
            assert!((w1 - (phi / 2.0).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn side_lobes_minimal_in_validated_range() {
        let side = |theta: f64| {
            let v = build_v_state(dims(5), VPrepParams::new(theta, 0.0, 0.0).unwrap()).unwrap();
            let interp = Interpolant::new(&v);
            let peak = interp.eval(0.0).norm();
            (0..2000)
                .map(|j| -8.0 + j as f64 * 0.008)
                .filter(|y| y.abs() > 2.5)
                .map(|y| interp.eval(y).norm())
                .fold(0.0, f64::max)
                / peak
        };
        let best = side(2.6);
        assert!(best < side(2.3));
        assert!(best < side(2.9));
        assert!(best < 0.01);
    }

    #[test]
    fn rejects_single_qubit_and_bad_angles() {
        assert!(build_v_state(dims(1), VPrepParams::default()).is_err());
        assert!(VPrepParams::new(2.6, -0.1, 0.0).is_err());
        assert!(VPrepParams::new(2.6, 0.0, 2.0 * PI).is_err());
        assert!(!VPrepParams::new(1.0, 0.0, 0.0).unwrap().theta_validated());
    }
}
