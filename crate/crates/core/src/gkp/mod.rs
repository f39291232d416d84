//! Approximate GKP states and fitting them to produced oscillator states.
//!
//! ```text
//! |G(φ)> ∝ Σ_s exp(-(κ(2s+φ)√π)²/2) ∫ dq exp(-q²/(2Δ²)) |q + (2s+φ)√π>
//! ```
//!
//! `G(0)` and `G(1)` serve as the logical states `|0_L>` and `|1_L>`.

mod optimize;

pub use optimize::{nelder_mead, Minimum};

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::oscillator::{DensityOperator, PositionGrid, WaveFunction};
use crate::qudit::VPrepParams;
use crate::{Error, Result};

/// Envelope weight below which comb peaks are dropped.
const ENVELOPE_CUTOFF: f64 = 1e-12;

/// Peak width, envelope and center shift of an approximate GKP state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GkpParams {
    pub delta: f64,
    pub kappa: f64,
    /// Center shift in units of `√π`, in `[0, 2)`.
    pub phi: f64,
}

impl GkpParams {
    /// Validates `delta, kappa > 0` and wraps `phi` into `[0, 2)`.
    pub fn new(delta: f64, kappa: f64, phi: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param("delta", format!("{delta} must be positive")));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::param("kappa", format!("{kappa} must be positive")));
        }
        if !phi.is_finite() {
            return Err(Error::param("phi", "must be finite"));
        }
        Ok(Self {
            delta,
            kappa,
            phi: phi.rem_euclid(2.0),
        })
    }

    pub fn delta_db(&self) -> f64 {
        delta_to_db(self.delta)
    }

    pub fn kappa_db(&self) -> f64 {
        delta_to_db(self.kappa)
    }
}

/// Peak squeezing `-20 log10 Δ`.
pub fn delta_to_db(delta: f64) -> f64 {
    -20.0 * delta.log10()
}

pub fn db_to_delta(db: f64) -> f64 {
    10f64.powf(-db / 20.0)
}

/// Logical qubit `cos(φ_v/2)|0_L> + sin(φ_v/2) e^{iω_v}|1_L>`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LogicalAmplitudes {
    pub phi_v: f64,
    pub omega_v: f64,
}

impl From<VPrepParams> for LogicalAmplitudes {
    fn from(v: VPrepParams) -> Self {
        Self {
            phi_v: v.phi_v,
            omega_v: v.omega_v,
        }
    }
}

/// Unnormalised comb samples of `G(φ)`.
fn comb(params: GkpParams, phi: f64, grid: &PositionGrid) -> Vec<f64> {
    let sp = PI.sqrt();
    let reach = (-2.0 * ENVELOPE_CUTOFF.ln()).sqrt() / params.kappa;
    let s_lo = ((-reach / sp - phi) / 2.0).floor() as i64;
    let s_hi = ((reach / sp - phi) / 2.0).ceil() as i64;
    let (dq, q0, n) = (grid.dq(), grid.q_min(), grid.n_points());
    let half_span = 40.0 * params.delta;
    let mut out = vec![0.0; n];
    for s in s_lo..=s_hi {
        let c = (2.0 * s as f64 + phi) * sp;
        let env = (-(params.kappa * c).powi(2) / 2.0).exp();
        if env < ENVELOPE_CUTOFF {
            continue;
        }
        let lo = (((c - half_span - q0) / dq).floor().max(0.0)) as usize;
        let hi = (((c + half_span - q0) / dq).ceil().max(0.0) as usize).min(n);
        for (i, o) in out.iter_mut().enumerate().take(hi).skip(lo) {
            let x = q0 + i as f64 * dq - c;
            *o += env * (-x * x / (2.0 * params.delta * params.delta)).exp();
        }
    }
    out
}

/// Normalised `G(φ)` sampled on `grid`.
pub fn gkp_state(params: GkpParams, grid: PositionGrid) -> Result<WaveFunction> {
    grid.require_gaussian_cover(1.0 / params.kappa)?;
    let c = comb(params, params.phi, &grid);
    WaveFunction::normalized(grid, c.into_iter().map(|x| C64::new(x, 0.0)).collect())
}

/// Normalised logical state built from `G(φ)` and `G(φ+1)`.
pub fn logical_state(
    amps: LogicalAmplitudes,
    params: GkpParams,
    grid: PositionGrid,
) -> Result<WaveFunction> {
    grid.require_gaussian_cover(1.0 / params.kappa)?;
    logical_on_grid(amps, params, grid)
}

/// [`logical_state`] without the coverage check; the fit compares against
/// states that live on the same grid, so clipped envelopes stay valid
/// candidates.
fn logical_on_grid(
    amps: LogicalAmplitudes,
    params: GkpParams,
    grid: PositionGrid,
) -> Result<WaveFunction> {
    let dq = grid.dq();
    let unit = |v: Vec<f64>| {
        let n = (v.iter().map(|x| x * x).sum::<f64>() * dq).sqrt();
        v.into_iter().map(move |x| x / n)
    };
    let w0 = (amps.phi_v / 2.0).cos();
    let w1 = C64::from_polar((amps.phi_v / 2.0).sin(), amps.omega_v);
    let g0 = unit(comb(params, params.phi, &grid));
    let g1 = unit(comb(params, params.phi + 1.0, &grid));
    WaveFunction::normalized(grid, g0.zip(g1).map(|(a, b)| w0 * a + w1 * b).collect())
}

/// Search configuration for [`fit_gkp`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub delta_range: (f64, f64),
    pub kappa_range: (f64, f64),
    pub n_delta: usize,
    pub n_kappa: usize,
    /// Center offsets tried on the coarse grid, in units of `√π`.
    pub offsets: Vec<f64>,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            delta_range: (0.05, 1.0),
            kappa_range: (0.05, 1.0),
            n_delta: 14,
            n_kappa: 12,
            offsets: vec![0.0, -0.02, 0.02],
            max_iter: 400,
        }
    }
}

/// Best-fitting approximate GKP state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: GkpParams,
    pub fidelity: f64,
    /// Best fidelity on the coarse grid, before refinement.
    pub coarse_fidelity: f64,
    pub iterations: usize,
    /// Set when the simplex stopped on its iteration limit or gained less
    /// than `1e-6` over the coarse grid.
    pub nonconvergence: bool,
}

impl FitReport {
    pub fn delta_db(&self) -> f64 {
        self.params.delta_db()
    }
}

fn log_space((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![(lo * hi).sqrt()];
    }
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Fits `(Δ, κ, φ)` of the logical state `amps` to `rho` by maximising the
/// fidelity, first on a coarse grid and then with a downhill simplex in
/// `(ln Δ, ln κ, φ)`.
pub fn fit_gkp<D: DensityOperator + ?Sized>(
    rho: &D,
    amps: LogicalAmplitudes,
    opts: &FitOptions,
) -> Result<FitReport> {
    let grid = *rho.grid();
    let eval = |d: f64, k: f64, phi: f64| -> f64 {
        GkpParams::new(d, k, phi)
            .and_then(|p| logical_on_grid(amps, p, grid))
            .and_then(|psi| rho.expectation_pure(&psi))
            .unwrap_or(0.0)
    };

    let mut candidates = Vec::new();
    for &d in &log_space(opts.delta_range, opts.n_delta) {
        for &k in &log_space(opts.kappa_range, opts.n_kappa) {
            for &o in &opts.offsets {
                candidates.push((d, k, o));
            }
        }
    }
    let scores: Vec<f64> = candidates
        .par_iter()
        .map(|&(d, k, o)| eval(d, k, o))
        .collect();
    let (best_i, &coarse) = scores
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, &f64)>, (i, s)| match acc {
            Some((_, b)) if *s <= *b => acc,
            _ => Some((i, s)),
        })
        .ok_or_else(|| Error::param("fit", "empty search grid"))?;
    let (d0, k0, o0) = candidates[best_i];

    let min = nelder_mead(
        |x| -eval(x[0].exp(), x[1].exp(), x[2]),
        &[d0.ln(), k0.ln(), o0],
        &[0.1, 0.1, 0.02],
        1e-12,
        opts.max_iter,
    );
    let (params, fidelity) = if -min.value >= coarse {
        (GkpParams::new(min.x[0].exp(), min.x[1].exp(), min.x[2])?, -min.value)
    } else {
        (GkpParams::new(d0, k0, o0)?, coarse)
    };
    Ok(FitReport {
        params,
        fidelity,
        coarse_fidelity: coarse,
        iterations: min.iterations,
        nonconvergence: !min.converged || fidelity - coarse < 1e-6,
    })
}
