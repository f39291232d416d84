//! Master-equation simulation of the protocol with dispersive couplings
//! `χ⁽ⁿ⁾ a†a σ_z⁽ⁿ⁾/2`, `χ⁽ⁿ⁾ = χ·2^{n-2}`, in the frame displaced by the
//! drive amplitude `α(t)`.
//!
//! In that frame each qubit basis state `b` sees
//! `H_b = (Z_b/2)(a†a + α a† + α* a)` with `Z_b = Σ_n χ⁽ⁿ⁾ z_n(b) = -χ k_b`,
//! so a real `α` generates the kick `e^{i(2π/P_q) q X_N}` and an imaginary
//! `α` the shift `e^{-i(P_q/M) p X_N}`. Global qubit flips together with a
//! sign change of `α` leave these terms unchanged while reversing the
//! `a†a σ_z` distortion.

mod lindblad;

use std::f64::consts::{PI, SQRT_2};

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use lindblad::JointDensityMatrix;
use lindblad::{Lindbladian, Rates};

use crate::gkp::{fit_gkp, FitOptions, FitReport, GkpParams, LogicalAmplitudes};
use crate::oscillator::{
    fidelity_pure, fock_density_to_grid, to_fock_with_tol, MixedState, PositionGrid,
};
use crate::protocol::{initial_oscillator, ProtocolParams};
use crate::qudit::{build_v_state, qft_matrix, QuditDims, QuditState};
use crate::{Error, Result};

/// Allowed drift of `Tr ρ` over a run.
pub const TRACE_TOL: f64 = 1e-6;
/// Allowed Hermiticity error of the diagonal blocks before symmetrization.
pub const HERMITICITY_TOL: f64 = 1e-8;
/// Largest population allowed in the two highest Fock levels.
pub const FOCK_TAIL_TOL: f64 = 1e-6;
/// Truncation tolerance when encoding `ψ_0` in the Fock basis.
pub const INITIAL_FOCK_TOL: f64 = 1e-6;

/// Noise rates in units of `χ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseRates {
    /// Photon loss `κ_l D[a]`.
    pub kappa_l: f64,
    /// Oscillator dephasing `2κ_φ D[a†a]`.
    pub kappa_phi: f64,
    /// Qubit decay `γ_l D[σ_-]`.
    pub gamma_l: f64,
    /// Qubit dephasing `2γ_φ D[σ_z/2]`.
    pub gamma_phi: f64,
}

impl NoiseRates {
    pub fn single(channel: Channel, rate: f64) -> Self {
        let mut r = Self::default();
        *r.get_mut(channel) = rate;
        r
    }

    pub fn get(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Loss => self.kappa_l,
            Channel::OscDephase => self.kappa_phi,
            Channel::QubitDecay => self.gamma_l,
            Channel::QubitDephase => self.gamma_phi,
        }
    }

    fn get_mut(&mut self, channel: Channel) -> &mut f64 {
        match channel {
            Channel::Loss => &mut self.kappa_l,
            Channel::OscDephase => &mut self.kappa_phi,
            Channel::QubitDecay => &mut self.gamma_l,
            Channel::QubitDephase => &mut self.gamma_phi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for c in Channel::ALL {
            let r = self.get(c);
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::param("noise", format!("{} rate {r} must be >= 0", c.name())));
            }
        }
        Ok(())
    }

    fn rates(&self) -> Rates {
        Rates {
            kappa_l: self.kappa_l,
            kappa_phi: self.kappa_phi,
            gamma_l: self.gamma_l,
            gamma_phi: self.gamma_phi,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    Loss,
    OscDephase,
    QubitDecay,
    QubitDephase,
}

impl Channel {
    pub const ALL: [Channel; 4] = [
        Channel::Loss,
        Channel::OscDephase,
        Channel::QubitDecay,
        Channel::QubitDephase,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Channel::Loss => "loss",
            Channel::OscDephase => "osc-dephase",
            Channel::QubitDecay => "qubit-decay",
            Channel::QubitDephase => "qubit-dephase",
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::param("channel", format!("unknown channel `{s}`")))
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Instantaneous qubit operation applied before a segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QubitOp {
    /// Maps `|0…0>` to `|v>`.
    PrepareV,
    Qft,
    InverseQft,
    /// `X` on every qubit.
    FlipAll,
}

/// Part of the sequence a segment belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    Interaction,
    Disentangle,
    Readout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSegment {
    pub duration: f64,
    pub alpha: C64,
    pub pre_ops: Vec<QubitOp>,
    pub window: Window,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSchedule {
    pub segments: Vec<DriveSegment>,
    pub alpha0: f64,
    pub tau_i: f64,
    pub tau_d: f64,
}

impl DriveSchedule {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn window_duration(&self, window: Window) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.window == window)
            .map(|s| s.duration)
            .sum()
    }

    /// `Σ χ α_eff(t) s(t) dt/√2` over a window, where `s = ±1` tracks the
    /// qubit orientation and `α_eff` is `Re α` in the interaction window and
    /// `-Im α` in the disentangling window.
    pub fn accumulated_area(&self, window: Window, chi: f64) -> f64 {
        let mut flipped = false;
        let mut area = 0.0;
        for s in &self.segments {
            for op in &s.pre_ops {
                if *op == QubitOp::FlipAll {
                    flipped = !flipped;
                }
            }
            if s.window != window {
                continue;
            }
            let a = match window {
                Window::Interaction => s.alpha.re,
                Window::Disentangle => -s.alpha.im,
                Window::Readout => 0.0,
            };
            let sign = if flipped { -1.0 } else { 1.0 };
            area += chi * a * sign * s.duration / SQRT_2;
        }
        area
    }

    /// Number of `FlipAll` operations over the whole schedule.
    pub fn flip_count(&self) -> usize {
        self.segments
            .iter()
            .flat_map(|s| &s.pre_ops)
            .filter(|op| **op == QubitOp::FlipAll)
            .count()
    }
}

/// `τ_I = 2√2π/(α_0 χ P_q)`.
pub fn interaction_time(alpha0: f64, chi: f64, p_q: f64) -> f64 {
    2.0 * SQRT_2 * PI / (alpha0 * chi * p_q)
}

/// `τ_D = √2 P_q/(α_0 χ M)`.
pub fn disentangle_time(alpha0: f64, chi: f64, p_q: f64, m: usize) -> f64 {
    SQRT_2 * p_q / (alpha0 * chi * m as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub protocol: ProtocolParams,
    pub fock_cutoff: usize,
    pub chi: f64,
    pub alpha0: f64,
    pub n_flips: usize,
    /// Integrator step; the largest allowed step when `None`.
    pub dt: Option<f64>,
    pub noise: NoiseRates,
    /// Keeps the `a†a σ_z` term; disabling it is a diagnostic.
    pub number_term: bool,
}

impl SimConfig {
    /// `χ = 1`, `α_0 = 30`, 7 flips, cutoff 80, no noise.
    pub fn standard(protocol: ProtocolParams) -> Self {
        Self {
            protocol,
            fock_cutoff: 80,
            chi: 1.0,
            alpha0: 30.0,
            n_flips: 7,
            dt: None,
            noise: NoiseRates::default(),
            number_term: true,
        }
    }

    pub fn dims(&self) -> QuditDims {
        self.protocol.dims
    }

    /// `χ⁽ⁿ⁾ = χ·2^{n-2}` for qubit `n = 1..N`.
    pub fn chi_n(&self, n: usize) -> f64 {
        self.chi * 2f64.powi(n as i32 - 2)
    }

    pub fn chi_max(&self) -> f64 {
        self.chi_n(self.dims().n_qubits())
    }

    /// `0.01/(χ_max α_0 √2)`.
    pub fn max_dt(&self) -> f64 {
        0.01 / (self.chi_max() * self.alpha0 * SQRT_2)
    }

    pub fn step(&self) -> f64 {
        self.dt.unwrap_or_else(|| self.max_dt())
    }

    pub fn validate(&self) -> Result<()> {
        self.protocol.validate()?;
        self.noise.validate()?;
        if !(self.chi.is_finite() && self.chi > 0.0) {
            return Err(Error::param("chi", "must be positive"));
        }
        if !(self.alpha0.is_finite() && self.alpha0 > 0.0) {
            return Err(Error::param("alpha0", "must be positive"));
        }
        if self.fock_cutoff < 2 {
            return Err(Error::param("fock_cutoff", "must be at least 2"));
        }
        if self.n_flips.is_multiple_of(2) {
            return Err(Error::InvalidFlipCount(self.n_flips));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt <= self.max_dt() * (1.0 + 1e-12)) {
                return Err(Error::param(
                    "dt",
                    format!("{dt} must lie in (0, {:e}]", self.max_dt()),
                ));
            }
        }
        Ok(())
    }
}

/// Sequence `[U_v, F†]`, `τ_I` in `n_flips+1` segments with `α = ±α_0`,
/// `[flip, F]`, `τ_D` in `n_flips+1` segments with `α = ∓iα_0`, and a
/// closing flip with `α = 0`.
pub fn build_schedule(config: &SimConfig) -> Result<DriveSchedule> {
    config.validate()?;
    let n = config.n_flips;
    let p_q = config.protocol.p_q;
    let tau_i = interaction_time(config.alpha0, config.chi, p_q);
    let tau_d = disentangle_time(config.alpha0, config.chi, p_q, config.dims().dim());
    let a0 = config.alpha0;
    let mut segments = Vec::with_capacity(2 * n + 3);
    for j in 0..=n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let pre_ops = if j == 0 {
            vec![QubitOp::PrepareV, QubitOp::InverseQft]
        } else {
            vec![QubitOp::FlipAll]
        };
        segments.push(DriveSegment {
            duration: tau_i / (n + 1) as f64,
            alpha: C64::new(sign * a0, 0.0),
            pre_ops,
            window: Window::Interaction,
        });
    }
    for j in 0..=n {
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        let pre_ops = if j == 0 {
            vec![QubitOp::FlipAll, QubitOp::Qft]
        } else {
            vec![QubitOp::FlipAll]
        };
        segments.push(DriveSegment {
            duration: tau_d / (n + 1) as f64,
            alpha: C64::new(0.0, sign * a0),
            pre_ops,
            window: Window::Disentangle,
        });
    }
    segments.push(DriveSegment {
        duration: 0.0,
        alpha: C64::new(0.0, 0.0),
        pre_ops: vec![QubitOp::FlipAll],
        window: Window::Readout,
    });
    Ok(DriveSchedule {
        segments,
        alpha0: a0,
        tau_i,
        tau_d,
    })
}

/// Hamiltonian of one segment on the joint space, indexed `b·F + n`.
pub fn effective_hamiltonian(config: &SimConfig, segment: &DriveSegment) -> Array2<C64> {
    let lb = generator(config, segment.alpha);
    let f = config.fock_cutoff + 1;
    let m = config.dims().dim();
    let mut h = Array2::zeros((m * f, m * f));
    for b in 0..m {
        h.slice_mut(ndarray::s![b * f..(b + 1) * f, b * f..(b + 1) * f])
            .assign(&lb.hamiltonian_block(b));
    }
    h
}

fn generator(config: &SimConfig, alpha: C64) -> Lindbladian {
    Lindbladian::new(
        config.dims().n_qubits(),
        config.fock_cutoff + 1,
        config.chi,
        alpha,
        config.number_term,
        config.noise.rates(),
    )
}

/// `dρ/dt` for a constant drive amplitude `alpha`.
pub fn lindblad_rhs(config: &SimConfig, alpha: C64, rho: &JointDensityMatrix) -> JointDensityMatrix {
    generator(config, alpha).apply(rho)
}

/// State after a segment.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub trace: f64,
    pub fock_tail: f64,
}

/// Qubit unitary of an instantaneous operation.
pub fn qubit_op_matrix(op: QubitOp, v: Option<&QuditState>, dims: QuditDims) -> Result<Array2<C64>> {
    let m = dims.dim();
    Ok(match op {
        QubitOp::Qft => qft_matrix(dims).matrix().clone(),
        QubitOp::InverseQft => qft_matrix(dims).adjoint().matrix().clone(),
        QubitOp::FlipAll => Array2::from_shape_fn((m, m), |(r, c)| {
            if r + c == m - 1 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
        QubitOp::PrepareV => {
            let v = v.ok_or_else(|| Error::param("schedule", "U_v needs a target state"))?;
            householder_to(v)
        }
    })
}

/// Householder reflection mapping `|0…0>` onto `|v>` up to a global phase.
fn householder_to(v: &QuditState) -> Array2<C64> {
    let m = v.dims().dim();
    let a = v.amplitudes();
    let phase = if a[0].norm() > 0.0 {
        a[0] / a[0].norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let mut w: Vec<C64> = a.iter().map(|x| -x).collect();
    w[0] += phase;
    let wn: f64 = w.iter().map(|x| x.norm_sqr()).sum();
    Array2::from_shape_fn((m, m), |(r, c)| {
        let id = if r == c { 1.0 } else { 0.0 };
        if wn < 1e-28 {
            C64::new(id, 0.0) * phase
        } else {
            C64::new(id, 0.0) - w[r] * w[c].conj() * (2.0 / wn)
        }
    })
}

/// Integrates `initial` through `schedule`, recording the trace after every
/// segment.
pub fn integrate(
    config: &SimConfig,
    schedule: &DriveSchedule,
    initial: JointDensityMatrix,
    v: Option<&QuditState>,
) -> Result<(JointDensityMatrix, Vec<TraceRecord>)> {
    let dims = config.dims();
    if initial.n_qubits() != dims.n_qubits() || initial.cutoff() != config.fock_cutoff {
        return Err(Error::DimensionMismatch {
            expected: dims.dim() * (config.fock_cutoff + 1),
            actual: initial.qubit_dim() * (initial.cutoff() + 1),
        });
    }
    let dt_max = config.step();
    let mut rho = initial;
    let mut time = 0.0;
    let mut records = Vec::with_capacity(schedule.segments.len());
    for seg in &schedule.segments {
        if seg.duration.is_nan() || seg.duration < 0.0 {
            return Err(Error::param("duration", "segments need a non-negative duration"));
        }
        for op in &seg.pre_ops {
            rho.apply_qubit_unitary(&qubit_op_matrix(*op, v, dims)?);
        }
        if seg.duration > 0.0 {
            let steps = (seg.duration / dt_max).ceil().max(1.0) as usize;
            let dt = seg.duration / steps as f64;
            let gen = generator(config, seg.alpha);
            let herm = gen.evolve(&mut rho, dt, steps);
            if herm > HERMITICITY_TOL {
                return Err(Error::StepTooLarge {
                    trace_drift: (rho.trace() - 1.0).abs(),
                    hermiticity: herm,
                });
            }
        }
        time += seg.duration;
        let trace = rho.trace();
        if trace.is_nan() || (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::StepTooLarge {
                trace_drift: (trace - 1.0).abs(),
                hermiticity: rho.hermiticity_error(),
            });
        }
        records.push(TraceRecord {
            time,
            trace,
            fock_tail: rho.fock_tail(),
        });
    }
    Ok((rho, records))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub records: Vec<TraceRecord>,
    pub max_trace_drift: f64,
    pub max_fock_tail: f64,
    pub steps_dt: f64,
    pub purity: f64,
}

#[derive(Clone, Debug)]
pub struct DispersiveRun {
    /// Oscillator state on the protocol grid.
    pub oscillator: MixedState,
    /// Oscillator state in the Fock basis.
    pub fock_density: Array2<C64>,
    pub joint: JointDensityMatrix,
    pub schedule: DriveSchedule,
    pub diagnostics: Diagnostics,
}

/// Grid wide enough to hold `ψ_0` and the Hermite functions up to `cutoff`.
fn encoding_grid(params: &ProtocolParams, cutoff: usize) -> Result<PositionGrid> {
    let need = (3.0 * params.w)
        .max((2.0 * cutoff as f64 + 1.0).sqrt() + 8.0)
        .max(params.grid.half_width());
    let half = (need / 8.0).ceil() * 8.0;
    let dq = params.grid.dq().min(1.0 / 64.0);
    let n = ((2.0 * half / dq).ceil() as usize).next_power_of_two();
    PositionGrid::new(-half, half, n)
}

/// Runs the full sequence: `ψ_0` in the Fock basis, qubits in `|0…0>`, the
/// schedule from [`build_schedule`], then the qubits are traced out.
pub fn run_dispersive(config: &SimConfig) -> Result<DispersiveRun> {
    let schedule = build_schedule(config)?;
    run_schedule(config, &schedule)
}

/// As [`run_dispersive`] with a caller-supplied schedule.
pub fn run_schedule(config: &SimConfig, schedule: &DriveSchedule) -> Result<DispersiveRun> {
    config.validate()?;
    let params = &config.protocol;
    let dims = config.dims();
    let v = build_v_state(dims, params.vprep)?;
    let wide = encoding_grid(params, config.fock_cutoff)?;
    let mut wide_params = *params;
    wide_params.grid = wide;
    let psi0 = initial_oscillator(&wide_params)?;
    let fock0 = to_fock_with_tol(&psi0, config.fock_cutoff, INITIAL_FOCK_TOL)?;
    let zero = QuditState::basis(dims, 0)?;
    let initial = JointDensityMatrix::product(&zero, &fock0);
    let (joint, records) = integrate(config, schedule, initial, Some(&v))?;

    let max_fock_tail = records.iter().map(|r| r.fock_tail).fold(0.0, f64::max);
    if max_fock_tail > FOCK_TAIL_TOL {
        return Err(Error::InsufficientCutoff {
            cutoff: config.fock_cutoff,
            tail: max_fock_tail,
        });
    }
    let fock_density = joint.reduce_oscillator();
    let purity = fock_density
        .iter()
        .zip(fock_density.t().iter())
        .map(|(a, b)| (a * b).re)
        .sum();
    let oscillator = fock_density_to_grid(&fock_density, params.grid)?;
    let max_trace_drift = records
        .iter()
        .map(|r| (r.trace - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(DispersiveRun {
        oscillator,
        fock_density,
        joint,
        schedule: schedule.clone(),
        diagnostics: Diagnostics {
            records,
            max_trace_drift,
            max_fock_tail,
            steps_dt: config.step(),
            purity,
        },
    })
}

/// Zero-noise run fitted to a GKP state; the fit defines `G_0`.
pub fn reference_fit(config: &SimConfig, opts: &FitOptions) -> Result<(DispersiveRun, FitReport)> {
    let mut clean = config.clone();
    clean.noise = NoiseRates::default();
    let run = run_dispersive(&clean)?;
    let fit = fit_gkp(
        &run.oscillator,
        LogicalAmplitudes::from(config.protocol.vprep),
        opts,
    )?;
    Ok((run, fit))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Rate divided by `χ_max`.
    pub rate_ratio: f64,
    pub channel: Channel,
    pub fidelity: f64,
}

/// Fidelity to the fixed `G_0` as one noise rate varies, the others held at
/// zero. Rates are given as ratios to `χ_max`; points run concurrently and
/// the rows come back sorted by rate.
pub fn sweep_noise(
    config: &SimConfig,
    channel: Channel,
    rate_ratios: &[f64],
    g0: GkpParams,
) -> Result<Vec<SweepRow>> {
    let target = crate::gkp::logical_state(
        LogicalAmplitudes::from(config.protocol.vprep),
        g0,
        config.protocol.grid,
    )?;
    let chi_max = config.chi_max();
    let mut rows = rate_ratios
        .par_iter()
        .map(|&ratio| {
            let mut c = config.clone();
            c.noise = NoiseRates::single(channel, ratio * chi_max);
            let run = run_dispersive(&c)?;
            Ok(SweepRow {
                rate_ratio: ratio,
                channel,
                fidelity: fidelity_pure(&run.oscillator, &target)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.rate_ratio.total_cmp(&b.rate_ratio));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::{ladder_ops, FockVector};

    fn config(n: usize) -> SimConfig {
        SimConfig::standard(ProtocolParams::standard(n, 3.2).unwrap())
    }

    #[test]
    fn schedule_times_and_areas() {
        let c = config(3);
        let s = build_schedule(&c).unwrap();
        assert!((s.tau_i - 0.08355).abs() < 1e-5);
        assert!((s.tau_d - 0.02089).abs() < 1e-5);
        assert!((s.window_duration(Window::Interaction) - s.tau_i).abs() < 1e-12);
        assert!((s.window_duration(Window::Disentangle) - s.tau_d).abs() < 1e-12);
        let pq = c.protocol.p_q;
        assert!((s.accumulated_area(Window::Interaction, c.chi) - 2.0 * PI / pq).abs() < 1e-12);
        assert!((s.accumulated_area(Window::Disentangle, c.chi) - pq / 8.0).abs() < 1e-12);
        assert_eq!(s.flip_count(), 2 * 7 + 2);
        assert_eq!(s.segments.last().unwrap().alpha, C64::new(0.0, 0.0));
    }

    #[test]
    fn schedule_rejects_even_flips() {
        let mut c = config(3);
        c.n_flips = 4;
        assert!(matches!(build_schedule(&c), Err(Error::InvalidFlipCount(4))));
    }

    #[test]
    fn hamiltonian_interaction_is_position_coupling() {
        let mut c = config(2);
        c.fock_cutoff = 6;
        c.number_term = false;
        let alpha = 1.7;
        let seg = DriveSegment {
            duration: 0.1,
            alpha: C64::new(alpha, 0.0),
            pre_ops: vec![],
            window: Window::Interaction,
        };
        let h = effective_hamiltonian(&c, &seg);
        let q = ladder_ops(6).unwrap().q;
        let f = 7;
        for b in 0..4 {
            let k = c.dims().level(b);
            for n in 0..f {
                for m in 0..f {
                    let expect = -c.chi * k * alpha / SQRT_2 * q[[n, m]];
                    assert!((h[[b * f + n, b * f + m]] - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn flip_covariance() {
        let mut c = config(3);
        c.fock_cutoff = 5;
        c.number_term = false;
        let seg = |a: C64| DriveSegment {
            duration: 0.1,
            alpha: a,
            pre_ops: vec![],
            window: Window::Interaction,
        };
        let a = C64::new(0.4, -1.1);
        let h = effective_hamiltonian(&c, &seg(a));
        let hf = effective_hamiltonian(&c, &seg(-a));
        let x = qubit_op_matrix(QubitOp::FlipAll, None, c.dims()).unwrap();
        let f = 6;
        for b in 0..8 {
            let bf = (0..8).find(|&r| x[[r, b]].re == 1.0).unwrap();
            for n in 0..f {
                for m in 0..f {
                    let d = h[[b * f + n, b * f + m]] - hf[[bf * f + n, bf * f + m]];
                    assert!(d.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn householder_prepares_v() {
        let c = config(3);
        let v = build_v_state(c.dims(), c.protocol.vprep).unwrap();
        let u = qubit_op_matrix(QubitOp::PrepareV, Some(&v), c.dims()).unwrap();
        let out: Vec<C64> = (0..8).map(|r| u[[r, 0]]).collect();
        let overlap: C64 = out.iter().zip(v.amplitudes()).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rates_and_hamiltonian_give_zero_rhs() {
        let mut c = config(2);
        c.fock_cutoff = 4;
        c.number_term = false;
        let q = QuditState::basis(c.dims(), 1).unwrap();
        let f = FockVector::basis(4, 2).unwrap();
        let rho = JointDensityMatrix::product(&q, &f);
        let d = lindblad_rhs(&c, C64::new(0.0, 0.0), &rho).to_dense();
        assert!(d.iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn too_large_step_rejected() {
        let mut c = config(3);
        c.dt = Some(c.max_dt() * 2.0);
        assert!(c.validate().is_err());
    }
}
