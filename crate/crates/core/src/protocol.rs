//! Noise-free mapping of a qudit state onto the oscillator.
//!
//! The joint state is held as one oscillator wavefunction per qudit level,
//! `|Ψ> = Σ_k |x_k> ⊗ |ψ_k>`. The sequence is
//!
//! 1. `ψ_0(q) = e^{-iqπ/P_q} ψ_W(q)` with `ψ_W` a squeezed vacuum of width `W`,
//! 2. the qudit is prepared in `|v>`,
//! 3. `F†` acts on the qudit,
//! 4. `U_I = exp(i(2π/P_q) q X_N)` multiplies branch `k` by `e^{i2πqk/P_q}`,
//! 5. `F` acts on the qudit, leaving branch `l` equal to
//!    `v(l + Mq/P_q) ψ_W(q)`,
//! 6. `U_D = exp(-i(P_q/M) p X_N)` shifts branch `k` by `k P_q/M`.
//!
//! Afterwards every branch carries the same comb `v(Mq/P_q)` under a
//! slightly displaced Gaussian, so the qudit nearly factors out when
//! `W > P_q/2`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::gkp::{fit_gkp, FitOptions, FitReport, LogicalAmplitudes};
use crate::oscillator::{shift_in_place, squeezed_vacuum, MixedState, PositionGrid, WaveFunction};
use crate::qudit::{build_v_state, qft_matrix, Interpolant, QuditDims, QuditState, VPrepParams};
use crate::{Error, Result};

/// Peak spacing `2√π` of square-lattice GKP states.
pub fn default_peak_spacing() -> f64 {
    2.0 * PI.sqrt()
}

/// Sign of the initial momentum kick `e^{∓iqπ/P_q}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KickSign {
    /// `e^{-iqπ/P_q}`.
    #[default]
    AsWritten,
    /// `e^{+iqπ/P_q}`.
    Conjugate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub dims: QuditDims,
    /// Width of the initial squeezed vacuum.
    pub w: f64,
    /// Peak spacing of the produced comb.
    pub p_q: f64,
    pub vprep: VPrepParams,
    pub grid: PositionGrid,
    #[serde(default)]
    pub kick: KickSign,
}

impl ProtocolParams {
    pub fn new(
        dims: QuditDims,
        w: f64,
        p_q: f64,
        vprep: VPrepParams,
        grid: PositionGrid,
    ) -> Result<Self> {
        let p = Self {
            dims,
            w,
            p_q,
            vprep,
            grid,
            kick: KickSign::AsWritten,
        };
        p.validate()?;
        Ok(p)
    }

    /// Default spacing, logical-zero `|v>` with `θ_v = 2.6`, default grid.
    pub fn standard(n_qubits: usize, w: f64) -> Result<Self> {
        Self::new(
            QuditDims::new(n_qubits)?,
            w,
            default_peak_spacing(),
            VPrepParams::default(),
            PositionGrid::default(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w > 1.0 && self.w.is_finite()) {
            return Err(Error::param("W", format!("{} must exceed 1", self.w)));
        }
        if !(self.p_q > 0.0 && self.p_q.is_finite()) {
            return Err(Error::param("P_q", format!("{} must be positive", self.p_q)));
        }
        self.vprep.validate()
    }

    /// True when `W ≤ P_q/2`, where the qudit stays noticeably entangled.
    pub fn weak_disentanglement(&self) -> bool {
        self.w <= self.p_q / 2.0
    }

    pub(crate) fn kick_momentum(&self) -> f64 {
        match self.kick {
            KickSign::AsWritten => -PI / self.p_q,
            KickSign::Conjugate => PI / self.p_q,
        }
    }
}

/// `Σ_k |x_k> ⊗ |ψ_k>`, with branch `k` in row `k` of `branches`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    dims: QuditDims,
    grid: PositionGrid,
    branches: Array2<C64>,
}

impl JointState {
    const NORM_TOL: f64 = 1e-8;

    pub fn product(qudit: &QuditState, osc: &WaveFunction) -> Self {
        let dims = qudit.dims();
        let branches = Array2::from_shape_fn((dims.dim(), osc.grid().n_points()), |(k, i)| {
            qudit.amplitudes()[k] * osc.samples()[i]
        });
        Self {
            dims,
            grid: *osc.grid(),
            branches,
        }
    }

    pub fn from_branches(dims: QuditDims, grid: PositionGrid, branches: Array2<C64>) -> Result<Self> {
        if branches.dim() != (dims.dim(), grid.n_points()) {
            return Err(Error::DimensionMismatch {
                expected: dims.dim() * grid.n_points(),
                actual: branches.len(),
            });
        }
        let s = Self {
            dims,
            grid,
            branches,
        };
        let n = s.total_norm();
        if (n - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::param("branches", format!("total norm is {n}")));
        }
        Ok(s)
    }

    pub fn dims(&self) -> QuditDims {
        self.dims
    }

    pub fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    pub fn branches(&self) -> &Array2<C64> {
        &self.branches
    }

    pub fn branch(&self, index: usize) -> ndarray::ArrayView1<'_, C64> {
        self.branches.row(index)
    }

    /// `Σ_k ‖ψ_k‖²`.
    pub fn total_norm(&self) -> f64 {
        self.branches.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dq()
    }

    fn apply_qudit(&mut self, u: &Array2<C64>) {
        self.branches = u.dot(&self.branches);
    }

    /// Reduced qudit density matrix `σ_kl = <ψ_l|ψ_k>`.
    pub fn qudit_density(&self) -> Array2<C64> {
        let m = self.dims.dim();
        let dq = self.grid.dq();
        Array2::from_shape_fn((m, m), |(k, l)| {
            self.branches
                .row(l)
                .iter()
                .zip(self.branches.row(k).iter())
                .map(|(a, b)| a.conj() * b)
                .sum::<C64>()
                * dq
        })
    }
}

/// Oscillator state `ρ(z, y) = Σ_k ψ_k(z) ψ_k(y)*`.
pub fn reduce_oscillator(joint: &JointState) -> Result<MixedState> {
    MixedState::from_components(joint.grid, joint.branches.t().to_owned())
}

/// Von Neumann entropy, in bits, of the reduced qudit state.
pub fn disentanglement_entropy(joint: &JointState) -> f64 {
    let s = joint.qudit_density();
    let m = s.nrows();
    let mat = nalgebra::DMatrix::from_fn(m, m, |i, j| s[[i, j]]);
    mat.symmetric_eigenvalues()
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Where in the sequence a snapshot was taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    /// After preparing `ψ_0` and `|v>`.
    Prepared,
    /// After `U_I`.
    Entangled,
    /// After the second Fourier transform.
    Transformed,
    /// After `U_D`.
    Final,
}

impl Stage {
    pub fn label(&self) -> &'static str {
        match self {
            Stage::Prepared => "prepared",
            Stage::Entangled => "entangled",
            Stage::Transformed => "transformed",
            Stage::Final => "final",
        }
    }
}

#[derive(Clone, Debug)]
pub struct IdealRun {
    pub final_state: JointState,
    pub snapshots: Vec<(Stage, JointState)>,
}

impl IdealRun {
    pub fn snapshot(&self, stage: Stage) -> Option<&JointState> {
        self.snapshots.iter().find(|(s, _)| *s == stage).map(|(_, j)| j)
    }
}

/// Initial oscillator state `ψ_0`.
pub fn initial_oscillator(params: &ProtocolParams) -> Result<WaveFunction> {
    Ok(squeezed_vacuum(params.w, params.grid)?.momentum_displace(params.kick_momentum()))
}

/// Runs the sequence from the `|v>` given by `params.vprep`.
pub fn run_ideal(params: &ProtocolParams) -> Result<IdealRun> {
    let v = build_v_state(params.dims, params.vprep)?;
    run_ideal_with_state(params, &v)
}

/// Runs the sequence from an arbitrary qudit state.
pub fn run_ideal_with_state(params: &ProtocolParams, v: &QuditState) -> Result<IdealRun> {
    params.validate()?;
    if v.dims() != params.dims {
        return Err(Error::DimensionMismatch {
            expected: params.dims.dim(),
            actual: v.dims().dim(),
        });
    }
    if params.weak_disentanglement() {
        log::warn!(
            "W = {} does not exceed P_q/2 = {}; the qudit will stay entangled",
            params.w,
            params.p_q / 2.0
        );
    }
    let grid = params.grid;
    let dims = params.dims;
    let psi0 = initial_oscillator(params)?;
    let mut joint = JointState::product(v, &psi0);
    let mut snapshots = vec![(Stage::Prepared, joint.clone())];

    let f = qft_matrix(dims);
    joint.apply_qudit(&f.adjoint().matrix().to_owned());

    let kick = 2.0 * PI / params.p_q;
    joint
        .branches
        .axis_iter_mut(Axis(0))
        .enumerate()
        .for_each(|(idx, mut row)| {
            let k = dims.level(idx);
            for (i, a) in row.iter_mut().enumerate() {
                *a *= C64::from_polar(1.0, kick * grid.q(i) * k);
            }
        });
    snapshots.push((Stage::Entangled, joint.clone()));

    joint.apply_qudit(f.matrix());
    snapshots.push((Stage::Transformed, joint.clone()));

    let mf = dims.dim() as f64;
    joint
        .branches
        .axis_iter_mut(Axis(0))
        .enumerate()
        .for_each(|(idx, mut row)| {
            let shift = dims.level(idx) * params.p_q / mf;
            shift_in_place(&grid, row.as_slice_mut().expect("contiguous row"), shift);
        });
    snapshots.push((Stage::Final, joint.clone()));

    Ok(IdealRun {
        final_state: joint,
        snapshots,
    })
}

/// Closed-form reduced oscillator state
/// `ρ = Σ_l f_l f_l†` with `f_l(z) = ψ_W(z - l P_q/M) v(M z/P_q)`.
pub fn analytic_density(params: &ProtocolParams) -> Result<MixedState> {
    params.validate()?;
    let v = build_v_state(params.dims, params.vprep)?;
    analytic_density_with_state(params, &v)
}

pub fn analytic_density_with_state(params: &ProtocolParams, v: &QuditState) -> Result<MixedState> {
    let interp = Interpolant::new(v);
    let grid = params.grid;
    let dims = params.dims;
    let mf = dims.dim() as f64;
    let w = params.w;
    let norm = (PI * w * w).powf(-0.25);
    let psi_w = |q: f64| norm * (-q * q / (2.0 * w * w)).exp();
    let comb: Array1<C64> = (0..grid.n_points())
        .map(|i| interp.eval(mf * grid.q(i) / params.p_q))
        .collect();
    let comps = Array2::from_shape_fn((grid.n_points(), dims.dim()), |(i, l)| {
        let z = grid.q(i);
        comb[i] * psi_w(z - dims.level(l) * params.p_q / mf)
    });
    MixedState::from_components(grid, comps)
}

/// One row of [`scaling_study`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n_qubits: usize,
    pub w: f64,
    pub fit: FitReport,
    /// `Δ · 2^N`.
    pub delta_scaled: f64,
}

/// Width used for `N` qubits when none is given: `3.2` (10 dB) up to three
/// qubits, `5.01` (14 dB) beyond.
pub fn default_width(n_qubits: usize) -> f64 {
    if n_qubits <= 3 {
        3.2
    } else {
        5.01
    }
}

/// Runs and fits the protocol for each `N`, with `W` chosen by `width`.
pub fn scaling_study(
    n_list: &[usize],
    width: impl Fn(usize) -> f64,
    base: &ProtocolParams,
) -> Result<Vec<ScalingRow>> {
    n_list
        .iter()
        .map(|&n| {
            if !(2..=5).contains(&n) {
                return Err(Error::param("n_qubits", format!("{n} not in 2..=5")));
            }
            let w = width(n);
            let params = ProtocolParams {
                dims: QuditDims::new(n)?,
                w,
                ..*base
            };
            let run = run_ideal(&params)?;
            let rho = reduce_oscillator(&run.final_state)?;
            let fit = fit_gkp(&rho, LogicalAmplitudes::from(params.vprep), &FitOptions::default())?;
            Ok(ScalingRow {
                n_qubits: n,
                w,
                fit,
                delta_scaled: fit.params.delta * (1u64 << n) as f64,
            })
        })
        .collect()
}
