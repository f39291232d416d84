//! Gate-level circuits for the centered Fourier transform and the `|v>`
//! preparation.
//!
//! Qubit `0` is `j_1`, the least significant bit of the array index.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{build_v_state, QuditDims, QuditOperator, QuditState, VPrepParams};
use crate::{Error, Result};

/// Minimum overlap between the circuit output and the synthesised `|v>`.
pub const U_V_MIN_FIDELITY: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
    /// `exp(-i angle σ_y / 2)`.
    Ry { qubit: usize, angle: f64 },
    /// `exp(-i angle σ_z / 2)`.
    Rz { qubit: usize, angle: f64 },
    Cnot { control: usize, target: usize },
    /// `diag(1, 1, 1, e^{i angle})` on (control, target).
    CPhase { control: usize, target: usize, angle: f64 },
    Swap(usize, usize),
}

impl Gate {
    fn single(&self) -> Option<(usize, [[C64; 2]; 2])> {
        let r = |x: f64| C64::new(x, 0.0);
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        match *self {
            Gate::H(q) => {
                let h = 1.0 / 2f64.sqrt();
                Some((q, [[r(h), r(h)], [r(h), r(-h)]]))
            }
            Gate::X(q) => Some((q, [[z, o], [o, z]])),
            Gate::Z(q) => Some((q, [[o, z], [z, -o]])),
            Gate::Ry { qubit, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                Some((qubit, [[r(c), r(-s)], [r(s), r(c)]]))
            }
            Gate::Rz { qubit, angle } => Some((
                qubit,
                [
                    [C64::from_polar(1.0, -angle / 2.0), z],
                    [z, C64::from_polar(1.0, angle / 2.0)],
                ],
            )),
            _ => None,
        }
    }

    fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Z(q) => vec![q],
            Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } => vec![qubit],
            Gate::Cnot { control, target } | Gate::CPhase { control, target, .. } => {
                vec![control, target]
            }
            Gate::Swap(a, b) => vec![a, b],
        }
    }

    fn apply(&self, amps: &mut [C64]) {
        if let Some((q, u)) = self.single() {
            let bit = 1 << q;
            for i in (0..amps.len()).filter(|i| i & bit == 0) {
                let (a, b) = (amps[i], amps[i | bit]);
                amps[i] = u[0][0] * a + u[0][1] * b;
                amps[i | bit] = u[1][0] * a + u[1][1] * b;
            }
            return;
        }
        match *self {
            Gate::Cnot { control, target } => {
                let (c, t) = (1 << control, 1 << target);
                for i in (0..amps.len()).filter(|i| i & c != 0 && i & t == 0) {
                    amps.swap(i, i | t);
                }
            }
            Gate::CPhase {
                control,
                target,
                angle,
            } => {
                let mask = (1 << control) | (1 << target);
                let ph = C64::from_polar(1.0, angle);
                for (i, a) in amps.iter_mut().enumerate() {
                    if i & mask == mask {
                        *a *= ph;
                    }
                }
            }
            Gate::Swap(p, q) => {
                let (bp, bq) = (1 << p, 1 << q);
                for i in (0..amps.len()).filter(|i| i & bp != 0 && i & bq == 0) {
                    amps.swap(i, i ^ bp ^ bq);
                }
            }
            _ => unreachable!(),
        }
    }
}

/// Ordered gate list acting on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        for q in gate.qubits() {
            if q >= self.n_qubits {
                return Err(Error::param(
                    "gate",
                    format!("qubit {q} out of range for {} qubits", self.n_qubits),
                ));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn apply(&self, state: &QuditState) -> QuditState {
        let mut amps = state.amplitudes().to_vec();
        for g in &self.gates {
            g.apply(&mut amps);
        }
        QuditState::normalized(state.dims(), Array1::from(amps))
            .expect("gates preserve the norm")
    }

    pub fn unitary(&self) -> QuditOperator {
        let m = 1usize << self.n_qubits;
        let mut u = Array2::<C64>::zeros((m, m));
        for col in 0..m {
            let mut amps = vec![C64::new(0.0, 0.0); m];
            amps[col] = C64::new(1.0, 0.0);
            for g in &self.gates {
                g.apply(&mut amps);
            }
            u.column_mut(col).assign(&Array1::from(amps));
        }
        QuditOperator::from_matrix(u)
    }
}

/// Standard quantum Fourier transform, with the half-integer centering
/// supplied by a `Z` on qubit `0` before and after.
pub fn qft_circuit(dims: QuditDims) -> Circuit {
    let n = dims.n_qubits();
    let mut c = Circuit::new(n);
    let mut push = |g| c.gates.push(g);
    push(Gate::Z(0));
    for j in (0..n).rev() {
        push(Gate::H(j));
        for k in (0..j).rev() {
            push(Gate::CPhase {
                control: k,
                target: j,
                angle: PI / (1u64 << (j - k)) as f64,
            });
        }
    }
    for i in 0..n / 2 {
        push(Gate::Swap(i, n - 1 - i));
    }
    push(Gate::Z(0));
    c
}

/// Number of `RY(θ_v)` repetitions that best approximates `RY(π/2)`.
fn plus_repetitions(theta: f64) -> usize {
    let dist = |n: usize| {
        let a = (n as f64 * theta - PI / 2.0).rem_euclid(2.0 * PI);
        a.min(2.0 * PI - a)
    };
    (1..=12)
        .min_by(|&a, &b| dist(a).total_cmp(&dist(b)))
        .unwrap_or(1)
}

/// Circuit preparing `|v>` from `|0...0>` using only `X`, `CNOT`,
/// `RY(θ_v)`, `RY(φ_v)` and `RZ(ω_v)`.
///
/// Qubit `0` carries the inner/outer split, the top qubit the sign of the
/// level and qubit `1` the logical bit; the remaining qubits copy qubit `1`.
/// The even superposition of the sign qubit is approximated by repeated
/// `RY(θ_v)`, so the output is validated against [`build_v_state`].
pub fn u_v_circuit(dims: QuditDims, params: VPrepParams) -> Result<Circuit> {
    params.validate()?;
    let n = dims.n_qubits();
    if n < 2 {
        return Err(Error::param("n_qubits", "two peaks need at least two qubits"));
    }
    if n == 2 && params.phi_v != 0.0 {
        return Err(Error::Unsupported(
            "two qubits cannot hold both logical peaks".into(),
        ));
    }
    let top = n - 1;
    let mut c = Circuit::new(n);
    c.push(Gate::Ry {
        qubit: 0,
        angle: params.theta_v,
    })?;
    for _ in 0..plus_repetitions(params.theta_v) {
        c.push(Gate::Ry {
            qubit: top,
            angle: params.theta_v,
        })?;
    }
    if n == 2 {
        c.push(Gate::Cnot {
            control: top,
            target: 0,
        })?;
    } else {
        c.push(Gate::Ry {
            qubit: 1,
            angle: params.phi_v,
        })?;
        c.push(Gate::Rz {
            qubit: 1,
            angle: params.omega_v,
        })?;
        c.push(Gate::Cnot {
            control: top,
            target: 1,
        })?;
        c.push(Gate::X(1))?;
        c.push(Gate::Cnot {
            control: 1,
            target: 0,
        })?;
        c.push(Gate::X(0))?;
        for q in 2..top {
            c.push(Gate::Cnot {
                control: 1,
                target: q,
            })?;
        }
    }

    let target = build_v_state(dims, params)?;
    let out = c.apply(&QuditState::basis(dims, 0)?);
    let fid = out.fidelity(&target);
    if fid < U_V_MIN_FIDELITY {
        return Err(Error::CircuitMismatch {
            what: "u_v",
            deviation: 1.0 - fid,
        });
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::qft_matrix;

    fn global_phase_distance(a: &QuditOperator, b: &QuditOperator) -> f64 {
        let (am, bm) = (a.matrix(), b.matrix());
        let (i, _) = bm
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
            .unwrap();
        let m = bm.ncols();
        let (r, col) = (i / m, i % m);
        let ph = bm[[r, col]] / am[[r, col]];
        let ph = ph / ph.norm();
        am.iter()
            .zip(bm.iter())
            .map(|(x, y)| (x * ph - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn qft_circuit_matches_matrix() {
        for n in 1..=5 {
            let d = QuditDims::new(n).unwrap();
            let u = qft_circuit(d).unitary();
            assert!(u.unitarity_error() < 1e-12);
            assert!(global_phase_distance(&u, &qft_matrix(d)) < 1e-9, "N={n}");
        }
    }

    #[test]
    fn single_qubit_qft_circuit() {
        let u = qft_circuit(QuditDims::new(1).unwrap()).unitary();
        let h = 1.0 / 2f64.sqrt();
        let expect = [[-h, h], [h, h]];
        let m = u.matrix();
        let ph = C64::new(expect[0][1], 0.0) / m[[0, 1]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((m[[r, c]] * ph - expect[r][c]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn u_v_uses_allowed_gates() {
        let p = VPrepParams::new(2.6, 1.2, 0.7).unwrap();
        for n in 3..=6 {
            let c = u_v_circuit(QuditDims::new(n).unwrap(), p).unwrap();
            for g in &c.gates {
                let ok = match *g {
                    Gate::X(_) | Gate::Cnot { .. } => true,
                    Gate::Ry { angle, .. } => angle == p.theta_v || angle == p.phi_v,
                    Gate::Rz { angle, .. } => angle == p.omega_v,
                    _ => false,
                };
                assert!(ok, "{g:?}");
            }
        }
    }

    #[test]
    fn u_v_reproduces_synthesis() {
        for n in 3..=6 {
            let d = QuditDims::new(n).unwrap();
            for (phi, omega) in [(0.0, 0.0), (PI, 0.0), (PI / 2.0, PI / 2.0), (1.0, 4.0)] {
                let p = VPrepParams::new(2.6, phi, omega).unwrap();
                let out = u_v_circuit(d, p).unwrap().apply(&QuditState::basis(d, 0).unwrap());
                let fid = out.fidelity(&build_v_state(d, p).unwrap());
                assert!(fid > 0.999, "N={n} phi={phi} fid={fid}");
            }
        }
        let d = QuditDims::new(2).unwrap();
        let p = VPrepParams::default();
        let out = u_v_circuit(d, p).unwrap().apply(&QuditState::basis(d, 0).unwrap());
        assert!(out.fidelity(&build_v_state(d, p).unwrap()) > 0.999);
    }

    #[test]
    fn u_v_rejects_unreachable_targets() {
        let d = QuditDims::new(2).unwrap();
        assert!(u_v_circuit(d, VPrepParams::new(2.6, 1.0, 0.0).unwrap()).is_err());
        // No repetition count brings RY(π) near RY(π/2).
        let e = u_v_circuit(QuditDims::new(3).unwrap(), VPrepParams::new(PI, 0.0, 0.0).unwrap());
        assert!(matches!(e, Err(Error::CircuitMismatch { .. })));
    }

    #[test]
    fn circuit_rejects_out_of_range_qubits() {
        let mut c = Circuit::new(2);
        assert!(c.push(Gate::X(2)).is_err());
        assert!(c.push(Gate::Cnot { control: 0, target: 1 }).is_ok());
    }
}
