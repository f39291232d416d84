use std::f64::consts::{PI, SQRT_2};

use gkpforge::dispersive::*;
use gkpforge::oscillator::{ladder_ops, FockVector};
use gkpforge::protocol::{analytic_density, ProtocolParams};
use gkpforge::qudit::{QuditDims, QuditState};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn small_config(n: usize, cutoff: usize) -> SimConfig {
    let mut c = SimConfig::standard(ProtocolParams::standard(n.max(1), 3.2).unwrap());
    c.fock_cutoff = cutoff;
    c.number_term = false;
    c
}

fn free_segment(duration: f64, alpha: C64) -> DriveSchedule {
    DriveSchedule {
        segments: vec![DriveSegment {
            duration,
            alpha,
            pre_ops: vec![],
            window: Window::Interaction,
        }],
        alpha0: alpha.norm(),
        tau_i: duration,
        tau_d: 0.0,
    }
}

fn qubit(n: usize, amps: &[C64]) -> QuditState {
    QuditState::normalized(QuditDims::new(n).unwrap(), Array1::from(amps.to_vec())).unwrap()
}

fn fock(cutoff: usize, amps: &[(usize, f64)]) -> FockVector {
    let mut c = Array1::zeros(cutoff + 1);
    let norm: f64 = amps.iter().map(|(_, a)| a * a).sum::<f64>().sqrt();
    for (n, a) in amps {
        c[*n] = C64::new(a / norm, 0.0);
    }
    FockVector::new(c).unwrap()
}

fn expectation(rho: &Array2<C64>, psi: &[C64]) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..psi.len() {
        for j in 0..psi.len() {
            acc += psi[i].conj() * rho[[i, j]] * psi[j];
        }
    }
    acc.re
}

/// `exp(-i s q)` on the truncated Fock space.
fn exp_q(cutoff: usize, s: f64) -> Array2<C64> {
    let q = ladder_ops(cutoff).unwrap().q;
    let d = cutoff + 1;
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| q[[i, j]].re);
    let e = m.symmetric_eigen();
    Array2::from_shape_fn((d, d), |(i, j)| {
        (0..d)
            .map(|k| {
                e.eigenvectors[(i, k)]
                    * e.eigenvectors[(j, k)]
                    * C64::from_polar(1.0, -s * e.eigenvalues[k])
            })
            .sum()
    })
}

#[test]
fn single_qubit_controlled_displacement_matches_exponential() {
    let cutoff = 24;
    let c = small_config(1, cutoff);
    let (alpha, tau) = (6.0, 0.3);
    let q0 = qubit(1, &[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
    let f0 = fock(cutoff, &[(0, 1.0), (1, 0.5), (2, -0.3)]);
    let rho0 = JointDensityMatrix::product(&q0, &f0);
    let (rho, _) = integrate(&c, &free_segment(tau, C64::new(alpha, 0.0)), rho0, None).unwrap();

    // χ⁽¹⁾ = χ/2 and σ_z = ±1 on |0>, |1>.
    let s = c.chi_n(1) * alpha / SQRT_2 * tau;
    let d = cutoff + 1;
    let mut psi = vec![C64::new(0.0, 0.0); 2 * d];
    for (b, z) in [(0usize, 1.0), (1, -1.0)] {
        let u = exp_q(cutoff, s * z);
        for n in 0..d {
            psi[b * d + n] = q0.amplitudes()[b] * (0..d).map(|k| u[[n, k]] * f0.coeffs()[k]).sum::<C64>();
        }
    }
    let fid = expectation(&rho.to_dense(), &psi);
    assert!(fid > 1.0 - 1e-6, "{fid}");
}

#[test]
fn photon_loss_decays_exponentially() {
    let mut c = small_config(1, 4);
    c.noise.kappa_l = 0.7;
    let rho0 = JointDensityMatrix::product(&qubit(1, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]), &fock(4, &[(1, 1.0)]));
    let t = 1.0;
    let (rho, _) = integrate(&c, &free_segment(t, C64::new(0.0, 0.0)), rho0, None).unwrap();
    let p1 = rho.reduce_oscillator()[[1, 1]].re;
    assert!((p1 - (-0.7 * t).exp()).abs() < 1e-4, "{p1}");
}

#[test]
fn oscillator_dephasing_decays_coherence() {
    let mut c = small_config(1, 4);
    c.noise.kappa_phi = 0.5;
    let rho0 = JointDensityMatrix::product(
        &qubit(1, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
        &fock(4, &[(0, 1.0), (1, 1.0)]),
    );
    let t = 1.2;
    let (rho, _) = integrate(&c, &free_segment(t, C64::new(0.0, 0.0)), rho0, None).unwrap();
    let coh = rho.reduce_oscillator()[[0, 1]].norm();
    assert!((coh - 0.5 * (-0.5 * t).exp()).abs() < 1e-4, "{coh}");
}

#[test]
fn qubit_decay_and_dephasing() {
    let t = 0.8;
    let mut c = small_config(1, 2);
    c.noise.gamma_l = 0.9;
    let excited = qubit(1, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    let rho0 = JointDensityMatrix::product(&excited, &fock(2, &[(0, 1.0)]));
    let (rho, _) = integrate(&c, &free_segment(t, C64::new(0.0, 0.0)), rho0, None).unwrap();
    let p0 = rho.reduce_qubits()[[0, 0]].re;
    assert!((p0 - (-0.9 * t).exp()).abs() < 1e-4, "{p0}");

    let mut c = small_config(1, 2);
    c.noise.gamma_phi = 0.4;
    let plus = qubit(1, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
    let rho0 = JointDensityMatrix::product(&plus, &fock(2, &[(0, 1.0)]));
    let (rho, _) = integrate(&c, &free_segment(t, C64::new(0.0, 0.0)), rho0, None).unwrap();
    let coh = rho.reduce_qubits()[[0, 1]].norm();
    assert!((coh - 0.5 * (-0.4 * t).exp()).abs() < 1e-4, "{coh}");
}

#[test]
fn noisy_run_stays_physical() {
    let mut c = small_config(2, 8);
    c.number_term = true;
    c.noise = NoiseRates {
        kappa_l: 0.3,
        kappa_phi: 0.05,
        gamma_l: 0.2,
        gamma_phi: 0.1,
    };
    let q0 = qubit(2, &[C64::new(1.0, 0.0), C64::new(0.5, 0.5), C64::new(0.0, -0.3), C64::new(0.2, 0.0)]);
    let rho0 = JointDensityMatrix::product(&q0, &fock(8, &[(0, 1.0), (2, 0.7), (3, 0.2)]));
    let mut sched = free_segment(0.05, C64::new(2.0, -1.0));
    sched.segments.push(DriveSegment {
        duration: 0.05,
        alpha: C64::new(-2.0, 1.0),
        pre_ops: vec![QubitOp::FlipAll, QubitOp::Qft],
        window: Window::Interaction,
    });
    let (rho, records) = integrate(&c, &sched, rho0, None).unwrap();
    assert!(records.iter().all(|r| (r.trace - 1.0).abs() < 1e-6));
    let dense = rho.to_dense();
    let d = dense.nrows();
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| dense[[i, j]]);
    let herm = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(herm < 1e-8);
    let eig = nalgebra::DMatrix::from_fn(2 * d, 2 * d, |i, j| {
        let (bi, bj) = (i / d, j / d);
        let z = m[(i % d, j % d)];
        match (bi, bj) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    })
    .symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min > -1e-6, "{min}");
    let purity: f64 = dense.iter().zip(dense.t().iter()).map(|(a, b)| (a * b).re).sum();
    assert!(purity <= 1.0 + 1e-8);
}

#[test]
fn disabled_number_term_matches_ideal_protocol() {
    let mut c = SimConfig::standard(ProtocolParams::standard(2, 3.2).unwrap());
    c.number_term = false;
    let run = run_dispersive(&c).unwrap();
    let ideal = analytic_density(&c.protocol).unwrap();
    let fid = run.oscillator.fidelity(&ideal).unwrap();
    assert!(fid >= 0.999, "{fid}");
    assert!(run.diagnostics.max_trace_drift < 1e-6);
}

#[test]
fn halving_step_changes_little() {
    let c = SimConfig::standard(ProtocolParams::standard(2, 3.2).unwrap());
    let ideal = analytic_density(&c.protocol).unwrap();
    let a = run_dispersive(&c).unwrap().oscillator.fidelity(&ideal).unwrap();
    let mut half = c.clone();
    half.dt = Some(c.max_dt() / 2.0);
    let b = run_dispersive(&half).unwrap().oscillator.fidelity(&ideal).unwrap();
    assert!((a - b).abs() < 1e-6, "{a} {b}");
}

#[test]
fn small_cutoff_is_reported() {
    let mut c = SimConfig::standard(ProtocolParams::standard(2, 3.2).unwrap());
    c.fock_cutoff = 20;
    let err = run_dispersive(&c).unwrap_err();
    assert!(err.is_numerical(), "{err}");
}

#[test]
fn channel_names_round_trip() {
    for ch in Channel::ALL {
        assert_eq!(ch.name().parse::<Channel>().unwrap(), ch);
        assert_eq!(NoiseRates::single(ch, 0.25).get(ch), 0.25);
    }
    assert!("thermal".parse::<Channel>().is_err());
}

proptest! {
    #[test]
    fn schedule_invariants(
        n in 2usize..=4,
        half_flips in 0usize..8,
        alpha0 in 5.0f64..80.0,
        chi in 0.5f64..2.0,
        p_q in 2.0f64..5.0,
    ) {
        let mut params = ProtocolParams::standard(n, 3.2).unwrap();
        params.p_q = p_q;
        let mut c = SimConfig::standard(params);
        c.n_flips = 2 * half_flips + 1;
        c.alpha0 = alpha0;
        c.chi = chi;
        let s = build_schedule(&c).unwrap();
        let m = (1usize << n) as f64;
        prop_assert!((s.window_duration(Window::Interaction) - interaction_time(alpha0, chi, p_q)).abs() < 1e-12);
        prop_assert!((s.window_duration(Window::Disentangle) - disentangle_time(alpha0, chi, p_q, 1 << n)).abs() < 1e-12);
        prop_assert!((s.accumulated_area(Window::Interaction, chi) - 2.0 * PI / p_q).abs() < 1e-12);
        prop_assert!((s.accumulated_area(Window::Disentangle, chi) - p_q / m).abs() < 1e-12);
        prop_assert_eq!(s.flip_count() % 2, 0);
        prop_assert!(s.segments.iter().all(|seg| seg.alpha.norm() <= alpha0 + 1e-12 && seg.duration >= 0.0));
    }
}
