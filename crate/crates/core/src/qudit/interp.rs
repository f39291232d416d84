//! Band-limited interpolation of qudit amplitudes.
//!
//! The amplitudes `v_k` of a qudit state are the samples at `y = k` of
//!
//! ```text
//! v(y) = (1/M) Σ_{n,l∈K} v_l exp(i2π(n-1/2)(y-l)/M)
//!      = M^(-1/2) Σ_{m=-M/2}^{M/2-1} c_m exp(i2π m y/M),
//! ```
//!
//! with Fourier coefficients `c_m = <φ_m|v>` against the plane waves
//! `|φ_m> = M^(-1/2) Σ_l exp(i2π m l/M) |x_l>`. Because `n - 1/2` runs over
//! integers, `v` repeats itself with period `M`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::QuditState;

/// Precomputed Fourier representation of `v(y)`.
#[derive(Clone, Debug)]
pub struct Interpolant {
    dim: usize,
    /// `c_m` for `m = -M/2 .. M/2-1`, in that order.
    coeffs: Vec<C64>,
}

impl Interpolant {
    pub fn new(state: &QuditState) -> Self {
        let dims = state.dims();
        let m = dims.dim();
        let half = (m / 2) as i64;
        let coeffs = (-half..half)
            .map(|freq| coefficient(state, freq))
            .collect();
        Self { dim: m, coeffs }
    }

    /// Lowest frequency index, `-M/2`.
    pub fn min_frequency(&self) -> i64 {
        -((self.dim / 2) as i64)
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    /// `c_m`, zero outside the band `[-M/2, M/2-1]`.
    pub fn coefficient(&self, m: i64) -> C64 {
        let idx = m - self.min_frequency();
        if idx < 0 || idx as usize >= self.coeffs.len() {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn eval(&self, y: f64) -> C64 {
        let mf = self.dim as f64;
        // Reduce y to one period so the phases stay accurate for large |y|.
        let y = y.rem_euclid(mf);
        let step = C64::from_polar(1.0, 2.0 * PI * y / mf);
        let mut phase = C64::from_polar(1.0, 2.0 * PI * self.min_frequency() as f64 * y / mf);
        let mut acc = C64::new(0.0, 0.0);
        for c in &self.coeffs {
            acc += c * phase;
            phase *= step;
        }
        acc / mf.sqrt()
    }

    pub fn eval_many(&self, ys: impl IntoIterator<Item = f64>) -> Vec<C64> {
        ys.into_iter().map(|y| self.eval(y)).collect()
    }
}

fn coefficient(state: &QuditState, m: i64) -> C64 {
    let dims = state.dims();
    let mf = dims.dim() as f64;
    let sum: C64 = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let l = dims.level(i);
            // m·l is a multiple of 1/2; reduce mod M before exponentiating.
            let arg = (m as f64 * l).rem_euclid(mf);
            v * C64::from_polar(1.0, -2.0 * PI * arg / mf)
        })
        .sum();
    sum / mf.sqrt()
}

/// Evaluates `v(y)` for a single point. Build an [`Interpolant`] when many
/// points are needed.
pub fn interpolate(state: &QuditState, y: f64) -> C64 {
    Interpolant::new(state).eval(y)
}

/// Fourier coefficient `c_m` of `v(y)` at frequency `m/M`.
pub fn fourier_coeff(state: &QuditState, m: i64) -> C64 {
    let half = (state.dims().dim() / 2) as i64;
    if m < -half || m >= half {
        C64::new(0.0, 0.0)
    } else {
        coefficient(state, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::QuditDims;
    use ndarray::Array1;
    use proptest::prelude::*;

    /// Direct double sum over `n, l ∈ K`.
    fn v_direct(state: &QuditState, y: f64) -> C64 {
        let d = state.dims();
        let mf = d.dim() as f64;
        let mut acc = C64::new(0.0, 0.0);
        for n in d.levels() {
            for (i, v) in state.amplitudes().iter().enumerate() {
                let l = d.level(i);
                acc += v * C64::from_polar(1.0, 2.0 * PI * (n - 0.5) * (y - l) / mf);
            }
        }
        acc / mf
    }

    fn state_from(n: usize, re: &[f64], im: &[f64]) -> QuditState {
        let d = QuditDims::new(n).unwrap();
        let amps: Array1<C64> = (0..d.dim()).map(|i| C64::new(re[i], im[i])).collect();
        QuditState::normalized(d, amps).unwrap()
    }

    fn arb_state(n: usize) -> impl Strategy<Value = QuditState> {
        let m = 1 << n;
        (
            prop::collection::vec(-1.0..1.0f64, m),
            prop::collection::vec(-1.0..1.0f64, m),
        )
            .prop_filter("nonzero", |(a, b)| a.iter().chain(b).any(|x| x.abs() > 1e-3))
            .prop_map(move |(a, b)| state_from(n, &a, &b))
    }

    proptest! {
        #[test]
        fn exact_at_levels(state in (1usize..=5).prop_flat_map(arb_state)) {
            let interp = Interpolant::new(&state);
            for (i, v) in state.amplitudes().iter().enumerate() {
                let k = state.dims().level(i);
                prop_assert!((interp.eval(k) - v).norm() < 1e-10);
            }
        }

        #[test]
        fn matches_direct_sum(state in (1usize..=4).prop_flat_map(arb_state), y in -20.0..20.0f64) {
            prop_assert!((interpolate(&state, y) - v_direct(&state, y)).norm() < 1e-10);
        }

        #[test]
        fn parseval(state in (1usize..=5).prop_flat_map(arb_state)) {
            let m = state.dims().dim() as i64;
            let total: f64 = (-m..m).map(|k| fourier_coeff(&state, k).norm_sqr()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn period_is_m() {
        let s = state_from(3, &[0.3, -0.1, 0.8, 0.2, 0.0, 0.5, -0.4, 0.1], &[0.1; 8]);
        let interp = Interpolant::new(&s);
        for j in 0..50 {
            let y = -6.0 + 0.37 * j as f64;
            assert!((interp.eval(y + 8.0) - v_direct(&s, y)).norm() < 1e-10);
        }
    }

    #[test]
    fn band_limit() {
        let s = state_from(3, &[0.3, -0.1, 0.8, 0.2, 0.0, 0.5, -0.4, 0.1], &[0.0; 8]);
        for m in [-9, -5, 4, 5, 100] {
            assert_eq!(fourier_coeff(&s, m), C64::new(0.0, 0.0));
        }
        assert!(fourier_coeff(&s, -4).norm() > 0.0);
    }

    #[test]
    fn coefficients_match_quadrature() {
        // Midpoint rule over one period of the direct double sum.
        for n in 1..=4 {
            let d = QuditDims::new(n).unwrap();
            let m = d.dim();
            let re: Vec<f64> = (0..m).map(|i| ((i * 7 + 3) % 5) as f64 - 2.0).collect();
            let im: Vec<f64> = (0..m).map(|i| ((i * 3 + 1) % 4) as f64 - 1.5).collect();
            let s = state_from(n, &re, &im);
            let samples = 4096;
            let h = m as f64 / samples as f64;
            for freq in -(m as i64 / 2)..(m as i64 / 2) {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..samples {
                    let y = -(m as f64) / 2.0 + (j as f64 + 0.5) * h;
                    acc += v_direct(&s, y)
                        * C64::from_polar(1.0, -2.0 * PI * freq as f64 * y / m as f64);
                }
                let quad = acc * h / (m as f64).sqrt();
                assert!((quad - fourier_coeff(&s, freq)).norm() < 1e-6, "N={n} m={freq}");
            }
        }
    }

    #[test]
    fn single_level_gives_single_peak_per_period() {
        let d = QuditDims::new(3).unwrap();
        let s = QuditState::basis(d, 4).unwrap(); // k = +1/2
        let interp = Interpolant::new(&s);
        let ys: Vec<f64> = (0..1600).map(|j| -4.0 + j as f64 * 0.005).collect();
        let (imax, _) = ys
            .iter()
            .map(|&y| interp.eval(y).norm())
            .enumerate()
            .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        assert!((ys[imax] - 0.5).abs() < 1e-2);
        // Dirichlet-kernel side lobes stay well below the main peak.
        let side = ys
            .iter()
            .filter(|&&y| (y - 0.5).abs() > 1.5)
            .map(|&y| interp.eval(y).norm())
            .fold(0.0, f64::max);
        assert!(side < 0.5 * interp.eval(0.5).norm());
    }
}
