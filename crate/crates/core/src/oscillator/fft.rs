use std::cell::RefCell;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalised forward DFT, `X_k = Σ_j x_j e^{-2πi jk/n}`.
pub(crate) fn forward(mut data: Vec<C64>) -> Vec<C64> {
    forward_in_place(&mut data);
    data
}

pub(crate) fn forward_in_place(data: &mut [C64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(data.len()));
    fft.process(data);
}

/// Inverse of [`forward`].
pub(crate) fn inverse(mut data: Vec<C64>) -> Vec<C64> {
    let n = data.len();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    fft.process(&mut data);
    let s = 1.0 / n as f64;
    data.iter_mut().for_each(|a| *a *= s);
    data
}
