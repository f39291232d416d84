//! Wigner function `W(q, p) = (1/π) ∫ ρ(q+y, q-y) e^{-2ipy} dy` on the
//! position grid.
//!
//! The integral runs over `y = j·dq`, so the momentum axis has spacing
//! `π/(n·dq)` and the `p`-marginal reproduces `ρ(q, q)` exactly.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{fft, DensityOperator};

#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub q_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// `values[[i, m]] = W(q_axis[i], p_axis[m])`.
    pub values: Array2<f64>,
}

impl WignerGrid {
    fn step(axis: &[f64]) -> f64 {
        if axis.len() > 1 {
            axis[1] - axis[0]
        } else {
            1.0
        }
    }

    /// `∫∫ W dq dp`.
    pub fn integral(&self) -> f64 {
        self.values.sum() * Self::step(&self.q_axis) * Self::step(&self.p_axis)
    }

    /// `∫ W dp` for each `q`.
    pub fn q_marginal(&self) -> Vec<f64> {
        let dp = Self::step(&self.p_axis);
        self.values.rows().into_iter().map(|r| r.sum() * dp).collect()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at the sample nearest to `(q, p)`.
    pub fn at(&self, q: f64, p: f64) -> f64 {
        let nearest = |axis: &[f64], x: f64| {
            axis.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0)
        };
        self.values[[nearest(&self.q_axis, q), nearest(&self.p_axis, p)]]
    }

    /// Sub-grid inside `[q0, q1] × [p0, p1]`, keeping every `stride`-th
    /// sample along both axes.
    pub fn crop(&self, q: (f64, f64), p: (f64, f64), stride: usize) -> WignerGrid {
        let stride = stride.max(1);
        let pick = |axis: &[f64], (lo, hi): (f64, f64)| -> Vec<usize> {
            (0..axis.len())
                .filter(|&i| axis[i] >= lo && axis[i] <= hi)
                .step_by(stride)
                .collect()
        };
        let qi = pick(&self.q_axis, q);
        let pi = pick(&self.p_axis, p);
        WignerGrid {
            q_axis: qi.iter().map(|&i| self.q_axis[i]).collect(),
            p_axis: pi.iter().map(|&i| self.p_axis[i]).collect(),
            values: Array2::from_shape_fn((qi.len(), pi.len()), |(a, b)| {
                self.values[[qi[a], pi[b]]]
            }),
        }
    }
}

/// Full Wigner function over every grid point and every momentum mode.
pub fn wigner<D: DensityOperator + ?Sized>(rho: &D) -> WignerGrid {
    let g = rho.grid();
    wigner_window(rho, (g.q_min(), g.q_max()), (f64::NEG_INFINITY, f64::INFINITY))
}

/// Wigner function restricted to positions in `q_range` and momenta in
/// `p_range`.
pub fn wigner_window<D: DensityOperator + ?Sized>(
    rho: &D,
    q_range: (f64, f64),
    p_range: (f64, f64),
) -> WignerGrid {
    let g = *rho.grid();
    let n = g.n_points();
    let dq = g.dq();
    let dp = PI / (n as f64 * dq);
    let half = (n / 2) as i64;

    // Momentum modes in ascending order, as (FFT index, p).
    let modes: Vec<(usize, f64)> = (-half..half)
        .map(|m| ((m.rem_euclid(n as i64)) as usize, m as f64 * dp))
        .filter(|(_, p)| *p >= p_range.0 && *p <= p_range.1)
        .collect();
    let rows: Vec<usize> = (0..n)
        .filter(|&i| g.q(i) >= q_range.0 && g.q(i) <= q_range.1)
        .collect();

    let data: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|&i| {
            let mut v = vec![C64::new(0.0, 0.0); n];
            let reach = i.min(n - 1 - i) as i64;
            for j in -reach..=reach.min(half - 1) {
                let a = (i as i64 + j) as usize;
                let b = (i as i64 - j) as usize;
                v[j.rem_euclid(n as i64) as usize] = rho.entry(a, b);
            }
            fft::forward_in_place(&mut v);
            modes.iter().map(|(k, _)| v[*k].re * dq / PI).collect()
        })
        .collect();

    let mut values = Array2::zeros((rows.len(), modes.len()));
    for (r, row) in data.iter().enumerate() {
        for (c, x) in row.iter().enumerate() {
            values[[r, c]] = *x;
        }
    }
    WignerGrid {
        q_axis: rows.iter().map(|&i| g.q(i)).collect(),
        p_axis: modes.iter().map(|(_, p)| *p).collect(),
        values,
    }
}
