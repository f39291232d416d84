use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use super::{same_grid, PositionGrid, WaveFunction};
use crate::{Error, Result};

/// Read access shared by the dense and factored density matrices.
pub trait DensityOperator: Sync {
    fn grid(&self) -> &PositionGrid;

    /// Kernel value `ρ(q_a, q_b)`.
    fn entry(&self, a: usize, b: usize) -> C64;

    /// `<ψ|ρ|ψ>` by quadrature.
    fn expectation_pure(&self, psi: &WaveFunction) -> Result<f64>;

    /// `Σ ρ(q_i, q_i) dq`.
    fn trace(&self) -> f64;

    /// `Tr ρ²`.
    fn purity(&self) -> f64;

    /// Position probability density `ρ(q_i, q_i)`.
    fn position_density(&self) -> Array1<f64> {
        (0..self.grid().n_points())
            .map(|i| self.entry(i, i).re)
            .collect()
    }
}

/// Fidelity `<ψ|ρ|ψ>` of a state against a pure target.
pub fn fidelity_pure<D: DensityOperator + ?Sized>(rho: &D, psi: &WaveFunction) -> Result<f64> {
    rho.expectation_pure(psi)
}

/// Dense kernel `ρ(q_i, q_j)` on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensityMatrix {
    grid: PositionGrid,
    entries: Array2<C64>,
}

impl GridDensityMatrix {
    const HERMITIAN_TOL: f64 = 1e-8;
    const TRACE_TOL: f64 = 1e-6;

    pub fn new(grid: PositionGrid, entries: Array2<C64>) -> Result<Self> {
        let n = grid.n_points();
        if entries.dim() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: entries.nrows(),
            });
        }
        let rho = Self { grid, entries };
        let h = rho.hermiticity_error();
        if h > Self::HERMITIAN_TOL {
            return Err(Error::param("density", format!("not Hermitian (error {h:.2e})")));
        }
        let t = rho.trace();
        if (t - 1.0).abs() > Self::TRACE_TOL {
            return Err(Error::param("density", format!("trace is {t}, expected 1")));
        }
        Ok(rho)
    }

    pub fn from_pure(psi: &WaveFunction) -> Self {
        let s = psi.samples();
        let n = s.len();
        Self {
            grid: *psi.grid(),
            entries: Array2::from_shape_fn((n, n), |(i, j)| s[i] * s[j].conj()),
        }
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.entries.nrows();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                err = err.max((self.entries[[i, j]] - self.entries[[j, i]].conj()).norm());
            }
        }
        err
    }

    /// Every `stride`-th grid point and the kernel restricted to them.
    pub fn decimate(&self, stride: usize) -> (Vec<f64>, Array2<C64>) {
        let stride = stride.max(1);
        let idx: Vec<usize> = (0..self.grid.n_points()).step_by(stride).collect();
        let q = idx.iter().map(|&i| self.grid.q(i)).collect();
        let m = Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| {
            self.entries[[idx[a], idx[b]]]
        });
        (q, m)
    }
}

impl DensityOperator for GridDensityMatrix {
    fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    fn entry(&self, a: usize, b: usize) -> C64 {
        self.entries[[a, b]]
    }

    fn expectation_pure(&self, psi: &WaveFunction) -> Result<f64> {
        same_grid(&self.grid, psi.grid())?;
        let s = psi.samples();
        let rs = self.entries.dot(s);
        let v: C64 = s.iter().zip(rs.iter()).map(|(a, b)| a.conj() * b).sum();
        let dq = self.grid.dq();
        Ok(v.re * dq * dq)
    }

    fn trace(&self) -> f64 {
        self.entries.diag().iter().map(|a| a.re).sum::<f64>() * self.grid.dq()
    }

    fn purity(&self) -> f64 {
        let dq = self.grid.dq();
        self.entries.iter().map(|a| a.norm_sqr()).sum::<f64>() * dq * dq
    }
}

/// Density matrix held in factored form `ρ = Σ_c f_c f_c†`, one column of
/// `components` per `f_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedState {
    grid: PositionGrid,
    components: Array2<C64>,
}

impl MixedState {
    /// Rescales the components to unit trace.
    pub fn from_components(grid: PositionGrid, mut components: Array2<C64>) -> Result<Self> {
        if components.nrows() != grid.n_points() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_points(),
                actual: components.nrows(),
            });
        }
        let t = components.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dq();
        if t == 0.0 || !t.is_finite() {
            return Err(Error::param("components", "zero trace"));
        }
        let s = 1.0 / t.sqrt();
        components.mapv_inplace(|a| a * s);
        Ok(Self { grid, components })
    }

    pub fn from_pure(psi: &WaveFunction) -> Self {
        let n = psi.samples().len();
        let comps = psi
            .samples()
            .to_owned()
            .into_shape_with_order((n, 1))
            .expect("column vector");
        Self {
            grid: *psi.grid(),
            components: comps,
        }
    }

    pub fn components(&self) -> &Array2<C64> {
        &self.components
    }

    pub fn rank(&self) -> usize {
        self.components.ncols()
    }

    pub fn to_dense(&self) -> GridDensityMatrix {
        let c = &self.components;
        let entries = c.dot(&c.t().mapv(|a| a.conj()));
        GridDensityMatrix {
            grid: self.grid,
            entries,
        }
    }

    /// Gram matrix `<f_c|g_d>` between two factorisations.
    fn overlap(&self, other: &MixedState) -> Result<nalgebra::DMatrix<C64>> {
        same_grid(&self.grid, &other.grid)?;
        let dq = self.grid.dq();
        let (a, b) = (&self.components, &other.components);
        Ok(nalgebra::DMatrix::from_fn(a.ncols(), b.ncols(), |c, d| {
            a.column(c)
                .iter()
                .zip(b.column(d).iter())
                .map(|(x, y)| x.conj() * y)
                .sum::<C64>()
                * dq
        }))
    }

    /// Uhlmann fidelity `(Tr|√ρ √σ|)²`.
    pub fn fidelity(&self, other: &MixedState) -> Result<f64> {
        let g = self.overlap(other)?;
        let s: f64 = g.singular_values().iter().sum();
        Ok(s * s)
    }
}

impl DensityOperator for MixedState {
    fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    fn entry(&self, a: usize, b: usize) -> C64 {
        self.components
            .row(a)
            .iter()
            .zip(self.components.row(b).iter())
            .map(|(x, y)| x * y.conj())
            .sum()
    }

    fn expectation_pure(&self, psi: &WaveFunction) -> Result<f64> {
        same_grid(&self.grid, psi.grid())?;
        let dq = self.grid.dq();
        let s = psi.samples();
        Ok(self
            .components
            .columns()
            .into_iter()
            .map(|col| {
                (col.iter().zip(s.iter()).map(|(f, p)| p.conj() * f).sum::<C64>() * dq).norm_sqr()
            })
            .sum())
    }

    fn trace(&self) -> f64 {
        self.components.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dq()
    }

    fn purity(&self) -> f64 {
        self.overlap(self)
            .map(|g| g.iter().map(|a| a.norm_sqr()).sum())
            .unwrap_or(f64::NAN)
    }

    fn position_density(&self) -> Array1<f64> {
        self.components
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|a| a.norm_sqr()).sum())
            .collect()
    }
}

impl DensityOperator for WaveFunction {
    fn grid(&self) -> &PositionGrid {
        WaveFunction::grid(self)
    }

    fn entry(&self, a: usize, b: usize) -> C64 {
        self.samples()[a] * self.samples()[b].conj()
    }

    fn expectation_pure(&self, psi: &WaveFunction) -> Result<f64> {
        self.fidelity(psi)
    }

    fn trace(&self) -> f64 {
        self.norm_sqr()
    }

    fn purity(&self) -> f64 {
        self.norm_sqr().powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::super::squeezed_vacuum;
    use super::*;

    fn small_grid() -> PositionGrid {
        PositionGrid::new(-8.0, 8.0, 256).unwrap()
    }

    fn gaussian(center: f64) -> WaveFunction {
        squeezed_vacuum(1.0, small_grid()).unwrap().position_shift(center)
    }

    #[test]
    fn pure_state_fidelity_is_one() {
        let psi = gaussian(0.3);
        let rho = GridDensityMatrix::from_pure(&psi);
        assert!((fidelity_pure(&rho, &psi).unwrap() - 1.0).abs() < 1e-12);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!(GridDensityMatrix::new(*rho.grid(), rho.entries().clone()).is_ok());
    }

    #[test]
    fn distant_gaussians_are_orthogonal() {
        // Unit-width vacua ten widths (1/√2 each) apart.
        let d = 10.0 / 2f64.sqrt();
        let a = gaussian(-d / 2.0);
        let b = gaussian(d / 2.0);
        let rho = GridDensityMatrix::from_pure(&a);
        let f = fidelity_pure(&rho, &b).unwrap();
        assert!(f < 1e-6);
        assert!((f - (-d * d / 2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn even_mixture() {
        let a = gaussian(-3.0);
        let b = gaussian(3.0);
        let mut comps = Array2::zeros((256, 2));
        comps.column_mut(0).assign(a.samples());
        comps.column_mut(1).assign(b.samples());
        let mixed = MixedState::from_components(small_grid(), comps).unwrap();
        assert!((mixed.trace() - 1.0).abs() < 1e-12);
        assert!((fidelity_pure(&mixed, &a).unwrap() - 0.5).abs() < 1e-6);
        assert!((mixed.purity() - 0.5).abs() < 1e-6);
        let dense = mixed.to_dense();
        assert!((fidelity_pure(&dense, &b).unwrap() - 0.5).abs() < 1e-6);
        assert!((dense.purity() - mixed.purity()).abs() < 1e-12);
        for (i, j) in [(10, 200), (128, 131), (5, 5)] {
            assert!((dense.entry(i, j) - mixed.entry(i, j)).norm() < 1e-14);
        }
        let pa = MixedState::from_pure(&a);
        assert!((mixed.fidelity(&pa).unwrap() - 0.5).abs() < 1e-6);
        assert!((mixed.fidelity(&mixed).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_invalid_matrices() {
        let g = small_grid();
        let mut e = GridDensityMatrix::from_pure(&gaussian(0.0)).entries().clone();
        e[[3, 4]] += C64::new(0.0, 1e-3);
        assert!(GridDensityMatrix::new(g, e).is_err());
        let e2 = GridDensityMatrix::from_pure(&gaussian(0.0)).entries().mapv(|a| a * 2.0);
        assert!(GridDensityMatrix::new(g, e2).is_err());
        let other = squeezed_vacuum(1.0, PositionGrid::default()).unwrap();
        let rho = GridDensityMatrix::from_pure(&gaussian(0.0));
        assert!(matches!(fidelity_pure(&rho, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn decimation_keeps_every_stride() {
        let rho = GridDensityMatrix::from_pure(&gaussian(0.0));
        let (q, m) = rho.decimate(4);
        assert_eq!(q.len(), 64);
        assert_eq!(m[[2, 3]], rho.entries()[[8, 12]]);
    }
}
