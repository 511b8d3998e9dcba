use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::{check_step, RgoSampler};
use crate::error::{contract, Error, Result};

/// `g(x) = ½ xᵀAx + ⟨b, x⟩ + c` for symmetric `A`.
///
/// The RGO is `N(A_h (v/h - b), A_h)` with `A_h⁻¹ = A + I/h`, drawn through a
/// Cholesky factor of `A_h⁻¹`.
#[derive(Debug, Clone)]
pub struct QuadraticPenalty {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
    min_eig: f64,
}

impl QuadraticPenalty {
    pub fn new(a: DMatrix<f64>, b: Vec<f64>, c: f64) -> Result<Self> {
        let d = a.nrows();
        if a.ncols() != d || b.len() != d || d == 0 {
            return Err(contract("quadratic needs a square matrix matching the linear term"));
        }
        let scale = a.amax().max(1.0);
        if (&a - a.transpose()).amax() > 1e-12 * scale {
            return Err(contract("quadratic matrix must be symmetric"));
        }
        let min_eig = a.clone().symmetric_eigenvalues().min();
        Ok(Self { a, b: DVector::from_vec(b), c, min_eig })
    }

    fn precision(&self, h: f64) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        let mut p = self.a.clone();
        for i in 0..p.nrows() {
            p[(i, i)] += 1.0 / h;
        }
        p.cholesky().ok_or(Error::NotPositiveDefinite { h })
    }

    fn mean(&self, chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>, h: f64, v: &[f64]) -> DVector<f64> {
        let rhs = DVector::from_column_slice(v) / h - &self.b;
        chol.solve(&rhs)
    }
}

impl RgoSampler for QuadraticPenalty {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        0.5 * x.dot(&(&self.a * &x)) + self.b.dot(&x) + self.c
    }

    fn prox_into(&self, h: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        check_step(h)?;
        let chol = self.precision(h)?;
        out.copy_from_slice(self.mean(&chol, h, v).as_slice());
        Ok(())
    }

    fn draw_into(&self, h: f64, v: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        check_step(h)?;
        let chol = self.precision(h)?;
        let mean = self.mean(&chol, h, v);
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        // L Lᵀ = A_h⁻¹, so L⁻ᵀ z has covariance A_h.
        let noise = chol
            .l_dirty()
            .tr_solve_lower_triangular(&z)
            .ok_or(Error::NotPositiveDefinite { h })?;
        for (o, (m, e)) in out.iter_mut().zip(mean.iter().zip(noise.iter())) {
            *o = m + e;
        }
        Ok(())
    }

    fn convexity(&self) -> f64 {
        self.min_eig
    }
}
