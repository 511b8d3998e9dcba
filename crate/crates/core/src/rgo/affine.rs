use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::{check_step, RgoSampler, SharedRgo};
use crate::error::{contract, Result};

/// `g(x) = g̃(⟨b, x⟩)` for a one-dimensional `g̃`.
///
/// A draw takes `x̄` from the 1D RGO of `g̃` with step `h|b|²` and center
/// `⟨b, v⟩`, then adds Gaussian noise in the hyperplane orthogonal to `b`.
/// Half-spaces and slabs are `g̃` = indicator of a half-line or interval.
#[derive(Debug, Clone)]
pub struct AffineRankOne {
    b: Vec<f64>,
    norm_sq: f64,
    base: SharedRgo,
}

impl AffineRankOne {
    pub fn new(b: Vec<f64>, base: SharedRgo) -> Result<Self> {
        let norm_sq: f64 = b.iter().map(|x| x * x).sum();
        if !(norm_sq > 0.0 && norm_sq.is_finite()) {
            return Err(contract("direction b must be nonzero"));
        }
        if base.dim() != 1 {
            return Err(contract(format!("base oracle must be one-dimensional, got {}", base.dim())));
        }
        Ok(Self { b, norm_sq, base })
    }

    fn project(&self, x: &[f64]) -> f64 {
        self.b.iter().zip(x).map(|(b, x)| b * x).sum()
    }
}

impl RgoSampler for AffineRankOne {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(&[self.project(x)])
    }

    fn prox_into(&self, h: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        let bv = self.project(v);
        let mut p = [0.0];
        self.base.prox_into(h * self.norm_sq, &[bv], &mut p)?;
        let s = (p[0] - bv) / self.norm_sq;
        for ((o, &vi), &bi) in out.iter_mut().zip(v).zip(&self.b) {
            *o = vi + s * bi;
        }
        Ok(())
    }

    fn draw_into(&self, h: f64, v: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        check_step(h)?;
        let bv = self.project(v);
        let mut xbar = [0.0];
        self.base.draw_into(h * self.norm_sq, &[bv], rng, &mut xbar)?;
        let shift = (xbar[0] - bv) / self.norm_sq;
        for o in out.iter_mut() {
            *o = rng.sample(StandardNormal);
        }
        let along = self.project(out) / self.norm_sq;
        let s = h.sqrt();
        for ((o, &vi), &bi) in out.iter_mut().zip(v).zip(&self.b) {
            *o = vi + shift * bi + s * (*o - along * bi);
        }
        Ok(())
    }
}
