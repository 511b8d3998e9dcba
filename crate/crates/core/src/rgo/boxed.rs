use rand::RngCore;

use super::{check_step, truncated_gaussian_unchecked, RgoSampler};
use crate::error::{contract, Result};

/// Indicator of the box `[lo_1, hi_1] × … × [lo_d, hi_d]`; bounds may be infinite.
#[derive(Debug, Clone)]
pub struct BoxIndicator {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxIndicator {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(contract("box bounds must be nonempty and of equal length"));
        }
        if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] < hi[i])) {
            return Err(contract(format!("box bound {i}: lo {} is not below hi {}", lo[i], hi[i])));
        }
        Ok(Self { lo, hi })
    }

    /// `[-r, r]^d`.
    pub fn cube(dim: usize, radius: f64) -> Result<Self> {
        Self::new(vec![-radius; dim], vec![radius; dim])
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
}

impl RgoSampler for BoxIndicator {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let inside = x
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&xi, (&l, &u))| l <= xi && xi <= u);
        if inside {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox_into(&self, _h: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        for (i, o) in out.iter_mut().enumerate() {
            *o = v[i].clamp(self.lo[i], self.hi[i]);
        }
        Ok(())
    }

    fn draw_into(&self, h: f64, v: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        check_step(h)?;
        for (i, o) in out.iter_mut().enumerate() {
            *o = truncated_gaussian_unchecked(v[i], h, self.lo[i], self.hi[i], rng);
        }
        Ok(())
    }
}
