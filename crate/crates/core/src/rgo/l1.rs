use rand::{Rng, RngCore};

use super::{check_step, soft_threshold, truncated_gaussian_unchecked, RgoSampler};
use crate::error::{contract, Result};
use crate::special::log_ndtr;

/// `g(x) = λ |x|_1`.
///
/// Each coordinate of the RGO is a two-piece mixture: `N(v + λh, h)` on
/// `(-∞, 0]` and `N(v - λh, h)` on `[0, ∞)`, weighted by
/// `w- = exp(λv) Φ(-(v + λh)/√h)` and `w+ = exp(-λv) Φ((v - λh)/√h)`
/// (the common factor `exp(λ²h/2)` cancels). The weights are compared in log space.
#[derive(Debug, Clone)]
pub struct L1Penalty {
    dim: usize,
    lambda: f64,
}

impl L1Penalty {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(contract(format!("l1 weight must be nonnegative, got {lambda}")));
        }
        Ok(Self { dim, lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Probability that the coordinate with center `v` lands on the negative half-line.
    pub fn negative_weight(&self, h: f64, v: f64) -> f64 {
        let s = h.sqrt();
        let lam = self.lambda;
        let log_minus = lam * v + log_ndtr(-(v + lam * h) / s);
        let log_plus = -lam * v + log_ndtr((v - lam * h) / s);
        1.0 / (1.0 + (log_plus - log_minus).exp())
    }

    fn draw_coord(&self, h: f64, v: f64, rng: &mut dyn RngCore) -> f64 {
        let p_minus = self.negative_weight(h, v);
        let u: f64 = rng.random();
        let shift = self.lambda * h;
        if u < p_minus {
            truncated_gaussian_unchecked(v + shift, h, f64::NEG_INFINITY, 0.0, rng)
        } else {
            truncated_gaussian_unchecked(v - shift, h, 0.0, f64::INFINITY, rng)
        }
    }
}

impl RgoSampler for L1Penalty {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox_into(&self, h: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        let t = self.lambda * h;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = soft_threshold(x, t);
        }
        Ok(())
    }

    fn draw_into(&self, h: f64, v: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        check_step(h)?;
        for (o, &c) in out.iter_mut().zip(v) {
            *o = self.draw_coord(h, c, rng);
        }
        Ok(())
    }
}
