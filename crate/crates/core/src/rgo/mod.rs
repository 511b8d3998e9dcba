//! Restricted Gaussian oracles.
//!
//! An RGO for a convex `g` draws exact samples from the density proportional to
//! `exp(-g(x) - |x - v|^2 / (2h))` for any center `v` and step `h > 0`. Every
//! sampler here also exposes `g` itself and its proximal map, since the mode of
//! the RGO density is `prox_{hg}(v)`.

mod affine;
mod boxed;
mod l1;
mod linf;
mod product;
mod quadratic;
mod shift_tilt;
mod truncated;

pub use affine::AffineRankOne;
pub use boxed::BoxIndicator;
pub use l1::L1Penalty;
pub use linf::LinfPenalty;
pub use product::SeparableProduct;
pub use quadratic::QuadraticPenalty;
pub use shift_tilt::ShiftTilt;
pub use truncated::{std_truncated_normal, truncated_gaussian_1d};
pub(crate) use truncated::truncated_gaussian_unchecked;

use std::fmt::Debug;
use std::sync::Arc;

use rand::RngCore;
use rand_distr::StandardNormal;
use rand::Rng;

use crate::error::{contract, Result};

/// Exact sampler for `x ↦ exp(-g(x) - |x - v|^2 / (2h))` together with `g` and `prox_{hg}`.
pub trait RgoSampler: Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// `g(x)`; `+∞` outside the domain.
    fn value(&self, x: &[f64]) -> f64;

    /// Writes `prox_{hg}(v) = argmin { g(x) + |x - v|^2 / (2h) }` into `out`.
    fn prox_into(&self, h: f64, v: &[f64], out: &mut [f64]) -> Result<()>;

    /// Writes one exact RGO draw with step `h` and center `v` into `out`.
    fn draw_into(&self, h: f64, v: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()>;

    /// Strong convexity constant of `g`.
    fn convexity(&self) -> f64 {
        0.0
    }

    /// `-g(x) - |x - v|^2 / (2h)`.
    fn log_density_unnormalized(&self, h: f64, v: &[f64], x: &[f64]) -> f64 {
        let g = self.value(x);
        if g == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        -g - sq_dist(x, v) / (2.0 * h)
    }

    fn prox(&self, h: f64, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.prox_into(h, v, &mut out)?;
        Ok(out)
    }

    fn draw(&self, h: f64, v: &[f64], rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.draw_into(h, v, rng, &mut out)?;
        Ok(out)
    }
}

/// Shared handle to any oracle.
pub type SharedRgo = Arc<dyn RgoSampler>;

/// RGO of `g ≡ 0` on `R^d`: a plain Gaussian `N(v, hI)`.
#[derive(Debug, Clone)]
pub struct Unpenalized {
    dim: usize,
}

impl Unpenalized {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl RgoSampler for Unpenalized {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn prox_into(&self, _h: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(v);
        Ok(())
    }

    fn draw_into(&self, h: f64, v: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        check_step(h)?;
        let s = h.sqrt();
        for (o, &c) in out.iter_mut().zip(v) {
            let z: f64 = rng.sample(StandardNormal);
            *o = c + s * z;
        }
        Ok(())
    }
}

/// Soft thresholding, the proximal map of `λ|·|_1` with step `h`.
pub fn prox_l1(lambda: f64, h: f64, v: &[f64]) -> Vec<f64> {
    let t = lambda * h;
    v.iter().map(|&x| soft_threshold(x, t)).collect()
}

/// Coordinatewise clipping, the proximal map of the box indicator.
pub fn prox_box(lo: &[f64], hi: &[f64], v: &[f64]) -> Vec<f64> {
    v.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&x, (&l, &u))| x.clamp(l, u))
        .collect()
}

pub(crate) fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(contract(format!("step h must be positive and finite, got {h}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(prox_l1(1.0, 1.0, &[3.0]), vec![2.0]);
        assert_eq!(prox_l1(0.0, 1.0, &[3.0, -0.5]), vec![3.0, -0.5]);
        assert_eq!(prox_l1(1.0, 1.0, &[-0.3]), vec![0.0]);
    }

    #[test]
    fn clip_examples() {
        assert_eq!(prox_box(&[-1.0], &[1.0], &[0.25]), vec![0.25]);
        assert_eq!(prox_box(&[-1.0], &[1.0], &[5.0]), vec![1.0]);
    }

    #[test]
    fn unpenalized_draw_is_gaussian() {
        let rgo = Unpenalized::new(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = rgo.draw(0.5, &[2.0], &mut rng).unwrap()[0];
            s1 += x;
            s2 += x * x;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((mean - 2.0).abs() < 0.01);
        assert!((var - 0.5).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_step() {
        let rgo = Unpenalized::new(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(rgo.draw(0.0, &[0.0], &mut rng).is_err());
        assert!(rgo.draw(f64::NAN, &[0.0], &mut rng).is_err());
    }
}
