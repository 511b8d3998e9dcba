use rand::RngCore;

use super::{check_step, RgoSampler, SharedRgo};
use crate::error::{contract, Error, Result};

/// `g(x) = g̃(x - c) + (a/2)|x|² + ⟨b, x⟩ + k`.
///
/// The tilt replaces `(h, v)` by `(h/(1+ah), (v - hb)/(1+ah))`; the shift then
/// moves the center by `-c` and the draw by `+c`.
#[derive(Debug, Clone)]
pub struct ShiftTilt {
    base: SharedRgo,
    shift: Vec<f64>,
    curvature: f64,
    linear: Vec<f64>,
    constant: f64,
}

impl ShiftTilt {
    pub fn new(base: SharedRgo, shift: Vec<f64>, curvature: f64, linear: Vec<f64>, constant: f64) -> Result<Self> {
        let d = base.dim();
        if shift.len() != d || linear.len() != d {
            return Err(contract("shift and linear term must match the base dimension"));
        }
        Ok(Self { base, shift, curvature, linear, constant })
    }

    /// Only a linear term: `g̃ + ⟨b, ·⟩`.
    pub fn linear(base: SharedRgo, linear: Vec<f64>) -> Result<Self> {
        let d = base.dim();
        Self::new(base, vec![0.0; d], 0.0, linear, 0.0)
    }

    /// Step and center handed to the base oracle.
    fn reduce(&self, h: f64, v: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_step(h)?;
        let scale = 1.0 + self.curvature * h;
        if !(scale > 0.0) {
            return Err(Error::TiltUndefined { value: scale });
        }
        let center = v
            .iter()
            .zip(&self.linear)
            .zip(&self.shift)
            .map(|((&vi, &bi), &ci)| (vi - h * bi) / scale - ci)
            .collect();
        Ok((h / scale, center))
    }
}

impl RgoSampler for ShiftTilt {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let shifted: Vec<f64> = x.iter().zip(&self.shift).map(|(x, c)| x - c).collect();
        let g = self.base.value(&shifted);
        if g == f64::INFINITY {
            return g;
        }
        let sq: f64 = x.iter().map(|x| x * x).sum();
        let lin: f64 = x.iter().zip(&self.linear).map(|(x, b)| x * b).sum();
        g + 0.5 * self.curvature * sq + lin + self.constant
    }

    fn prox_into(&self, h: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        let (h2, center) = self.reduce(h, v)?;
        self.base.prox_into(h2, &center, out)?;
        for (o, c) in out.iter_mut().zip(&self.shift) {
            *o += c;
        }
        Ok(())
    }

    fn draw_into(&self, h: f64, v: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        let (h2, center) = self.reduce(h, v)?;
        self.base.draw_into(h2, &center, rng, out)?;
        for (o, c) in out.iter_mut().zip(&self.shift) {
            *o += c;
        }
        Ok(())
    }

    fn convexity(&self) -> f64 {
        self.base.convexity() + self.curvature
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rgo::{L1Penalty, Unpenalized};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn identity_parameters_reproduce_base_draws() {
        let base: SharedRgo = Arc::new(L1Penalty::new(3, 1.3).unwrap());
        let wrapped = ShiftTilt::new(base.clone(), vec![0.0; 3], 0.0, vec![0.0; 3], 0.0).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(71);
        let mut r2 = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..1000 {
            let v = [0.3, -2.0, 1.1];
            let a = base.draw(0.6, &v, &mut r1).unwrap();
            let b = wrapped.draw(0.6, &v, &mut r2).unwrap();
            assert_eq!(
                a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn shift_cancels_for_free_base() {
        let base: SharedRgo = Arc::new(Unpenalized::new(1));
        let shifted = ShiftTilt::new(base, vec![5.0], 0.0, vec![0.0], 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let n = 100_000;
        let m: f64 = (0..n).map(|_| shifted.draw(1.0, &[1.0], &mut rng).unwrap()[0]).sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 0.02);
    }

    #[test]
    fn negative_curvature_limit() {
        let base: SharedRgo = Arc::new(Unpenalized::new(1));
        let t = ShiftTilt::new(base, vec![0.0], -2.0, vec![0.0], 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(t.draw(0.5, &[0.0], &mut rng), Err(Error::TiltUndefined { .. })));
        assert!(t.draw(0.25, &[0.0], &mut rng).is_ok());
    }
}
