use rand::RngCore;

use super::{RgoSampler, SharedRgo};
use crate::error::{contract, Result};

/// `g(x) = Σ_k g_k(x_{B_k})` over a partition of the coordinates into blocks.
#[derive(Debug, Clone)]
pub struct SeparableProduct {
    parts: Vec<(SharedRgo, Vec<usize>)>,
    dim: usize,
    convexity: f64,
}

impl SeparableProduct {
    pub fn new(parts: Vec<(SharedRgo, Vec<usize>)>) -> Result<Self> {
        let dim: usize = parts.iter().map(|(_, block)| block.len()).sum();
        let mut seen = vec![false; dim];
        for (k, (rgo, block)) in parts.iter().enumerate() {
            if rgo.dim() != block.len() {
                return Err(contract(format!(
                    "block {k} has {} coordinates but its oracle has dimension {}",
                    block.len(),
                    rgo.dim()
                )));
            }
            for &i in block {
                if i >= dim || seen[i] {
                    return Err(contract(format!("coordinate {i} is out of range or covered twice")));
                }
                seen[i] = true;
            }
        }
        if dim == 0 {
            return Err(contract("product needs at least one coordinate"));
        }
        let convexity = parts
            .iter()
            .map(|(r, _)| r.convexity())
            .fold(f64::INFINITY, f64::min);
        Ok(Self { parts, dim, convexity })
    }
}

fn gather(block: &[usize], x: &[f64]) -> Vec<f64> {
    block.iter().map(|&i| x[i]).collect()
}

impl RgoSampler for SeparableProduct {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.parts
            .iter()
            .map(|(rgo, block)| rgo.value(&gather(block, x)))
            .sum()
    }

    fn prox_into(&self, h: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        for (rgo, block) in &self.parts {
            let p = rgo.prox(h, &gather(block, v))?;
            for (&i, pi) in block.iter().zip(p) {
                out[i] = pi;
            }
        }
        Ok(())
    }

    fn draw_into(&self, h: f64, v: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        for (rgo, block) in &self.parts {
            let x = rgo.draw(h, &gather(block, v), rng)?;
            for (&i, xi) in block.iter().zip(x) {
                out[i] = xi;
            }
        }
        Ok(())
    }

    fn convexity(&self) -> f64 {
        self.convexity
    }
}
