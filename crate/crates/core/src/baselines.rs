//! Proximal Langevin baselines: PGLA (one gradient per step) and Prox-MALA
//! (two gradients per step).

use std::ops::ControlFlow;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{contract, Result};
use crate::model::Composite;
use crate::rgo::sq_dist;

/// `prox_{hg}(x - h∇f(x) + N(0, 2hI))`.
pub fn pgla_step<T: Composite + ?Sized>(target: &T, h: f64, x: &[f64], rng: &mut dyn RngCore) -> Result<Vec<f64>> {
    check(h)?;
    let grad = target.f().gradient(x);
    let noise = (2.0 * h).sqrt();
    let w: Vec<f64> = x
        .iter()
        .zip(&grad)
        .map(|(&xi, &gi)| {
            let z: f64 = rng.sample(StandardNormal);
            xi - h * gi + noise * z
        })
        .collect();
    target.g().prox(h, &w)
}

/// Outcome of one Prox-MALA transition.
#[derive(Debug, Clone, PartialEq)]
pub struct MalaStep {
    pub x: Vec<f64>,
    pub accepted: bool,
    /// The proposal fell outside `dom g` and was rejected outright.
    pub infeasible: bool,
}

/// Metropolis-adjusted step with proposal `N(prox_{hg}(x - h∇f(x)), 2hI)`.
pub fn prox_mala_step<T: Composite + ?Sized>(target: &T, h: f64, x: &[f64], rng: &mut dyn RngCore) -> Result<MalaStep> {
    check(h)?;
    let mean_x = drift(target, h, x)?;
    let noise = (2.0 * h).sqrt();
    let z: Vec<f64> = mean_x
        .iter()
        .map(|&m| {
            let e: f64 = rng.sample(StandardNormal);
            m + noise * e
        })
        .collect();
    let u: f64 = rng.random();
    let f_z = target.potential(&z);
    if f_z == f64::INFINITY {
        return Ok(MalaStep { x: x.to_vec(), accepted: false, infeasible: true });
    }
    let mean_z = drift(target, h, &z)?;
    let log_alpha = -f_z + target.potential(x) - sq_dist(x, &mean_z) / (4.0 * h) + sq_dist(&z, &mean_x) / (4.0 * h);
    if u.ln() <= log_alpha {
        Ok(MalaStep { x: z, accepted: true, infeasible: false })
    } else {
        Ok(MalaStep { x: x.to_vec(), accepted: false, infeasible: false })
    }
}

fn drift<T: Composite + ?Sized>(target: &T, h: f64, x: &[f64]) -> Result<Vec<f64>> {
    let grad = target.f().gradient(x);
    let shifted: Vec<f64> = x.iter().zip(&grad).map(|(x, g)| x - h * g).collect();
    target.g().prox(h, &shifted)
}

fn check(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(contract(format!("step size must be positive, got {h}")))
    }
}

/// Acceptance bookkeeping for a baseline chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BaselineStats {
    pub steps: u64,
    pub accepted: u64,
    pub infeasible: u64,
}

impl BaselineStats {
    pub fn infeasible_fraction(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.infeasible as f64 / self.steps as f64
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }
}

/// Runs `iters` PGLA steps; the observer receives `(k, x_{k+1}, grad_evals)`.
pub fn run_pgla<T, F>(
    target: &T,
    h: f64,
    x0: Vec<f64>,
    iters: usize,
    rng: &mut dyn RngCore,
    mut observer: F,
) -> Result<(Vec<f64>, BaselineStats)>
where
    T: Composite + ?Sized,
    F: FnMut(usize, &[f64], u64) -> ControlFlow<()>,
{
    let mut x = x0;
    let mut stats = BaselineStats::default();
    for k in 0..iters {
        x = pgla_step(target, h, &x, rng)?;
        stats.steps += 1;
        stats.accepted += 1;
        if observer(k, &x, k as u64 + 1).is_break() {
            break;
        }
    }
    Ok((x, stats))
}

/// Runs `iters` Prox-MALA steps; two gradient evaluations are charged per step.
pub fn run_prox_mala<T, F>(
    target: &T,
    h: f64,
    x0: Vec<f64>,
    iters: usize,
    rng: &mut dyn RngCore,
    mut observer: F,
) -> Result<(Vec<f64>, BaselineStats)>
where
    T: Composite + ?Sized,
    F: FnMut(usize, &[f64], u64) -> ControlFlow<()>,
{
    let mut x = x0;
    let mut stats = BaselineStats::default();
    for k in 0..iters {
        let step = prox_mala_step(target, h, &x, rng)?;
        stats.steps += 1;
        stats.accepted += step.accepted as u64;
        stats.infeasible += step.infeasible as u64;
        x = step.x;
        if observer(k, &x, 2 * (k as u64 + 1)).is_break() {
            break;
        }
    }
    Ok((x, stats))
}
