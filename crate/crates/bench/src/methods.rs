//! Runs a single chain of any method under a gradient budget.

use std::ops::ControlFlow;

use proxsampler_core::baselines::{run_pgla, run_prox_mala};
use proxsampler_core::sampler::{init_rho0, run_observed};
use proxsampler_core::{chain_rng, CompositeTarget, SamplerConfig, StepSize};

use crate::config::Method;
use crate::error::BenchResult;

/// Gradient evaluations charged per iteration.
pub fn cost_per_iter(method: Method, n_max: usize) -> u64 {
    match method {
        Method::Composite => n_max as u64 + 1,
        Method::ProxMala => 2,
        Method::Pgla => 1,
    }
}

/// One chain: `iterates[0]` is the `ρ0` start, charged zero gradients.
#[derive(Debug, Clone)]
pub struct ChainRun {
    pub method: Method,
    pub seed: u64,
    pub h: f64,
    pub inner_steps: usize,
    pub iterates: Vec<Vec<f64>>,
    pub grad_evals: Vec<u64>,
    /// Inner acceptance for the composite sampler, MH acceptance for
    /// Prox-MALA, one for PGLA.
    pub acceptance_rate: f64,
    pub infeasible_fraction: f64,
}

impl ChainRun {
    pub fn last(&self) -> &[f64] {
        self.iterates.last().expect("chains keep their start point")
    }
}

/// Runs `method` with step `h` for `⌊budget / cost⌋` iterations.
pub fn run_chain(
    target: &CompositeTarget,
    method: Method,
    h: f64,
    grad_budget: u64,
    n_max: usize,
    seed: u64,
) -> BenchResult<ChainRun> {
    let iters = (grad_budget / cost_per_iter(method, n_max)) as usize;
    let mut rng = chain_rng(seed);
    let mut iterates = Vec::with_capacity(iters + 1);
    let mut grad_evals = Vec::with_capacity(iters + 1);
    let (acceptance_rate, infeasible_fraction) = match method {
        Method::Composite => {
            let config = SamplerConfig { step: StepSize::Fixed(h), outer_iters: iters, inner_steps: n_max, zeta: 0.5, seed };
            let x0 = init_rho0(target, h, &mut rng)?;
            iterates.push(x0.clone());
            grad_evals.push(0);
            let (mut steps, mut accepted) = (0u64, 0u64);
            run_observed(target, &config, Some(x0), &mut rng, |s| {
                iterates.push(s.x.to_vec());
                grad_evals.push(s.grad_evals);
                steps += s.tally.steps as u64;
                accepted += s.tally.accepted as u64;
                ControlFlow::Continue(())
            })?;
            (if steps == 0 { 0.0 } else { accepted as f64 / steps as f64 }, 0.0)
        }
        Method::ProxMala | Method::Pgla => {
            let x0 = init_rho0(target, h, &mut rng)?;
            iterates.push(x0.clone());
            grad_evals.push(0);
            let observer = |_: usize, x: &[f64], g: u64| {
                iterates.push(x.to_vec());
                grad_evals.push(g);
                ControlFlow::Continue(())
            };
            let (_, stats) = if method == Method::Pgla {
                run_pgla(target, h, x0, iters, &mut rng, observer)?
            } else {
                run_prox_mala(target, h, x0, iters, &mut rng, observer)?
            };
            (stats.acceptance_rate(), stats.infeasible_fraction())
        }
    };
    Ok(ChainRun { method, seed, h, inner_steps: n_max, iterates, grad_evals, acceptance_rate, infeasible_fraction })
}
