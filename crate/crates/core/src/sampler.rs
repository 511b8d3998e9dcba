//! The composite proximal sampler.
//!
//! Each outer iteration draws `y ~ N(x, hI)` and then samples the RGO of
//! `f + g` at `y` by lazy independent Metropolis–Hastings, with proposal
//! `RGO_{g, h, y - h∇f(y)}` (the RGO of `g` plus the linearization of `f` at `y`).

use std::ops::ControlFlow;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::imh::{imh_run, ImhProblem, ImhTally};
use crate::model::{chain_rng, dot, ChainTrace, CompositeTarget};
use crate::rgo::sq_dist;

/// Outer step size: fixed, or the dimension-aware default scaled by `constant`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    Auto { constant: f64 },
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub step: StepSize,
    pub outer_iters: usize,
    /// Inner IMH steps per outer iteration (`N_max`).
    pub inner_steps: usize,
    /// Inner accuracy parameter in `(0, 1)`.
    pub zeta: f64,
    pub seed: u64,
}

/// `c / (β √(d log(2κ)) log²(1/ζ))`, capped at `1/(2β)`.
pub fn default_step_size(beta: f64, dim: usize, kappa: f64, zeta: f64) -> f64 {
    scaled_step_size(1.0, beta, dim, kappa, zeta)
}

fn scaled_step_size(constant: f64, beta: f64, dim: usize, kappa: f64, zeta: f64) -> f64 {
    let log_kappa = (2.0 * kappa).max(2.0).ln();
    let log_zeta = (1.0 / zeta).ln();
    let h = constant / (beta * (dim as f64 * log_kappa).sqrt() * log_zeta * log_zeta);
    h.min(0.5 / beta)
}

/// `ceil((2/(αh)) log(d log(2κ)/ε²))`, at least 1.
pub fn default_outer_iters(alpha: f64, h: f64, dim: usize, kappa: f64, epsilon: f64) -> usize {
    let inner = dim as f64 * (2.0 * kappa).max(2.0).ln() / (epsilon * epsilon);
    let k = (2.0 / (alpha * h)) * inner.ln().max(1.0);
    (k.ceil() as usize).max(1)
}

/// `ceil(10 log(1/ζ))`.
pub fn default_inner_steps(zeta: f64) -> usize {
    ((10.0 * (1.0 / zeta).ln()).ceil() as usize).max(1)
}

impl SamplerConfig {
    /// Defaults derived from a total-variation target `epsilon`: `ζ = ε/(6K)`
    /// after one fixed-point pass over the `K`–`ζ` dependence.
    pub fn from_accuracy(target: &CompositeTarget, epsilon: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(contract("accuracy must lie in (0, 1)"));
        }
        let (beta, d, kappa, alpha) = (target.beta(), target.dim(), target.kappa(), target.alpha());
        if !(beta > 0.0) {
            return Err(contract("automatic step size needs a nonzero smooth part"));
        }
        let k0 = default_outer_iters(alpha, default_step_size(beta, d, kappa, epsilon), d, kappa, epsilon);
        let zeta = epsilon / (6.0 * k0 as f64);
        let h = default_step_size(beta, d, kappa, zeta);
        let outer_iters = default_outer_iters(alpha, h, d, kappa, epsilon);
        Ok(Self {
            step: StepSize::Auto { constant: 1.0 },
            outer_iters,
            inner_steps: default_inner_steps(zeta),
            zeta,
            seed,
        })
    }

    /// Resolves and validates the step size for `target`.
    pub fn step_size(&self, target: &CompositeTarget) -> Result<f64> {
        let beta = target.beta();
        let h = match self.step {
            StepSize::Fixed(h) => h,
            StepSize::Auto { constant } => {
                if !(beta > 0.0) {
                    return Err(contract("automatic step size needs a nonzero smooth part"));
                }
                scaled_step_size(constant, beta, target.dim(), target.kappa(), self.zeta)
            }
        };
        if !(h > 0.0 && h.is_finite()) {
            return Err(contract(format!("step size must be positive, got {h}")));
        }
        if beta > 0.0 && h > 1.0 / beta * (1.0 + 1e-12) {
            return Err(contract(format!("step size {h} exceeds 1/beta = {}", 1.0 / beta)));
        }
        Ok(h)
    }

    pub fn validate(&self, target: &CompositeTarget) -> Result<f64> {
        if self.outer_iters == 0 || self.inner_steps == 0 {
            return Err(contract("outer and inner iteration counts must be positive"));
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(contract("zeta must lie in (0, 1)"));
        }
        self.step_size(target)
    }
}

/// Draw from `ρ0 ∝ exp(-g - ((2β - α_g)/2)|· - x*|²)`, i.e. the RGO of `g`
/// with step `1/(2β - α_g)` at `x*`. With `f ≡ 0` the RGO step is `h`.
pub fn init_rho0(target: &CompositeTarget, h: f64, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
    let beta = target.beta();
    let step = if beta == 0.0 {
        h
    } else {
        let precision = 2.0 * beta - target.g().convexity();
        if !(precision > 0.0) {
            return Err(contract(format!("2*beta - alpha_g = {precision} is not positive")));
        }
        1.0 / precision
    };
    target.g().draw(step, target.x_star(), rng)
}

/// What one outer iteration saw, handed to observers.
#[derive(Debug)]
pub struct OuterStep<'a> {
    pub k: usize,
    /// Forward Gaussian step `y_k`.
    pub y: &'a [f64],
    pub grad_y: &'a [f64],
    /// New iterate `x_{k+1}`.
    pub x: &'a [f64],
    pub tally: ImhTally,
    /// Cumulative gradient evaluations after this iteration.
    pub grad_evals: u64,
}

/// IMH problem for the RGO of `f + g` at `y`.
struct LinearizedRgo<'a> {
    target: &'a CompositeTarget,
    h: f64,
    y: &'a [f64],
    grad_y: &'a [f64],
    f_y: f64,
    center: Vec<f64>,
}

impl ImhProblem for LinearizedRgo<'_> {
    fn dim(&self) -> usize {
        self.y.len()
    }

    fn log_target(&self, x: &[f64]) -> f64 {
        let g = self.target.g().value(x);
        if g == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        -self.target.f().value(x) - g - sq_dist(x, self.y) / (2.0 * self.h)
    }

    fn log_proposal(&self, x: &[f64]) -> f64 {
        let g = self.target.g().value(x);
        if g == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        let lin: f64 = self.grad_y.iter().zip(x.iter().zip(self.y)).map(|(g, (x, y))| g * (x - y)).sum();
        -lin - g - sq_dist(x, self.y) / (2.0 * self.h)
    }

    fn draw_proposal(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        self.target.g().draw_into(self.h, &self.center, rng, out)
    }

    /// `-f(x) + f(y) + ⟨∇f(y), x - y⟩`: one `f` evaluation, no gradient.
    fn log_weight(&self, x: &[f64]) -> f64 {
        if self.target.g().value(x) == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        let lin = dot(self.grad_y, x) - dot(self.grad_y, self.y);
        -self.target.f().value(x) + self.f_y + lin
    }
}

/// Composite sampler advanced one outer iteration at a time.
#[derive(Debug, Clone)]
pub struct ProximalChain<'a> {
    target: &'a CompositeTarget,
    h: f64,
    inner_steps: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    grad_y: Vec<f64>,
    k: usize,
}

impl<'a> ProximalChain<'a> {
    /// Starts from `x0`, or from a `ρ0` draw when `x0` is `None`.
    pub fn new(
        target: &'a CompositeTarget,
        config: &SamplerConfig,
        x0: Option<Vec<f64>>,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let h = config.validate(target)?;
        let d = target.dim();
        let x = match x0 {
            Some(x) if x.len() == d => x,
            Some(_) => return Err(contract("initial point has the wrong dimension")),
            None => init_rho0(target, h, rng)?,
        };
        Ok(Self { target, h, inner_steps: config.inner_steps, x, y: vec![0.0; d], grad_y: vec![0.0; d], k: 0 })
    }

    pub fn step(&mut self, rng: &mut dyn RngCore) -> Result<ImhTally> {
        let h = self.h;
        let sqrt_h = h.sqrt();
        for (yi, &xi) in self.y.iter_mut().zip(&self.x) {
            let z: f64 = rng.sample(StandardNormal);
            *yi = xi + sqrt_h * z;
        }
        let f = self.target.f();
        f.gradient_into(&self.y, &mut self.grad_y);
        let center = self.y.iter().zip(&self.grad_y).map(|(y, g)| y - h * g).collect();
        let problem = LinearizedRgo {
            target: self.target,
            h,
            y: &self.y,
            grad_y: &self.grad_y,
            f_y: f.value(&self.y),
            center,
        };
        let (next, tally) = imh_run(&problem, self.inner_steps, rng)
            .map_err(|e| Error::Outer { outer: self.k, source: Box::new(e) })?;
        self.x = next;
        self.k += 1;
        Ok(tally)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Forward point `y` of the latest iteration.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn grad_y(&self) -> &[f64] {
        &self.grad_y
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn iterations(&self) -> usize {
        self.k
    }

    /// Counted as `N_max + 1` per outer iteration.
    pub fn grad_evals(&self) -> u64 {
        (self.inner_steps as u64 + 1) * self.k as u64
    }
}

/// Runs the composite sampler from `x0` (or a `ρ0` draw), calling `observer`
/// after every outer iteration. The observer may stop the chain early.
/// Returns the last iterate.
pub fn run_observed<F>(
    target: &CompositeTarget,
    config: &SamplerConfig,
    x0: Option<Vec<f64>>,
    rng: &mut dyn RngCore,
    mut observer: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&OuterStep<'_>) -> ControlFlow<()>,
{
    let mut chain = ProximalChain::new(target, config, x0, rng)?;
    for k in 0..config.outer_iters {
        let tally = chain.step(rng)?;
        let step = OuterStep {
            k,
            y: chain.y(),
            grad_y: chain.grad_y(),
            x: chain.x(),
            tally,
            grad_evals: chain.grad_evals(),
        };
        if observer(&step).is_break() {
            break;
        }
    }
    Ok(chain.x)
}

/// Full trace of `K` outer iterations seeded from `config.seed`.
pub fn composite_sampler_run(target: &CompositeTarget, config: &SamplerConfig) -> Result<ChainTrace> {
    let mut rng = chain_rng(config.seed);
    composite_sampler_run_with(target, config, &mut rng)
}

pub fn composite_sampler_run_with(
    target: &CompositeTarget,
    config: &SamplerConfig,
    rng: &mut dyn RngCore,
) -> Result<ChainTrace> {
    let h = config.validate(target)?;
    let x0 = init_rho0(target, h, rng)?;
    let mut trace = ChainTrace::new(config.seed, x0.clone());
    run_observed(target, config, Some(x0), rng, |step| {
        trace.push(step.x.to_vec(), step.grad_evals, step.tally.accepted);
        ControlFlow::Continue(())
    })?;
    Ok(trace)
}
