//! Proximal sampling for composite log-concave targets `π ∝ exp(-f - g)`:
//! a Gaussian forward step on `y`, then an exact draw from `π(x | y)` by a
//! lazy independent Metropolis-Hastings chain whose proposal is a restricted
//! Gaussian oracle (RGO) for `g` around a gradient step on `f`.
//!
//! ```
//! use proxsampler_core::{composite_sampler_run, problems::gaussian_box_target, SamplerConfig, StepSize};
//!
//! let target = gaussian_box_target(2, 1.0).unwrap();
//! let config = SamplerConfig { step: StepSize::Fixed(0.5), outer_iters: 50, inner_steps: 5, zeta: 0.1, seed: 3 };
//! let trace = composite_sampler_run(&target, &config).unwrap();
//! assert_eq!(trace.len(), 51);
//! assert!(trace.last().iter().all(|x| x.abs() <= 1.0));
//! ```

pub mod baselines;
pub mod diagnostics;
pub mod error;
pub mod imh;
pub mod model;
pub mod problems;
pub mod rgo;
pub mod sampler;
pub mod special;

pub use baselines::{run_pgla, run_prox_mala, BaselineStats};
pub use error::{Error, Result};
pub use imh::{imh_run, ImhProblem, ImhTally};
pub use model::{
    chain_rng, find_minimizer, ChainRng, ChainTrace, Composite, CompositeTarget, SharedPotential, SmoothPotential,
};
pub use rgo::{RgoSampler, SharedRgo};
pub use sampler::{composite_sampler_run, composite_sampler_run_with, ProximalChain, SamplerConfig, StepSize};
