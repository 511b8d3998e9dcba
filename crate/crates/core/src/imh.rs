//! ½-lazy independent Metropolis–Hastings.
//!
//! Only unnormalized log densities enter: the acceptance probability uses
//! `log r = [log ν(z) - log ν(x)] + [log μ(x) - log μ(z)]`.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

const INIT_ATTEMPTS: usize = 100;

/// Target `ν` and independent proposal `μ`, both up to constants.
pub trait ImhProblem {
    fn dim(&self) -> usize;

    /// `log ν(x)`; `-∞` where `ν` vanishes.
    fn log_target(&self, x: &[f64]) -> f64;

    /// `log μ(x)`.
    fn log_proposal(&self, x: &[f64]) -> f64;

    fn draw_proposal(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()>;

    /// `log ν(x) - log μ(x)`; `-∞` when `x` is infeasible under `ν`.
    ///
    /// Implementations override this when the difference is cheaper than
    /// either density.
    fn log_weight(&self, x: &[f64]) -> f64 {
        let t = self.log_target(x);
        if t == f64::NEG_INFINITY {
            return t;
        }
        t - self.log_proposal(x)
    }
}

/// Outcome tally of one inner run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ImhTally {
    pub steps: u32,
    pub accepted: u32,
    /// Extra initial draws discarded for being infeasible under the target.
    pub init_retries: u32,
}

impl ImhTally {
    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }
}

/// `½ min(1, exp(log_r))`. Infeasible proposals (`log_r = -∞`) give 0.
///
/// # Panics
/// On `NaN`, which can only come from a broken density.
pub fn lazy_accept_prob(log_r: f64) -> f64 {
    assert!(!log_r.is_nan(), "log acceptance ratio is NaN");
    if log_r >= 0.0 {
        0.5
    } else {
        0.5 * log_r.exp()
    }
}

/// `log r` from the log weights of the proposal and the current state.
/// Two infeasible states count as ratio one.
pub fn log_ratio(weight_proposal: f64, weight_current: f64) -> f64 {
    if weight_proposal == f64::NEG_INFINITY && weight_current == f64::NEG_INFINITY {
        0.0
    } else if weight_proposal == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if weight_current == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        weight_proposal - weight_current
    }
}

/// Runs `n_steps` lazy IMH transitions from an initial proposal draw and
/// returns the final state.
pub fn imh_run<P: ImhProblem + ?Sized>(
    problem: &P,
    n_steps: usize,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, ImhTally)> {
    let d = problem.dim();
    let mut x = vec![0.0; d];
    let mut z = vec![0.0; d];
    let mut tally = ImhTally::default();

    let mut w_x = f64::NEG_INFINITY;
    for attempt in 0..INIT_ATTEMPTS {
        problem.draw_proposal(rng, &mut x)?;
        w_x = problem.log_weight(&x);
        if w_x > f64::NEG_INFINITY {
            tally.init_retries = attempt as u32;
            break;
        }
    }
    if w_x == f64::NEG_INFINITY {
        return Err(Error::InfeasibleStart { attempts: INIT_ATTEMPTS });
    }

    for _ in 0..n_steps {
        let u: f64 = rng.random();
        problem.draw_proposal(rng, &mut z)?;
        let w_z = problem.log_weight(&z);
        tally.steps += 1;
        if u <= lazy_accept_prob(log_ratio(w_z, w_x)) {
            std::mem::swap(&mut x, &mut z);
            w_x = w_z;
            tally.accepted += 1;
        }
    }
    Ok((x, tally))
}

/// An [`ImhProblem`] assembled from closures.
pub struct FnProblem<T, Q, D>
where
    T: Fn(&[f64]) -> f64,
    Q: Fn(&[f64]) -> f64,
    D: Fn(&mut dyn RngCore, &mut [f64]) -> Result<()>,
{
    pub dim: usize,
    pub log_target: T,
    pub log_proposal: Q,
    pub draw: D,
}

impl<T, Q, D> ImhProblem for FnProblem<T, Q, D>
where
    T: Fn(&[f64]) -> f64,
    Q: Fn(&[f64]) -> f64,
    D: Fn(&mut dyn RngCore, &mut [f64]) -> Result<()>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn log_target(&self, x: &[f64]) -> f64 {
        (self.log_target)(x)
    }
    fn log_proposal(&self, x: &[f64]) -> f64 {
        (self.log_proposal)(x)
    }
    fn draw_proposal(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        (self.draw)(rng, out)
    }
}
