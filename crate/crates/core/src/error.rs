use thiserror::Error;

/// Errors raised by samplers, oracles, and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("truncated Gaussian interval carries negligible mass (log mass {log_mass:.3})")]
    NegligibleMass { log_mass: f64 },

    #[error("tilted step undefined: 1 + a*h = {value} is not positive")]
    TiltUndefined { value: f64 },

    #[error("matrix is not positive definite at step h = {h}")]
    NotPositiveDefinite { h: f64 },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    /// Proximal gradient iteration did not reach the requested residual.
    #[error("minimizer search stopped after {iters} iterations with residual {residual:e}")]
    NonConvergence {
        iters: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error("initial proposal infeasible under the target after {attempts} attempts")]
    InfeasibleStart { attempts: usize },

    #[error("outer iteration {outer}: {source}")]
    Outer {
        outer: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
