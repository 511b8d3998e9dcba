//! Python bindings: targets, oracles, the composite sampler, the two
//! baselines and the RMSE / sliced-W2 diagnostics. Vectors cross the
//! boundary as lists of floats.

use std::ops::ControlFlow;
use std::sync::Arc;

use proxsampler_core::baselines::{run_pgla, run_prox_mala};
use proxsampler_core::diagnostics;
use proxsampler_core::problems::{gaussian_box_target, make_logistic_data, LogisticSpec, Penalty};
use proxsampler_core::rgo::{BoxIndicator, L1Penalty, LinfPenalty, Unpenalized};
use proxsampler_core::sampler::{default_inner_steps, default_step_size, init_rho0};
use proxsampler_core::{
    chain_rng, composite_sampler_run, CompositeTarget, Error, SamplerConfig, SharedRgo, StepSize,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Contract(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A composite target `exp(-f - g)` with its minimizer.
#[pyclass(frozen, module = "proxsampler")]
struct Target {
    inner: Arc<CompositeTarget>,
}

#[pymethods]
impl Target {
    /// Bayesian logistic regression; `penalty` is `"l1"` (strength = λ) or
    /// `"box"` (strength = radius).
    #[staticmethod]
    #[pyo3(signature = (d, n, rho, tau, penalty, strength, x_true, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn logistic(
        d: usize,
        n: usize,
        rho: f64,
        tau: f64,
        penalty: &str,
        strength: f64,
        x_true: Vec<f64>,
        seed: u64,
    ) -> PyResult<Self> {
        let penalty = match penalty {
            "l1" => Penalty::L1 { lambda: strength },
            "box" => Penalty::Box { radius: strength },
            other => return Err(PyValueError::new_err(format!("unknown penalty {other:?}"))),
        };
        if x_true.len() != d {
            return Err(PyValueError::new_err("x_true must have length d"));
        }
        let spec = LogisticSpec { d, n, rho, tau, penalty, x_true, seed };
        Self::from_spec(&spec)
    }

    /// The sparse ℓ1 benchmark problem (d = 36).
    #[staticmethod]
    #[pyo3(signature = (seed=0))]
    fn logistic_l1(seed: u64) -> PyResult<Self> {
        Self::from_spec(&LogisticSpec::l1_preset(seed))
    }

    /// The box-constrained benchmark problem (d = 24).
    #[staticmethod]
    #[pyo3(signature = (seed=0))]
    fn logistic_box(seed: u64) -> PyResult<Self> {
        Self::from_spec(&LogisticSpec::box_preset(seed))
    }

    /// Standard Gaussian restricted to `[-radius, radius]^d`.
    #[staticmethod]
    #[pyo3(signature = (d, radius=1.0))]
    fn gaussian_box(d: usize, radius: f64) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(gaussian_box_target(d, radius).map_err(py_err)?) })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn x_star(&self) -> Vec<f64> {
        self.inner.x_star().to_vec()
    }

    /// `f(x) + g(x)`; infinite outside the domain of `g`.
    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        self.check(&x)?;
        Ok(self.inner.value(&x))
    }

    fn gradient_f(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(&x)?;
        Ok(self.inner.f().gradient(&x))
    }

    /// The dimension-aware default step for inner accuracy `zeta`.
    #[pyo3(signature = (zeta=0.1))]
    fn default_step(&self, zeta: f64) -> f64 {
        let t = &self.inner;
        default_step_size(t.beta(), t.dim(), t.kappa(), zeta)
    }

    fn __repr__(&self) -> String {
        format!("Target(dim={}, beta={:.4e}, alpha={:.4e})", self.inner.dim(), self.inner.beta(), self.inner.alpha())
    }
}

impl Target {
    fn from_spec(spec: &LogisticSpec) -> PyResult<Self> {
        let problem = make_logistic_data(spec).map_err(py_err)?;
        Ok(Self { inner: Arc::new(problem.target().map_err(py_err)?) })
    }

    fn check(&self, x: &[f64]) -> PyResult<()> {
        if x.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!("expected a vector of length {}", self.inner.dim())));
        }
        Ok(())
    }
}

/// A restricted Gaussian oracle: exact draws from `exp(-g(x) - |x - v|²/(2h))`.
#[pyclass(frozen, module = "proxsampler")]
struct Rgo {
    inner: SharedRgo,
}

#[pymethods]
impl Rgo {
    #[staticmethod]
    fn l1(dim: usize, lam: f64) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(L1Penalty::new(dim, lam).map_err(py_err)?) })
    }

    #[staticmethod]
    fn linf(dim: usize, lam: f64) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(LinfPenalty::new(dim, lam).map_err(py_err)?) })
    }

    /// Indicator of the box `[lo, hi]`, coordinatewise.
    #[staticmethod]
    #[pyo3(name = "box")]
    fn box_(lo: Vec<f64>, hi: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(BoxIndicator::new(lo, hi).map_err(py_err)?) })
    }

    #[staticmethod]
    fn unpenalized(dim: usize) -> Self {
        Self { inner: Arc::new(Unpenalized::new(dim)) }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        self.check(&x)?;
        Ok(self.inner.value(&x))
    }

    fn prox(&self, h: f64, v: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(&v)?;
        self.inner.prox(h, &v).map_err(py_err)
    }

    /// `n` independent draws with step `h` and center `v`.
    #[pyo3(signature = (h, v, n=1, seed=0))]
    fn draw(&self, py: Python<'_>, h: f64, v: Vec<f64>, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        self.check(&v)?;
        let g = self.inner.clone();
        py.detach(move || {
            let mut rng = chain_rng(seed);
            (0..n).map(|_| g.draw(h, &v, &mut rng)).collect::<Result<Vec<_>, _>>()
        })
        .map_err(py_err)
    }
}

impl Rgo {
    fn check(&self, x: &[f64]) -> PyResult<()> {
        if x.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!("expected a vector of length {}", self.inner.dim())));
        }
        Ok(())
    }
}

/// Runs the composite proximal sampler. `h=None` uses the default step.
/// Returns a dict with `iterates` (K+1 points, the first drawn from the
/// warm start), cumulative `grad_evals` and per-iteration `accept_counts`.
#[pyfunction]
#[pyo3(signature = (target, outer_iters, h=None, inner_steps=None, zeta=0.1, seed=0))]
fn sample<'py>(
    py: Python<'py>,
    target: &Target,
    outer_iters: usize,
    h: Option<f64>,
    inner_steps: Option<usize>,
    zeta: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let config = SamplerConfig {
        step: h.map_or(StepSize::Auto { constant: 1.0 }, StepSize::Fixed),
        outer_iters,
        inner_steps: inner_steps.unwrap_or_else(|| default_inner_steps(zeta)),
        zeta,
        seed,
    };
    let t = target.inner.clone();
    let trace = py.detach(move || composite_sampler_run(&t, &config)).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("iterates", trace.iterates)?;
    out.set_item("grad_evals", trace.grad_evals)?;
    out.set_item("accept_counts", trace.accept_counts)?;
    Ok(out)
}

/// Runs `"prox-mala"` or `"pgla"` for `iters` steps from `x0`, or from the
/// same warm start as the composite sampler when `x0` is omitted.
#[pyfunction]
#[pyo3(signature = (target, method, h, iters, x0=None, seed=0))]
fn run_baseline<'py>(
    py: Python<'py>,
    target: &Target,
    method: &str,
    h: f64,
    iters: usize,
    x0: Option<Vec<f64>>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let mala = match method {
        "prox-mala" => true,
        "pgla" => false,
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    if let Some(x) = &x0 {
        target.check(x)?;
    }
    let t = target.inner.clone();
    let (iterates, stats) = py
        .detach(move || {
            let mut rng = chain_rng(seed);
            let start = match x0 {
                Some(x) => x,
                None => init_rho0(&t, h, &mut rng)?,
            };
            let mut iterates = vec![start.clone()];
            let record = |_: usize, x: &[f64], _: u64| {
                iterates.push(x.to_vec());
                ControlFlow::Continue(())
            };
            let (_, stats) = if mala {
                run_prox_mala(t.as_ref(), h, start, iters, &mut rng, record)?
            } else {
                run_pgla(t.as_ref(), h, start, iters, &mut rng, record)?
            };
            Ok::<_, Error>((iterates, stats))
        })
        .map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("iterates", iterates)?;
    out.set_item("acceptance_rate", stats.acceptance_rate())?;
    out.set_item("infeasible_fraction", stats.infeasible_fraction())?;
    Ok(out)
}

/// RMSE of the running mean against `x_hat` after each iterate.
#[pyfunction]
fn running_rmse(iterates: Vec<Vec<f64>>, x_hat: Vec<f64>) -> PyResult<Vec<f64>> {
    diagnostics::running_rmse(&iterates, &x_hat).map_err(py_err)
}

/// Sliced 2-Wasserstein distance between two point clouds.
#[pyfunction]
#[pyo3(signature = (a, b, projections=128, seed=0))]
fn sliced_w2(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, projections: usize, seed: u64) -> PyResult<f64> {
    let mut rng = chain_rng(seed);
    diagnostics::sliced_w2(&a, &b, projections, &mut rng).map_err(py_err)
}

#[pymodule]
fn proxsampler(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Target>()?;
    m.add_class::<Rgo>()?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(run_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(running_rmse, m)?)?;
    m.add_function(wrap_pyfunction!(sliced_w2, m)?)?;
    Ok(())
}
