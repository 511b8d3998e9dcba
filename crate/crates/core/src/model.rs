//! Shared domain types: smooth potentials, composite targets, chain traces.

use std::fmt::Debug;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::rgo::{RgoSampler, SharedRgo, ShiftTilt};

/// Pseudo-random stream used by every chain. Equal seeds give bit-identical runs.
pub type ChainRng = ChaCha8Rng;

pub fn chain_rng(seed: u64) -> ChainRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A convex, `β`-smooth potential `f` with gradient access.
pub trait SmoothPotential: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient_into(&self, x: &[f64], grad: &mut [f64]);
    /// Smoothness constant `β`.
    fn smoothness(&self) -> f64;
    /// Convexity constant `α_f`; may be negative.
    fn convexity(&self) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        g
    }
}

pub type SharedPotential = Arc<dyn SmoothPotential>;

/// `f ≡ 0`.
#[derive(Debug, Clone)]
pub struct ZeroPotential {
    pub dim: usize,
}

impl SmoothPotential for ZeroPotential {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn gradient_into(&self, _x: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
    }
    fn smoothness(&self) -> f64 {
        0.0
    }
    fn convexity(&self) -> f64 {
        0.0
    }
}

/// `f(x) = (c/2) |x - m|²`.
#[derive(Debug, Clone)]
pub struct IsotropicQuadratic {
    curvature: f64,
    center: Vec<f64>,
}

impl IsotropicQuadratic {
    pub fn new(curvature: f64, center: Vec<f64>) -> Result<Self> {
        if !(curvature >= 0.0 && curvature.is_finite()) || center.is_empty() {
            return Err(contract("quadratic needs nonnegative curvature and a nonempty center"));
        }
        Ok(Self { curvature, center })
    }

    /// `½|x|²` on `R^d`.
    pub fn standard(dim: usize) -> Self {
        Self { curvature: 1.0, center: vec![0.0; dim] }
    }
}

impl SmoothPotential for IsotropicQuadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.curvature * crate::rgo::sq_dist(x, &self.center)
    }
    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        for ((g, &xi), &mi) in grad.iter_mut().zip(x).zip(&self.center) {
            *g = self.curvature * (xi - mi);
        }
    }
    fn smoothness(&self) -> f64 {
        self.curvature
    }
    fn convexity(&self) -> f64 {
        self.curvature
    }
}

/// `f(x) + ⟨s, x⟩`.
#[derive(Debug, Clone)]
pub struct LinearlyTilted {
    inner: SharedPotential,
    slope: Vec<f64>,
}

impl LinearlyTilted {
    pub fn new(inner: SharedPotential, slope: Vec<f64>) -> Result<Self> {
        if slope.len() != inner.dim() {
            return Err(contract("slope dimension mismatch"));
        }
        Ok(Self { inner, slope })
    }
}

impl SmoothPotential for LinearlyTilted {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x) + dot(&self.slope, x)
    }
    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        self.inner.gradient_into(x, grad);
        for (g, s) in grad.iter_mut().zip(&self.slope) {
            *g += s;
        }
    }
    fn smoothness(&self) -> f64 {
        self.inner.smoothness()
    }
    fn convexity(&self) -> f64 {
        self.inner.convexity()
    }
}

/// Anything exposing a smooth part `f` and an oracle part `g`.
pub trait Composite {
    fn f(&self) -> &dyn SmoothPotential;
    fn g(&self) -> &dyn RgoSampler;

    /// `f + g`, `+∞` outside `dom g`.
    fn potential(&self, x: &[f64]) -> f64 {
        let g = self.g().value(x);
        if g == f64::INFINITY {
            return g;
        }
        self.f().value(x) + g
    }
}

impl Composite for (SharedPotential, SharedRgo) {
    fn f(&self) -> &dyn SmoothPotential {
        self.0.as_ref()
    }
    fn g(&self) -> &dyn RgoSampler {
        self.1.as_ref()
    }
}

impl Composite for CompositeTarget {
    fn f(&self) -> &dyn SmoothPotential {
        self.f.as_ref()
    }
    fn g(&self) -> &dyn RgoSampler {
        self.g.as_ref()
    }
}

/// The composite target `π ∝ exp(-f - g)` with its minimizer `x*`.
#[derive(Debug, Clone)]
pub struct CompositeTarget {
    f: SharedPotential,
    g: SharedRgo,
    x_star: Vec<f64>,
    alpha: f64,
    kappa: f64,
}

impl CompositeTarget {
    /// Builds a target around a caller-supplied minimizer.
    pub fn new(f: SharedPotential, g: SharedRgo, x_star: Vec<f64>) -> Result<Self> {
        if f.dim() != g.dim() || x_star.len() != f.dim() {
            return Err(contract(format!(
                "dimension mismatch: f {}, g {}, x* {}",
                f.dim(),
                g.dim(),
                x_star.len()
            )));
        }
        let alpha = f.convexity() + g.convexity();
        if !(alpha > 0.0) {
            return Err(contract(format!("f + g must be strongly convex, got alpha = {alpha}")));
        }
        if !g.value(&x_star).is_finite() {
            return Err(contract("x* lies outside the domain of g"));
        }
        let kappa = (f.smoothness() / alpha).max(1.0);
        Ok(Self { f, g, x_star, alpha, kappa })
    }

    /// Builds a target and locates `x*` by proximal gradient descent from the origin.
    pub fn with_minimizer(f: SharedPotential, g: SharedRgo, tol: f64, max_iters: usize) -> Result<Self> {
        let start = vec![0.0; f.dim()];
        let x_star = find_minimizer(f.as_ref(), g.as_ref(), &start, tol, max_iters)?;
        Self::new(f, g, x_star)
    }

    pub fn f(&self) -> &dyn SmoothPotential {
        self.f.as_ref()
    }
    pub fn g(&self) -> &dyn RgoSampler {
        self.g.as_ref()
    }
    pub fn shared_f(&self) -> SharedPotential {
        self.f.clone()
    }
    pub fn shared_g(&self) -> SharedRgo {
        self.g.clone()
    }
    pub fn x_star(&self) -> &[f64] {
        &self.x_star
    }
    pub fn dim(&self) -> usize {
        self.x_star.len()
    }
    pub fn beta(&self) -> f64 {
        self.f.smoothness()
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `F = f + g`.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.potential(x)
    }

    /// `|prox_{hg}(x* - h∇f(x*)) - x*|`, zero exactly at a minimizer.
    pub fn stationarity_residual(&self, h: f64) -> Result<f64> {
        prox_grad_residual(self.f.as_ref(), self.g.as_ref(), &self.x_star, h)
    }

    /// Moves `∇f(x*)` from `f` into `g`, so that `x*` minimizes both parts
    /// while `f + g` is unchanged.
    pub fn recentered(&self) -> Result<Self> {
        let grad = self.f.gradient(&self.x_star);
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let f: SharedPotential = Arc::new(LinearlyTilted::new(self.f.clone(), neg)?);
        let g: SharedRgo = Arc::new(ShiftTilt::linear(self.g.clone(), grad)?);
        Self::new(f, g, self.x_star.clone())
    }
}

/// Ordered iterates with cumulative gradient-evaluation counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub iterates: Vec<Vec<f64>>,
    pub grad_evals: Vec<u64>,
    /// Accepted moves per outer iteration.
    pub accept_counts: Vec<u32>,
    pub seed: u64,
}

impl ChainTrace {
    pub fn new(seed: u64, x0: Vec<f64>) -> Self {
        Self { iterates: vec![x0], grad_evals: vec![0], accept_counts: Vec::new(), seed }
    }

    pub fn push(&mut self, x: Vec<f64>, grad_evals: u64, accepted: u32) {
        debug_assert!(grad_evals >= *self.grad_evals.last().unwrap_or(&0));
        self.iterates.push(x);
        self.grad_evals.push(grad_evals);
        self.accept_counts.push(accepted);
    }

    pub fn last(&self) -> &[f64] {
        self.iterates.last().expect("trace holds the initial point")
    }

    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }
}

/// Residual of one proximal-gradient step with step `h` at `x`.
pub fn prox_grad_residual(f: &dyn SmoothPotential, g: &dyn RgoSampler, x: &[f64], h: f64) -> Result<f64> {
    let grad = f.gradient(x);
    let shifted: Vec<f64> = x.iter().zip(&grad).map(|(x, g)| x - h * g).collect();
    let p = g.prox(h, &shifted)?;
    Ok(crate::rgo::sq_dist(&p, x).sqrt())
}

/// Minimizes `f + g` by accelerated proximal gradient with step `1/β` and
/// adaptive restart.
///
/// Returns a point `x` with `|x - prox_{g/β}(x - ∇f(x)/β)| ≤ tol`.
pub fn find_minimizer(
    f: &dyn SmoothPotential,
    g: &dyn RgoSampler,
    start: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(contract("tolerance must be positive"));
    }
    if start.len() != f.dim() || g.dim() != f.dim() {
        return Err(contract("dimension mismatch in minimizer search"));
    }
    let beta = f.smoothness();
    let step = if beta > 0.0 { 1.0 / beta } else { 1.0 };
    let d = f.dim();

    let mut x = start.to_vec();
    let mut y = x.clone();
    let mut momentum = 1.0_f64;
    let mut grad = vec![0.0; d];
    let mut shifted = vec![0.0; d];
    let mut next = vec![0.0; d];
    let mut residual = f64::INFINITY;

    for _ in 0..max_iters {
        f.gradient_into(&y, &mut grad);
        for i in 0..d {
            shifted[i] = y[i] - step * grad[i];
        }
        g.prox_into(step, &shifted, &mut next)?;
        residual = crate::rgo::sq_dist(&next, &y).sqrt();
        if residual <= tol {
            return Ok(y);
        }
        // restart when the momentum direction opposes the gradient-mapping step
        let uphill: f64 = (0..d).map(|i| (y[i] - next[i]) * (next[i] - x[i])).sum();
        let momentum_next = if uphill > 0.0 {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt())
        };
        let weight = if uphill > 0.0 { 0.0 } else { (momentum - 1.0) / momentum_next };
        for i in 0..d {
            y[i] = next[i] + weight * (next[i] - x[i]);
        }
        std::mem::swap(&mut x, &mut next);
        momentum = momentum_next;
    }
    Err(Error::NonConvergence { iters: max_iters, residual, last: x })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rgo::{L1Penalty, Unpenalized};

    #[test]
    fn quadratic_minimizer_from_offset_start() {
        let f = IsotropicQuadratic::standard(2);
        let g = Unpenalized::new(2);
        let x = find_minimizer(&f, &g, &[5.0, 5.0], 1e-8, 1000).unwrap();
        assert!(x.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn soft_threshold_fixed_point() {
        let f = IsotropicQuadratic::new(1.0, vec![3.0]).unwrap();
        let g = L1Penalty::new(1, 1.0).unwrap();
        let x = find_minimizer(&f, &g, &[0.0], 1e-8, 1000).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn non_convergence_reports_last_iterate() {
        let f = IsotropicQuadratic::new(1.0, vec![3.0]).unwrap();
        let g = Unpenalized::new(1);
        // a single step from a far start cannot certify the residual with max_iters = 0
        match find_minimizer(&f, &g, &[100.0], 1e-12, 0) {
            Err(Error::NonConvergence { last, residual, .. }) => {
                assert_eq!(last, vec![100.0]);
                assert!(residual.is_infinite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn target_constants() {
        let f: SharedPotential = Arc::new(IsotropicQuadratic::new(4.0, vec![0.0; 3]).unwrap());
        let g: SharedRgo = Arc::new(Unpenalized::new(3));
        let t = CompositeTarget::new(f, g, vec![0.0; 3]).unwrap();
        assert_eq!(t.alpha(), 4.0);
        assert_eq!(t.kappa(), 1.0);
        assert_eq!(t.stationarity_residual(0.1).unwrap(), 0.0);
    }

    #[test]
    fn zero_convexity_rejected() {
        let f: SharedPotential = Arc::new(ZeroPotential { dim: 2 });
        let g: SharedRgo = Arc::new(Unpenalized::new(2));
        assert!(CompositeTarget::new(f, g, vec![0.0; 2]).is_err());
    }

    #[test]
    fn recentering_preserves_total_potential() {
        let f: SharedPotential = Arc::new(IsotropicQuadratic::new(1.0, vec![3.0, -1.0]).unwrap());
        let g: SharedRgo = Arc::new(L1Penalty::new(2, 1.0).unwrap());
        let t = CompositeTarget::with_minimizer(f, g, 1e-10, 10_000).unwrap();
        let r = t.recentered().unwrap();
        for x in [[0.5, 0.5], [-2.0, 1.0], [3.0, 0.0]] {
            assert!((t.value(&x) - r.value(&x)).abs() < 1e-12);
        }
        // x* minimizes the recentered f on its own
        assert!(r.f().gradient(r.x_star()).iter().all(|g| g.abs() < 1e-12));
        assert!(r.stationarity_residual(0.5).unwrap() < 1e-9);
    }

    #[test]
    fn trace_bookkeeping() {
        let mut tr = ChainTrace::new(7, vec![0.0]);
        tr.push(vec![1.0], 3, 1);
        tr.push(vec![2.0], 6, 0);
        assert_eq!(tr.len(), 3);
        assert_eq!(tr.grad_evals, vec![0, 3, 6]);
        assert_eq!(tr.last(), &[2.0]);
    }
}
