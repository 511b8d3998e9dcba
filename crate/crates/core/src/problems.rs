//! Experimental targets: Bayesian logistic regression with an l1 prior or a
//! box constraint, and a standard Gaussian restricted to a cube.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::model::{chain_rng, CompositeTarget, IsotropicQuadratic, SharedPotential, SmoothPotential};
use crate::rgo::{BoxIndicator, L1Penalty, SharedRgo};
use crate::special::{sigmoid, softplus};

const MINIMIZER_TOL: f64 = 1e-8;
const MINIMIZER_MAX_ITERS: usize = 1_000_000;

/// Non-smooth part of a logistic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Penalty {
    /// `λ |x|_1`.
    L1 { lambda: f64 },
    /// Indicator of `[-R, R]^d`.
    Box { radius: f64 },
}

impl Penalty {
    pub fn oracle(&self, dim: usize) -> Result<SharedRgo> {
        Ok(match *self {
            Penalty::L1 { lambda } => Arc::new(L1Penalty::new(dim, lambda)?),
            Penalty::Box { radius } => Arc::new(BoxIndicator::cube(dim, radius)?),
        })
    }
}

/// Logistic regression data set with its prior, reproducible from the seed.
///
/// `design` is stored row-major with `n` rows of length `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticProblem {
    pub n: usize,
    pub d: usize,
    pub design: Vec<f64>,
    pub labels: Vec<u8>,
    pub tau: f64,
    pub penalty: Penalty,
    pub x_true: Vec<f64>,
    pub rho: f64,
    pub seed: u64,
}

/// Settings for [`make_logistic_data`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticSpec {
    pub d: usize,
    pub n: usize,
    pub rho: f64,
    pub tau: f64,
    pub penalty: Penalty,
    pub x_true: Vec<f64>,
    pub seed: u64,
}

impl LogisticSpec {
    /// Sparse l1 setting: `d = 36`, `n = 360`, `τ = 0.2`, `λ = 7`, `ρ = 0.65`.
    pub fn l1_preset(seed: u64) -> Self {
        let mut x_true = vec![0.0; 36];
        x_true[..5].copy_from_slice(&[1.0, -1.0, 0.8, 1.2, -0.9]);
        Self { d: 36, n: 360, rho: 0.65, tau: 0.2, penalty: Penalty::L1 { lambda: 7.0 }, x_true, seed }
    }

    /// Box setting: `d = 24`, `n = 360`, `τ = 0.2`, `R = 0.35`, `ρ = 0.55`.
    pub fn box_preset(seed: u64) -> Self {
        let mut x_true = vec![0.0; 24];
        x_true[..4].copy_from_slice(&[3.0, -3.0, 3.0, -3.0]);
        Self { d: 24, n: 360, rho: 0.55, tau: 0.2, penalty: Penalty::Box { radius: 0.35 }, x_true, seed }
    }
}

/// One AR(1) row: `z_1 = e_1`, `z_j = ρ z_{j-1} + √(1-ρ²) e_j`, which is the
/// lower-triangular factor of `Σ_ij = ρ^|i-j|` applied to white noise.
pub fn ar1_row<R: Rng + ?Sized>(d: usize, rho: f64, rng: &mut R) -> Vec<f64> {
    let innov = (1.0 - rho * rho).sqrt();
    let mut row = Vec::with_capacity(d);
    let mut prev = 0.0;
    for j in 0..d {
        let e: f64 = rng.sample(StandardNormal);
        prev = if j == 0 { e } else { rho * prev + innov * e };
        row.push(prev);
    }
    row
}

/// Draws rows from `N(0, Σ)`, rescales each to norm `√n`, and labels them
/// by Bernoulli(`σ(⟨a_i, x_true⟩)`).
pub fn make_logistic_data(spec: &LogisticSpec) -> Result<LogisticProblem> {
    let LogisticSpec { d, n, rho, tau, penalty, ref x_true, seed } = *spec;
    if !(rho.abs() < 1.0) {
        return Err(contract(format!("correlation must satisfy |rho| < 1, got {rho}")));
    }
    if x_true.len() != d || d == 0 || n == 0 {
        return Err(contract("x_true must have length d and n, d must be positive"));
    }
    if !(tau > 0.0) {
        return Err(contract("ridge tau must be positive"));
    }
    let mut rng = chain_rng(seed);
    let target_norm = (n as f64).sqrt();
    let mut design = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = ar1_row(d, rho, &mut rng);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        row.iter_mut().for_each(|v| *v *= target_norm / norm);
        let t: f64 = row.iter().zip(x_true).map(|(a, x)| a * x).sum();
        let u: f64 = rng.random();
        labels.push((u < sigmoid(t)) as u8);
        design.extend(row);
    }
    Ok(LogisticProblem { n, d, design, labels, tau, penalty, x_true: x_true.clone(), rho, seed })
}

impl LogisticProblem {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.design[i * self.d..(i + 1) * self.d]
    }

    pub fn potential(&self) -> LogisticPotential {
        LogisticPotential::new(self)
    }

    /// `π ∝ exp(-f - g)` with `x*` located by proximal gradient to `1e-8`.
    pub fn target(&self) -> Result<CompositeTarget> {
        let f: SharedPotential = Arc::new(self.potential());
        let g = self.penalty.oracle(self.d)?;
        CompositeTarget::with_minimizer(f, g, MINIMIZER_TOL, MINIMIZER_MAX_ITERS)
    }
}

/// `f(x) = Σ_i [log(1 + e^{⟨a_i,x⟩}) - y_i⟨a_i,x⟩] + (τ/2)|x|²`.
#[derive(Debug, Clone)]
pub struct LogisticPotential {
    n: usize,
    d: usize,
    design: Vec<f64>,
    labels: Vec<f64>,
    tau: f64,
    beta: f64,
}

impl LogisticPotential {
    pub fn new(problem: &LogisticProblem) -> Self {
        let mut pot = Self {
            n: problem.n,
            d: problem.d,
            design: problem.design.clone(),
            labels: problem.labels.iter().map(|&y| y as f64).collect(),
            tau: problem.tau,
            beta: 0.0,
        };
        pot.beta = pot.design_op_norm_sq() / 4.0 + pot.tau;
        pot
    }

    fn margins(&self, x: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let x = x.to_vec();
        self.design
            .chunks_exact(self.d)
            .map(move |row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
    }

    /// `|A|²_op` by power iteration on `AᵀA`.
    fn design_op_norm_sq(&self) -> f64 {
        let mut v = vec![1.0 / (self.d as f64).sqrt(); self.d];
        let mut estimate = 0.0;
        for _ in 0..10_000 {
            let av: Vec<f64> = self.margins(&v).collect();
            let mut w = vec![0.0; self.d];
            for (row, &s) in self.design.chunks_exact(self.d).zip(&av) {
                for (wj, &aj) in w.iter_mut().zip(row) {
                    *wj += s * aj;
                }
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let converged = (norm - estimate).abs() <= 1e-13 * norm;
            estimate = norm;
            v = w.into_iter().map(|x| x / norm).collect();
            if converged {
                break;
            }
        }
        estimate
    }
}

impl SmoothPotential for LogisticPotential {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        let nll: f64 = self
            .margins(x)
            .zip(&self.labels)
            .map(|(t, &y)| softplus(t) - y * t)
            .sum();
        nll + 0.5 * self.tau * x.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        for (g, &xi) in grad.iter_mut().zip(x) {
            *g = self.tau * xi;
        }
        for (row, &y) in self.design.chunks_exact(self.d).zip(&self.labels) {
            let t: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            let r = sigmoid(t) - y;
            for (g, &a) in grad.iter_mut().zip(row) {
                *g += r * a;
            }
        }
    }

    fn smoothness(&self) -> f64 {
        self.beta
    }

    fn convexity(&self) -> f64 {
        self.tau
    }
}

impl LogisticPotential {
    pub fn n(&self) -> usize {
        self.n
    }
}

/// `π(x) ∝ exp(-|x|²/2)` on `[-R, R]^d`, with `x* = 0`.
pub fn gaussian_box_target(d: usize, radius: f64) -> Result<CompositeTarget> {
    if d == 0 || !(radius > 0.0) {
        return Err(contract("gaussian box target needs d >= 1 and R > 0"));
    }
    let f: SharedPotential = Arc::new(IsotropicQuadratic::standard(d));
    let g: SharedRgo = Arc::new(BoxIndicator::cube(d, radius)?);
    CompositeTarget::new(f, g, vec![0.0; d])
}
