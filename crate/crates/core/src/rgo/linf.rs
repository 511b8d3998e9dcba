use rand::{Rng, RngCore};
use rand_distr::Exp1;

use super::{check_step, truncated_gaussian_unchecked, RgoSampler};
use crate::error::{contract, Error, Result};
use crate::special::log_ndtr_diff;

const UNIFORM_NODES: usize = 256;
const LOG_NODES: usize = 32;
/// Geometric refinement below the first uniform node spans this many decades.
const LOG_DECADES: f64 = 12.0;
const MAX_REFINEMENTS: usize = 40;
const MAX_REJECTIONS: usize = 100_000;
const LOG_TAIL_TOL: f64 = -23.025_850_929_940_457; // ln(1e-10)

/// `g(x) = λ |x|_∞`.
///
/// Sampling is two-stage: a radius `t ≥ 0` with density
/// `p(t) ∝ exp(-λt) Π_i P(|N(v_i, h)| ≤ t)`, then each coordinate from
/// `N(v_i, h)` restricted to `[-t, t]`. The radius density is log-concave, so a
/// piecewise-constant envelope over a grid (endpoint values away from the mode,
/// secant extrapolations next to it) plus an exponential piece beyond the grid
/// gives an exact rejection sampler.
#[derive(Debug, Clone)]
pub struct LinfPenalty {
    dim: usize,
    lambda: f64,
}

impl LinfPenalty {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(contract("l-infinity penalty needs dimension >= 1"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(contract(format!("l-infinity weight must be positive, got {lambda}")));
        }
        Ok(Self { dim, lambda })
    }

    /// Log of the unnormalized radius density, each Gaussian factor normalized to at most 1.
    fn log_radius_density(&self, h: f64, v: &[f64], t: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let s = h.sqrt();
        let mut acc = -self.lambda * t;
        for &c in v {
            acc += log_ndtr_diff((-t - c) / s, (t - c) / s);
        }
        acc
    }

    pub(crate) fn sample_radius(&self, h: f64, v: &[f64], rng: &mut dyn RngCore) -> Result<f64> {
        let vmax = v.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let mut top = 8.0 * vmax.max(h.sqrt());
        for _ in 0..MAX_REFINEMENTS {
            match RadiusEnvelope::build(self, h, v, top) {
                Refine::Grow => top *= 2.0,
                Refine::Ready(env) => return env.sample(self, h, v, rng),
            }
        }
        Err(Error::Quadrature(format!(
            "radius grid did not capture 1 - 1e-10 of the mass (upper end {top:e})"
        )))
    }
}

enum Refine {
    Grow,
    Ready(RadiusEnvelope),
}

struct RadiusEnvelope {
    nodes: Vec<f64>,
    /// Upper bound of the log density on each cell.
    bounds: Vec<f64>,
    /// Cumulative envelope mass, cells first and the exponential tail last.
    cumulative: Vec<f64>,
    top: f64,
}

impl RadiusEnvelope {
    fn build(pen: &LinfPenalty, h: f64, v: &[f64], top: f64) -> Refine {
        let first = top / UNIFORM_NODES as f64;
        let mut nodes = Vec::with_capacity(UNIFORM_NODES + LOG_NODES + 2);
        nodes.push(0.0);
        for j in 0..LOG_NODES {
            let frac = j as f64 / LOG_NODES as f64;
            nodes.push(first * 10f64.powf(-LOG_DECADES * (1.0 - frac)));
        }
        for j in 1..=UNIFORM_NODES {
            nodes.push(top * j as f64 / UNIFORM_NODES as f64);
        }
        let logq: Vec<f64> = nodes.iter().map(|&t| pen.log_radius_density(h, v, t)).collect();
        let last = nodes.len() - 1;
        let mode = (0..nodes.len())
            .max_by(|&i, &j| logq[i].total_cmp(&logq[j]))
            .unwrap_or(0);
        if mode + 2 > last {
            return Refine::Grow;
        }

        let secant_at = |i: usize, j: usize, t: f64| -> f64 {
            if !logq[i].is_finite() || !logq[j].is_finite() {
                return f64::INFINITY;
            }
            logq[i] + (logq[j] - logq[i]) / (nodes[j] - nodes[i]) * (t - nodes[i])
        };

        let mut bounds = Vec::with_capacity(last);
        for j in 0..last {
            let b = if j + 1 < mode {
                logq[j + 1]
            } else if j > mode {
                logq[j]
            } else if j + 1 == mode {
                // cell [t_{m-1}, t_m]
                let left = if j >= 1 { secant_at(j - 1, j, nodes[j + 1]) } else { f64::INFINITY };
                let right = secant_at(mode, mode + 1, nodes[j]);
                left.min(right)
            } else {
                // cell [t_m, t_{m+1}]
                let left = if mode >= 1 { secant_at(mode - 1, mode, nodes[j + 1]) } else { f64::INFINITY };
                let right = secant_at(mode + 1, mode + 2, nodes[j]);
                left.min(right)
            };
            if !b.is_finite() && b > 0.0 {
                // mode sits inside the geometric refinement near zero
                return Refine::Grow;
            }
            bounds.push(b + 1e-9 * b.abs().max(1.0));
        }

        let log_masses: Vec<f64> = bounds
            .iter()
            .enumerate()
            .map(|(j, &b)| b + (nodes[j + 1] - nodes[j]).ln())
            .collect();
        let log_tail = -pen.lambda * top - pen.lambda.ln();
        let peak = log_masses.iter().cloned().fold(log_tail, f64::max);
        let grid_mass: f64 = log_masses.iter().map(|&m| (m - peak).exp()).sum();
        if log_tail - peak - grid_mass.ln() > LOG_TAIL_TOL {
            return Refine::Grow;
        }
        let mut cumulative = Vec::with_capacity(log_masses.len() + 1);
        let mut acc = 0.0;
        for &m in log_masses.iter().chain(std::iter::once(&log_tail)) {
            acc += (m - peak).exp();
            cumulative.push(acc);
        }
        Refine::Ready(RadiusEnvelope { nodes, bounds, cumulative, top })
    }

    fn sample(&self, pen: &LinfPenalty, h: f64, v: &[f64], rng: &mut dyn RngCore) -> Result<f64> {
        let total = *self.cumulative.last().expect("nonempty envelope");
        let tail_index = self.cumulative.len() - 1;
        for _ in 0..MAX_REJECTIONS {
            let u: f64 = rng.random::<f64>() * total;
            let piece = self.cumulative.partition_point(|&c| c <= u).min(tail_index);
            let (t, log_bound) = if piece == tail_index {
                let e: f64 = rng.sample(Exp1);
                let t = self.top + e / pen.lambda;
                (t, -pen.lambda * t)
            } else {
                let w: f64 = rng.random();
                let t = self.nodes[piece] + w * (self.nodes[piece + 1] - self.nodes[piece]);
                (t, self.bounds[piece])
            };
            let accept: f64 = rng.random();
            if accept.ln() <= pen.log_radius_density(h, v, t) - log_bound {
                return Ok(t);
            }
        }
        Err(Error::Quadrature("radius envelope rejected every proposal".into()))
    }
}

impl RgoSampler for LinfPenalty {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.lambda * x.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Moreau decomposition: `v - P(v)` with `P` the projection onto the l1 ball of radius `λh`.
    fn prox_into(&self, h: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        let proj = project_l1_ball(v, self.lambda * h);
        for ((o, &x), p) in out.iter_mut().zip(v).zip(proj) {
            *o = x - p;
        }
        Ok(())
    }

    fn draw_into(&self, h: f64, v: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        check_step(h)?;
        let t = self.sample_radius(h, v, rng)?;
        for (o, &c) in out.iter_mut().zip(v) {
            *o = truncated_gaussian_unchecked(c, h, -t, t, rng);
        }
        Ok(())
    }
}

/// Euclidean projection onto `{x : |x|_1 ≤ radius}` by sorting magnitudes.
pub(crate) fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - radius) / (k + 1) as f64;
        if m > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect()
}
