//! Metrics for sampler output and the statistical oracles used in tests.

mod quadrature;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{contract, Result};
use crate::problems::Penalty;

pub use quadrature::QuadratureCdf;

/// Projection count used when callers have no preference.
pub const DEFAULT_PROJECTIONS: usize = 128;
/// Seed for diagnostic randomness, kept apart from chain seeds so that every
/// method is measured along the same directions.
pub const DIAGNOSTIC_SEED: u64 = 0x5eed_d1a9;
/// Fraction of a chain discarded as burn-in.
pub const BURN_IN: f64 = 0.2;

fn check_dims(iterates: &[Vec<f64>], d: usize) -> Result<()> {
    if iterates.iter().any(|x| x.len() != d) {
        return Err(contract(format!("iterates must all have dimension {d}")));
    }
    Ok(())
}

/// `(1/√d) |mean(x_1..x_k) - x̂|` for every prefix length `k`.
pub fn running_rmse(iterates: &[Vec<f64>], x_hat: &[f64]) -> Result<Vec<f64>> {
    running_rmse_with_burn_in(iterates, x_hat, 0.0)
}

/// Like [`running_rmse`] but the `k`-th mean skips the first `⌊fraction·k⌋`
/// iterates of the prefix.
pub fn running_rmse_with_burn_in(iterates: &[Vec<f64>], x_hat: &[f64], fraction: f64) -> Result<Vec<f64>> {
    if iterates.is_empty() {
        return Err(contract("running RMSE needs at least one iterate"));
    }
    if !(0.0..1.0).contains(&fraction) {
        return Err(contract(format!("burn-in fraction {fraction} outside [0, 1)")));
    }
    let d = x_hat.len();
    check_dims(iterates, d)?;
    let scale = 1.0 / (d as f64).sqrt();
    let mut sum = vec![0.0; d];
    let mut start = 0;
    let mut out = Vec::with_capacity(iterates.len());
    for (k, x) in iterates.iter().enumerate() {
        sum.iter_mut().zip(x).for_each(|(s, v)| *s += v);
        let drop_to = (fraction * (k + 1) as f64).floor() as usize;
        while start < drop_to {
            sum.iter_mut().zip(&iterates[start]).for_each(|(s, v)| *s -= v);
            start += 1;
        }
        let count = (k + 1 - start) as f64;
        let err: f64 = sum.iter().zip(x_hat).map(|(s, m)| (s / count - m).powi(2)).sum();
        out.push(scale * err.sqrt());
    }
    Ok(out)
}

/// `n` directions drawn uniformly from the unit sphere.
pub fn random_directions(dim: usize, n: usize, rng: &mut dyn RngCore) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

fn sorted_projection(samples: &[Vec<f64>], theta: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = samples
        .iter()
        .map(|x| x.iter().zip(theta).map(|(a, b)| a * b).sum())
        .collect();
    p.sort_by(f64::total_cmp);
    p
}

fn mean_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}

fn subsample<'a>(samples: &'a [Vec<f64>], m: usize, rng: &mut dyn RngCore) -> Vec<&'a Vec<f64>> {
    if samples.len() == m {
        return samples.iter().collect();
    }
    let mut idx = sample_indices(rng, samples.len(), m).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| &samples[i]).collect()
}

fn check_samples(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<usize> {
    if a.is_empty() || b.is_empty() {
        return Err(contract("sliced W2 needs nonempty sample sets"));
    }
    let d = a[0].len();
    check_dims(a, d)?;
    check_dims(b, d)?;
    Ok(d)
}

/// Sliced 2-Wasserstein distance: the root of the mean, over random unit
/// directions, of the squared 1D W2 between sorted projections. The larger
/// set is subsampled without replacement to the size of the smaller.
pub fn sliced_w2(a: &[Vec<f64>], b: &[Vec<f64>], n_projections: usize, rng: &mut dyn RngCore) -> Result<f64> {
    if n_projections == 0 {
        return Err(contract("need at least one projection"));
    }
    let d = check_samples(a, b)?;
    let m = a.len().min(b.len());
    let a: Vec<Vec<f64>> = subsample(a, m, rng).into_iter().cloned().collect();
    let b: Vec<Vec<f64>> = subsample(b, m, rng).into_iter().cloned().collect();
    let dirs = random_directions(d, n_projections, rng);
    let total: f64 = dirs
        .iter()
        .map(|th| mean_sq_diff(&sorted_projection(&a, th), &sorted_projection(&b, th)))
        .sum();
    Ok((total / n_projections as f64).sqrt())
}

/// Fixed reference set with its projections sorted once, for repeated sliced
/// W2 evaluations against samples of the same size.
#[derive(Debug, Clone)]
pub struct SlicedReference {
    directions: Vec<Vec<f64>>,
    sorted: Vec<Vec<f64>>,
}

impl SlicedReference {
    pub fn new(reference: &[Vec<f64>], directions: Vec<Vec<f64>>) -> Result<Self> {
        check_samples(reference, reference)?;
        if directions.is_empty() || directions.iter().any(|t| t.len() != reference[0].len()) {
            return Err(contract("directions must be nonempty and match the sample dimension"));
        }
        let sorted = directions.iter().map(|th| sorted_projection(reference, th)).collect();
        Ok(Self { directions, sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn distance(&self, samples: &[Vec<f64>]) -> Result<f64> {
        if samples.len() != self.len() {
            return Err(contract(format!(
                "reference holds {} samples, got {}",
                self.len(),
                samples.len()
            )));
        }
        check_dims(samples, self.directions[0].len())?;
        let total: f64 = self
            .directions
            .iter()
            .zip(&self.sorted)
            .map(|(th, r)| mean_sq_diff(&sorted_projection(samples, th), r))
            .sum();
        Ok((total / self.directions.len() as f64).sqrt())
    }
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-coordinate central `level` intervals after dropping the first 20%.
pub fn coverage_intervals(iterates: &[Vec<f64>], level: f64) -> Result<Vec<(f64, f64)>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(contract(format!("coverage level {level} outside (0, 1)")));
    }
    if iterates.len() < 100 {
        return Err(contract(format!("coverage needs at least 100 iterates, got {}", iterates.len())));
    }
    let d = iterates[0].len();
    check_dims(iterates, d)?;
    let kept = &iterates[(BURN_IN * iterates.len() as f64).floor() as usize..];
    let tail = 0.5 * (1.0 - level);
    Ok((0..d)
        .map(|j| {
            let mut col: Vec<f64> = kept.iter().map(|x| x[j]).collect();
            col.sort_by(f64::total_cmp);
            (quantile_sorted(&col, tail), quantile_sorted(&col, 1.0 - tail))
        })
        .collect())
}

fn median_and_spread(sorted: &[f64]) -> (f64, f64) {
    let med = quantile_sorted(sorted, 0.5);
    let spread = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    (med, if spread > 0.0 { spread } else { 1.0 })
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and the
/// normalized density on `support`.
pub fn ks_vs_quadrature(samples: &[f64], log_density: &dyn Fn(f64) -> f64, support: (f64, f64)) -> Result<f64> {
    if samples.len() < 1000 {
        return Err(contract(format!("KS test needs at least 1000 samples, got {}", samples.len())));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (center, scale) = median_and_spread(&sorted);
    let cdf = QuadratureCdf::new(log_density, support.0, support.1, center, scale)?;
    let n = sorted.len() as f64;
    let mut stat: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf.cdf(x)?;
        stat = stat.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(stat)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(contract("KS test needs nonempty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut stat) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        stat = stat.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(stat)
}

/// Asymptotic two-sample KS rejection threshold at significance `alpha`.
pub fn ks_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(0.5 * alpha).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Fraction of coordinates sitting exactly on the non-smooth set of the
/// penalty: zero for l1, the faces `±R` for a box.
pub fn bias_indicator(x_final: &[f64], penalty: &Penalty) -> f64 {
    if x_final.is_empty() {
        return 0.0;
    }
    let hits = match *penalty {
        Penalty::L1 { .. } => x_final.iter().filter(|&&v| v == 0.0).count(),
        Penalty::Box { radius } => x_final.iter().filter(|&&v| v.abs() == radius).count(),
    };
    hits as f64 / x_final.len() as f64
}
