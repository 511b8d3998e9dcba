//! Exact draws and quantiles for `N(0, 1)` restricted to `[-R, R]`, the
//! coordinate law of the Gaussian-in-a-box target.

use proxsampler_core::special::{norm_cdf, norm_pdf, norm_ppf};
use rand::{Rng, RngCore};

/// Quantile of `N(0, 1) | [-R, R]` by the inverse CDF.
pub fn box_quantile(p: f64, radius: f64) -> f64 {
    let lo = norm_cdf(-radius);
    let mass = norm_cdf(radius) - lo;
    norm_ppf(lo + p * mass).clamp(-radius, radius)
}

/// `1 - 2Rφ(R) / (Φ(R) - Φ(-R))`.
pub fn box_variance(radius: f64) -> f64 {
    1.0 - 2.0 * radius * norm_pdf(radius) / (norm_cdf(radius) - norm_cdf(-radius))
}

/// `n` independent points from the product target, coordinate by coordinate.
pub fn box_samples(n: usize, d: usize, radius: f64, rng: &mut dyn RngCore) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| box_quantile(rng.random::<f64>(), radius)).collect())
        .collect()
}

/// Empirical 1D W2 between `samples` and the exact law, matching order
/// statistics with quantiles at `(i + 1/2)/m`.
pub fn w2_to_box_law(samples: &[f64], radius: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() as f64;
    let total: f64 = s
        .iter()
        .enumerate()
        .map(|(i, x)| (x - box_quantile((i as f64 + 0.5) / m, radius)).powi(2))
        .sum();
    (total / m).sqrt()
}
