use rand::{Rng, RngCore};
use rand_distr::{Exp1, StandardNormal};

use crate::error::{contract, Error, Result};
use crate::special::{log_ndtr_diff, norm_cdf, norm_isf, norm_ppf, norm_sf};

/// Standardized bound beyond which the one-sided exponential proposal is used.
const TAIL_START: f64 = 6.0;
/// Below this interval mass the inverse CDF loses too many digits.
const INVERSE_CDF_MIN_MASS: f64 = 1e-10;
const LOG_MIN_MASS: f64 = -690.775_527_898_213_7; // ln(1e-300)

/// Exact draw from `N(mean, var)` restricted to `[lo, hi]`; bounds may be infinite.
pub fn truncated_gaussian_1d(mean: f64, var: f64, lo: f64, hi: f64, rng: &mut dyn RngCore) -> Result<f64> {
    if !(var > 0.0 && var.is_finite()) {
        return Err(contract(format!("variance must be positive, got {var}")));
    }
    if !(lo < hi) {
        return Err(contract(format!("truncation interval [{lo}, {hi}] is empty")));
    }
    let sd = var.sqrt();
    let z = std_truncated_normal((lo - mean) / sd, (hi - mean) / sd, rng)?;
    Ok((mean + sd * z).clamp(lo, hi))
}

/// Exact draw from the standard normal restricted to `[a, b]`.
///
/// Fails when the interval carries less than `1e-300` of the mass.
pub fn std_truncated_normal(a: f64, b: f64, rng: &mut dyn RngCore) -> Result<f64> {
    if !(a < b) {
        if a == b {
            return Ok(a);
        }
        return Err(contract(format!("truncation interval [{a}, {b}] is empty")));
    }
    if !covers_bulk(a, b) {
        let log_mass = log_ndtr_diff(a, b);
        if !(log_mass >= LOG_MIN_MASS) {
            return Err(Error::NegligibleMass { log_mass });
        }
    }
    Ok(sample_std_truncated(a, b, rng))
}

/// `N(mean, var)` on `[lo, hi]` for callers that already validated the bounds.
///
/// Unlike [`truncated_gaussian_1d`] this never fails on far tails: the
/// exponential proposal is exact at any distance from the mean.
pub(crate) fn truncated_gaussian_unchecked(mean: f64, var: f64, lo: f64, hi: f64, rng: &mut dyn RngCore) -> f64 {
    let sd = var.sqrt();
    let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
    let z = if a < b { sample_std_truncated(a, b, rng) } else { a };
    (mean + sd * z).clamp(lo, hi)
}

// Interval holds at least Φ(1.4) - 1/2 ≈ 0.42 of the mass.
fn covers_bulk(a: f64, b: f64) -> bool {
    a <= 0.0 && b >= 0.0 && b - a >= 1.4
}

fn sample_std_truncated(a: f64, b: f64, rng: &mut dyn RngCore) -> f64 {
    if covers_bulk(a, b) {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if a <= z && z <= b {
                return z;
            }
        }
    }
    if a >= TAIL_START {
        return exponential_tail(a, b, rng);
    }
    if b <= -TAIL_START {
        return -exponential_tail(-b, -a, rng);
    }
    if log_ndtr_diff(a, b).exp() >= INVERSE_CDF_MIN_MASS {
        inverse_cdf(a, b, rng)
    } else {
        narrow_uniform(a, b, rng)
    }
}

fn inverse_cdf(a: f64, b: f64, rng: &mut dyn RngCore) -> f64 {
    let u: f64 = rng.random();
    let z = if a >= 0.0 {
        // upper side: work with survival probabilities
        let (qa, qb) = (norm_sf(a), norm_sf(b));
        norm_isf(qa - u * (qa - qb))
    } else {
        let (pa, pb) = (norm_cdf(a), norm_cdf(b));
        norm_ppf(pa + u * (pb - pa))
    };
    z.clamp(a, b)
}

/// Exponential proposal on `[a, b]` with the rate that maximizes acceptance on `[a, ∞)`.
fn exponential_tail(a: f64, b: f64, rng: &mut dyn RngCore) -> f64 {
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    let width = b - a;
    // mass of the exponential proposal inside the window
    let window = if width.is_finite() { -(-rate * width).exp_m1() } else { 1.0 };
    loop {
        let z = if width.is_finite() {
            let u: f64 = rng.random();
            a - (-u * window).ln_1p() / rate
        } else {
            let e: f64 = rng.sample(Exp1);
            a + e / rate
        };
        let accept: f64 = rng.random();
        if accept <= (-0.5 * (z - rate) * (z - rate)).exp() && z <= b {
            return z;
        }
    }
}

/// Short interval with tiny mass: uniform proposal against the Gaussian shape.
fn narrow_uniform(a: f64, b: f64, rng: &mut dyn RngCore) -> f64 {
    let peak = if a > 0.0 {
        a
    } else if b < 0.0 {
        b
    } else {
        0.0
    };
    loop {
        let u: f64 = rng.random();
        let z = a + u * (b - a);
        let accept: f64 = rng.random();
        if accept <= (-0.5 * (z * z - peak * peak)).exp() {
            return z;
        }
    }
}
