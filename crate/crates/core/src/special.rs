//! Gaussian distribution functions evaluated with tail-aware formulas.

use libm::{erf, erfc};
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal survival function `1 - Φ(x)`, accurate in the upper tail.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// `log Φ(x)`, finite for every finite `x`.
pub fn log_ndtr(x: f64) -> f64 {
    if x == f64::INFINITY {
        0.0
    } else if x == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if x > 5.0 {
        (-norm_sf(x)).ln_1p()
    } else if x > -30.0 {
        (0.5 * erfc(-x * FRAC_1_SQRT_2)).ln()
    } else {
        // Asymptotic expansion of the Mills ratio.
        let r = 1.0 / (x * x);
        let series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
        -0.5 * x * x - LN_SQRT_2PI - (-x).ln() + series.ln()
    }
}

/// `log(Φ(b) - Φ(a))` for `a < b`, without cancellation in either tail.
pub fn log_ndtr_diff(a: f64, b: f64) -> f64 {
    debug_assert!(a < b);
    if a >= 0.0 {
        return log_ndtr_diff(-b, -a);
    }
    if b <= 0.0 {
        let la = log_ndtr(a);
        let lb = log_ndtr(b);
        if la == f64::NEG_INFINITY {
            return lb;
        }
        return lb + (-(la - lb).exp_m1()).ln();
    }
    // a < 0 < b: both erf terms share a sign after reflection.
    (0.5 * (erf(b * FRAC_1_SQRT_2) - erf(a * FRAC_1_SQRT_2))).ln()
}

/// Inverse of the standard normal CDF.
pub fn norm_ppf(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Inverse of the survival function, `x` with `1 - Φ(x) = q`.
pub fn norm_isf(q: f64) -> f64 {
    SQRT_2 * erfc_inv(2.0 * q)
}

/// `log(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Logistic sigmoid.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn cdf_reference_values() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((norm_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
    }

    #[test]
    fn log_ndtr_matches_direct_log_in_overlap() {
        for &x in &[-29.0, -10.0, -3.0, 0.0, 2.5, 6.0] {
            let direct = norm_cdf(x).ln();
            assert!((log_ndtr(x) - direct).abs() <= 1e-12 * direct.abs().max(1.0), "x = {x}");
        }
    }

    #[test]
    fn log_ndtr_asymptotic_branch_is_continuous() {
        let left = log_ndtr(-30.0 - 1e-9);
        let right = log_ndtr(-30.0 + 1e-9);
        assert!((left - right).abs() < 1e-6, "{left} vs {right}");
        // no underflow deep in the tail
        assert!(log_ndtr(-1e3).is_finite());
    }

    #[test]
    fn log_ndtr_diff_tails() {
        let far = log_ndtr_diff(40.0, 41.0);
        assert!((far - log_ndtr(-40.0)).abs() < 1e-6);
        let mid = log_ndtr_diff(-1.0, 1.0);
        assert!((mid - (norm_cdf(1.0) - norm_cdf(-1.0)).ln()).abs() < 1e-14);
        let left = log_ndtr_diff(f64::NEG_INFINITY, -3.0);
        assert!((left - log_ndtr(-3.0)).abs() < 1e-14);
    }

    #[test]
    fn ppf_inverts_cdf() {
        for &p in &[1e-300, 1e-20, 1e-5, 0.1, 0.5, 0.9, 0.999] {
            let x = norm_ppf(p);
            let back = norm_cdf(x);
            assert!((back - p).abs() <= 1e-12 * p.max(1e-300) + 1e-15, "p = {p}");
        }
        let x = norm_isf(1e-30);
        assert!((norm_sf(x) / 1e-30 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn softplus_and_sigmoid_extremes() {
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
        assert!((softplus(0.0) - LN_2).abs() < 1e-16);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }
}
