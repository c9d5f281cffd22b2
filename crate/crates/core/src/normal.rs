//! Standard normal tails in log space and the truncated normal CDF.

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `Phi(x)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `log Phi(x)`, accurate far into the lower tail.
pub fn log_cdf(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x > -37.0 {
        return cdf(x).ln();
    }
    // Mills ratio series; the omitted term is below 1e-17 relative here
    let r = 1.0 / (x * x);
    let series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r * (1.0 - 9.0 * r))));
    -0.5 * x * x - (-x).ln() - LN_SQRT_2PI + series.ln()
}

/// `log (1 - Phi(x))`.
pub fn log_sf(x: f64) -> f64 {
    log_cdf(-x)
}

/// `Phi^{-1}(p)`: the statrs inverse polished by one Newton step on `cdf`.
pub fn quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let x = Normal::standard().inverse_cdf(p);
    if !x.is_finite() {
        return x;
    }
    let density = (-0.5 * x * x - LN_SQRT_2PI).exp();
    x - (cdf(x) - p) / density
}

/// `log(e^a - e^b)` for `a >= b`.
fn log_diff(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + (-(b - a).exp_m1()).ln()
}

/// CDF at `x` of `N(theta, sigma2)` truncated to `[u, v]`; `x` is clamped
/// into the interval.
pub fn truncated_normal_cdf(x: f64, theta: f64, sigma2: f64, u: f64, v: f64) -> Result<f64> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
    }
    let sigma = sigma2.sqrt();
    let empty = || Error::EmptyTruncation {
        lower: u,
        upper: v,
        theta,
        sigma,
    };
    if !(u < v) || x.is_nan() || !theta.is_finite() {
        return Err(empty());
    }
    let x = x.clamp(u, v);
    if x == u {
        return Ok(0.0);
    }
    if x == v {
        return Ok(1.0);
    }
    let a = (u - theta) / sigma;
    let t = (x - theta) / sigma;
    let b = (v - theta) / sigma;
    let (num, den) = if a > 0.0 {
        // upper tail: use survival functions, which decrease
        (log_diff(log_sf(a), log_sf(t)), log_diff(log_sf(a), log_sf(b)))
    } else {
        (log_diff(log_cdf(t), log_cdf(a)), log_diff(log_cdf(b), log_cdf(a)))
    };
    if !den.is_finite() || num.is_nan() {
        return Err(empty());
    }
    Ok((num - den).exp().clamp(0.0, 1.0))
}
