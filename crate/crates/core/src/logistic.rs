//! The logistic link and its derivatives.
//!
//! Every evaluation goes through the two-branch form of the logistic so that
//! large linear predictors saturate instead of overflowing.

/// Logistic function `e^x / (1 + e^x)`.
#[inline]
pub fn mu(x: f64) -> f64 {
    if x < 0.0 {
        let e = libm::exp(x);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + libm::exp(-x))
    }
}

/// First three derivatives of [`mu`].
///
/// Written in terms of `m = mu(x)` and `1 - m = mu(-x)`, which keeps each term
/// accurate in both tails.
#[inline]
pub fn mu_derivatives(x: f64) -> (f64, f64, f64) {
    let m = mu(x);
    let mc = mu(-x);
    let d1 = m * mc;
    (d1, d1 * (mc - m), d1 * (1.0 - 6.0 * d1))
}

/// First derivative only; this is the Bernoulli variance at `x`.
#[inline]
pub fn mu_prime(x: f64) -> f64 {
    mu(x) * mu(-x)
}

/// `log(1 + e^x)` as `max(x, 0) + log(1 + e^{-|x|})`.
#[inline]
pub fn log1p_exp(x: f64) -> f64 {
    let ax = if x < 0.0 { -x } else { x };
    let pos = if x > 0.0 { x } else { 0.0 };
    pos + libm::log1p(libm::exp(-ax))
}

/// Bounded transform `e^z / (1 + e^z)` for unbounded covariates.
#[inline]
pub fn bounded_transform(z: f64) -> f64 {
    mu(z)
}

/// Standard normal upper tail `P(Z > x)`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}

/// Two-sided p-value of a standard normal statistic.
pub fn two_sided_p(z: f64) -> f64 {
    let a = if z < 0.0 { -z } else { z };
    (2.0 * normal_sf(a)).min(1.0)
}

/// Standard normal quantile (Acklam's rational approximation refined by one
/// Halley step against `erfc`; accurate to ~1e-15 in the body).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level must lie in (0, 1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let lo = 0.02425;
    let x = if p < lo {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - lo {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // Halley refinement.
    let e = 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2) - p;
    let u = e * libm::sqrt(2.0 * core::f64::consts::PI) * libm::exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}
