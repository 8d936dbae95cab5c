use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};

/// Upper tail of the standard normal, `H(x) = erfc(x / sqrt 2) / 2`.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `ln H(x)`, switching to the asymptotic series once `H` would underflow.
pub fn ln_gaussian_tail(x: f64) -> f64 {
    if x < 37.0 {
        return gaussian_tail(x).ln();
    }
    let z = x * x;
    let mut term = 1.0;
    let mut series = 1.0;
    for k in 1..=6 {
        term *= -((2 * k - 1) as f64) / z;
        series += term;
    }
    -0.5 * z - x.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
}

/// Leading asymptotic form `H(sqrt z) ~ exp(-z/2) / sqrt(2 pi z)`.
pub fn gaussian_tail_asymptotic(z: f64) -> f64 {
    (-0.5 * z).exp() / (2.0 * std::f64::consts::PI * z).sqrt()
}

/// Inverse of [`gaussian_tail`] on `p` in `(0, 0.5]`, by bisection.
pub fn gaussian_tail_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(invalid(format!("tail probability must lie in (0, 0.5], got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let target = p.ln();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while ln_gaussian_tail(hi) > target {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::RootNotFound(0));
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if ln_gaussian_tail(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootNotFound(2000))
}
