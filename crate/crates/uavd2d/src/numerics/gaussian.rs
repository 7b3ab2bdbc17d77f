//! Standard normal tail probability and its inverse.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{domain, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn gaussian_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Upper tail `Q(x) = P(Z > x)` of the standard normal distribution.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Inverse of [`gaussian_q`] on `(0, 1)`.
///
/// Starts from the `erfc` inverse and polishes with Newton steps, which is
/// enough to round-trip to ~1e-14 relative across the whole open interval.
pub fn gaussian_q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("gaussian_q_inverse needs p in (0,1), got {p}"));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut x = SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..4 {
        let pdf = gaussian_pdf(x);
        if pdf == 0.0 {
            break;
        }
        let step = (gaussian_q(x) - p) / pdf;
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1e-300) {
            break;
        }
    }
    Ok(x)
}
