//! Gauss hypergeometric function `2F1(a, b; c; z)` for real arguments, z < 1.
//!
//! Negative arguments are mapped into `(0, 1)` by the Pfaff transformations
//!
//! ```text
//! 2F1(a,b;c;z) = (1-z)^(-a) 2F1(a, c-b; c; z/(z-1))
//!              = (1-z)^(-b) 2F1(c-a, b; c; z/(z-1))
//! ```
//!
//! choosing a terminating form when one exists. When the transformed series
//! would converge too slowly (argument close to one), the Euler integral
//! representation is integrated numerically instead.

use libm::lgamma as ln_gamma;

use super::quad::{integrate_with_breaks, Domain, QuadratureSpec};
use crate::error::{domain, Error, Result};

const SERIES_CAP: usize = 10_000;
const SERIES_TOL: f64 = 1e-13;

fn non_positive_int(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Degree of the polynomial when `a` or `b` terminates the series.
fn terminating_degree(a: f64, b: f64) -> Option<usize> {
    let da = non_positive_int(a).then(|| (-a) as usize);
    let db = non_positive_int(b).then(|| (-b) as usize);
    match (da, db) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

/// Polynomial sum, returning `(sum, sum of |terms|)`.
fn polynomial(a: f64, b: f64, c: f64, z: f64, degree: usize) -> (f64, f64) {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut sum_abs = 1.0;
    for k in 0..degree {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum += term;
        sum_abs += term.abs();
    }
    (sum, sum_abs)
}

/// Plain Maclaurin series of `2F1(a,b;c;z)` for `|z| < 1`.
///
/// Stops once the geometric bound on the remaining tail falls below `1e-13`
/// of the partial sum; fails after 10 000 terms.
pub fn gauss_2f1_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if z.abs() >= 1.0 {
        return domain(format!("2F1 series needs |z| < 1, got {z}"));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..SERIES_CAP {
        let kf = k as f64;
        let ratio = (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        term *= ratio;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        let r = ratio.abs();
        if r < 1.0 && k >= 2 && term.abs() / (1.0 - r) < SERIES_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence { what: "2F1 Maclaurin series", iterations: SERIES_CAP })
}

/// Euler integral `Γ(c)/(Γ(b)Γ(c-b)) ∫ t^(b-1) (1-t)^(c-b-1) (1-zt)^(-a) dt`,
/// valid for `c > b > 0` and `z < 1`.
fn euler_integral(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let pref = (ln_gamma(c) - ln_gamma(b) - ln_gamma(c - b)).exp();
    let f = |t: f64| {
        let base = (b - 1.0) * t.ln() + (c - b - 1.0) * (-t).ln_1p() - a * (-z * t).ln_1p();
        base.exp()
    };
    let mut breaks = Vec::new();
    if z < -1.0 {
        // The (1 - z t)^(-a) factor changes scale around t ~ 1/|z|.
        let mut t = 1.0 / -z;
        while t < 1.0 {
            breaks.push(t);
            t *= 8.0;
        }
    }
    let spec = QuadratureSpec { abs_tol: 1e-300, rel_tol: 1e-12, max_subdivisions: 4000, tail_transform: true };
    Ok(pref * integrate_with_breaks(f, Domain::Finite(0.0, 1.0), &breaks, &spec)?)
}

/// Series on `[0, 1)` with the Euler-integral fallback for slow convergence.
fn positive_argument(a: f64, b: f64, c: f64, w: f64) -> Result<f64> {
    match gauss_2f1_series(a, b, c, w) {
        Ok(v) => Ok(v),
        Err(series_err) => {
            if c > b && b > 0.0 {
                euler_integral(a, b, c, w)
            } else if c > a && a > 0.0 {
                euler_integral(b, a, c, w)
            } else {
                Err(series_err)
            }
        }
    }
}

/// Gauss hypergeometric function `2F1(a, b; c; z)`.
///
/// Supported: terminating series for any `z`; otherwise `z < 1` with `c` not
/// a non-positive integer.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if ![a, b, c, z].iter().all(|v| v.is_finite()) {
        return domain("2F1 arguments must be finite");
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if let Some(n) = terminating_degree(a, b) {
        if non_positive_int(c) && ((-c) as usize) < n {
            return domain(format!("2F1: c = {c} hits a pole before the series terminates"));
        }
        return Ok(polynomial(a, b, c, z, n).0);
    }
    if non_positive_int(c) {
        return domain(format!("2F1: c = {c} is a non-positive integer"));
    }
    if z >= 1.0 {
        return domain(format!("2F1 requires z < 1 for non-terminating series, got {z}"));
    }
    if z > 0.0 {
        return positive_argument(a, b, c, z);
    }

    let w = z / (z - 1.0);
    let ln1mz = (-z).ln_1p();
    // Variant A: (1-z)^(-a) F(a, c-b; c; w); variant B: (1-z)^(-b) F(c-a, b; c; w).
    let variants = [(a, c - b, a), (c - a, b, b)];
    for &(p, q, power) in &variants {
        if let Some(n) = terminating_degree(p, q) {
            let (sum, sum_abs) = polynomial(p, q, c, w, n);
            if sum != 0.0 && sum_abs / sum.abs() < 1e3 {
                return Ok((-power * ln1mz).exp() * sum);
            }
        }
    }
    let mut last_err = None;
    for &(p, q, power) in &variants {
        if terminating_degree(p, q).is_some() {
            continue;
        }
        match positive_argument(p, q, c, w) {
            Ok(v) => return Ok((-power * ln1mz).exp() * v),
            Err(e) => last_err = Some(e),
        }
    }
    // Only cancelling polynomials (or failures) left: integrate directly.
    if c > b && b > 0.0 {
        return euler_integral(a, b, c, z);
    }
    if c > a && a > 0.0 {
        return euler_integral(b, a, c, z);
    }
    for &(p, q, power) in &variants {
        if let Some(n) = terminating_degree(p, q) {
            return Ok((-power * ln1mz).exp() * polynomial(p, q, c, w, n).0);
        }
    }
    Err(last_err.unwrap_or(Error::NonConvergence { what: "2F1", iterations: SERIES_CAP }))
}
