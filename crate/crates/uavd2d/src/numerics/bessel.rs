//! Modified Bessel functions of the first kind.

use std::f64::consts::PI;

/// Crossover between the power series and the large-argument expansion.
const SERIES_LIMIT: f64 = 30.0;

fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            return sum;
        }
        k += 1.0;
    }
}

/// `sqrt(2*pi*x) * exp(-x) * I0(x)` from the asymptotic expansion.
fn i0_asymptotic_core(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
        if next >= term || next < 1e-17 * sum {
            return sum + next.min(term);
        }
        term = next;
        sum += term;
        k += 1.0;
    }
}

/// `I0(x)` for `x >= 0`. Overflows to infinity only beyond `x ~ 713`.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        i0_series(x)
    } else {
        let scaled = bessel_i0_scaled(x);
        // Split the exponential so that x near the overflow threshold still works.
        scaled * (0.5 * x).exp() * (0.5 * x).exp()
    }
}

/// `exp(-x) * I0(x)`, finite for every `x >= 0`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        (-x).exp() * i0_series(x)
    } else {
        i0_asymptotic_core(x) / (2.0 * PI * x).sqrt()
    }
}

/// `exp(-x) * I_k(x)` for `k = 0..=n`.
///
/// Miller's backward recurrence started well above both `n` and `x`,
/// normalised by [`bessel_i0_scaled`]. Intermediate values are rescaled to
/// stay in range, so tiny and huge arguments are both safe.
pub fn bessel_i_scaled_seq(x: f64, n: usize) -> Vec<f64> {
    let x = x.abs();
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x < 1e-10 {
        // Leading series term is exact to double precision here.
        let mut t = (-x).exp();
        out[0] = t;
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            t *= 0.5 * x / k as f64;
            *slot = t;
        }
        return out;
    }
    let scale_ref = (n as f64).max(x);
    let start = scale_ref.ceil() as usize + 30 + (8.0 * scale_ref.sqrt()).ceil() as usize;
    let mut above = 0.0; // I_{k+1}
    let mut cur = 1e-280; // I_k
    for k in (1..=start).rev() {
        let below = above + (2.0 * k as f64 / x) * cur;
        above = cur;
        cur = below;
        if k - 1 <= n {
            out[k - 1] = cur;
        }
        if k <= n {
            out[k] = above;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            above *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = bessel_i0_scaled(x) / out[0];
    for v in out.iter_mut() {
        *v *= norm;
    }
    out
}
