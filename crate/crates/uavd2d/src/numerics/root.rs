//! Safeguarded root finding for monotone scalar functions.

use crate::error::{Error, Result};

/// Whether `f` increases or decreases with its argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Search interval together with the level being solved for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    pub lower: f64,
    pub upper: f64,
    pub target: f64,
    pub direction: Direction,
}

/// Stopping rules and bracket-expansion policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Accept `x` once `|f(x) - target| <= ftol`.
    pub ftol: f64,
    /// Accept once the bracket is narrower than `xtol_abs + xtol_rel * |x|`.
    pub xtol_rel: f64,
    pub xtol_abs: f64,
    pub max_iter: usize,
    /// Number of width doublings allowed when the bracket does not straddle
    /// the target; zero disables expansion.
    pub max_doublings: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { ftol: 0.0, xtol_rel: 1e-12, xtol_abs: 1e-15, max_iter: 300, max_doublings: 60 }
    }
}

/// Solve `f(x) = bracket.target` for a monotone `f` with default options.
pub fn solve_monotone<F: FnMut(f64) -> f64>(f: F, bracket: RootBracket) -> Result<f64> {
    solve_monotone_with(f, bracket, &RootOptions::default())
}

/// Solve `f(x) = bracket.target` for a monotone `f`.
///
/// Regula falsi with the Illinois modification, falling back to bisection
/// whenever the bracket fails to halve over two consecutive steps. If the
/// initial interval does not straddle the target, the offending end is pushed
/// outward by a doubling step up to `opts.max_doublings` times.
pub fn solve_monotone_with<F: FnMut(f64) -> f64>(
    mut f: F,
    bracket: RootBracket,
    opts: &RootOptions,
) -> Result<f64> {
    let RootBracket { mut lower, mut upper, target, direction } = bracket;
    if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
        return Err(Error::Bracket(format!("invalid interval [{lower}, {upper}]")));
    }
    let sign = match direction {
        Direction::Increasing => 1.0,
        Direction::Decreasing => -1.0,
    };
    // g is increasing with its root at the solution.
    let mut g = |x: f64| sign * (f(x) - target);
    let mut gl = g(lower);
    let mut gu = g(upper);
    let mut step = upper - lower;
    let mut doublings = 0;
    while gl > 0.0 || gu < 0.0 {
        if gl.is_nan() || gu.is_nan() {
            return Err(Error::Bracket("function returned NaN at a bracket end".into()));
        }
        if doublings >= opts.max_doublings {
            return Err(Error::Bracket(format!(
                "target {target} not straddled by [{lower}, {upper}] after {doublings} doublings"
            )));
        }
        if gl > 0.0 {
            upper = lower;
            gu = gl;
            lower -= step;
            gl = g(lower);
        } else {
            lower = upper;
            gl = gu;
            upper += step;
            gu = g(upper);
        }
        step *= 2.0;
        doublings += 1;
    }
    if gl == 0.0 {
        return Ok(lower);
    }
    if gu == 0.0 {
        return Ok(upper);
    }
    let (mut a, mut b, mut ga, mut gb) = (lower, upper, gl, gu);
    let mut side = 0i8;
    let mut last_width = b - a;
    for iter in 0..opts.max_iter {
        let width = b - a;
        let mid_guess = 0.5 * (a + b);
        if width <= opts.xtol_abs + opts.xtol_rel * mid_guess.abs() {
            return Ok(if -ga < gb { a } else { b });
        }
        let mut x = (a * gb - b * ga) / (gb - ga);
        let bisect = iter % 2 == 1 && width > 0.5 * last_width;
        if bisect || !(x > a && x < b) {
            x = mid_guess;
        }
        if iter % 2 == 1 {
            last_width = width;
        }
        let gx = g(x);
        if gx.is_nan() {
            return Err(Error::Bracket(format!("function returned NaN at {x}")));
        }
        if gx.abs() <= opts.ftol || gx == 0.0 {
            return Ok(x);
        }
        if gx < 0.0 {
            a = x;
            ga = gx;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            gb = gx;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NonConvergence { what: "solve_monotone", iterations: opts.max_iter })
}
