//! Interference-limited power floors and the closed-form optimal power pair
//! of one D2D transmitter sharing a subchannel with one cellular user.
//!
//! Writing `η = p_i / p_j`, the cellular user's QoS depends on `ζ = k₂ η`
//! only, and the D2D rate on `ζ = k₁ / η`. The two QoS constraints therefore
//! reduce to thresholds `ζ₁*` (rate) and `ζ₂*` (reliability) that depend only
//! on the cellular link's fading context and the targets, not on geometry;
//! they are solved once and memoised.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::channel::FadingSpec;
use crate::error::{domain, Error, Result};
use crate::metrics::{avg_decoding_error, capacity_cellular, PiecewiseApprox};
use crate::numerics::{solve_monotone_with, Direction, RootBracket, RootOptions};
use crate::outage::{OutagePair, Zeta};

/// Floor on an interferer's power that keeps the victim link interference-limited:
/// `p̲ = I K̃ / E[ĥ]`.
pub fn interference_floor(interference_plus_noise: f64, mean_cross_gain: f64, k_tilde: f64) -> Result<f64> {
    if !(interference_plus_noise > 0.0 && mean_cross_gain > 0.0 && k_tilde > 0.0) {
        return domain("interference floor needs positive noise, cross gain and margin");
    }
    let p = interference_plus_noise * k_tilde / mean_cross_gain;
    if p.is_finite() {
        Ok(p)
    } else {
        domain(format!("interference floor overflowed (cross gain {mean_cross_gain})"))
    }
}

/// Box constraint `p_floor <= p <= p_cap` on one transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBounds {
    pub p_floor: f64,
    pub p_cap: f64,
}

impl PowerBounds {
    pub fn new(p_floor: f64, p_cap: f64) -> Result<Self> {
        if !(p_floor > 0.0 && p_floor.is_finite() && p_cap > 0.0 && p_cap.is_finite()) {
            return domain(format!("power bounds must be positive and finite, got [{p_floor}, {p_cap}]"));
        }
        Ok(PowerBounds { p_floor, p_cap })
    }

    pub fn is_empty(&self) -> bool {
        self.p_floor > self.p_cap
    }

    pub fn contains(&self, p: f64, tol: f64) -> bool {
        p >= self.p_floor * (1.0 - tol) && p <= self.p_cap * (1.0 + tol)
    }
}

/// QoS targets of a cellular user that shares its subchannel.
#[derive(Debug, Clone)]
pub struct CellularQos {
    /// Fading of the D2D (or relay) interferer as seen at the cellular receiver.
    pub interferer: FadingSpec,
    /// Nakagami shape of the cellular user's own link.
    pub m_cell: u32,
    pub rate_min: f64,
    pub p_eps: f64,
    pub approx: Arc<PiecewiseApprox>,
}

/// One transmitter pair `(i, j)` on a shared subchannel.
#[derive(Debug, Clone)]
pub struct PairProblem {
    /// `E[ĥ_{i,j}] / E[h_i]`: cellular interference over D2D signal gain.
    pub k1: f64,
    /// `E[ĥ_{j,i}] / E[h_j]`: D2D interference over cellular signal gain.
    pub k2: f64,
    pub qos: CellularQos,
    /// Fading of the D2D link and of the cellular interference it receives.
    pub d2d: OutagePair,
    pub bounds_i: PowerBounds,
    pub bounds_j: PowerBounds,
}

impl PairProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k1.is_finite() && self.k2 > 0.0 && self.k2.is_finite()) {
            return domain(format!("gain ratios must be positive, got k1={}, k2={}", self.k1, self.k2));
        }
        if !(self.qos.rate_min > 0.0) {
            return domain("cellular rate target must be positive");
        }
        if !(self.qos.p_eps > 0.0 && self.qos.p_eps < 0.5) {
            return domain("decoding error target must lie in (0, 0.5)");
        }
        Ok(())
    }

    /// ζ seen by the cellular user at ratio `η`.
    pub fn cellular_zeta(&self, eta: f64) -> f64 {
        self.k2 * eta
    }

    /// ζ seen by the D2D receiver at ratio `η`.
    pub fn d2d_zeta(&self, eta: f64) -> f64 {
        self.k1 / eta
    }
}

/// Which term of `min{η₁*, η₂*, p̄_i/p̲_j}` set `η*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    Rate,
    Reliability,
    Cap,
}

/// Optimal powers of one shared subchannel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerPair {
    Feasible { p_i: f64, p_j: f64, eta_star: f64, binding: Binding },
    Infeasible,
}

impl PowerPair {
    pub fn is_feasible(&self) -> bool {
        matches!(self, PowerPair::Feasible { .. })
    }
}

fn root_options() -> RootOptions {
    RootOptions { xtol_rel: 0.0, xtol_abs: 1e-11, ..RootOptions::default() }
}

type CacheKey = (u8, u64, u32, u64, u64, u64);

fn threshold_cache() -> &'static Mutex<HashMap<CacheKey, Option<f64>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Option<f64>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn spec_bits(s: FadingSpec) -> (u8, u64) {
    match s {
        FadingSpec::Los { k } => (0, k.to_bits()),
        FadingSpec::Nlos { m } => (1, m as u64),
    }
}

fn approx_bits(a: &PiecewiseApprox) -> u64 {
    // Levels, Δ and the blocklength parameters fully determine the approximation.
    let mut h = a.levels as u64;
    for v in [a.delta.to_bits(), a.fbl.n as u64, a.fbl.xi.to_bits()] {
        h = h.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(17) ^ v;
    }
    h
}

fn memo<F: FnOnce() -> Result<Option<f64>>>(key: CacheKey, f: F) -> Result<Option<f64>> {
    if let Some(v) = threshold_cache().lock().expect("threshold cache poisoned").get(&key) {
        return Ok(*v);
    }
    let v = f()?;
    threshold_cache().lock().expect("threshold cache poisoned").insert(key, v);
    Ok(v)
}

/// Solve a monotone equation in `ln ζ` whose evaluation may fail.
fn solve_log<F: Fn(f64) -> Result<f64>>(f: F, target: f64, direction: Direction) -> Result<f64> {
    let mut failure: Option<Error> = None;
    let r = solve_monotone_with(
        |x| match f(x.exp()) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        RootBracket { lower: -10.0, upper: 5.0, target, direction },
        &root_options(),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.exp())
}

/// Largest cellular `ζ` meeting the ergodic-rate target (`R^c(ζ) = R̂`).
///
/// `R^c` falls from `+∞` at `ζ → 0` to 0, so the root always exists; `None`
/// is returned only if the rate target cannot be met at any `ζ` the solver can reach.
pub fn zeta_rate_limit(interferer: FadingSpec, m_cell: u32, rate_min: f64) -> Result<Option<f64>> {
    let (t, b) = spec_bits(interferer);
    memo((t, b, m_cell, rate_min.to_bits(), 0, 1), || {
        match solve_log(
            |z| capacity_cellular(Zeta::new(z)?, interferer, m_cell),
            rate_min,
            Direction::Decreasing,
        ) {
            Ok(z) => Ok(Some(z)),
            Err(Error::Bracket(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })
}

/// Largest cellular `ζ` meeting the reliability target (`ε̄(ζ) = p_ε`).
pub fn zeta_reliability_limit(
    interferer: FadingSpec,
    m_cell: u32,
    p_eps: f64,
    approx: &PiecewiseApprox,
) -> Result<Option<f64>> {
    let (t, b) = spec_bits(interferer);
    memo((t, b, m_cell, p_eps.to_bits(), approx_bits(approx), 2), || {
        match solve_log(
            |z| avg_decoding_error(Zeta::new(z)?, interferer, m_cell, approx),
            p_eps,
            Direction::Increasing,
        ) {
            Ok(z) => Ok(Some(z)),
            Err(Error::Bracket(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })
}

/// `η* = min{η₁*, η₂*, p̄_i/p̲_j}` and the term that attains it; `None` when
/// the rate target is unreachable for any `η`.
pub fn eta_star(problem: &PairProblem) -> Result<Option<(f64, Binding)>> {
    problem.validate()?;
    let q = &problem.qos;
    let Some(z1) = zeta_rate_limit(q.interferer, q.m_cell, q.rate_min)? else {
        return Ok(None);
    };
    // ε̄ never exceeds 0.5 > p_ε on its own, so a missing root means the
    // reliability constraint is slack everywhere.
    let z2 = zeta_reliability_limit(q.interferer, q.m_cell, q.p_eps, &q.approx)?.unwrap_or(f64::INFINITY);
    let candidates = [
        (z1 / problem.k2, Binding::Rate),
        (z2 / problem.k2, Binding::Reliability),
        (problem.bounds_i.p_cap / problem.bounds_j.p_floor, Binding::Cap),
    ];
    let mut best = candidates[0];
    for c in &candidates[1..] {
        if c.0 < best.0 {
            best = *c;
        }
    }
    Ok(Some(best))
}

/// Minimum-total-power point on the optimal ray `p_i = η* p_j`.
pub fn optimal_power_pair(problem: &PairProblem) -> Result<PowerPair> {
    let (bi, bj) = (problem.bounds_i, problem.bounds_j);
    if bi.is_empty() || bj.is_empty() {
        return Ok(PowerPair::Infeasible);
    }
    let Some((eta, binding)) = eta_star(problem)? else {
        return Ok(PowerPair::Infeasible);
    };
    Ok(select_case(eta, binding, &bi, &bj))
}

/// The three-way case split on `η*` against the box corners.
pub fn select_case(eta: f64, binding: Binding, bi: &PowerBounds, bj: &PowerBounds) -> PowerPair {
    if eta >= bi.p_floor / bj.p_floor {
        PowerPair::Feasible { p_i: eta * bj.p_floor, p_j: bj.p_floor, eta_star: eta, binding }
    } else if eta >= bi.p_floor / bj.p_cap {
        PowerPair::Feasible { p_i: bi.p_floor, p_j: bi.p_floor / eta, eta_star: eta, binding }
    } else {
        PowerPair::Infeasible
    }
}

/// Post-hoc check of a feasible pair: QoS at the implied ζ and both boxes.
pub fn check_power_pair(problem: &PairProblem, pp: &PowerPair, tol: f64) -> Result<bool> {
    let PowerPair::Feasible { p_i, p_j, .. } = *pp else {
        return Ok(true);
    };
    let q = &problem.qos;
    let zc = Zeta::new(problem.cellular_zeta(p_i / p_j))?;
    let rate = capacity_cellular(zc, q.interferer, q.m_cell)?;
    let err = avg_decoding_error(zc, q.interferer, q.m_cell, &q.approx)?;
    Ok(rate >= q.rate_min - tol
        && err <= q.p_eps * (1.0 + tol)
        && problem.bounds_i.contains(p_i, tol)
        && problem.bounds_j.contains(p_j, tol))
}
