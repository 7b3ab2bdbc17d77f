//! Experiment definitions: sweeps over configuration overrides, per-seed
//! allocator runs and seed-averaged summaries, plus the analytic-vs-MC
//! validation grids.

use rayon::prelude::*;

use crate::allocation::{
    allocate_direct_using, allocate_exhaustive_direct, allocate_exhaustive_using, allocate_greedy_using,
    allocate_with_relays_using, build_direct_weights, build_weights, GreedyVariant, MatchingState,
};
use crate::channel::{db_to_linear, FadingSpec};
use crate::error::{Error, Result};
use crate::mcoracle::{mc_decoding_error, mc_outage_curve};
use crate::metrics::{avg_decoding_error, avg_decoding_error_exact, build_piecewise, default_delta, FblParams};
use crate::outage::{outage, OutagePair, Zeta};
use crate::scenario::{generate, ScenarioConfig};

/// Allocators an experiment can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Hungarian direct matching.
    Alg1,
    /// Relay upgrading on top of `Alg1`.
    Alg2,
    Greedy1,
    Greedy2,
    Exhaustive,
    ExhaustiveDirect,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Greedy1 => "greedy1",
            Algorithm::Greedy2 => "greedy2",
            Algorithm::Exhaustive => "exhaustive",
            Algorithm::ExhaustiveDirect => "exhaustive_direct",
        }
    }

    fn needs_relays(&self) -> bool {
        !matches!(self, Algorithm::Alg1 | Algorithm::ExhaustiveDirect)
    }
}

/// Per-run figures of merit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub sum_rate: f64,
    pub total_power: f64,
    pub relayed_ratio: f64,
}

impl From<&MatchingState> for RunMetrics {
    fn from(s: &MatchingState) -> Self {
        RunMetrics { sum_rate: s.sum_rate, total_power: s.total_power, relayed_ratio: s.relayed_rate_ratio() }
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// `(column, value)` pairs identifying the point in the output.
    pub labels: Vec<(String, String)>,
    /// `key=value` overrides applied on top of the base configuration.
    pub overrides: Vec<String>,
    pub algorithms: Vec<Algorithm>,
}

impl SweepPoint {
    pub fn new(labels: &[(&str, String)], overrides: Vec<String>, algorithms: &[Algorithm]) -> Self {
        SweepPoint {
            labels: labels.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            overrides,
            algorithms: algorithms.to_vec(),
        }
    }

    pub fn config(&self, base: &ScenarioConfig) -> Result<ScenarioConfig> {
        let mut c = base.clone();
        for o in &self.overrides {
            c.apply_override(o)?;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Run every algorithm of `point` on the realization of `seed`.
pub fn run_point(base: &ScenarioConfig, point: &SweepPoint, seed: u64) -> Result<Vec<(Algorithm, MatchingState)>> {
    let cfg = point.config(base)?;
    let net = generate(&cfg, seed)?;
    let relays = point.algorithms.iter().any(Algorithm::needs_relays);
    let table = if relays { build_weights(&net) } else { build_direct_weights(&net) };
    point
        .algorithms
        .iter()
        .map(|&a| {
            let s = match a {
                Algorithm::Alg1 => allocate_direct_using(&net, &table),
                Algorithm::Alg2 => allocate_with_relays_using(&net, &table),
                Algorithm::Greedy1 => allocate_greedy_using(&net, &table, GreedyVariant::Greedy1),
                Algorithm::Greedy2 => allocate_greedy_using(&net, &table, GreedyVariant::Greedy2),
                Algorithm::Exhaustive => allocate_exhaustive_using(&net, &table)?,
                Algorithm::ExhaustiveDirect => allocate_exhaustive_direct(&net)?,
            };
            Ok((a, s))
        })
        .collect()
}

/// Result of one `(point, seed)` run.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub point: usize,
    pub seed: u64,
    pub outcome: std::result::Result<Vec<(Algorithm, RunMetrics)>, Error>,
}

/// Every point under every seed, in `(point, seed)` order.
pub fn run_sweep(base: &ScenarioConfig, points: &[SweepPoint], seeds: &[u64]) -> Vec<SweepRecord> {
    let jobs: Vec<(usize, u64)> = (0..points.len()).flat_map(|p| seeds.iter().map(move |&s| (p, s))).collect();
    jobs.into_par_iter()
        .map(|(p, seed)| SweepRecord {
            point: p,
            seed,
            outcome: run_point(base, &points[p], seed)
                .map(|v| v.iter().map(|(a, s)| (*a, RunMetrics::from(s))).collect()),
        })
        .collect()
}

/// Seed average of one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mean {
    pub mean: f64,
    pub std_err: f64,
    pub count: usize,
}

pub fn mean_of(values: &[f64]) -> Mean {
    let n = values.len();
    if n == 0 {
        return Mean { mean: f64::NAN, std_err: f64::NAN, count: 0 };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    Mean { mean, std_err: (var / n as f64).sqrt(), count: n }
}

/// Seed average of `metric` for `algorithm` at `point` (failed seeds skipped).
pub fn summarize(records: &[SweepRecord], point: usize, algorithm: Algorithm, metric: fn(&RunMetrics) -> f64) -> Mean {
    let v: Vec<f64> = records
        .iter()
        .filter(|r| r.point == point)
        .filter_map(|r| r.outcome.as_ref().ok())
        .filter_map(|o| o.iter().find(|(a, _)| *a == algorithm).map(|(_, m)| metric(m)))
        .collect();
    mean_of(&v)
}

const MAIN: [Algorithm; 4] = [Algorithm::Alg1, Algorithm::Alg2, Algorithm::Greedy1, Algorithm::Greedy2];

/// UAV sites used when sweeping the UAV count.
pub const UAV_SITES: [&str; 4] = ["450,0", "-450,0", "0,450", "0,-450"];

fn sites(count: usize) -> String {
    if count == 0 {
        "none".into()
    } else {
        UAV_SITES[..count].join(";")
    }
}

pub fn height_points(heights: &[f64]) -> Vec<SweepPoint> {
    heights
        .iter()
        .map(|h| SweepPoint::new(&[("uav_height", h.to_string())], vec![format!("uav_height={h}")], &MAIN))
        .collect()
}

pub fn default_heights() -> Vec<f64> {
    (0..=10).map(|k| 100.0 + 50.0 * k as f64).collect()
}

pub fn perr_points(p_eps: &[f64], beamwidths: &[f64], shapes: &[u32]) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for &m in shapes {
        for &bw in beamwidths {
            for &p in p_eps {
                out.push(SweepPoint::new(
                    &[("nakagami_m", m.to_string()), ("beamwidth_deg", bw.to_string()), ("p_eps", format!("{p:e}"))],
                    vec![format!("nakagami_m={m}"), format!("antenna_beamwidth_deg={bw}"), format!("p_eps={p:e}")],
                    &[Algorithm::Alg2],
                ));
            }
        }
    }
    out
}

pub fn users_points(cellular: &[usize], d2d: &[usize]) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for &md in d2d {
        for &mc in cellular {
            out.push(SweepPoint::new(
                &[("num_d2d", md.to_string()), ("num_cellular", mc.to_string())],
                vec![format!("num_d2d={md}"), format!("num_cellular={mc}")],
                &MAIN,
            ));
        }
    }
    out
}

/// Each distance with 0–4 UAVs; Alg1 alone without UAVs, greedy baselines with two.
pub fn distance_points(distances: &[f64], max_uavs: usize) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for &d in distances {
        for n in 0..=max_uavs.min(UAV_SITES.len()) {
            let algs: &[Algorithm] = match n {
                0 => &[Algorithm::Alg1],
                2 => &MAIN,
                _ => &[Algorithm::Alg1, Algorithm::Alg2],
            };
            out.push(SweepPoint::new(
                &[("d2d_distance", d.to_string()), ("num_uavs", n.to_string())],
                vec![format!("d2d_distance={d}"), format!("uav_positions={}", sites(n))],
                algs,
            ));
        }
    }
    out
}

pub fn multicell_points(counts: &[usize]) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for los in [false, true] {
        for &c in counts {
            out.push(SweepPoint::new(
                &[("intercell_los", los.to_string()), ("intercell_cells", c.to_string())],
                vec![format!("intercell_cells={c}"), format!("intercell_los={los}")],
                &[Algorithm::Alg1, Algorithm::Alg2],
            ));
        }
    }
    out
}

/// Small single-UAV instances compared against exhaustive search.
pub fn optimality_points(d2d: &[usize], cellular: &[usize]) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::new();
    for &md in d2d {
        for &mc in cellular {
            if md > crate::allocation::EXHAUSTIVE_MAX_D2D || mc > crate::allocation::EXHAUSTIVE_MAX_CELLULAR {
                return Err(Error::SizeGuard(format!(
                    "optimality needs at most {} D2D pairs and {} cellular users, got {md} and {mc}",
                    crate::allocation::EXHAUSTIVE_MAX_D2D,
                    crate::allocation::EXHAUSTIVE_MAX_CELLULAR
                )));
            }
            out.push(SweepPoint::new(
                &[("num_d2d", md.to_string()), ("num_cellular", mc.to_string())],
                vec![format!("num_d2d={md}"), format!("num_cellular={mc}"), "uav_positions=450,0".into()],
                &[
                    Algorithm::Alg1,
                    Algorithm::Alg2,
                    Algorithm::Greedy1,
                    Algorithm::Greedy2,
                    Algorithm::Exhaustive,
                    Algorithm::ExhaustiveDirect,
                ],
            ));
        }
    }
    Ok(out)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// One row of the outage validation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageCheck {
    pub kernel: &'static str,
    pub pair: OutagePair,
    pub alpha: f64,
    pub analytic: f64,
    pub mc: f64,
    pub mc_std_err: f64,
}

/// Shape grid of the outage check: every kernel over `m, m′ ∈ {1,2,3}` and `K ∈ {0,6,12} dB`.
pub fn outage_grid() -> Vec<(&'static str, OutagePair)> {
    let ms = [1u32, 2, 3];
    let ks = [0.0, 6.0, 12.0].map(db_to_linear);
    let mut out = Vec::new();
    let nl = |m| FadingSpec::Nlos { m };
    let l = |k| FadingSpec::Los { k };
    for &m in &ms {
        for &mp in &ms {
            out.push(("NN", OutagePair { main: nl(m), interferer: nl(mp) }));
        }
    }
    for &k in &ks {
        for &mp in &ms {
            out.push(("LN", OutagePair { main: l(k), interferer: nl(mp) }));
        }
    }
    for &m in &ms {
        for &k in &ks {
            out.push(("NL", OutagePair { main: nl(m), interferer: l(k) }));
        }
    }
    for &k in &ks {
        for &kp in &ks {
            out.push(("LL", OutagePair { main: l(k), interferer: l(kp) }));
        }
    }
    out
}

/// Analytic outage kernels against Monte-Carlo over the grid and `alphas`.
pub fn validate_outage(alphas: &[f64], samples: u64, seed: u64) -> Result<Vec<OutageCheck>> {
    let grid = outage_grid();
    let per: Vec<Result<Vec<OutageCheck>>> = grid
        .par_iter()
        .enumerate()
        .map(|(g, (kernel, pair))| {
            let mc = mc_outage_curve(alphas, pair, samples, seed.wrapping_add(g as u64))?;
            alphas
                .iter()
                .zip(mc)
                .map(|(&alpha, e)| {
                    Ok(OutageCheck {
                        kernel,
                        pair: *pair,
                        alpha,
                        analytic: outage(alpha, pair)?,
                        mc: e.mean,
                        mc_std_err: e.std_err,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for p in per {
        out.extend(p?);
    }
    Ok(out)
}

/// One row of the decoding-error validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCheck {
    pub interferer: FadingSpec,
    pub zeta: f64,
    /// `L`-level piecewise closed form.
    pub approx: f64,
    /// Direct quadrature of the exact `ε_n`.
    pub exact: f64,
    pub mc: f64,
    pub mc_std_err: f64,
}

/// Closed-form (L levels), quadrature and Monte-Carlo averages of the decoding error.
pub fn validate_error(
    zetas: &[f64],
    levels: usize,
    fbl: &FblParams,
    m_cell: u32,
    interferers: &[FadingSpec],
    samples: u64,
    seed: u64,
) -> Result<Vec<ErrorCheck>> {
    let approx = build_piecewise(levels, default_delta(levels), fbl)?;
    let mut out = Vec::new();
    for (a, &intf) in interferers.iter().enumerate() {
        for (z, &zeta) in zetas.iter().enumerate() {
            let zt = Zeta::new(zeta)?;
            let mc = mc_decoding_error(zt, intf, m_cell, fbl, samples, seed.wrapping_add((a * 1000 + z) as u64))?;
            out.push(ErrorCheck {
                interferer: intf,
                zeta,
                approx: avg_decoding_error(zt, intf, m_cell, &approx)?,
                exact: avg_decoding_error_exact(zt, intf, m_cell, fbl)?,
                mc: mc.mean,
                mc_std_err: mc.std_err,
            });
        }
    }
    Ok(out)
}

/// Text name of a fading law, e.g. `LoS(K=15.85)`.
pub fn fading_label(f: &FadingSpec) -> String {
    match f {
        FadingSpec::Los { k } => format!("LoS(K={k:.4})"),
        FadingSpec::Nlos { m } => format!("NLoS(m={m})"),
    }
}
