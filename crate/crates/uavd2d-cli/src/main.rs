//! `uavd2d`: run the validation studies and parameter sweeps, writing CSV.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use uavd2d::allocation::{
    allocate_direct_using, allocate_greedy_using, allocate_with_relays_using, build_weights, GreedyVariant,
};
use uavd2d::channel::FadingSpec;
use uavd2d::experiments::{
    default_heights, distance_points, fading_label, height_points, log_space, multicell_points, optimality_points,
    perr_points, run_sweep, summarize, users_points, validate_error, validate_outage, Algorithm, RunMetrics,
    SweepPoint, SweepRecord,
};
use uavd2d::scenario::{generate, ScenarioConfig};

#[derive(Parser, Debug)]
#[command(name = "uavd2d", version, about = "UAV-relay-assisted D2D underlay: validation studies and sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scenario file (flat `key = value`); defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Seed list: `a..b` (half-open), `a..=b`, `a,b,c` or a single seed.
    #[arg(long, default_value = "0..10")]
    seeds: String,
    /// Output directory for CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Monte-Carlo samples per estimate.
    #[arg(long = "mc-samples", default_value_t = 1_000_000)]
    mc_samples: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytic outage kernels against Monte-Carlo.
    ValidateOutage(Common),
    /// Piecewise decoding-error average against quadrature and Monte-Carlo.
    ValidateError(Common),
    /// Sum-rate, power and relayed ratio versus UAV height.
    SweepHeight {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        heights: Option<Vec<f64>>,
    },
    /// Versus the decoding-error target, beamwidth and fading shape.
    SweepPerr {
        #[command(flatten)]
        common: Common,
        #[arg(long = "p-eps", value_delimiter = ',')]
        p_eps: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        beamwidths: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        shapes: Option<Vec<u32>>,
    },
    /// Versus the numbers of cellular users and D2D pairs.
    SweepUsers {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        cellular: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        d2d: Option<Vec<usize>>,
    },
    /// Versus the D2D link distance and the number of UAVs.
    SweepDistance {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        distances: Option<Vec<f64>>,
        #[arg(long = "max-uavs", default_value_t = 4)]
        max_uavs: usize,
    },
    /// Versus the number of co-channel interfering cells (LoS and NLoS).
    Multicell {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
    },
    /// Allocators against exhaustive search on small instances.
    Optimality {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        d2d: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        cellular: Option<Vec<usize>>,
    },
    /// Solve one realization and dump every allocator's assignment.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Seed of the realization (overrides `--seeds`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run an experiment by id with its default grid.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        experiment: String,
    },
}

/// Ids accepted by `run --experiment`.
const EXPERIMENTS: &[&str] = &[
    "validate-outage",
    "validate-error",
    "sweep-height",
    "sweep-perr",
    "sweep-users",
    "sweep-distance",
    "multicell",
    "optimality",
    "solve",
];

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let s = spec.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (a.trim().parse()?..=b.trim().parse()?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (a.trim().parse()?..b.trim().parse()?).collect()
    } else {
        s.split(',').map(|x| x.trim().parse::<u64>()).collect::<std::result::Result<_, _>>()?
    };
    if seeds.is_empty() {
        bail!("seed list `{spec}` is empty");
    }
    Ok(seeds)
}

fn load_config(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::from_file(p)?,
        None => ScenarioConfig::default(),
    };
    for s in &common.set {
        cfg.apply_override(s)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))
}

fn num(v: f64) -> String {
    format!("{v:.9e}")
}

/// Algorithms appearing anywhere in the sweep, in a fixed order.
fn algorithm_columns(points: &[SweepPoint]) -> Vec<Algorithm> {
    let all = [
        Algorithm::Alg1,
        Algorithm::Alg2,
        Algorithm::Greedy1,
        Algorithm::Greedy2,
        Algorithm::Exhaustive,
        Algorithm::ExhaustiveDirect,
    ];
    all.into_iter().filter(|a| points.iter().any(|p| p.algorithms.contains(a))).collect()
}

const METRICS: [(&str, fn(&RunMetrics) -> f64); 3] = [
    ("sum_rate", |m| m.sum_rate),
    ("total_power", |m| m.total_power),
    ("relayed_ratio", |m| m.relayed_ratio),
];

/// One CSV per metric: a record per point and seed, then `mean` and
/// `stderr` rows per point.
fn write_sweep(out: &Path, id: &str, points: &[SweepPoint], records: &[SweepRecord]) -> Result<usize> {
    let algs = algorithm_columns(points);
    let labels: Vec<String> = points.first().map(|p| p.labels.iter().map(|(k, _)| k.clone()).collect()).unwrap_or_default();
    let mut failures = 0;
    for r in records {
        if let Err(e) = &r.outcome {
            failures += 1;
            eprintln!("{id}: point {} seed {} failed: {e}", r.point, r.seed);
        }
    }
    for (metric, get) in METRICS {
        let mut w = writer(out, &format!("{}_{metric}.csv", id.replace('-', "_")))?;
        let mut header = labels.clone();
        header.push("seed".into());
        header.extend(algs.iter().map(|a| a.name().to_string()));
        w.write_record(&header)?;
        for r in records {
            let Ok(outcome) = &r.outcome else { continue };
            let mut row: Vec<String> = points[r.point].labels.iter().map(|(_, v)| v.clone()).collect();
            row.push(r.seed.to_string());
            for a in &algs {
                row.push(outcome.iter().find(|(x, _)| x == a).map_or(String::new(), |(_, m)| num(get(m))));
            }
            w.write_record(&row)?;
        }
        for (p, point) in points.iter().enumerate() {
            for (tag, pick) in [("mean", 0), ("stderr", 1)] {
                let mut row: Vec<String> = point.labels.iter().map(|(_, v)| v.clone()).collect();
                row.push(tag.into());
                for a in &algs {
                    if !point.algorithms.contains(a) {
                        row.push(String::new());
                        continue;
                    }
                    let m = summarize(records, p, *a, get);
                    row.push(if m.count == 0 { String::new() } else { num(if pick == 0 { m.mean } else { m.std_err }) });
                }
                w.write_record(&row)?;
            }
        }
        w.flush()?;
    }
    // Console summary: mean sum-rate per point and algorithm.
    println!("{id}: mean D2D sum-rate (bits/s/Hz) over {} seed(s)", records.iter().map(|r| r.seed).collect::<std::collections::BTreeSet<_>>().len());
    for (p, point) in points.iter().enumerate() {
        let label: Vec<String> = point.labels.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let vals: Vec<String> = point
            .algorithms
            .iter()
            .map(|a| format!("{}={:.3}", a.name(), summarize(records, p, *a, |m| m.sum_rate).mean))
            .collect();
        println!("  {:<40} {}", label.join(" "), vals.join(" "));
    }
    Ok(failures)
}

fn run_points(common: &Common, id: &str, points: Vec<SweepPoint>) -> Result<usize> {
    let cfg = load_config(common)?;
    let seeds = parse_seeds(&common.seeds)?;
    let records = run_sweep(&cfg, &points, &seeds);
    write_sweep(&common.out, id, &points, &records)
}

fn cmd_validate_outage(common: &Common) -> Result<usize> {
    let seed = parse_seeds(&common.seeds)?[0];
    let alphas = log_space(1e-2, 1e2, 20);
    let rows = validate_outage(&alphas, common.mc_samples, seed)?;
    let mut w = writer(&common.out, "validate_outage.csv")?;
    w.write_record(["kernel", "main", "interferer", "alpha", "analytic", "mc", "mc_stderr", "abs_diff"])?;
    let mut worst = 0.0f64;
    for r in &rows {
        let d = (r.analytic - r.mc).abs();
        worst = worst.max(d);
        w.write_record([
            r.kernel.to_string(),
            fading_label(&r.pair.main),
            fading_label(&r.pair.interferer),
            num(r.alpha),
            num(r.analytic),
            num(r.mc),
            num(r.mc_std_err),
            num(d),
        ])?;
    }
    w.flush()?;
    println!("validate-outage: {} points, max |analytic - MC| = {worst:.3e}", rows.len());
    Ok(0)
}

fn cmd_validate_error(common: &Common) -> Result<usize> {
    let cfg = load_config(common)?;
    let seed = parse_seeds(&common.seeds)?[0];
    let zetas = log_space(1e-3, 1.0, 15);
    let interferers = [FadingSpec::los(cfg.rician_k())?, FadingSpec::nlos(cfg.nakagami_m)?];
    let rows = validate_error(&zetas, cfg.pw_levels, &cfg.fbl(), cfg.nakagami_m, &interferers, common.mc_samples, seed)?;
    let mut w = writer(&common.out, "validate_error.csv")?;
    w.write_record(["interferer", "zeta", "approx", "exact_quadrature", "mc", "mc_stderr", "rel_err_approx", "rel_err_exact"])?;
    let mut worst = 0.0f64;
    for r in &rows {
        let ra = (r.approx - r.mc).abs() / r.mc;
        let re = (r.exact - r.mc).abs() / r.mc;
        if r.mc >= 1e-4 {
            worst = worst.max(ra);
        }
        w.write_record([
            fading_label(&r.interferer),
            num(r.zeta),
            num(r.approx),
            num(r.exact),
            num(r.mc),
            num(r.mc_std_err),
            num(ra),
            num(re),
        ])?;
    }
    w.flush()?;
    println!("validate-error: L={} max relative error of the approximation (MC >= 1e-4) = {worst:.3}", cfg.pw_levels);
    Ok(0)
}

fn cmd_solve(common: &Common, seed: Option<u64>) -> Result<usize> {
    let cfg = load_config(common)?;
    let seed = match seed {
        Some(s) => s,
        None => parse_seeds(&common.seeds)?[0],
    };
    let net = generate(&cfg, seed)?;
    let table = build_weights(&net);
    let mut text = format!("# seed={seed}\n");
    let runs = [
        ("alg1", allocate_direct_using(&net, &table)),
        ("alg2", allocate_with_relays_using(&net, &table)),
        ("greedy1", allocate_greedy_using(&net, &table, GreedyVariant::Greedy1)),
        ("greedy2", allocate_greedy_using(&net, &table, GreedyVariant::Greedy2)),
    ];
    for (name, state) in &runs {
        text.push_str(&format!("# {name}\n"));
        text.push_str(&state.to_text());
    }
    for d in &table.diagnostics {
        eprintln!("solve: {d}");
    }
    fs::create_dir_all(&common.out)?;
    let path = common.out.join(format!("solve_seed{seed}.txt"));
    fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
    print!("{text}");
    Ok(0)
}

fn dispatch(command: Command) -> Result<usize> {
    match command {
        Command::ValidateOutage(c) => cmd_validate_outage(&c),
        Command::ValidateError(c) => cmd_validate_error(&c),
        Command::SweepHeight { common, heights } => {
            run_points(&common, "sweep-height", height_points(&heights.unwrap_or_else(default_heights)))
        }
        Command::SweepPerr { common, p_eps, beamwidths, shapes } => run_points(
            &common,
            "sweep-perr",
            perr_points(
                &p_eps.unwrap_or_else(|| vec![1e-6, 1e-5, 1e-4, 1e-3]),
                &beamwidths.unwrap_or_else(|| vec![15.0, 25.0, 35.0]),
                &shapes.unwrap_or_else(|| vec![1, 2]),
            ),
        ),
        Command::SweepUsers { common, cellular, d2d } => run_points(
            &common,
            "sweep-users",
            users_points(&cellular.unwrap_or_else(|| vec![10, 14, 18, 22]), &d2d.unwrap_or_else(|| vec![8, 12])),
        ),
        Command::SweepDistance { common, distances, max_uavs } => run_points(
            &common,
            "sweep-distance",
            distance_points(&distances.unwrap_or_else(|| vec![100.0, 200.0, 300.0, 400.0, 500.0, 600.0]), max_uavs),
        ),
        Command::Multicell { common, counts } => {
            run_points(&common, "multicell", multicell_points(&counts.unwrap_or_else(|| (0..=6).collect())))
        }
        Command::Optimality { common, d2d, cellular } => {
            let points = optimality_points(&d2d.unwrap_or_else(|| vec![2, 3]), &cellular.unwrap_or_else(|| vec![4, 5, 6]))?;
            run_points(&common, "optimality", points)
        }
        Command::Solve { common, seed } => cmd_solve(&common, seed),
        Command::Run { common, experiment } => {
            let next = match experiment.as_str() {
                "validate-outage" => Command::ValidateOutage(common),
                "validate-error" => Command::ValidateError(common),
                "sweep-height" => Command::SweepHeight { common, heights: None },
                "sweep-perr" => Command::SweepPerr { common, p_eps: None, beamwidths: None, shapes: None },
                "sweep-users" => Command::SweepUsers { common, cellular: None, d2d: None },
                "sweep-distance" => Command::SweepDistance { common, distances: None, max_uavs: 4 },
                "multicell" => Command::Multicell { common, counts: None },
                "optimality" => Command::Optimality { common, d2d: None, cellular: None },
                "solve" => Command::Solve { common, seed: None },
                other => bail!("unknown experiment `{other}`; expected one of {}", EXPERIMENTS.join(", ")),
            };
            dispatch(next)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("uavd2d: {n} run(s) failed; partial results were written");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("uavd2d: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
