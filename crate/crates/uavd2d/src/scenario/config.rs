//! Flat `key = value` scenario configuration.
//!
//! One key per line, `#` starts a comment, blank lines are ignored and every
//! key has a default; unknown keys and malformed values are errors. See
//! [`ScenarioConfig::KEYS`] for the full list.

use std::fmt::Write as _;
use std::path::Path;

use crate::channel::{
    db_to_linear, AerialLosParams, AntennaPattern, ChannelParams, FadingShapes, GroundLosParams, PathLossParams,
};
use crate::error::{Error, Result};
use crate::metrics::{build_piecewise, default_delta, FblParams, PiecewiseApprox};

/// Horizontal UAV placement; the height is shared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavSite {
    pub x: f64,
    pub y: f64,
}

/// Every tunable of one simulated cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Side of the square cell (m); the BS sits at its centre.
    pub cell_side: f64,
    pub num_cellular: usize,
    pub num_d2d: usize,
    pub uav_sites: Vec<UavSite>,
    pub uav_height: f64,
    pub bs_height: f64,
    pub user_height: f64,
    /// Carrier frequency (GHz); informational, the path-loss intercepts already embed it.
    pub frequency_ghz: f64,
    pub noise_power: f64,
    pub path_loss: PathLossParams,
    pub aerial_los: AerialLosParams,
    pub ground_los: GroundLosParams,
    pub nakagami_m: u32,
    pub rician_k_db: f64,
    pub antenna_max_db: f64,
    pub antenna_min_db: f64,
    pub antenna_beamwidth_deg: f64,
    /// Also apply the pattern on the receive side (off by default).
    pub antenna_rx_gain: bool,
    pub cap_d2d: f64,
    pub cap_d2d_relay: f64,
    pub cap_relay: f64,
    pub cap_cellular: f64,
    pub rate_min: f64,
    pub p_eps: f64,
    /// Listed with the reliability target in the reference parameter table
    /// but never defined there; accepted and carried, not used.
    pub k_n: f64,
    pub blocklength: u32,
    pub backoff: f64,
    pub pw_levels: usize,
    /// Tail threshold of the piecewise approximation; `None` means `0.5/(100 L)`.
    pub pw_delta: Option<f64>,
    /// Interference-to-noise margin of the interference-limited power floors.
    pub k_tilde: f64,
    /// Number of co-channel neighbour cells (0–6) contributing interference.
    pub intercell_cells: usize,
    pub intercell_los: bool,
    /// Fixed D2D transmitter–receiver separation (m); `None` places receivers uniformly.
    pub d2d_distance: Option<f64>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            cell_side: 1600.0,
            num_cellular: 18,
            num_d2d: 10,
            uav_sites: vec![UavSite { x: 450.0, y: 0.0 }, UavSite { x: -450.0, y: 0.0 }],
            uav_height: 250.0,
            bs_height: 50.0,
            user_height: 1.5,
            frequency_ghz: 28.0,
            noise_power: 1.1e-12,
            path_loss: PathLossParams::default(),
            aerial_los: AerialLosParams::default(),
            ground_los: GroundLosParams::default(),
            nakagami_m: 2,
            rician_k_db: 12.0,
            antenna_max_db: 25.0,
            antenna_min_db: -5.0,
            antenna_beamwidth_deg: 15.0,
            antenna_rx_gain: false,
            cap_d2d: 0.1,
            cap_d2d_relay: 0.1,
            cap_relay: 1.0,
            cap_cellular: 0.1,
            rate_min: 8.0,
            p_eps: 1e-4,
            k_n: 5.0,
            blocklength: 50,
            backoff: 0.8,
            pw_levels: 4,
            pw_delta: None,
            k_tilde: DEFAULT_K_TILDE,
            intercell_cells: 0,
            intercell_los: false,
            d2d_distance: None,
            seed: 1,
        }
    }
}

/// Default interference margin `K̃`; see the README for why it is far below 1.
pub const DEFAULT_K_TILDE: f64 = 1e-5;

fn bad(key: &str, value: &str, why: &str) -> Error {
    Error::Config(format!("{key} = {value}: {why}"))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value.parse().map_err(|_| bad(key, value, "expected a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, value, "expected a finite number"))
    }
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value, "expected a non-negative integer"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

fn parse_sites(key: &str, value: &str) -> Result<Vec<UavSite>> {
    let v = value.trim();
    if v.is_empty() || v.eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    v.split(';')
        .map(|s| {
            let mut it = s.split(',').map(str::trim);
            match (it.next(), it.next(), it.next()) {
                (Some(x), Some(y), None) => Ok(UavSite { x: parse_f64(key, x)?, y: parse_f64(key, y)? }),
                _ => Err(bad(key, value, "expected `x,y;x,y;...`")),
            }
        })
        .collect()
}

fn optional_positive(key: &str, value: &str) -> Result<Option<f64>> {
    let v = value.trim();
    if v.is_empty() || v.eq_ignore_ascii_case("none") || v.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    Ok(Some(parse_f64(key, v)?))
}

impl ScenarioConfig {
    /// Every accepted key, in file order.
    pub const KEYS: &'static [&'static str] = &[
        "cell_side",
        "num_cellular",
        "num_d2d",
        "uav_positions",
        "uav_height",
        "bs_height",
        "user_height",
        "frequency_ghz",
        "noise_power",
        "pl_los_intercept",
        "pl_los_exponent",
        "pl_nlos_intercept",
        "pl_nlos_exponent",
        "los_b",
        "los_c",
        "ground_d1",
        "ground_d2",
        "nakagami_m",
        "rician_k_db",
        "antenna_max_db",
        "antenna_min_db",
        "antenna_beamwidth_deg",
        "antenna_rx_gain",
        "cap_d2d",
        "cap_d2d_relay",
        "cap_relay",
        "cap_cellular",
        "rate_min",
        "p_eps",
        "k_n",
        "blocklength",
        "backoff",
        "pw_levels",
        "pw_delta",
        "k_tilde",
        "intercell_cells",
        "intercell_los",
        "d2d_distance",
        "seed",
    ];

    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (key, value) = (key.trim(), value.trim());
        match key {
            "cell_side" => self.cell_side = parse_f64(key, value)?,
            "num_cellular" => self.num_cellular = parse_int(key, value)?,
            "num_d2d" => self.num_d2d = parse_int(key, value)?,
            "uav_positions" => self.uav_sites = parse_sites(key, value)?,
            "uav_height" => self.uav_height = parse_f64(key, value)?,
            "bs_height" => self.bs_height = parse_f64(key, value)?,
            "user_height" => self.user_height = parse_f64(key, value)?,
            "frequency_ghz" => self.frequency_ghz = parse_f64(key, value)?,
            "noise_power" => self.noise_power = parse_f64(key, value)?,
            "pl_los_intercept" => self.path_loss.mu_los_db = parse_f64(key, value)?,
            "pl_los_exponent" => self.path_loss.beta_los = parse_f64(key, value)?,
            "pl_nlos_intercept" => self.path_loss.mu_nlos_db = parse_f64(key, value)?,
            "pl_nlos_exponent" => self.path_loss.beta_nlos = parse_f64(key, value)?,
            "los_b" => self.aerial_los.b = parse_f64(key, value)?,
            "los_c" => self.aerial_los.c = parse_f64(key, value)?,
            "ground_d1" => self.ground_los.d1 = parse_f64(key, value)?,
            "ground_d2" => self.ground_los.d2 = parse_f64(key, value)?,
            "nakagami_m" => self.nakagami_m = parse_int(key, value)?,
            "rician_k_db" => self.rician_k_db = parse_f64(key, value)?,
            "antenna_max_db" => self.antenna_max_db = parse_f64(key, value)?,
            "antenna_min_db" => self.antenna_min_db = parse_f64(key, value)?,
            "antenna_beamwidth_deg" => self.antenna_beamwidth_deg = parse_f64(key, value)?,
            "antenna_rx_gain" => self.antenna_rx_gain = parse_bool(key, value)?,
            "cap_d2d" => self.cap_d2d = parse_f64(key, value)?,
            "cap_d2d_relay" => self.cap_d2d_relay = parse_f64(key, value)?,
            "cap_relay" => self.cap_relay = parse_f64(key, value)?,
            "cap_cellular" => self.cap_cellular = parse_f64(key, value)?,
            "rate_min" => self.rate_min = parse_f64(key, value)?,
            "p_eps" => self.p_eps = parse_f64(key, value)?,
            "k_n" => self.k_n = parse_f64(key, value)?,
            "blocklength" => self.blocklength = parse_int(key, value)?,
            "backoff" => self.backoff = parse_f64(key, value)?,
            "pw_levels" => self.pw_levels = parse_int(key, value)?,
            "pw_delta" => self.pw_delta = optional_positive(key, value)?,
            "k_tilde" => self.k_tilde = parse_f64(key, value)?,
            "intercell_cells" => self.intercell_cells = parse_int(key, value)?,
            "intercell_los" => self.intercell_los = parse_bool(key, value)?,
            "d2d_distance" => self.d2d_distance = optional_positive(key, value)?,
            "seed" => self.seed = parse_int(key, value)?,
            _ => return Err(Error::Config(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Apply an override of the form `key=value`.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key=value")))?;
        self.set(k, v)
    }

    /// Parse a configuration text on top of the defaults and validate it.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got `{raw}`", n + 1)))?;
            cfg.set(k, v).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The configuration in the same `key = value` format `parse` reads.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let sites: Vec<String> = self.uav_sites.iter().map(|u| format!("{},{}", u.x, u.y)).collect();
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
        let pl = &self.path_loss;
        let rows: Vec<(&str, String)> = vec![
            ("cell_side", self.cell_side.to_string()),
            ("num_cellular", self.num_cellular.to_string()),
            ("num_d2d", self.num_d2d.to_string()),
            ("uav_positions", if sites.is_empty() { "none".into() } else { sites.join(";") }),
            ("uav_height", self.uav_height.to_string()),
            ("bs_height", self.bs_height.to_string()),
            ("user_height", self.user_height.to_string()),
            ("frequency_ghz", self.frequency_ghz.to_string()),
            ("noise_power", format!("{:e}", self.noise_power)),
            ("pl_los_intercept", pl.mu_los_db.to_string()),
            ("pl_los_exponent", pl.beta_los.to_string()),
            ("pl_nlos_intercept", pl.mu_nlos_db.to_string()),
            ("pl_nlos_exponent", pl.beta_nlos.to_string()),
            ("los_b", self.aerial_los.b.to_string()),
            ("los_c", self.aerial_los.c.to_string()),
            ("ground_d1", self.ground_los.d1.to_string()),
            ("ground_d2", self.ground_los.d2.to_string()),
            ("nakagami_m", self.nakagami_m.to_string()),
            ("rician_k_db", self.rician_k_db.to_string()),
            ("antenna_max_db", self.antenna_max_db.to_string()),
            ("antenna_min_db", self.antenna_min_db.to_string()),
            ("antenna_beamwidth_deg", self.antenna_beamwidth_deg.to_string()),
            ("antenna_rx_gain", self.antenna_rx_gain.to_string()),
            ("cap_d2d", self.cap_d2d.to_string()),
            ("cap_d2d_relay", self.cap_d2d_relay.to_string()),
            ("cap_relay", self.cap_relay.to_string()),
            ("cap_cellular", self.cap_cellular.to_string()),
            ("rate_min", self.rate_min.to_string()),
            ("p_eps", format!("{:e}", self.p_eps)),
            ("k_n", self.k_n.to_string()),
            ("blocklength", self.blocklength.to_string()),
            ("backoff", self.backoff.to_string()),
            ("pw_levels", self.pw_levels.to_string()),
            ("pw_delta", opt(self.pw_delta)),
            ("k_tilde", format!("{:e}", self.k_tilde)),
            ("intercell_cells", self.intercell_cells.to_string()),
            ("intercell_los", self.intercell_los.to_string()),
            ("d2d_distance", opt(self.d2d_distance)),
            ("seed", self.seed.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cell_side", self.cell_side),
            ("uav_height", self.uav_height),
            ("bs_height", self.bs_height),
            ("frequency_ghz", self.frequency_ghz),
            ("noise_power", self.noise_power),
            ("pl_los_exponent", self.path_loss.beta_los),
            ("pl_nlos_exponent", self.path_loss.beta_nlos),
            ("los_b", self.aerial_los.b),
            ("los_c", self.aerial_los.c),
            ("ground_d1", self.ground_los.d1),
            ("ground_d2", self.ground_los.d2),
            ("antenna_beamwidth_deg", self.antenna_beamwidth_deg),
            ("cap_d2d", self.cap_d2d),
            ("cap_d2d_relay", self.cap_d2d_relay),
            ("cap_relay", self.cap_relay),
            ("cap_cellular", self.cap_cellular),
            ("rate_min", self.rate_min),
            ("k_tilde", self.k_tilde),
        ];
        for (k, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{k} must be positive, got {v}")));
            }
        }
        if self.num_cellular == 0 {
            return Err(Error::Config("num_cellular must be >= 1".into()));
        }
        if !(self.user_height >= 0.0 && self.user_height < self.bs_height && self.bs_height < self.uav_height) {
            return Err(Error::Config("heights must satisfy 0 <= user < BS < UAV".into()));
        }
        if self.nakagami_m == 0 {
            return Err(Error::Config("nakagami_m must be >= 1".into()));
        }
        if self.antenna_min_db > self.antenna_max_db {
            return Err(Error::Config("antenna_min_db must not exceed antenna_max_db".into()));
        }
        if self.antenna_beamwidth_deg >= 180.0 {
            return Err(Error::Config("antenna_beamwidth_deg must be below 180".into()));
        }
        if !(self.p_eps > 0.0 && self.p_eps < 0.5) {
            return Err(Error::Config(format!("p_eps must lie in (0, 0.5), got {}", self.p_eps)));
        }
        if self.intercell_cells > 6 {
            return Err(Error::Config(format!("intercell_cells must lie in 0..=6, got {}", self.intercell_cells)));
        }
        if let Some(d) = self.d2d_distance {
            if !(d > 0.0 && d < self.cell_side) {
                return Err(Error::Config(format!("d2d_distance must lie in (0, cell_side), got {d}")));
            }
        }
        let half = self.cell_side / 2.0;
        for u in &self.uav_sites {
            if u.x.abs() > half || u.y.abs() > half {
                return Err(Error::Config(format!("UAV site ({}, {}) lies outside the cell", u.x, u.y)));
            }
        }
        FblParams::new(self.blocklength, self.backoff).map_err(|e| Error::Config(e.to_string()))?;
        self.approx().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn fbl(&self) -> FblParams {
        FblParams { n: self.blocklength, xi: self.backoff }
    }

    pub fn delta(&self) -> f64 {
        self.pw_delta.unwrap_or_else(|| default_delta(self.pw_levels))
    }

    pub fn approx(&self) -> Result<PiecewiseApprox> {
        build_piecewise(self.pw_levels, self.delta(), &self.fbl())
    }

    pub fn rician_k(&self) -> f64 {
        db_to_linear(self.rician_k_db)
    }

    pub fn shapes(&self) -> FadingShapes {
        FadingShapes { m: self.nakagami_m, k: self.rician_k() }
    }

    pub fn channel_params(&self) -> Result<ChannelParams> {
        Ok(ChannelParams {
            path_loss: self.path_loss,
            aerial: self.aerial_los,
            ground: self.ground_los,
            antenna: AntennaPattern::new(
                db_to_linear(self.antenna_max_db),
                db_to_linear(self.antenna_min_db),
                self.antenna_beamwidth_deg.to_radians(),
            )?,
        })
    }
}
