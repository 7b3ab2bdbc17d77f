//! Scenario configuration, node placement and assembly of every link a
//! resource allocator can touch.
//!
//! A realization fixes node positions, the LoS state of every physical node
//! pair, and the interference-plus-noise floor at every receiver. Beam
//! directions differ by transmission mode (a D2D transmitter aims at its
//! receiver when direct and at the UAV when relayed), so each mode gets its
//! own table of mean gains built from the same physical link.
//!
//! Randomness comes from three independent ChaCha8 streams of the seed:
//! positions, LoS draws and intercell interferers. Changing a parameter
//! that does not affect a stream (e.g. UAV height) leaves it untouched, so
//! sweeps compare like with like.

mod config;

pub use config::{ScenarioConfig, UavSite, DEFAULT_K_TILDE};

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{
    antenna_gain, build_link_stats, mean_path_gain, offset_angle, ChannelParams, FadingShapes, LinkClass, LinkStats,
    Position,
};
use crate::error::{Error, Result};
use crate::metrics::PiecewiseApprox;
use crate::outage::OutagePair;
use crate::power::{interference_floor, CellularQos, PairProblem, PowerBounds};

const STREAM_POSITIONS: u64 = 0;
const STREAM_INTERCELL: u64 = 1;
const STREAM_LOS: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Links touching one UAV, indexed `[i]` or `[i][j]` (D2D pair, cellular user).
#[derive(Debug, Clone)]
pub struct RelayLinks {
    pub position: Position,
    /// Interference-plus-noise floor at the UAV receiver.
    pub floor: f64,
    /// `h^{dr}`: D2D transmitter → UAV.
    pub uplink: Vec<LinkStats>,
    /// `h^{rd}`: UAV → D2D receiver.
    pub downlink: Vec<LinkStats>,
    /// `ĥ^{cr}`: cellular user → UAV while the UAV listens to pair `i`.
    pub cellular_to_uav: Vec<Vec<LinkStats>>,
    /// `ĥ^d` in relay mode: D2D transmitter (aimed at the UAV) → BS.
    pub d2d_to_bs: Vec<Vec<LinkStats>>,
    /// `ĥ^{rc}`: UAV (aimed at receiver `i`) → BS.
    pub uav_to_bs: Vec<Vec<LinkStats>>,
    /// `ĥ^c` on the downlink leg: cellular user → D2D receiver listening to the UAV.
    pub cellular_to_rx: Vec<Vec<LinkStats>>,
}

/// Transmit-power caps `(p̄^d, p̄^{dr}, p̄^{rd}, p̄^c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCaps {
    pub d2d: f64,
    pub d2d_relay: f64,
    pub relay: f64,
    pub cellular: f64,
}

/// One random draw of the network and every quantity derived from it.
#[derive(Debug, Clone)]
pub struct NetworkRealization {
    pub seed: u64,
    pub bs: Position,
    pub cellular_users: Vec<Position>,
    pub d2d_tx: Vec<Position>,
    pub d2d_rx: Vec<Position>,
    /// `h^c_j`: cellular user → BS.
    pub cellular: Vec<LinkStats>,
    /// `h^d_i`: D2D transmitter → receiver.
    pub direct: Vec<LinkStats>,
    /// `ĥ^c_{i,j}`: cellular user `j` → D2D receiver `i` (direct mode).
    pub cellular_to_rx: Vec<Vec<LinkStats>>,
    /// `ĥ^d_{j,i}`: D2D transmitter `i` (aimed at its receiver) → BS.
    pub d2d_to_bs: Vec<Vec<LinkStats>>,
    pub relays: Vec<RelayLinks>,
    pub bs_floor: f64,
    pub rx_floor: Vec<f64>,
    pub k_tilde: f64,
    pub caps: PowerCaps,
    pub m_cell: u32,
    pub rate_min: f64,
    pub p_eps: f64,
    pub approx: Arc<PiecewiseApprox>,
}

/// Positions of the co-channel users of the active neighbour cells.
#[derive(Debug, Clone, PartialEq)]
pub struct IntercellInterferers {
    /// `(transmitter, its serving BS)` per active cell.
    pub sources: Vec<(Position, Position)>,
}

/// Draw one uniformly placed co-channel user in each of the first
/// `intercell_cells` cells of the hexagonal first tier.
pub fn draw_intercell<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> IntercellInterferers {
    let reuse = config.cell_side * 3f64.sqrt();
    let half = config.cell_side / 2.0;
    let sources = (0..config.intercell_cells)
        .map(|c| {
            let phi = c as f64 * PI / 3.0;
            let (cx, cy) = (reuse * phi.cos(), reuse * phi.sin());
            let tx = Position::new(
                cx + rng.gen_range(-half..half),
                cy + rng.gen_range(-half..half),
                config.user_height,
            );
            (tx, Position::new(cx, cy, config.bs_height))
        })
        .collect();
    IntercellInterferers { sources }
}

/// Interference-plus-noise floor `σ² + Σ p̄^c E[ĝ]` at `receiver`.
///
/// Each interferer transmits at the cellular cap with its beam on its own
/// BS; the path is LoS or NLoS for all of them according to `los`.
pub fn intercell_floor(
    config: &ScenarioConfig,
    receiver: &Position,
    los: bool,
    interferers: &IntercellInterferers,
) -> Result<f64> {
    let antenna = config.channel_params()?.antenna;
    let mut floor = config.noise_power;
    for (tx, own_bs) in &interferers.sources {
        let g = mean_path_gain(tx.distance(receiver), los, &config.path_loss)?;
        floor += config.cap_cellular * g * antenna_gain(offset_angle(tx, own_bs, receiver), &antenna);
    }
    Ok(floor)
}

fn uniform_in_cell<R: Rng + ?Sized>(rng: &mut R, half: f64, z: f64) -> Position {
    Position::new(rng.gen_range(-half..half), rng.gen_range(-half..half), z)
}

fn place_d2d<R: Rng + ?Sized>(rng: &mut R, config: &ScenarioConfig) -> Result<(Position, Position)> {
    let half = config.cell_side / 2.0;
    let z = config.user_height;
    match config.d2d_distance {
        None => Ok((uniform_in_cell(rng, half, z), uniform_in_cell(rng, half, z))),
        Some(d) => {
            // Joint rejection over (transmitter, bearing) keeps the pair uniform
            // among placements that fit in the cell.
            for _ in 0..100_000 {
                let tx = uniform_in_cell(rng, half, z);
                let phi = rng.gen_range(0.0..2.0 * PI);
                let rx = Position::new(tx.x + d * phi.cos(), tx.y + d * phi.sin(), z);
                if rx.x.abs() <= half && rx.y.abs() <= half {
                    return Ok((tx, rx));
                }
            }
            Err(Error::Config(format!("cannot fit a D2D pair {d} m apart in the cell")))
        }
    }
}

/// Mean-gain bookkeeping: one physical link seen through given beams.
struct Beams<'a> {
    params: &'a ChannelParams,
    rx_gain: bool,
}

impl Beams<'_> {
    /// Transmit gain towards `rx` with boresight on `tx_aim`, times the
    /// receive gain towards `tx` with boresight on `rx_aim` when enabled.
    fn view(&self, link: &LinkStats, tx: &Position, tx_aim: &Position, rx: &Position, rx_aim: &Position) -> LinkStats {
        let mut g = antenna_gain(offset_angle(tx, tx_aim, rx), &self.params.antenna);
        if self.rx_gain {
            g *= antenna_gain(offset_angle(rx, rx_aim, tx), &self.params.antenna);
        }
        link.with_directivity(g)
    }
}

/// Draw the LoS state of one physical node pair (path gain only).
fn physical<R: Rng + ?Sized>(
    a: &Position,
    b: &Position,
    class: LinkClass,
    shapes: FadingShapes,
    rng: &mut R,
    params: &ChannelParams,
) -> Result<LinkStats> {
    let s = build_link_stats(a, b, class, 0.0, None, shapes, rng, params)?;
    Ok(s.with_directivity(1.0))
}

/// Build the realization of `config` under `seed`.
pub fn generate(config: &ScenarioConfig, seed: u64) -> Result<NetworkRealization> {
    config.validate()?;
    let params = config.channel_params()?;
    let shapes = config.shapes();
    let beams = Beams { params: &params, rx_gain: config.antenna_rx_gain };
    let half = config.cell_side / 2.0;

    let mut pos_rng = stream(seed, STREAM_POSITIONS);
    let bs = Position::new(0.0, 0.0, config.bs_height);
    let cellular_users: Vec<Position> =
        (0..config.num_cellular).map(|_| uniform_in_cell(&mut pos_rng, half, config.user_height)).collect();
    let mut d2d_tx = Vec::with_capacity(config.num_d2d);
    let mut d2d_rx = Vec::with_capacity(config.num_d2d);
    for _ in 0..config.num_d2d {
        let (t, r) = place_d2d(&mut pos_rng, config)?;
        d2d_tx.push(t);
        d2d_rx.push(r);
    }
    let uavs: Vec<Position> =
        config.uav_sites.iter().map(|s| Position::new(s.x, s.y, config.uav_height)).collect();

    let mut ic_rng = stream(seed, STREAM_INTERCELL);
    let interferers = draw_intercell(config, &mut ic_rng);
    let floor_at = |p: &Position| intercell_floor(config, p, config.intercell_los, &interferers);
    let bs_floor = floor_at(&bs)?;
    let rx_floor = d2d_rx.iter().map(floor_at).collect::<Result<Vec<_>>>()?;

    // LoS draws, one per physical node pair, in a fixed order.
    let mut los = stream(seed, STREAM_LOS);
    let mut draw = |a: &Position, b: &Position, class| physical(a, b, class, shapes, &mut los, &params);
    let cell_bs = cellular_users.iter().map(|c| draw(c, &bs, LinkClass::Obstructed)).collect::<Result<Vec<_>>>()?;
    let tx_rx = (0..config.num_d2d)
        .map(|i| draw(&d2d_tx[i], &d2d_rx[i], LinkClass::Terrestrial))
        .collect::<Result<Vec<_>>>()?;
    let cell_rx = d2d_rx
        .iter()
        .map(|r| cellular_users.iter().map(|c| draw(c, r, LinkClass::Terrestrial)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let tx_bs = d2d_tx.iter().map(|t| draw(t, &bs, LinkClass::Obstructed)).collect::<Result<Vec<_>>>()?;
    let mut uav_phys = Vec::with_capacity(uavs.len());
    for u in &uavs {
        let up = d2d_tx.iter().map(|t| draw(t, u, LinkClass::Aerial)).collect::<Result<Vec<_>>>()?;
        let down = d2d_rx.iter().map(|r| draw(u, r, LinkClass::Aerial)).collect::<Result<Vec<_>>>()?;
        let cell_u = cellular_users.iter().map(|c| draw(c, u, LinkClass::Aerial)).collect::<Result<Vec<_>>>()?;
        let u_bs = draw(u, &bs, LinkClass::Aerial)?;
        uav_phys.push((up, down, cell_u, u_bs));
    }

    let (mi, mj) = (config.num_d2d, config.num_cellular);
    let cellular: Vec<LinkStats> =
        (0..mj).map(|j| beams.view(&cell_bs[j], &cellular_users[j], &bs, &bs, &cellular_users[j])).collect();
    let direct: Vec<LinkStats> =
        (0..mi).map(|i| beams.view(&tx_rx[i], &d2d_tx[i], &d2d_rx[i], &d2d_rx[i], &d2d_tx[i])).collect();
    let table = |f: &dyn Fn(usize, usize) -> LinkStats| -> Vec<Vec<LinkStats>> {
        (0..mi).map(|i| (0..mj).map(|j| f(i, j)).collect()).collect()
    };
    let cellular_to_rx =
        table(&|i, j| beams.view(&cell_rx[i][j], &cellular_users[j], &bs, &d2d_rx[i], &d2d_tx[i]));
    let d2d_to_bs = table(&|i, j| beams.view(&tx_bs[i], &d2d_tx[i], &d2d_rx[i], &bs, &cellular_users[j]));

    let mut relays = Vec::with_capacity(uavs.len());
    for (u, (up, down, cell_u, u_bs)) in uavs.iter().zip(&uav_phys) {
        let uplink = (0..mi).map(|i| beams.view(&up[i], &d2d_tx[i], u, u, &d2d_tx[i])).collect();
        let downlink = (0..mi).map(|i| beams.view(&down[i], u, &d2d_rx[i], &d2d_rx[i], u)).collect();
        relays.push(RelayLinks {
            position: *u,
            floor: floor_at(u)?,
            uplink,
            downlink,
            cellular_to_uav: table(&|i, j| beams.view(&cell_u[j], &cellular_users[j], &bs, u, &d2d_tx[i])),
            d2d_to_bs: table(&|i, j| beams.view(&tx_bs[i], &d2d_tx[i], u, &bs, &cellular_users[j])),
            uav_to_bs: table(&|i, j| beams.view(u_bs, u, &d2d_rx[i], &bs, &cellular_users[j])),
            cellular_to_rx: table(&|i, j| beams.view(&cell_rx[i][j], &cellular_users[j], &bs, &d2d_rx[i], u)),
        });
    }

    Ok(NetworkRealization {
        seed,
        bs,
        cellular_users,
        d2d_tx,
        d2d_rx,
        cellular,
        direct,
        cellular_to_rx,
        d2d_to_bs,
        relays,
        bs_floor,
        rx_floor,
        k_tilde: config.k_tilde,
        caps: PowerCaps {
            d2d: config.cap_d2d,
            d2d_relay: config.cap_d2d_relay,
            relay: config.cap_relay,
            cellular: config.cap_cellular,
        },
        m_cell: config.nakagami_m,
        rate_min: config.rate_min,
        p_eps: config.p_eps,
        approx: Arc::new(config.approx()?),
    })
}

/// Which leg of which transmission a [`PairProblem`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leg {
    Direct,
    Uplink { uav: usize },
    Downlink { uav: usize },
}

impl NetworkRealization {
    pub fn num_d2d(&self) -> usize {
        self.direct.len()
    }

    pub fn num_cellular(&self) -> usize {
        self.cellular.len()
    }

    pub fn num_uavs(&self) -> usize {
        self.relays.len()
    }

    fn bounds(&self, floor_at_victim: f64, cross: &LinkStats, cap: f64) -> Result<PowerBounds> {
        PowerBounds::new(interference_floor(floor_at_victim, cross.mean_gain, self.k_tilde)?, cap)
    }

    /// The shared-subchannel problem of D2D pair `i` (or the relay serving it)
    /// with cellular user `j` on the given leg.
    pub fn pair_problem(&self, leg: Leg, i: usize, j: usize) -> Result<PairProblem> {
        if i >= self.num_d2d() || j >= self.num_cellular() {
            return Err(Error::Domain(format!("pair ({i}, {j}) out of range")));
        }
        let hc = &self.cellular[j];
        // (desired, interference at the D2D-side receiver, its floor,
        //  interference at the BS, transmitter cap)
        let (h, x_rx, rx_floor, x_bs, cap) = match leg {
            Leg::Direct => (
                &self.direct[i],
                &self.cellular_to_rx[i][j],
                self.rx_floor[i],
                &self.d2d_to_bs[i][j],
                self.caps.d2d,
            ),
            Leg::Uplink { uav } => {
                let r = self.relay(uav)?;
                (&r.uplink[i], &r.cellular_to_uav[i][j], r.floor, &r.d2d_to_bs[i][j], self.caps.d2d_relay)
            }
            Leg::Downlink { uav } => {
                let r = self.relay(uav)?;
                (&r.downlink[i], &r.cellular_to_rx[i][j], self.rx_floor[i], &r.uav_to_bs[i][j], self.caps.relay)
            }
        };
        Ok(PairProblem {
            k1: x_rx.mean_gain / h.mean_gain,
            k2: x_bs.mean_gain / hc.mean_gain,
            qos: CellularQos {
                interferer: x_bs.fading,
                m_cell: self.m_cell,
                rate_min: self.rate_min,
                p_eps: self.p_eps,
                approx: self.approx.clone(),
            },
            d2d: OutagePair::new(h.fading, x_rx.fading)?,
            bounds_i: self.bounds(self.bs_floor, x_bs, cap)?,
            bounds_j: self.bounds(rx_floor, x_rx, self.caps.cellular)?,
        })
    }

    fn relay(&self, uav: usize) -> Result<&RelayLinks> {
        self.relays.get(uav).ok_or_else(|| Error::Domain(format!("no UAV {uav}")))
    }

    /// Power of cellular user `j` when nobody shares its subchannel: the
    /// smallest power keeping its own received signal `K̃` times above the
    /// BS floor, capped at `p̄^c`.
    pub fn standalone_floor(&self, j: usize) -> f64 {
        (self.bs_floor * self.k_tilde / self.cellular[j].mean_gain).min(self.caps.cellular)
    }
}
