//! Direct and relayed pairing weights with their optimal powers.

use rayon::prelude::*;

use crate::error::Result;
use crate::metrics::{capacity_d2d_direct, capacity_d2d_relayed};
use crate::outage::{OutagePair, Zeta};
use crate::power::{optimal_power_pair, Binding, PowerPair};
use crate::scenario::{Leg, NetworkRealization};

/// A feasible direct pairing of D2D pair `i` with cellular user `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectEntry {
    pub j: usize,
    pub p_i: f64,
    pub p_j: f64,
    pub eta_star: f64,
    pub binding: Binding,
    pub rate: f64,
}

impl DirectEntry {
    pub fn power_pair(&self) -> PowerPair {
        PowerPair::Feasible { p_i: self.p_i, p_j: self.p_j, eta_star: self.eta_star, binding: self.binding }
    }
}

/// One feasible relay leg on cellular subchannel `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegEntry {
    pub j: usize,
    /// D2D transmitter (uplink) or UAV (downlink) power.
    pub p_tx: f64,
    pub p_cell: f64,
    pub eta_star: f64,
    pub binding: Binding,
    /// ζ seen by the leg's receiver.
    pub zeta: f64,
    pub pair: OutagePair,
}

impl LegEntry {
    pub fn power_pair(&self) -> PowerPair {
        PowerPair::Feasible { p_i: self.p_tx, p_j: self.p_cell, eta_star: self.eta_star, binding: self.binding }
    }
}

/// A feasible relayed option through UAV `uav`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayedEntry {
    pub uav: usize,
    pub up: LegEntry,
    pub down: LegEntry,
    pub rate: f64,
}

/// All pairing weights of one realization. `None` marks an infeasible option.
#[derive(Debug, Clone, Default)]
pub struct WeightTable {
    /// `[i][j]`.
    pub direct: Vec<Vec<Option<DirectEntry>>>,
    /// `[i][j_u][j_d]`, best UAV per entry; empty when relays are not built.
    pub relayed: Vec<Vec<Vec<Option<RelayedEntry>>>>,
    /// Solver failures, one line per affected entry; those entries are left absent.
    pub diagnostics: Vec<String>,
}

impl WeightTable {
    pub fn w(&self, i: usize, j: usize) -> f64 {
        self.direct[i][j].map_or(0.0, |e| e.rate)
    }

    pub fn relayed(&self, i: usize, ju: usize, jd: usize) -> Option<&RelayedEntry> {
        self.relayed.get(i)?.get(ju)?.get(jd)?.as_ref()
    }

    pub fn has_relays(&self) -> bool {
        !self.relayed.is_empty()
    }
}

fn direct_entry(net: &NetworkRealization, i: usize, j: usize) -> Result<Option<DirectEntry>> {
    let p = net.pair_problem(Leg::Direct, i, j)?;
    let PowerPair::Feasible { p_i, p_j, eta_star, binding } = optimal_power_pair(&p)? else {
        return Ok(None);
    };
    let rate = capacity_d2d_direct(Zeta::new(p.d2d_zeta(eta_star))?, &p.d2d)?;
    Ok(Some(DirectEntry { j, p_i, p_j, eta_star, binding, rate }))
}

fn leg_entry(net: &NetworkRealization, leg: Leg, i: usize, j: usize) -> Result<Option<LegEntry>> {
    let p = net.pair_problem(leg, i, j)?;
    let PowerPair::Feasible { p_i, p_j, eta_star, binding } = optimal_power_pair(&p)? else {
        return Ok(None);
    };
    Ok(Some(LegEntry { j, p_tx: p_i, p_cell: p_j, eta_star, binding, zeta: p.d2d_zeta(eta_star), pair: p.d2d }))
}

fn relayed_entry(uav: usize, up: &LegEntry, down: &LegEntry) -> Result<RelayedEntry> {
    let rate = capacity_d2d_relayed(Zeta::new(up.zeta)?, Zeta::new(down.zeta)?, &up.pair, &down.pair)?;
    Ok(RelayedEntry { uav, up: *up, down: *down, rate })
}

fn record<T>(r: Result<Option<T>>, what: impl FnOnce() -> String, diag: &mut Vec<String>) -> Option<T> {
    match r {
        Ok(v) => v,
        Err(e) => {
            diag.push(format!("{}: {e}", what()));
            None
        }
    }
}

/// Direct weights only.
pub fn build_direct_weights(net: &NetworkRealization) -> WeightTable {
    let (mi, mj) = (net.num_d2d(), net.num_cellular());
    let rows: Vec<(Vec<Option<DirectEntry>>, Vec<String>)> = (0..mi)
        .into_par_iter()
        .map(|i| {
            let mut diag = Vec::new();
            let row = (0..mj)
                .map(|j| record(direct_entry(net, i, j), || format!("direct ({i}, {j})"), &mut diag))
                .collect();
            (row, diag)
        })
        .collect();
    let mut t = WeightTable::default();
    for (row, diag) in rows {
        t.direct.push(row);
        t.diagnostics.extend(diag);
    }
    t
}

/// Direct weights plus every relayed option (best UAV per `(i, j_u, j_d)`,
/// lowest UAV index on ties).
pub fn build_weights(net: &NetworkRealization) -> WeightTable {
    let mut t = build_direct_weights(net);
    if net.num_uavs() == 0 {
        return t;
    }
    let (mi, mj) = (net.num_d2d(), net.num_cellular());
    let rows: Vec<(Vec<Vec<Option<RelayedEntry>>>, Vec<String>)> = (0..mi)
        .into_par_iter()
        .map(|i| {
            let mut diag = Vec::new();
            let mut legs = Vec::with_capacity(net.num_uavs());
            for u in 0..net.num_uavs() {
                let ups: Vec<Option<LegEntry>> = (0..mj)
                    .map(|j| record(leg_entry(net, Leg::Uplink { uav: u }, i, j), || format!("uplink ({u}, {i}, {j})"), &mut diag))
                    .collect();
                let downs: Vec<Option<LegEntry>> = (0..mj)
                    .map(|j| {
                        record(leg_entry(net, Leg::Downlink { uav: u }, i, j), || format!("downlink ({u}, {i}, {j})"), &mut diag)
                    })
                    .collect();
                legs.push((ups, downs));
            }
            let mut block = vec![vec![None; mj]; mj];
            for ju in 0..mj {
                for jd in 0..mj {
                    if ju == jd {
                        continue;
                    }
                    let mut best: Option<RelayedEntry> = None;
                    for (u, (ups, downs)) in legs.iter().enumerate() {
                        let (Some(up), Some(down)) = (&ups[ju], &downs[jd]) else { continue };
                        let e = record(relayed_entry(u, up, down).map(Some), || format!("relayed ({u}, {i}, {ju}, {jd})"), &mut diag);
                        if let Some(e) = e {
                            if best.map_or(true, |b| e.rate > b.rate) {
                                best = Some(e);
                            }
                        }
                    }
                    block[ju][jd] = best;
                }
            }
            (block, diag)
        })
        .collect();
    for (block, diag) in rows {
        t.relayed.push(block);
        t.diagnostics.extend(diag);
    }
    t
}
