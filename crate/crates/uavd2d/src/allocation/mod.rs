//! Subchannel, link-type and power allocation.
//!
//! Every D2D pair is either unserved, direct on one cellular user's
//! subchannel, or relayed through a UAV on two (uplink and downlink legs).
//! Each cellular subchannel is shared with at most one D2D pair. Powers on a
//! shared subchannel always come from [`crate::power::optimal_power_pair`],
//! so the allocators differ only in which pairings they pick.

mod exhaustive;
mod hungarian;
mod matching;
mod weights;

pub use exhaustive::{
    allocate_exhaustive, allocate_exhaustive_direct, allocate_exhaustive_using, EXHAUSTIVE_MAX_CELLULAR, EXHAUSTIVE_MAX_D2D,
};
pub use hungarian::hungarian_max;
pub use matching::{
    allocate_direct, allocate_direct_using, allocate_greedy, allocate_greedy_using, allocate_with_relays,
    allocate_with_relays_using, GreedyVariant,
};
pub use weights::{build_direct_weights, build_weights, DirectEntry, LegEntry, RelayedEntry, WeightTable};

use std::fmt::Write as _;

use crate::error::Result;
use crate::power::{check_power_pair, PowerPair};
use crate::scenario::{Leg, NetworkRealization};

/// How one D2D pair is served.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Assignment {
    Unserved,
    Direct(DirectEntry),
    Relayed(RelayedEntry),
}

impl Assignment {
    pub fn rate(&self) -> f64 {
        match self {
            Assignment::Unserved => 0.0,
            Assignment::Direct(d) => d.rate,
            Assignment::Relayed(r) => r.rate,
        }
    }

    /// Cellular subchannels used, in (uplink, downlink) order for relayed pairs.
    pub fn subchannels(&self) -> Vec<usize> {
        match self {
            Assignment::Unserved => vec![],
            Assignment::Direct(d) => vec![d.j],
            Assignment::Relayed(r) => vec![r.up.j, r.down.j],
        }
    }

    pub fn is_relayed(&self) -> bool {
        matches!(self, Assignment::Relayed(_))
    }

    /// Transmit power of the D2D side (plus the relay) and of the sharing cellular users.
    fn powers(&self) -> (f64, f64) {
        match self {
            Assignment::Unserved => (0.0, 0.0),
            Assignment::Direct(d) => (d.p_i, d.p_j),
            Assignment::Relayed(r) => (r.up.p_tx + r.down.p_tx, r.up.p_cell + r.down.p_cell),
        }
    }
}

/// Output of an allocator.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingState {
    /// Per D2D pair.
    pub assignments: Vec<Assignment>,
    /// `ρ^d`: D2D pair sharing each cellular subchannel.
    pub owner: Vec<Option<usize>>,
    pub sum_rate: f64,
    pub total_power: f64,
    /// Candidate evaluations performed (for complexity trends).
    pub evaluations: u64,
}

impl MatchingState {
    /// Everyone unserved.
    pub fn empty(net: &NetworkRealization) -> Self {
        let mut s = MatchingState {
            assignments: vec![Assignment::Unserved; net.num_d2d()],
            owner: vec![None; net.num_cellular()],
            sum_rate: 0.0,
            total_power: 0.0,
            evaluations: 0,
        };
        s.refresh(net);
        s
    }

    /// `μ^r`: relayed flags.
    pub fn relayed_flags(&self) -> Vec<bool> {
        self.assignments.iter().map(Assignment::is_relayed).collect()
    }

    /// Assign pair `i`, releasing whatever it held before.
    pub(crate) fn set(&mut self, i: usize, a: Assignment) {
        for j in self.assignments[i].subchannels() {
            if self.owner[j] == Some(i) {
                self.owner[j] = None;
            }
        }
        for j in a.subchannels() {
            self.owner[j] = Some(i);
        }
        self.assignments[i] = a;
    }

    /// Recompute the sum-rate and total power from the assignments.
    pub(crate) fn refresh(&mut self, net: &NetworkRealization) {
        self.sum_rate = self.assignments.iter().map(Assignment::rate).sum();
        self.total_power = total_power(net, self);
    }

    /// Sum-rate of relayed pairs over the total D2D sum-rate (0 when nothing is served).
    pub fn relayed_rate_ratio(&self) -> f64 {
        let relayed: f64 = self.assignments.iter().filter(|a| a.is_relayed()).map(Assignment::rate).sum();
        if self.sum_rate > 0.0 {
            relayed / self.sum_rate
        } else {
            0.0
        }
    }

    /// Flat text record: a summary line, then one line per D2D pair.
    ///
    /// ```text
    /// sum_rate=<bits/s/Hz> total_power=<W> relayed=<count>
    /// pair=<i> type=unserved
    /// pair=<i> type=direct subchannel=<j> p_d2d=<W> p_cell=<W> rate=<bits/s/Hz>
    /// pair=<i> type=relayed uav=<u> subchannels=<j_u>,<j_d> p_d2d=<W> p_relay=<W> p_cell=<W>,<W> rate=<bits/s/Hz>
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let relayed = self.assignments.iter().filter(|a| a.is_relayed()).count();
        let _ = writeln!(s, "sum_rate={:.9} total_power={:.9e} relayed={relayed}", self.sum_rate, self.total_power);
        for (i, a) in self.assignments.iter().enumerate() {
            let _ = match a {
                Assignment::Unserved => writeln!(s, "pair={i} type=unserved"),
                Assignment::Direct(d) => writeln!(
                    s,
                    "pair={i} type=direct subchannel={} p_d2d={:.9e} p_cell={:.9e} rate={:.9}",
                    d.j, d.p_i, d.p_j, d.rate
                ),
                Assignment::Relayed(r) => writeln!(
                    s,
                    "pair={i} type=relayed uav={} subchannels={},{} p_d2d={:.9e} p_relay={:.9e} p_cell={:.9e},{:.9e} rate={:.9}",
                    r.uav, r.up.j, r.down.j, r.up.p_tx, r.down.p_tx, r.up.p_cell, r.down.p_cell, r.rate
                ),
            };
        }
        s
    }
}

/// Total transmit power: D2D transmitters, relays and sharing cellular users
/// at their optimised powers, unshared cellular users at their standalone floor.
pub fn total_power(net: &NetworkRealization, state: &MatchingState) -> f64 {
    let served: f64 = state
        .assignments
        .iter()
        .map(|a| {
            let (d, c) = a.powers();
            d + c
        })
        .sum();
    let idle: f64 = (0..net.num_cellular()).filter(|&j| state.owner[j].is_none()).map(|j| net.standalone_floor(j)).sum();
    served + idle
}

/// Check every structural and QoS constraint of `state` after the fact.
/// Returns a description of each violation; empty means the state is valid.
pub fn verify_state(net: &NetworkRealization, state: &MatchingState, tol: f64) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    if state.assignments.len() != net.num_d2d() || state.owner.len() != net.num_cellular() {
        bad.push("state dimensions do not match the realization".to_string());
        return Ok(bad);
    }
    let mut uses = vec![0usize; net.num_cellular()];
    for (i, a) in state.assignments.iter().enumerate() {
        let subs = a.subchannels();
        if let [u, d] = subs[..] {
            if u == d {
                bad.push(format!("pair {i}: relayed legs share subchannel {u}"));
            }
        }
        for &j in &subs {
            if j >= net.num_cellular() {
                bad.push(format!("pair {i}: subchannel {j} out of range"));
                continue;
            }
            uses[j] += 1;
            if state.owner[j] != Some(i) {
                bad.push(format!("pair {i}: owner table disagrees on subchannel {j}"));
            }
        }
        let legs: Vec<(Leg, usize, PowerPair)> = match a {
            Assignment::Unserved => vec![],
            Assignment::Direct(d) => vec![(Leg::Direct, d.j, d.power_pair())],
            Assignment::Relayed(r) => vec![
                (Leg::Uplink { uav: r.uav }, r.up.j, r.up.power_pair()),
                (Leg::Downlink { uav: r.uav }, r.down.j, r.down.power_pair()),
            ],
        };
        for (leg, j, pp) in legs {
            if j < net.num_cellular() && !check_power_pair(&net.pair_problem(leg, i, j)?, &pp, tol)? {
                bad.push(format!("pair {i}: {leg:?} on subchannel {j} violates QoS or power bounds"));
            }
        }
        if !(a.rate() >= 0.0 && a.rate().is_finite()) {
            bad.push(format!("pair {i}: rate {} is not a finite non-negative number", a.rate()));
        }
    }
    for (j, &n) in uses.iter().enumerate() {
        if n > 1 {
            bad.push(format!("subchannel {j} shared by {n} D2D pairs"));
        }
        if n == 0 && state.owner[j].is_some() {
            bad.push(format!("subchannel {j} has an owner but no user"));
        }
    }
    let sum: f64 = state.assignments.iter().map(Assignment::rate).sum();
    if (sum - state.sum_rate).abs() > tol * sum.max(1.0) {
        bad.push(format!("recorded sum-rate {} differs from {sum}", state.sum_rate));
    }
    let p = total_power(net, state);
    if (p - state.total_power).abs() > tol * p.max(1e-12) {
        bad.push(format!("recorded total power {} differs from {p}", state.total_power));
    }
    Ok(bad)
}
