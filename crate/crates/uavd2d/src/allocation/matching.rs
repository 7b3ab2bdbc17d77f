//! Hungarian direct matching, relay upgrading and the greedy baselines.

use super::hungarian::hungarian_max;
use super::weights::{build_direct_weights, build_weights, WeightTable};
use super::{Assignment, MatchingState};
use crate::scenario::NetworkRealization;

/// Optimal direct-only assignment.
pub fn allocate_direct(net: &NetworkRealization) -> MatchingState {
    allocate_direct_using(net, &build_direct_weights(net))
}

pub fn allocate_direct_using(net: &NetworkRealization, table: &WeightTable) -> MatchingState {
    let w: Vec<Vec<Option<f64>>> = table.direct.iter().map(|row| row.iter().map(|e| e.map(|e| e.rate)).collect()).collect();
    let mut state = MatchingState::empty(net);
    for (i, j) in hungarian_max(&w).into_iter().enumerate() {
        if let Some(j) = j {
            let e = table.direct[i][j].expect("Hungarian assigned an absent entry");
            state.set(i, Assignment::Direct(e));
        }
    }
    state.evaluations = (net.num_d2d() * net.num_cellular()) as u64;
    state.refresh(net);
    state
}

/// Best two free direct options of pair `k` (highest rate, lowest index on ties).
fn top2(table: &WeightTable, k: usize, free: &[bool]) -> [Option<(f64, usize)>; 2] {
    let mut best: [Option<(f64, usize)>; 2] = [None, None];
    for (j, e) in table.direct[k].iter().enumerate() {
        let Some(e) = e else { continue };
        if !free[j] {
            continue;
        }
        let c = (e.rate, j);
        if best[0].map_or(true, |b| c.0 > b.0) {
            best[1] = best[0];
            best[0] = Some(c);
        } else if best[1].map_or(true, |b| c.0 > b.0) {
            best[1] = Some(c);
        }
    }
    best
}

/// Best joint re-placement of up to two displaced pairs onto distinct free channels.
fn replacements(
    table: &WeightTable,
    displaced: [Option<usize>; 2],
    free: &[bool],
) -> (f64, [Option<usize>; 2]) {
    let cands: Vec<[Option<(f64, usize)>; 2]> =
        displaced.iter().map(|d| d.map_or([None, None], |k| top2(table, k, free))).collect();
    let val = |c: Option<(f64, usize)>| c.map_or(0.0, |c| c.0);
    let ch = |c: Option<(f64, usize)>| c.map(|c| c.1);
    let (a, b) = (cands[0], cands[1]);
    let mut best = (0.0, [None, None]);
    let mut consider = |x: Option<(f64, usize)>, y: Option<(f64, usize)>| {
        if let (Some(p), Some(q)) = (x, y) {
            if p.1 == q.1 {
                return;
            }
        }
        let v = val(x) + val(y);
        if v > best.0 {
            best = (v, [ch(x), ch(y)]);
        }
    };
    // If the favourites collide, one of the two must fall back to its
    // runner-up (or nothing); these are all the candidates worth checking.
    consider(a[0], b[0]);
    consider(a[0], b[1]);
    consider(a[1], b[0]);
    consider(a[0], None);
    consider(None, b[0]);
    best
}

/// Direct-first matching followed by iterative relay upgrades.
pub fn allocate_with_relays(net: &NetworkRealization) -> MatchingState {
    allocate_with_relays_using(net, &build_weights(net))
}

pub fn allocate_with_relays_using(net: &NetworkRealization, table: &WeightTable) -> MatchingState {
    let mut state = allocate_direct_using(net, table);
    if !table.has_relays() {
        return state;
    }
    let (mi, mj) = (net.num_d2d(), net.num_cellular());
    loop {
        let relayed_owner = |j: usize, s: &MatchingState| s.owner[j].is_some_and(|k| s.assignments[k].is_relayed());
        // (Δw, i, j_u, j_d, replacements)
        let mut best: Option<(f64, usize, usize, usize, [Option<usize>; 2])> = None;
        for i in 0..mi {
            if state.assignments[i].is_relayed() {
                continue;
            }
            let wi = state.assignments[i].rate();
            let own = match state.assignments[i] {
                Assignment::Direct(d) => Some(d.j),
                _ => None,
            };
            for ju in 0..mj {
                if relayed_owner(ju, &state) {
                    continue;
                }
                for jd in 0..mj {
                    if ju == jd || relayed_owner(jd, &state) {
                        continue;
                    }
                    let Some(e) = table.relayed(i, ju, jd) else { continue };
                    state.evaluations += 1;
                    let displaced = [ju, jd].map(|j| state.owner[j].filter(|&k| k != i));
                    let lost: f64 = displaced.iter().flatten().map(|&k| state.assignments[k].rate()).sum();
                    // Channels open to displaced pairs: unowned ones plus the
                    // one `i` gives up, minus the two it takes.
                    let free: Vec<bool> = (0..mj)
                        .map(|j| j != ju && j != jd && (state.owner[j].is_none() || Some(j) == own))
                        .collect();
                    let (regained, picks) = replacements(table, displaced, &free);
                    let dw = e.rate - wi - lost + regained;
                    if dw > 0.0 && best.map_or(true, |b| dw > b.0) {
                        best = Some((dw, i, ju, jd, picks));
                    }
                }
            }
        }
        let Some((_, i, ju, jd, picks)) = best else { break };
        let before = state.sum_rate;
        let displaced = [ju, jd].map(|j| state.owner[j].filter(|&k| k != i));
        state.set(i, Assignment::Relayed(*table.relayed(i, ju, jd).expect("upgrade entry vanished")));
        for (k, pick) in displaced.into_iter().zip(picks) {
            let Some(k) = k else { continue };
            let a = pick.map_or(Assignment::Unserved, |j| Assignment::Direct(table.direct[k][j].expect("absent pick")));
            state.set(k, a);
        }
        state.refresh(net);
        debug_assert!(state.sum_rate >= before - 1e-9, "relay upgrade lowered the sum-rate");
    }
    state
}

/// Order in which greedy baselines offer relay upgrades.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyVariant {
    /// Pair index order.
    Greedy1,
    /// Ascending direct rate (unserved pairs first), index order on ties.
    Greedy2,
}

/// Direct matching, then each pair in turn switches to its best relayed
/// option over free subchannels (and its own) when that raises its own rate.
pub fn allocate_greedy(net: &NetworkRealization, variant: GreedyVariant) -> MatchingState {
    allocate_greedy_using(net, &build_weights(net), variant)
}

pub fn allocate_greedy_using(net: &NetworkRealization, table: &WeightTable, variant: GreedyVariant) -> MatchingState {
    let mut state = allocate_direct_using(net, table);
    if !table.has_relays() {
        return state;
    }
    let mut order: Vec<usize> = (0..net.num_d2d()).collect();
    if variant == GreedyVariant::Greedy2 {
        let rates: Vec<f64> = state.assignments.iter().map(Assignment::rate).collect();
        order.sort_by(|&a, &b| rates[a].total_cmp(&rates[b]));
    }
    let mj = net.num_cellular();
    for i in order {
        let current = state.assignments[i].rate();
        let open: Vec<bool> = (0..mj).map(|j| state.owner[j].map_or(true, |k| k == i)).collect();
        let mut best = None;
        for ju in (0..mj).filter(|&j| open[j]) {
            for jd in (0..mj).filter(|&j| open[j] && j != ju) {
                state.evaluations += 1;
                if let Some(e) = table.relayed(i, ju, jd) {
                    if e.rate > best.map_or(current, |b: super::RelayedEntry| b.rate) {
                        best = Some(*e);
                    }
                }
            }
        }
        if let Some(e) = best {
            state.set(i, Assignment::Relayed(e));
        }
    }
    state.refresh(net);
    state
}
