//! Exhaustive search over every link type and subchannel choice.

use super::weights::{build_direct_weights, build_weights, WeightTable};
use super::{Assignment, MatchingState};
use crate::error::{Error, Result};
use crate::scenario::NetworkRealization;

pub const EXHAUSTIVE_MAX_D2D: usize = 4;
pub const EXHAUSTIVE_MAX_CELLULAR: usize = 7;

/// Relative tolerance under which two sum-rates count as tied.
const TIE: f64 = 1e-12;

struct Search<'a> {
    net: &'a NetworkRealization,
    table: &'a WeightTable,
    relays: bool,
    owner: Vec<Option<usize>>,
    current: Vec<Assignment>,
    best: Option<(f64, f64, Vec<Assignment>)>,
    leaves: u64,
}

impl Search<'_> {
    fn leaf(&mut self) {
        self.leaves += 1;
        let rate: f64 = self.current.iter().map(Assignment::rate).sum();
        let mut state = MatchingState {
            assignments: self.current.clone(),
            owner: self.owner.clone(),
            sum_rate: 0.0,
            total_power: 0.0,
            evaluations: 0,
        };
        state.refresh(self.net);
        let power = state.total_power;
        let better = match &self.best {
            None => true,
            Some((r, p, _)) => rate > r + TIE * r.abs().max(1.0) || ((rate - r).abs() <= TIE * r.abs().max(1.0) && power < *p),
        };
        if better {
            self.best = Some((rate, power, self.current.clone()));
        }
    }

    fn go(&mut self, i: usize) {
        if i == self.current.len() {
            self.leaf();
            return;
        }
        self.go(i + 1);
        let mj = self.owner.len();
        for j in 0..mj {
            if self.owner[j].is_some() {
                continue;
            }
            if let Some(e) = self.table.direct[i][j] {
                self.owner[j] = Some(i);
                self.current[i] = Assignment::Direct(e);
                self.go(i + 1);
                self.owner[j] = None;
            }
        }
        if self.relays {
            for ju in 0..mj {
                for jd in 0..mj {
                    if ju == jd || self.owner[ju].is_some() || self.owner[jd].is_some() {
                        continue;
                    }
                    if let Some(e) = self.table.relayed(i, ju, jd) {
                        self.owner[ju] = Some(i);
                        self.owner[jd] = Some(i);
                        self.current[i] = Assignment::Relayed(*e);
                        self.go(i + 1);
                        self.owner[ju] = None;
                        self.owner[jd] = None;
                    }
                }
            }
        }
        self.current[i] = Assignment::Unserved;
    }
}

fn guard(net: &NetworkRealization) -> Result<()> {
    if net.num_d2d() > EXHAUSTIVE_MAX_D2D || net.num_cellular() > EXHAUSTIVE_MAX_CELLULAR {
        return Err(Error::SizeGuard(format!(
            "exhaustive search supports at most {EXHAUSTIVE_MAX_D2D} D2D pairs and {EXHAUSTIVE_MAX_CELLULAR} cellular users, got {} and {}",
            net.num_d2d(),
            net.num_cellular()
        )));
    }
    Ok(())
}

fn search(net: &NetworkRealization, table: &WeightTable, relays: bool) -> MatchingState {
    let mut s = Search {
        net,
        table,
        relays: relays && table.has_relays(),
        owner: vec![None; net.num_cellular()],
        current: vec![Assignment::Unserved; net.num_d2d()],
        best: None,
        leaves: 0,
    };
    s.go(0);
    let (_, _, assignments) = s.best.expect("the all-unserved leaf always exists");
    let mut state = MatchingState::empty(net);
    for (i, a) in assignments.into_iter().enumerate() {
        state.set(i, a);
    }
    state.evaluations = s.leaves;
    state.refresh(net);
    state
}

/// True optimum over direct and relayed options; ties go to lower total power.
pub fn allocate_exhaustive(net: &NetworkRealization) -> Result<MatchingState> {
    guard(net)?;
    Ok(search(net, &build_weights(net), true))
}

pub fn allocate_exhaustive_using(net: &NetworkRealization, table: &WeightTable) -> Result<MatchingState> {
    guard(net)?;
    Ok(search(net, table, true))
}

/// Optimum restricted to direct links.
pub fn allocate_exhaustive_direct(net: &NetworkRealization) -> Result<MatchingState> {
    guard(net)?;
    Ok(search(net, &build_direct_weights(net), false))
}
