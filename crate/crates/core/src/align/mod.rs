//! Moves, alignments, costs, the synchronous product and optimal alignment search.

pub mod oracle;
mod product;
mod pseudo;
mod search;
mod valid;

pub use product::{build_sync_product, sync_compatible, SyncPair, SyncProduct};
pub use pseudo::{antichain_marking, move_effect, pseudo_fire, PseudoMarking, Side};
pub use search::{align_log, optimal_alignment, AlignError, AlignmentResult, SearchOptions, SearchStats};
pub use valid::{is_valid_alignment, Validity, Witness};

use crate::eventlog::Event;
use crate::poset::Poset;
use crate::rcnu::{Mode, RcNuNet};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Log,
    Model,
    Sync,
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MoveKind::Log => "log",
            MoveKind::Model => "model",
            MoveKind::Sync => "sync",
        })
    }
}

/// A transition fired in a mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Firing {
    pub transition: usize,
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Move {
    pub kind: MoveKind,
    pub event: Option<Event>,
    pub firing: Option<Firing>,
}

impl Move {
    pub fn log(e: Event) -> Self {
        Move { kind: MoveKind::Log, event: Some(e), firing: None }
    }

    pub fn model(transition: usize, mode: Mode) -> Self {
        Move { kind: MoveKind::Model, event: None, firing: Some(Firing { transition, mode }) }
    }

    pub fn sync(e: Event, transition: usize, mode: Mode) -> Self {
        Move { kind: MoveKind::Sync, event: Some(e), firing: Some(Firing { transition, mode }) }
    }

    /// Case the move belongs to: the event's, else the mode's case binding.
    pub fn case(&self) -> Option<&str> {
        match (&self.event, &self.firing) {
            (Some(e), _) => Some(&e.case),
            (None, Some(f)) => f.mode.case_id(),
            _ => None,
        }
    }

    /// Checks the field shape of the kind and label agreement of sync moves.
    pub fn well_formed(&self, net: &RcNuNet) -> bool {
        match (self.kind, &self.event, &self.firing) {
            (MoveKind::Log, Some(_), None) => true,
            (MoveKind::Model, None, Some(f)) => f.transition < net.transitions.len(),
            (MoveKind::Sync, Some(e), Some(f)) => {
                f.transition < net.transitions.len()
                    && net.transitions[f.transition].label.as_deref() == Some(e.activity.as_str())
            }
            _ => false,
        }
    }

    pub fn describe(&self, net: &RcNuNet) -> String {
        let t = self.firing.as_ref().map(|f| net.transitions[f.transition].id.as_str());
        match (&self.event, t) {
            (Some(e), Some(t)) => format!("({}#{}, {t})", e.activity, e.id),
            (Some(e), None) => format!("({}#{}, >>)", e.activity, e.id),
            (None, Some(t)) => format!("(>>, {t} {})", self.firing.as_ref().unwrap().mode),
            (None, None) => "(>>, >>)".into(),
        }
    }
}

/// Poset of moves.
pub type Alignment = Poset<Move>;

/// Integer move costs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostTable {
    pub sync: u64,
    pub tau: u64,
    pub visible: u64,
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable { sync: 0, tau: 1, visible: 10_000 }
    }
}

impl FromStr for CostTable {
    type Err = String;

    /// `sync=0,tau=1,visible=10000`; missing keys keep their defaults.
    fn from_str(s: &str) -> Result<Self, String> {
        let mut c = CostTable::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value, got {part:?}"))?;
            let v: u64 = v.trim().parse().map_err(|_| format!("bad cost {v:?}"))?;
            match k.trim() {
                "sync" => c.sync = v,
                "tau" => c.tau = v,
                "visible" => c.visible = v,
                other => return Err(format!("unknown cost key {other:?}")),
            }
        }
        Ok(c)
    }
}

pub fn move_cost(m: &Move, net: &RcNuNet, costs: &CostTable) -> u64 {
    match m.kind {
        MoveKind::Sync => costs.sync,
        MoveKind::Log => costs.visible,
        MoveKind::Model => {
            let f = m.firing.as_ref().expect("model move fires");
            if net.transitions[f.transition].label.is_some() {
                costs.visible
            } else {
                costs.tau
            }
        }
    }
}

pub fn alignment_cost(al: &Alignment, net: &RcNuNet, costs: &CostTable) -> u64 {
    al.elements().iter().map(|m| move_cost(m, net, costs)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn default_costs() {
        let net = fixtures::hospital_net();
        let ev = fixtures::hospital_log().event(0).clone();
        let t_ip = net.transition_index("i_p").unwrap();
        let tau = net.transition_index("tau_1").unwrap();
        let c = CostTable::default();
        assert_eq!(move_cost(&Move::sync(ev.clone(), 0, Mode::default()), &net, &c), 0);
        assert_eq!(move_cost(&Move::log(ev), &net, &c), 10_000);
        assert_eq!(move_cost(&Move::model(t_ip, Mode::default()), &net, &c), 10_000);
        assert_eq!(move_cost(&Move::model(tau, Mode::default()), &net, &c), 1);
    }

    #[test]
    fn parse_costs() {
        let c: CostTable = "sync=0, tau=2,visible=50".parse().unwrap();
        assert_eq!(c, CostTable { sync: 0, tau: 2, visible: 50 });
        assert_eq!("tau=3".parse::<CostTable>().unwrap().visible, 10_000);
        assert!("speed=1".parse::<CostTable>().is_err());
    }
}
