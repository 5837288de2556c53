//! Alignment reports: moves, the full order, costs and, for approximations,
//! the realigned intervals.

use super::FormatError;
use crate::align::{move_cost, Alignment, CostTable, Move, MoveKind};
use crate::approx::ApproxResult;
use crate::eventlog::{format_resources, parse_resources, Event};
use crate::poset::Poset;
use crate::rcnu::{Mode, RcNuNet, Variable};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const SCHEMA_MAJOR: u32 = 1;
pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEvent {
    pub id: usize,
    pub timestamp: f64,
    pub resources: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMove {
    pub index: usize,
    pub kind: MoveKind,
    /// Event activity, else the transition label; absent for silent model moves.
    pub activity: Option<String>,
    pub case: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<ReportEvent>,
    /// Variable (`c:x`, `r:y`, `c:nu`, `r:nu`) to identifier.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub mode: BTreeMap<String, String>,
    pub cost: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportInterval {
    /// Move indices of the reordered composition.
    pub moves: Vec<usize>,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub original_cost: u64,
    pub realigned_cost: u64,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxSummary {
    pub composed_moves: usize,
    pub ilp_objective: i64,
    pub ilp_proven: bool,
    pub global_fallback: bool,
    pub intervals: Vec<ReportInterval>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub schema_version: String,
    pub mode: String,
    pub costs: CostTable,
    pub total_cost: u64,
    pub case_costs: BTreeMap<String, u64>,
    pub moves: Vec<ReportMove>,
    /// Every ordered pair, closed transitively.
    pub order: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx: Option<ApproxSummary>,
}

fn var_key(v: &Variable) -> String {
    v.to_string()
}

fn parse_var(s: &str) -> Option<Variable> {
    let (field, name) = s.split_once(':')?;
    Some(match (field, name) {
        ("c", "nu") => Variable::NuCase,
        ("r", "nu") => Variable::NuResource,
        ("c", v) if !v.is_empty() => Variable::Case(v.into()),
        ("r", v) if !v.is_empty() => Variable::Resource(v.into()),
        _ => return None,
    })
}

impl AlignmentReport {
    /// Report of an alignment; moves are listed in a topological order.
    pub fn from_alignment(net: &RcNuNet, al: &Alignment, costs: &CostTable, mode: &str) -> Self {
        let topo = al.topological_order();
        let mut at = vec![0; al.len()];
        for (k, &i) in topo.iter().enumerate() {
            at[i] = k;
        }
        let mut case_costs = BTreeMap::new();
        let moves: Vec<ReportMove> = topo
            .iter()
            .enumerate()
            .map(|(index, &i)| {
                let m = al.element(i);
                let cost = move_cost(m, net, costs);
                if let Some(c) = m.case() {
                    *case_costs.entry(c.to_string()).or_insert(0) += cost;
                }
                let transition = m.firing.as_ref().map(|f| &net.transitions[f.transition]);
                ReportMove {
                    index,
                    kind: m.kind,
                    activity: m.event.as_ref().map(|e| e.activity.clone()).or_else(|| transition.and_then(|t| t.label.clone())),
                    case: m.case().map(str::to_string),
                    transition: transition.map(|t| t.id.clone()),
                    event: m.event.as_ref().map(|e| ReportEvent {
                        id: e.id,
                        timestamp: e.timestamp,
                        resources: format_resources(&e.resources),
                    }),
                    mode: m.firing.iter().flat_map(|f| f.mode.0.iter()).map(|(k, v)| (var_key(k), v.clone())).collect(),
                    cost,
                }
            })
            .collect();
        let mut order: Vec<(usize, usize)> = al.order().pairs().into_iter().map(|(a, b)| (at[a], at[b])).collect();
        order.sort_unstable();
        AlignmentReport {
            schema_version: SCHEMA_VERSION.into(),
            mode: mode.into(),
            costs: *costs,
            total_cost: moves.iter().map(|m| m.cost).sum(),
            case_costs,
            moves,
            order,
            approx: None,
        }
    }

    /// Report of an approximation; interval move indices refer to the
    /// composition, whose size is recorded alongside.
    pub fn from_approx(net: &RcNuNet, res: &ApproxResult, costs: &CostTable) -> Self {
        let mut r = Self::from_alignment(net, &res.alignment, costs, "approx");
        r.approx = Some(ApproxSummary {
            composed_moves: res.composed.len(),
            ilp_objective: res.ilp_objective,
            ilp_proven: res.ilp_proven,
            global_fallback: res.global_fallback,
            intervals: res
                .intervals
                .iter()
                .map(|iv| ReportInterval {
                    moves: iv.interval.moves.clone(),
                    a: iv.interval.a.clone(),
                    b: iv.interval.b.clone(),
                    original_cost: iv.original_cost,
                    realigned_cost: iv.cost,
                    fallback: iv.fallback,
                })
                .collect(),
        });
        r
    }

    /// Rebuilds the alignment against the net the report was made for.
    pub fn to_alignment(&self, net: &RcNuNet) -> Result<Alignment, FormatError> {
        let bad = |i: usize, what: &str| FormatError::Invalid(format!("move {i}: {what}"));
        let mut moves = Vec::with_capacity(self.moves.len());
        for (i, rm) in self.moves.iter().enumerate() {
            if rm.index != i {
                return Err(bad(i, "indices must be 0, 1, 2, ..."));
            }
            let event = match &rm.event {
                Some(e) => Some(Event {
                    id: e.id,
                    case: rm.case.clone().ok_or_else(|| bad(i, "event without case"))?,
                    activity: rm.activity.clone().ok_or_else(|| bad(i, "event without activity"))?,
                    timestamp: e.timestamp,
                    resources: parse_resources(&e.resources).ok_or_else(|| bad(i, "bad resources"))?,
                }),
                None => None,
            };
            let firing = match &rm.transition {
                Some(t) => {
                    let t = net.transition_index(t).ok_or_else(|| bad(i, &format!("unknown transition {t}")))?;
                    let mut mode = Mode::default();
                    for (k, v) in &rm.mode {
                        mode.0.insert(parse_var(k).ok_or_else(|| bad(i, &format!("bad variable {k}")))?, v.clone());
                    }
                    Some((t, mode))
                }
                None => None,
            };
            let m = match (rm.kind, event, firing) {
                (MoveKind::Log, Some(e), None) => Move::log(e),
                (MoveKind::Model, None, Some((t, mode))) => Move::model(t, mode),
                (MoveKind::Sync, Some(e), Some((t, mode))) => Move::sync(e, t, mode),
                _ => return Err(bad(i, "fields do not match the kind")),
            };
            moves.push(m);
        }
        if let Some(&(a, b)) = self.order.iter().find(|&&(a, b)| a >= moves.len() || b >= moves.len()) {
            return Err(FormatError::Invalid(format!("order pair ({a}, {b}) out of range")));
        }
        Poset::new(moves, self.order.iter().copied()).map_err(|e| FormatError::Invalid(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Parses a report, rejecting other major schema versions.
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let found = v.get("schema_version").and_then(|s| s.as_str()).unwrap_or("").to_string();
        let major = found.split('.').next().and_then(|m| m.parse::<u32>().ok());
        if major != Some(SCHEMA_MAJOR) {
            return Err(FormatError::SchemaVersion { found, expected: SCHEMA_MAJOR });
        }
        Ok(serde_json::from_value(v)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{align_log, SearchOptions};
    use crate::approx::{approximate_alignment, ApproxOptions};
    use crate::fixtures;

    fn hospital_report() -> (RcNuNet, AlignmentReport) {
        let net = fixtures::hospital_net();
        let r = align_log(&net, &fixtures::hospital_log(), &CostTable::default(), &SearchOptions::default()).unwrap();
        let rep = AlignmentReport::from_alignment(&net, &r.alignment, &CostTable::default(), "exact");
        (net, rep)
    }

    #[test]
    fn report_round_trips_through_the_alignment() {
        let (net, rep) = hospital_report();
        let al = rep.to_alignment(&net).unwrap();
        assert_eq!(AlignmentReport::from_alignment(&net, &al, &rep.costs, "exact"), rep);
        assert_eq!(AlignmentReport::parse(&rep.to_json()).unwrap(), rep);
    }

    #[test]
    fn approx_report_round_trips() {
        let net = fixtures::hospital_net();
        let res = approximate_alignment(&net, &fixtures::hospital_violations_log(), &ApproxOptions::default()).unwrap();
        let rep = AlignmentReport::from_approx(&net, &res, &CostTable::default());
        assert_eq!(rep.approx.as_ref().unwrap().intervals.len(), 3);
        let back = AlignmentReport::parse(&rep.to_json()).unwrap();
        assert_eq!(back, rep);
        let al = back.to_alignment(&net).unwrap();
        let again = AlignmentReport { approx: rep.approx.clone(), ..AlignmentReport::from_alignment(&net, &al, &rep.costs, "approx") };
        assert_eq!(again, rep);
    }

    #[test]
    fn fitting_log_costs_nothing() {
        let (_, rep) = hospital_report();
        assert_eq!(rep.total_cost, 0);
        assert!(rep.case_costs.values().all(|&c| c == 0));
        assert!(rep.moves.iter().all(|m| m.kind == MoveKind::Sync));
    }

    #[test]
    fn other_major_versions_are_rejected() {
        let (_, mut rep) = hospital_report();
        rep.schema_version = "2.0".into();
        assert!(matches!(AlignmentReport::parse(&rep.to_json()), Err(FormatError::SchemaVersion { expected: 1, .. })));
        rep.schema_version = "1.7".into();
        assert!(AlignmentReport::parse(&rep.to_json()).is_ok());
        assert!(AlignmentReport::parse("{\"moves\": []}").is_err());
    }

    #[test]
    fn unknown_transitions_are_reported() {
        let (net, mut rep) = hospital_report();
        rep.moves[0].transition = Some("nope".into());
        assert!(rep.to_alignment(&net).is_err());
    }
}
