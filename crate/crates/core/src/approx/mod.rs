//! Approximate alignments: align every case alone, compose, locate resource
//! violations with an integer program and realign only around them.

mod extract;
mod model;
pub mod oracle;
mod pipeline;

pub use extract::{solve_and_extract, Extraction, Interval, IntervalSet};
pub use model::{build_ilp, build_ilp_weighted, solve_instance, IlpInstance, IlpOutcome, Weights};
pub use pipeline::{
    align_cases, approximate_alignment, compose_cases, realign_interval, ApproxError, ApproxOptions, ApproxResult, RealignedInterval,
};

use crate::align::{Alignment, Move};
use crate::eventlog::EventLog;
use crate::poset::{BitMatrix, Poset, PosetError};
use crate::rcnu::{ColoredMarking, PlaceKind, RcNuNet};
use std::collections::{BTreeMap, BTreeSet};

/// Union of per-case alignments ordered by their own orders and the log's.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposedAlignment {
    pub moves: Alignment,
    /// Case of every move, by index.
    pub case_of: Vec<String>,
    /// Cases in index order.
    pub cases: Vec<String>,
}

impl ComposedAlignment {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn initial_marking(&self, net: &RcNuNet) -> ColoredMarking {
        net.initial_marking(&self.cases)
    }

    pub fn final_marking(&self, net: &RcNuNet) -> ColoredMarking {
        net.final_marking_for(&self.cases)
    }

    /// Move indices of one case, in index order.
    pub fn case_moves(&self, case: &str) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.case_of[i] == case).collect()
    }
}

fn mode_ids(al: &Alignment) -> impl Iterator<Item = &String> {
    al.elements().iter().filter_map(|m| m.firing.as_ref()).flat_map(|f| f.mode.0.values())
}

/// Gives identifiers bound by fresh variables, other than the case's own id,
/// names no other case uses.
fn rename_fresh(net: &RcNuNet, per_case: &BTreeMap<String, Alignment>, log: &EventLog) -> BTreeMap<String, Alignment> {
    let cases: Vec<String> = per_case.keys().cloned().collect();
    let mut taken: BTreeSet<String> = net.initial_marking(&cases).ids();
    taken.extend(net.final_marking_for(&cases).ids());
    taken.extend(log.cases());
    taken.extend(log.resource_ids());
    taken.extend(cases.iter().cloned());
    for al in per_case.values() {
        taken.extend(mode_ids(al).cloned());
    }
    let mut next = 1;
    let mut out = BTreeMap::new();
    for (case, al) in per_case {
        let created: BTreeSet<String> = al
            .elements()
            .iter()
            .filter_map(|m| m.firing.as_ref())
            .flat_map(|f| f.mode.0.iter().filter(|(k, _)| k.is_fresh()).map(|(_, v)| v.clone()))
            .filter(|v| v != case)
            .collect();
        let clash = |v: &String| per_case.iter().any(|(c, other)| c != case && (c == v || mode_ids(other).any(|w| w == v)));
        let mut map = BTreeMap::new();
        for v in created.iter().filter(|v| clash(v)) {
            let name = loop {
                let n = format!("nu{next}");
                next += 1;
                if !taken.contains(&n) {
                    break n;
                }
            };
            taken.insert(name.clone());
            map.insert(v.clone(), name);
        }
        if map.is_empty() {
            out.insert(case.clone(), al.clone());
            continue;
        }
        out.insert(
            case.clone(),
            al.map(|m| {
                let mut m = m.clone();
                if let Some(f) = &mut m.firing {
                    for v in f.mode.0.values_mut() {
                        if let Some(n) = map.get(v) {
                            *v = n.clone();
                        }
                    }
                }
                m
            }),
        );
    }
    out
}

/// Unites per-case alignments. Moves are indexed by case, then by position
/// in a topological order of the case's alignment. Fresh identifiers that
/// two cases would share are renamed apart first.
pub fn compose(net: &RcNuNet, per_case: &BTreeMap<String, Alignment>, log: &EventLog) -> Result<ComposedAlignment, PosetError> {
    let per_case = rename_fresh(net, per_case, log);
    let mut moves: Vec<Move> = Vec::new();
    let mut case_of = Vec::new();
    let mut pairs = Vec::new();
    for (case, al) in &per_case {
        let topo = al.topological_order();
        let base = moves.len();
        let mut at = vec![0; al.len()];
        for (k, &i) in topo.iter().enumerate() {
            at[i] = base + k;
            moves.push(al.element(i).clone());
            case_of.push(case.clone());
        }
        pairs.extend(al.order().pairs().into_iter().map(|(a, b)| (at[a], at[b])));
    }
    let pos: Vec<Option<usize>> = moves.iter().map(|m| m.event.as_ref().and_then(|e| log.position(e.id))).collect();
    for a in 0..moves.len() {
        for b in 0..moves.len() {
            if let (Some(x), Some(y)) = (pos[a], pos[b]) {
                if log.lt(x, y) {
                    pairs.push((a, b));
                }
            }
        }
    }
    let moves = Poset::new(moves, pairs)?;
    Ok(ComposedAlignment { moves, case_of, cases: per_case.keys().cloned().collect() })
}

/// Resource instances with their available place and capacity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resources {
    pub instances: Vec<String>,
    pub place: Vec<usize>,
    pub capacity: Vec<u64>,
}

impl Resources {
    pub fn of(net: &RcNuNet) -> Self {
        let roles = net.roles();
        let mut r = Resources { instances: Vec::new(), place: Vec::new(), capacity: Vec::new() };
        for (inst, (role, cap)) in net.resource_capacities() {
            if let Some((Some(p), _)) = roles.get(&role) {
                r.instances.push(inst);
                r.place.push(*p);
                r.capacity.push(cap);
            }
        }
        r
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    fn index(&self, place: usize, inst: &str) -> Option<usize> {
        (0..self.len()).find(|&k| self.place[k] == place && self.instances[k] == inst)
    }

    /// Instances a move takes from and returns to the available places.
    pub fn claims_releases(&self, net: &RcNuNet, mv: &Move) -> (Vec<u64>, Vec<u64>) {
        let mut clm = vec![0; self.len()];
        let mut rls = vec![0; self.len()];
        let Some(f) = &mv.firing else { return (clm, rls) };
        let avail = |p: usize| matches!(net.places[p].kind, PlaceKind::Available(_));
        for (side, out) in [(net.consumed(f.transition, &f.mode), &mut clm), (net.produced(f.transition, &f.mode), &mut rls)] {
            for (p, tok, n) in side.expect("mode binds the arcs") {
                if let (true, None, Some(r)) = (avail(p), &tok.case, &tok.resource) {
                    if let Some(k) = self.index(p, r) {
                        out[k] += n;
                    }
                }
            }
        }
        (clm, rls)
    }
}

/// Whether some instance has fewer tokens available before the antichain
/// `g` (of the permutation `order` of `moves`) than `g` claims.
pub fn violating_antichain(net: &RcNuNet, moves: &[Move], order: &BitMatrix, g: &[usize]) -> bool {
    let res = Resources::of(net);
    let cr: Vec<_> = moves.iter().map(|m| res.claims_releases(net, m)).collect();
    antichain_violates(&res, &cr, order, g)
}

fn antichain_violates(res: &Resources, cr: &[(Vec<u64>, Vec<u64>)], order: &BitMatrix, g: &[usize]) -> bool {
    (0..res.len()).any(|k| {
        let mut avail = res.capacity[k] as i64;
        for j in 0..cr.len() {
            if !g.contains(&j) && g.iter().any(|&x| order.get(j, x)) {
                avail += cr[j].1[k] as i64 - cr[j].0[k] as i64;
            }
        }
        let claimed: i64 = g.iter().map(|&x| cr[x].0[k] as i64).sum();
        avail < claimed
    })
}

/// Decides violation through the integer program: the composition is
/// violating iff every feasible reordering reverses some pair.
pub fn is_violating(net: &RcNuNet, comp: &ComposedAlignment, budget: usize) -> Result<bool, crate::ilp::IlpError> {
    let inst = build_ilp_weighted(net, comp, Weights { reversal: 1, new_pair: 0 });
    let out = solve_instance(&inst, budget)?;
    if !out.proven {
        return Err(crate::ilp::IlpError::BudgetExceeded { incumbent: None, nodes: out.nodes });
    }
    Ok(out.objective > 0)
}

/// Identifiers the moves' modes bind.
pub(crate) fn bound_ids<'a>(moves: impl Iterator<Item = &'a Move>) -> BTreeSet<String> {
    moves.filter_map(|m| m.firing.as_ref()).flat_map(|f| f.mode.0.values().cloned()).collect()
}

#[cfg(test)]
mod tests;
