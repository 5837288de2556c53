use super::pseudo::{move_effect, pseudo_fire, PseudoMarking};
use super::Alignment;
use crate::eventlog::EventLog;
use crate::rcnu::{fire_mode, ColoredMarking, RcNuNet, Token};
use petgraph::algo::dinics;
use petgraph::graph::{DiGraph, NodeIndex};
use std::collections::{BTreeMap, BTreeSet};

/// Largest transition projection replayed linearization by linearization.
pub const EXHAUSTIVE_LIMIT: usize = 8;

/// First reason an alignment is rejected. Move indices refer to the alignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// Kind and fields disagree, or a sync move's label differs from its event.
    Malformed { index: usize },
    /// A mode that is not an injective binding of exactly the transition's variables.
    BadMode { index: usize },
    MissingEvent { id: usize },
    UnknownEvent { index: usize },
    DuplicateEvent { id: usize },
    /// The log orders the events but the alignment does not.
    OrderMissing { before: usize, after: usize },
    /// A linearization of the firings gets stuck at `sequence[position]`.
    Stuck { sequence: Vec<usize>, position: usize, reason: String },
    /// Firing the moves of `prefix` leaves too few `token`s in `place` for `blocked`.
    Underflow { prefix: Vec<usize>, blocked: usize, place: usize, token: Token },
    /// A fresh identifier may already be present when `index` creates it.
    NotFresh { index: usize, id: String },
    /// All firings together do not end in the final marking.
    WrongFinal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Validity {
    pub witness: Option<Witness>,
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        self.witness.is_none()
    }
}

/// Checks that the log projection is the log with its order kept, and that
/// every linearization of the firings leads from `m_i` to `m_f`. Up to
/// [`EXHAUSTIVE_LIMIT`] firings every linearization is replayed; beyond that
/// each firing is checked against the least marking any admissible prefix can
/// leave, found as a minimum-weight closure.
pub fn is_valid_alignment(net: &RcNuNet, m_i: &ColoredMarking, m_f: &ColoredMarking, log: &EventLog, al: &Alignment) -> Validity {
    let witness = check_log(net, log, al).or_else(|| check_model(net, m_i, m_f, al));
    Validity { witness }
}

fn check_log(net: &RcNuNet, log: &EventLog, al: &Alignment) -> Option<Witness> {
    let mut move_of: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, m) in al.elements().iter().enumerate() {
        if !m.well_formed(net) {
            return Some(Witness::Malformed { index: i });
        }
        if let Some(e) = &m.event {
            match log.by_id(e.id) {
                Some(le) if le == e => {}
                _ => return Some(Witness::UnknownEvent { index: i }),
            }
            if move_of.insert(e.id, i).is_some() {
                return Some(Witness::DuplicateEvent { id: e.id });
            }
        }
    }
    for e in log.events() {
        if !move_of.contains_key(&e.id) {
            return Some(Witness::MissingEvent { id: e.id });
        }
    }
    let ev = log.events();
    for a in 0..log.len() {
        for b in 0..log.len() {
            if log.lt(a, b) && !al.lt(move_of[&ev[a].id], move_of[&ev[b].id]) {
                return Some(Witness::OrderMissing { before: ev[a].id, after: ev[b].id });
            }
        }
    }
    None
}

fn check_model(net: &RcNuNet, m_i: &ColoredMarking, m_f: &ColoredMarking, al: &Alignment) -> Option<Witness> {
    let firings: Vec<usize> = (0..al.len()).filter(|&i| al.element(i).firing.is_some()).collect();
    for &i in &firings {
        let f = al.element(i).firing.as_ref().unwrap();
        let vars = net.variables(f.transition);
        let keys: Vec<_> = f.mode.0.keys().cloned().collect();
        let vals: BTreeSet<&String> = f.mode.0.values().collect();
        if keys != vars || vals.len() != keys.len() {
            return Some(Witness::BadMode { index: i });
        }
    }
    if firings.len() <= EXHAUSTIVE_LIMIT {
        replay_all(net, m_i, m_f, al, &firings)
    } else {
        closure_check(net, m_i, m_f, al, &firings)
    }
}

fn replay_all(net: &RcNuNet, m_i: &ColoredMarking, m_f: &ColoredMarking, al: &Alignment, firings: &[usize]) -> Option<Witness> {
    let sub = al.subposet(firings);
    for lin in sub.linearizations(usize::MAX) {
        let seq: Vec<usize> = lin.iter().map(|&k| firings[k]).collect();
        let mut m = m_i.clone();
        for (pos, &i) in seq.iter().enumerate() {
            let f = al.element(i).firing.as_ref().unwrap();
            match fire_mode(net, &m, f.transition, &f.mode) {
                Ok(next) => m = next,
                Err(e) => return Some(Witness::Stuck { sequence: seq.clone(), position: pos, reason: e.to_string() }),
            }
        }
        if m != *m_f {
            return Some(Witness::WrongFinal);
        }
    }
    None
}

const INF: u64 = 1 << 50;

fn closure_check(net: &RcNuNet, m_i: &ColoredMarking, m_f: &ColoredMarking, al: &Alignment, firings: &[usize]) -> Option<Witness> {
    let all = pseudo_fire(net, m_i, firings.iter().map(|&i| al.element(i)));
    if all != PseudoMarking::from_marking(m_f) {
        return Some(Witness::WrongFinal);
    }
    let effects: Vec<BTreeMap<(usize, Token), i64>> = firings
        .iter()
        .map(|&i| {
            let mut e = BTreeMap::new();
            for (p, tok, d) in move_effect(net, al.element(i)) {
                *e.entry((p, tok)).or_insert(0) += d;
            }
            e
        })
        .collect();
    for (xi, &x) in firings.iter().enumerate() {
        let f = al.element(x).firing.as_ref().unwrap();
        let mut demand: BTreeMap<(usize, Token), i64> = BTreeMap::new();
        for (p, tok, n) in net.consumed(f.transition, &f.mode).unwrap() {
            *demand.entry((p, tok)).or_insert(0) += n as i64;
        }
        let forced: Vec<usize> = (0..firings.len()).filter(|&k| al.lt(firings[k], x)).collect();
        let free: Vec<usize> = (0..firings.len()).filter(|&k| k != xi && al.incomparable(firings[k], x)).collect();
        for ((p, tok), need) in demand {
            let base = m_i.count(p, &tok) as i64
                + forced.iter().map(|&k| effects[k].get(&(p, tok.clone())).copied().unwrap_or(0)).sum::<i64>();
            let weighted: Vec<(usize, i64)> = free
                .iter()
                .filter_map(|&k| effects[k].get(&(p, tok.clone())).map(|&w| (k, w)))
                .collect();
            let (least, chosen) = min_closure(&weighted, |a, b| al.lt(firings[b], firings[a]));
            if base + least < need {
                let top: Vec<usize> = forced.iter().chain(&chosen).map(|&k| firings[k]).collect();
                let prefix: Vec<usize> =
                    firings.iter().copied().filter(|&i| top.iter().any(|&j| al.le(i, j))).collect();
                return Some(Witness::Underflow { prefix, blocked: x, place: p, token: tok });
            }
        }
        for v in f.mode.0.iter().filter(|(k, _)| k.is_fresh()).map(|(_, v)| v) {
            let mentions = |k: usize| al.element(firings[k]).firing.as_ref().unwrap().mode.0.values().any(|x| x == v);
            if (0..firings.len()).any(|k| k != xi && mentions(k) && al.incomparable(firings[k], x)) {
                return Some(Witness::NotFresh { index: x, id: v.clone() });
            }
            let mut before = PseudoMarking::from_marking(m_i);
            for &k in &forced {
                before.apply(net, al.element(firings[k]));
            }
            let present = before
                .0
                .keys()
                .any(|(_, t)| t.case.as_deref() == Some(v.as_str()) || t.resource.as_deref() == Some(v.as_str()));
            if present {
                return Some(Witness::NotFresh { index: x, id: v.clone() });
            }
        }
    }
    None
}

/// Least total weight of a set of `items` closed under predecessors, where
/// `below(a, b)` says `b` must be taken whenever `a` is. Returns the weight
/// and the chosen items.
fn min_closure(items: &[(usize, i64)], below: impl Fn(usize, usize) -> bool) -> (i64, Vec<usize>) {
    if items.iter().all(|&(_, w)| w >= 0) {
        return (0, Vec::new());
    }
    let mut g: DiGraph<(), u64> = DiGraph::new();
    let s = g.add_node(());
    let t = g.add_node(());
    let nodes: Vec<NodeIndex> = items.iter().map(|_| g.add_node(())).collect();
    let mut gain = 0i64;
    for (i, &(_, w)) in items.iter().enumerate() {
        if w < 0 {
            g.add_edge(s, nodes[i], (-w) as u64);
            gain += -w;
        } else if w > 0 {
            g.add_edge(nodes[i], t, w as u64);
        }
    }
    for (i, &(a, _)) in items.iter().enumerate() {
        for (j, &(b, _)) in items.iter().enumerate() {
            if i != j && below(a, b) {
                g.add_edge(nodes[i], nodes[j], INF);
            }
        }
    }
    let (flow, flows) = dinics(&g, s, t);
    let mut seen = vec![false; g.node_count()];
    let mut stack = vec![s];
    seen[s.index()] = true;
    while let Some(v) = stack.pop() {
        for e in g.edges_directed(v, petgraph::Direction::Outgoing) {
            use petgraph::visit::EdgeRef;
            if flows[e.id().index()] < *e.weight() && !seen[e.target().index()] {
                seen[e.target().index()] = true;
                stack.push(e.target());
            }
        }
        for e in g.edges_directed(v, petgraph::Direction::Incoming) {
            use petgraph::visit::EdgeRef;
            if flows[e.id().index()] > 0 && !seen[e.source().index()] {
                seen[e.source().index()] = true;
                stack.push(e.source());
            }
        }
    }
    let chosen: Vec<usize> = items.iter().enumerate().filter(|(i, _)| seen[nodes[*i].index()]).map(|(_, &(k, _))| k).collect();
    (-(gain - flow as i64), chosen)
}
