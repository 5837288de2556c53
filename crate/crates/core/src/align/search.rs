use super::{move_cost, Alignment, CostTable, Move, MoveKind, SyncProduct};
use crate::eventlog::EventLog;
use crate::poset::Poset;
use crate::rcnu::compiled::{CMarking, CompiledNet, ModeQuery, Universe};
use crate::rcnu::{ColoredMarking, RcError, RcNuNet};
use rustc_hash::{FxHashMap, FxHasher};
use serde::Serialize;
use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::hash::Hasher;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    /// Maximum number of distinct product states.
    pub node_budget: usize,
    /// Spare fresh identifiers beyond the log's case ids.
    pub spare_ids: usize,
    /// Identifiers bound elsewhere that fresh variables must avoid.
    pub reserved: BTreeSet<String>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { node_budget: 2_000_000, spare_ids: 1, reserved: BTreeSet::new() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub expanded: usize,
    pub generated: usize,
    pub frontier: usize,
}

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("search exhausted the node budget ({} states generated, {} expanded, {} on the frontier)", .0.generated, .0.expanded, .0.frontier)]
    Exhausted(SearchStats),
    #[error("the final marking is unreachable ({} states explored)", .0.generated)]
    Unreachable(SearchStats),
    #[error("optimal alignment uses {0} tau moves, too many for the cost scale")]
    TauBound(usize),
    #[error(transparent)]
    Net(#[from] RcError),
}

#[derive(Clone, Debug)]
pub struct AlignmentResult {
    pub alignment: Alignment,
    pub cost: u64,
    pub stats: SearchStats,
}

/// Aligns a whole log from the net's initial to its final marking over the log's cases.
pub fn align_log(net: &RcNuNet, log: &EventLog, costs: &CostTable, opts: &SearchOptions) -> Result<AlignmentResult, AlignError> {
    let cases = log.cases();
    let prod = super::build_sync_product(net, log);
    optimal_alignment(&prod, &net.initial_marking(&cases), &net.final_marking_for(&cases), costs, opts)
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Step {
    kind: MoveKind,
    transition: u32,
    event: u32,
    binding: Box<[u32]>,
}

struct Node {
    key: Box<[u64]>,
    g: u64,
    parent: u32,
    step: Option<Step>,
    closed: bool,
    next: u32,
}

fn hash(key: &[u64]) -> u64 {
    let mut h = FxHasher::default();
    for &k in key {
        h.write_u64(k);
    }
    h.finish()
}

struct Table {
    nodes: Vec<Node>,
    heads: FxHashMap<u64, u32>,
}

impl Table {
    fn find(&self, h: u64, key: &[u64]) -> Option<u32> {
        let mut i = *self.heads.get(&h)?;
        while i != NONE {
            if *self.nodes[i as usize].key == *key {
                return Some(i);
            }
            i = self.nodes[i as usize].next;
        }
        None
    }

    fn insert(&mut self, h: u64, node: Node) -> u32 {
        let id = self.nodes.len() as u32;
        let prev = self.heads.insert(h, id).unwrap_or(NONE);
        self.nodes.push(Node { next: prev, ..node });
        id
    }
}

/// Fresh identifiers that appear nowhere else.
fn spare_names(taken: &BTreeSet<String>, n: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut k = 1;
    while out.len() < n {
        let name = format!("nu{k}");
        if !taken.contains(&name) {
            out.push(name);
        }
        k += 1;
    }
    out
}

/// Cheapest execution of the product from `start` (model part, log unfired)
/// to `goal` (model part, log fully fired). Uniform-cost search; among equal
/// costs the state with the smaller hash is expanded first.
pub fn optimal_alignment(
    prod: &SyncProduct,
    start: &ColoredMarking,
    goal: &ColoredMarking,
    costs: &CostTable,
    opts: &SearchOptions,
) -> Result<AlignmentResult, AlignError> {
    let net = prod.model;
    let log = prod.log;
    let n = log.len();
    let mut taken: BTreeSet<String> = start.ids();
    taken.extend(goal.ids());
    taken.extend(log.cases());
    taken.extend(log.resource_ids());
    taken.extend(opts.reserved.iter().cloned());
    let spares = spare_names(&taken, opts.spare_ids);
    let u = Universe::new(taken.iter().cloned().chain(spares.iter().cloned()))?;
    let cn = CompiledNet::new(net);
    let m0 = CMarking::from_colored(start, &u)?;
    let goal_m = CMarking::from_colored(goal, &u)?;
    let case_syms: Vec<u32> = log.cases().iter().map(|c| u.sym(c).unwrap()).collect();
    let spare_syms: Vec<u32> = spares.iter().map(|s| u.sym(s).unwrap()).collect();
    let nw = n.div_ceil(64).max(1);
    let preds: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut w = vec![0u64; nw];
            for j in 0..n {
                if log.lt(j, i) {
                    w[j / 64] |= 1 << (j % 64);
                }
            }
            w
        })
        .collect();
    let ev_case: Vec<u32> = log.events().iter().map(|e| u.sym(&e.case).unwrap()).collect();
    let ev_res: Vec<Vec<u32>> = log
        .events()
        .iter()
        .map(|e| {
            let mut v: Vec<u32> = e.instances().iter().map(|r| u.sym(r).unwrap()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    let syncs_by_event: Vec<Vec<usize>> =
        (0..n).map(|i| prod.syncs.iter().filter(|s| s.event == i).map(|s| s.transition).collect()).collect();
    let model_cost: Vec<u64> = net
        .transitions
        .iter()
        .map(|t| if t.label.is_some() { costs.visible } else { costs.tau })
        .collect();
    let mut all_fired = vec![0u64; nw];
    for i in 0..n {
        all_fired[i / 64] |= 1 << (i % 64);
    }

    let mut table = Table { nodes: Vec::new(), heads: FxHashMap::default() };
    let mut heap = BinaryHeap::new();
    let mut k0 = vec![0u64; nw];
    k0.extend_from_slice(&m0.0);
    let h0 = hash(&k0);
    table.insert(h0, Node { key: k0.into(), g: 0, parent: NONE, step: None, closed: false, next: NONE });
    heap.push(Reverse((0u64, h0, 0u32)));
    let mut stats = SearchStats::default();

    while let Some(Reverse((g, _, id))) = heap.pop() {
        let node = &mut table.nodes[id as usize];
        if node.closed || g > node.g {
            continue;
        }
        node.closed = true;
        stats.expanded += 1;
        let key = node.key.clone();
        let fired = &key[..nw];
        let m = CMarking(key[nw..].to_vec());
        if fired == &all_fired[..] && m == goal_m {
            stats.generated = table.nodes.len();
            stats.frontier = heap.len();
            let steps = path(&table, id);
            return finish(prod, &cn, &u, &m0, steps, g, stats, costs);
        }
        let is_fired = |i: usize| fired[i / 64] >> (i % 64) & 1 == 1;
        let enabled: Vec<usize> =
            (0..n).filter(|&i| !is_fired(i) && preds[i].iter().zip(fired).all(|(p, f)| p & !f == 0)).collect();
        let mut succ: Vec<(Vec<u64>, CMarking, u64, Step)> = Vec::new();
        let with_fired = |i: usize| {
            let mut f = fired.to_vec();
            f[i / 64] |= 1 << (i % 64);
            f
        };
        for &i in &enabled {
            succ.push((
                with_fired(i),
                m.clone(),
                costs.visible,
                Step { kind: MoveKind::Log, transition: NONE, event: i as u32, binding: Box::new([]) },
            ));
            for &t in &syncs_by_event[i] {
                let tr = &cn.transitions[t];
                let mut fixed = vec![None; tr.vars.len()];
                fixed[tr.case_slots[0] as usize] = Some(ev_case[i]);
                let q = ModeQuery { fixed, res_domain: Some(&ev_res[i]), fresh: &[] };
                for b in cn.modes(t, &m, &q) {
                    let m2 = cn.fire(t, &m, &b).expect("enabled");
                    succ.push((
                        with_fired(i),
                        m2,
                        costs.sync,
                        Step { kind: MoveKind::Sync, transition: t as u32, event: i as u32, binding: b.into() },
                    ));
                }
            }
        }
        let mut fresh: Vec<u32> = case_syms.iter().copied().filter(|&c| !m.contains_id(c)).collect();
        fresh.extend(spare_syms.iter().copied().find(|&s| !m.contains_id(s)));
        for t in 0..cn.transitions.len() {
            let q = ModeQuery { fixed: vec![None; cn.transitions[t].vars.len()], res_domain: None, fresh: &fresh };
            for b in cn.modes(t, &m, &q) {
                let m2 = cn.fire(t, &m, &b).expect("enabled");
                succ.push((
                    fired.to_vec(),
                    m2,
                    model_cost[t],
                    Step { kind: MoveKind::Model, transition: t as u32, event: NONE, binding: b.into() },
                ));
            }
        }
        for (mut k, m2, c, step) in succ {
            k.extend_from_slice(&m2.0);
            let h = hash(&k);
            let ng = g + c;
            match table.find(h, &k) {
                Some(j) => {
                    let nd = &mut table.nodes[j as usize];
                    if !nd.closed && ng < nd.g {
                        nd.g = ng;
                        nd.parent = id;
                        nd.step = Some(step);
                        heap.push(Reverse((ng, h, j)));
                    }
                }
                None => {
                    if table.nodes.len() >= opts.node_budget {
                        stats.generated = table.nodes.len();
                        stats.frontier = heap.len();
                        return Err(AlignError::Exhausted(stats));
                    }
                    let j = table.insert(h, Node { key: k.into(), g: ng, parent: id, step: Some(step), closed: false, next: NONE });
                    heap.push(Reverse((ng, h, j)));
                }
            }
        }
    }
    stats.generated = table.nodes.len();
    Err(AlignError::Unreachable(stats))
}

fn path(table: &Table, mut id: u32) -> Vec<Step> {
    let mut out = Vec::new();
    while let Some(s) = &table.nodes[id as usize].step {
        out.push(s.clone());
        id = table.nodes[id as usize].parent;
    }
    out.reverse();
    out
}

#[allow(clippy::too_many_arguments)]
fn finish(
    prod: &SyncProduct,
    cn: &CompiledNet,
    u: &Universe,
    m0: &CMarking,
    steps: Vec<Step>,
    cost: u64,
    stats: SearchStats,
    costs: &CostTable,
) -> Result<AlignmentResult, AlignError> {
    let net = prod.model;
    let log = prod.log;
    let mut moves = Vec::with_capacity(steps.len());
    let mut pairs = Vec::new();
    let mut supply: FxHashMap<u64, (u32, VecDeque<usize>)> = FxHashMap::default();
    for &e in &m0.0 {
        let (p, c, r, cnt) = crate::rcnu::compiled::unpack(e);
        supply.insert(crate::rcnu::compiled::key(p, c, r), (cnt, VecDeque::new()));
    }
    let mut move_of_event = vec![usize::MAX; log.len()];
    for (idx, s) in steps.iter().enumerate() {
        let ev = (s.event != NONE).then(|| log.event(s.event as usize).clone());
        if s.event != NONE {
            move_of_event[s.event as usize] = idx;
        }
        if s.transition == NONE {
            moves.push(Move::log(ev.unwrap()));
            continue;
        }
        let t = s.transition as usize;
        let mode = cn.to_mode(t, &s.binding, u);
        moves.push(match s.kind {
            MoveKind::Sync => Move::sync(ev.unwrap(), t, mode),
            _ => Move::model(t, mode),
        });
        for &fs in &cn.transitions[t].fresh_slots {
            let x = s.binding[fs as usize];
            for (j, prev) in steps[..idx].iter().enumerate() {
                if prev.binding.contains(&x) {
                    pairs.push((j, idx));
                }
            }
        }
        let (pre, post) = cn.effect(t, &s.binding);
        for (k, cnt) in pre {
            let entry = supply.entry(k).or_insert((0, VecDeque::new()));
            for _ in 0..cnt {
                if entry.0 > 0 {
                    entry.0 -= 1;
                } else {
                    let p = entry.1.pop_front().expect("consumed token was produced");
                    pairs.push((p, idx));
                }
            }
        }
        for (k, cnt) in post {
            let entry = supply.entry(k).or_insert((0, VecDeque::new()));
            for _ in 0..cnt {
                entry.1.push_back(idx);
            }
        }
    }
    for a in 0..log.len() {
        for b in 0..log.len() {
            if log.lt(a, b) {
                pairs.push((move_of_event[a], move_of_event[b]));
            }
        }
    }
    let alignment = Poset::new(moves, pairs).expect("search order is acyclic");
    let taus = alignment
        .elements()
        .iter()
        .filter(|m| m.kind == MoveKind::Model && net.transitions[m.firing.as_ref().unwrap().transition].label.is_none())
        .count() as u64;
    if costs.tau > 0 && costs.visible > 0 && taus * costs.tau >= costs.visible {
        return Err(AlignError::TauBound(taus as usize));
    }
    debug_assert_eq!(cost, alignment.elements().iter().map(|m| move_cost(m, net, costs)).sum::<u64>());
    Ok(AlignmentResult { alignment, cost, stats })
}
