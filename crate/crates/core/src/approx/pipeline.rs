use super::{bound_ids, build_ilp, compose, solve_and_extract, ComposedAlignment, Interval};
use crate::align::{
    alignment_cost, build_sync_product, is_valid_alignment, move_effect, optimal_alignment, pseudo_fire, AlignError,
    Alignment, CostTable, Move, SearchOptions, SearchStats,
};
use crate::eventlog::EventLog;
use crate::ilp::IlpError;
use crate::poset::{BitMatrix, Poset, PosetError};
use crate::rcnu::RcNuNet;
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxOptions {
    pub costs: CostTable,
    /// Search limits for the per-case alignments.
    pub search: SearchOptions,
    /// Node budget of the reordering program.
    pub ilp_nodes: usize,
    /// Node budget of each local realignment.
    pub realign_nodes: usize,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions { costs: CostTable::default(), search: SearchOptions::default(), ilp_nodes: 20_000, realign_nodes: 200_000 }
    }
}

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("aligning case {case}: {source}")]
    Case { case: String, source: AlignError },
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error("composed order: {0}")]
    Order(#[from] PosetError),
    #[error("reordering program: {0}")]
    Ilp(#[from] IlpError),
}

/// An interval of the reordered composition with what replaces it.
#[derive(Clone, Debug)]
pub struct RealignedInterval {
    pub interval: Interval,
    pub alignment: Alignment,
    pub cost: u64,
    /// Cost of the composition's moves in the interval.
    pub original_cost: u64,
    /// Set when the search failed and every sync move was split instead.
    pub fallback: bool,
    pub stats: Option<SearchStats>,
}

#[derive(Clone, Debug)]
pub struct ApproxResult {
    pub alignment: Alignment,
    pub cost: u64,
    pub case_costs: BTreeMap<String, u64>,
    pub composed: ComposedAlignment,
    pub ilp_objective: i64,
    pub ilp_proven: bool,
    pub intervals: Vec<RealignedInterval>,
    /// Set when substituting the intervals did not give a valid alignment and
    /// the whole composition was split and serialized by case instead.
    pub global_fallback: bool,
}

/// Optimal alignment of every case on its own, computed in parallel.
pub fn align_cases(
    net: &RcNuNet,
    log: &EventLog,
    costs: &CostTable,
    opts: &SearchOptions,
) -> Result<BTreeMap<String, (Alignment, u64)>, ApproxError> {
    log.cases()
        .into_par_iter()
        .map(|case| {
            let sub = log.project_case(&case);
            let prod = build_sync_product(net, &sub);
            let one = [case.clone()];
            match optimal_alignment(&prod, &net.initial_marking(&one), &net.final_marking_for(&one), costs, opts) {
                Ok(r) => Ok((case, (r.alignment, r.cost))),
                Err(source) => Err(ApproxError::Case { case, source }),
            }
        })
        .collect()
}

/// Aligns every case and composes the results.
pub fn compose_cases(net: &RcNuNet, log: &EventLog, costs: &CostTable, opts: &SearchOptions) -> Result<ComposedAlignment, ApproxError> {
    let per = align_cases(net, log, costs, opts)?;
    let alignments: BTreeMap<String, Alignment> = per.into_iter().map(|(c, (a, _))| (c, a)).collect();
    Ok(compose(net, &alignments, log)?)
}

fn below(order: &BitMatrix, set: &[usize]) -> Vec<usize> {
    (0..order.len()).filter(|g| !set.contains(g) && set.iter().any(|&v| order.get(*g, v))).collect()
}

/// Every sync move of the interval becomes a model and a log move; model
/// moves keep `order`, log moves keep the log's order.
fn split(comp: &ComposedAlignment, log: &EventLog, order: &BitMatrix, set: &[usize]) -> Alignment {
    let mut moves = Vec::new();
    let mut model_of = BTreeMap::new();
    let mut log_of = BTreeMap::new();
    for &g in set {
        let m = comp.moves.element(g);
        if let Some(f) = &m.firing {
            model_of.insert(g, moves.len());
            moves.push(Move::model(f.transition, f.mode.clone()));
        }
        if let Some(e) = &m.event {
            log_of.insert(g, (moves.len(), log.position(e.id).expect("event of the log")));
            moves.push(Move::log(e.clone()));
        }
    }
    let mut pairs = Vec::new();
    for (&g, &a) in &model_of {
        for (&h, &b) in &model_of {
            if order.get(g, h) {
                pairs.push((a, b));
            }
        }
    }
    for &(a, x) in log_of.values() {
        for &(b, y) in log_of.values() {
            if log.lt(x, y) {
                pairs.push((a, b));
            }
        }
    }
    Poset::new(moves, pairs).expect("split orders are acyclic")
}

/// Optimal alignment of the interval's events from the marking before it to
/// the marking after it; falls back to splitting its sync moves.
pub fn realign_interval(
    net: &RcNuNet,
    log: &EventLog,
    comp: &ComposedAlignment,
    order: &BitMatrix,
    interval: &Interval,
    costs: &CostTable,
    opts: &SearchOptions,
) -> RealignedInterval {
    let set = &interval.moves;
    let m_i = comp.initial_marking(net);
    let m_a = pseudo_fire(net, &m_i, below(order, set).into_iter().map(|g| comp.moves.element(g)));
    let mut m_b = m_a.clone();
    for &g in set {
        for (p, tok, d) in move_effect(net, comp.moves.element(g)) {
            m_b.add(p, tok, d);
        }
    }
    let original_cost = set.iter().map(|&g| crate::align::move_cost(comp.moves.element(g), net, costs)).sum();
    let positions: Vec<usize> =
        set.iter().filter_map(|&g| comp.moves.element(g).event.as_ref()).map(|e| log.position(e.id).unwrap()).collect();
    let sub = log.sublog(&positions);
    let outside: Vec<&Move> = (0..comp.len()).filter(|g| !set.contains(g)).map(|g| comp.moves.element(g)).collect();
    let opts = SearchOptions { reserved: bound_ids(outside.into_iter()), ..opts.clone() };
    let fallback = |stats| {
        let alignment = split(comp, log, order, set);
        let cost = alignment_cost(&alignment, net, costs);
        RealignedInterval { interval: interval.clone(), alignment, cost, original_cost, fallback: true, stats }
    };
    let (Some(start), Some(goal)) = (m_a.to_marking(net.places.len()), m_b.to_marking(net.places.len())) else {
        log::warn!("interval boundary marking is negative; splitting its sync moves");
        return fallback(None);
    };
    let prod = build_sync_product(net, &sub);
    match optimal_alignment(&prod, &start, &goal, costs, &opts) {
        Ok(r) => RealignedInterval {
            interval: interval.clone(),
            alignment: r.alignment,
            cost: r.cost,
            original_cost,
            fallback: false,
            stats: Some(r.stats),
        },
        Err(e) => {
            log::warn!("realigning an interval of {} moves failed ({e}); splitting its sync moves", set.len());
            let stats = match e {
                AlignError::Exhausted(s) | AlignError::Unreachable(s) => Some(s),
                _ => None,
            };
            fallback(stats)
        }
    }
}

/// The moves outside every interval keep `order`; each interval is replaced
/// by its realignment, placed after what precedes any of its moves and
/// before what follows any of them.
fn substitute(comp: &ComposedAlignment, order: &BitMatrix, parts: &[RealignedInterval]) -> Result<Alignment, PosetError> {
    let n = comp.len();
    let mut region = vec![usize::MAX; n];
    for (k, p) in parts.iter().enumerate() {
        for &g in &p.interval.moves {
            region[g] = k;
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&g| region[g] == usize::MAX).collect();
    let mut elements: Vec<Move> = kept.iter().map(|&g| comp.moves.element(g).clone()).collect();
    let mut pairs = Vec::new();
    for (a, &g) in kept.iter().enumerate() {
        for (b, &h) in kept.iter().enumerate() {
            if order.get(g, h) {
                pairs.push((a, b));
            }
        }
    }
    let mut ranges = Vec::new();
    for p in parts {
        let base = elements.len();
        elements.extend(p.alignment.elements().iter().cloned());
        pairs.extend(p.alignment.order().pairs().into_iter().map(|(a, b)| (base + a, base + b)));
        ranges.push(base..elements.len());
    }
    let before = |k: usize, h: usize| parts[k].interval.moves.iter().any(|&v| order.get(v, h));
    let after = |k: usize, g: usize| parts[k].interval.moves.iter().any(|&v| order.get(g, v));
    for k in 0..parts.len() {
        for (a, &g) in kept.iter().enumerate() {
            if after(k, g) {
                pairs.extend(ranges[k].clone().map(|x| (a, x)));
            }
            if before(k, g) {
                pairs.extend(ranges[k].clone().map(|x| (x, a)));
            }
        }
        for l in 0..parts.len() {
            if k != l && parts[l].interval.moves.iter().any(|&w| before(k, w)) {
                for x in ranges[k].clone() {
                    pairs.extend(ranges[l].clone().map(|y| (x, y)));
                }
            }
        }
    }
    Poset::new(elements, pairs)
}

/// Aligns every case alone, composes, reorders with the integer program and
/// realigns the intervals around reversed pairs.
pub fn approximate_alignment(net: &RcNuNet, log: &EventLog, opts: &ApproxOptions) -> Result<ApproxResult, ApproxError> {
    let per = align_cases(net, log, &opts.costs, &opts.search)?;
    let case_costs: BTreeMap<String, u64> = per.iter().map(|(c, (_, k))| (c.clone(), *k)).collect();
    let alignments: BTreeMap<String, Alignment> = per.into_iter().map(|(c, (a, _))| (c, a)).collect();
    let comp = compose(net, &alignments, log)?;
    let m_i = comp.initial_marking(net);
    let m_f = comp.final_marking(net);
    let inst = build_ilp(net, &comp);
    let ext = solve_and_extract(&comp, &inst, opts.ilp_nodes)?;
    let realign_opts = SearchOptions { node_budget: opts.realign_nodes, ..opts.search.clone() };
    let intervals: Vec<RealignedInterval> = ext
        .intervals
        .intervals
        .par_iter()
        .map(|iv| realign_interval(net, log, &comp, &ext.order, iv, &opts.costs, &realign_opts))
        .collect();
    let mut alignment = substitute(&comp, &ext.order, &intervals)?;
    let mut global_fallback = false;
    if !is_valid_alignment(net, &m_i, &m_f, log, &alignment).is_valid() {
        log::warn!("substituted intervals do not form an alignment; serializing the cases instead");
        let serial = inst.order_of(&inst.block_triangular());
        let all: Vec<usize> = (0..comp.len()).collect();
        alignment = split(&comp, log, &serial, &all);
        global_fallback = true;
    }
    let cost = alignment_cost(&alignment, net, &opts.costs);
    Ok(ApproxResult {
        alignment,
        cost,
        case_costs,
        composed: comp,
        ilp_objective: ext.objective,
        ilp_proven: ext.proven,
        intervals,
        global_fallback,
    })
}
