//! Log nets: one transition per event, places for the observed order, the
//! recorded resources and the start and end of every case.

use crate::eventlog::EventLog;
use crate::rcnu::{Arc, CaseSpec, Ins, MarkingEntry, Place, PlaceKind, RcNuNet, RcTransition, VarPair};
use std::collections::BTreeSet;

/// Case variable on all log net inscriptions.
pub const CASE_VAR: &str = "c";

#[derive(Clone, Debug, PartialEq)]
pub struct LogNet {
    pub net: RcNuNet,
    /// Event id of every transition.
    pub event_of: Vec<usize>,
}

/// Resource variable of the `k`-th distinct instance of an event (instances sorted).
pub fn res_var(k: usize) -> String {
    format!("r{}", k + 1)
}

/// Builds the log net. Order places follow the covering pairs of the log order
/// plus consecutive events of each case, so every transition reads its case.
pub fn build_log_net(log: &EventLog) -> LogNet {
    let mut net = RcNuNet::default();
    let n = log.len();
    let ev = log.events();
    let prod = |net: &mut RcNuNet, id: String| {
        net.places.push(Place { id, kind: PlaceKind::Production });
        net.places.len() - 1
    };
    let mut trans: Vec<RcTransition> = ev
        .iter()
        .map(|e| RcTransition { id: format!("t_{}", e.id), label: Some(e.activity.clone()), inputs: vec![], outputs: vec![] })
        .collect();
    let cvar = || Ins::var(CASE_VAR);
    for (i, e) in ev.iter().enumerate() {
        for (k, inst) in e.instances().iter().enumerate() {
            let count: u64 = e.resources.iter().filter(|(r, _)| &r.instance == inst).map(|(_, c)| c).sum();
            let p = prod(&mut net, format!("res_{}_{}", e.id, inst));
            net.initial.push(MarkingEntry { place: p, case: CaseSpec::Eps, resource: Some(inst.clone()), count: count as u32 });
            trans[i].inputs.push(Arc { place: p, inscription: VarPair::new(Ins::Eps, Ins::Var(res_var(k))), count: count as u32 });
        }
    }
    let mut pairs: BTreeSet<(usize, usize)> = log.covers().into_iter().collect();
    let case_pos = |c: &str| -> Vec<usize> {
        let mut v: Vec<usize> = (0..n).filter(|&i| ev[i].case == c).collect();
        v.sort_by(|&a, &b| {
            if log.lt(a, b) {
                std::cmp::Ordering::Less
            } else if log.lt(b, a) {
                std::cmp::Ordering::Greater
            } else {
                a.cmp(&b)
            }
        });
        v
    };
    let cases = log.cases();
    let chains: Vec<Vec<usize>> = cases.iter().map(|c| case_pos(c)).collect();
    for chain in &chains {
        for w in chain.windows(2) {
            pairs.insert((w[0], w[1]));
        }
    }
    for &(a, b) in &pairs {
        let p = prod(&mut net, format!("ord_{}_{}", ev[a].id, ev[b].id));
        let ins = if ev[a].case == ev[b].case { VarPair::new(cvar(), Ins::Eps) } else { VarPair::new(Ins::Eps, Ins::Eps) };
        trans[a].outputs.push(Arc { place: p, inscription: ins.clone(), count: 1 });
        trans[b].inputs.push(Arc { place: p, inscription: ins, count: 1 });
    }
    for (c, chain) in cases.iter().zip(&chains) {
        let (Some(&first), Some(&last)) = (chain.first(), chain.last()) else { continue };
        let src = prod(&mut net, format!("src_{c}"));
        net.initial.push(MarkingEntry { place: src, case: CaseSpec::Id(c.clone()), resource: None, count: 1 });
        trans[first].inputs.push(Arc { place: src, inscription: VarPair::new(cvar(), Ins::Eps), count: 1 });
        let snk = prod(&mut net, format!("snk_{c}"));
        net.final_marking.push(MarkingEntry { place: snk, case: CaseSpec::Id(c.clone()), resource: None, count: 1 });
        trans[last].outputs.push(Arc { place: snk, inscription: VarPair::new(cvar(), Ins::Eps), count: 1 });
    }
    net.transitions = trans;
    LogNet { net, event_of: ev.iter().map(|e| e.id).collect() }
}
