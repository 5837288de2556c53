//! Alignment cost by exhaustive exploration, for checking the search.

use super::{sync_compatible, CostTable};
use crate::eventlog::EventLog;
use crate::rcnu::{enabled_modes, fire_mode, ColoredMarking, RcNuNet};
use std::collections::{BTreeMap, BTreeSet};

/// Minimum cost over the complete state graph of the product, built with
/// the reference firing rule; relaxation until nothing changes.
pub fn brute_force_cost(net: &RcNuNet, log: &EventLog, costs: &CostTable) -> Option<u64> {
    type St = (ColoredMarking, Vec<bool>);
    let cases = log.cases();
    let start: St = (net.initial_marking(&cases), vec![false; log.len()]);
    let goal = net.final_marking_for(&cases);
    let mut pool = cases.clone();
    pool.extend(["s1".to_string(), "s2".to_string()]);
    let mut edges: Vec<(usize, usize, u64)> = Vec::new();
    let mut index: BTreeMap<St, usize> = BTreeMap::new();
    let mut states = vec![start.clone()];
    index.insert(start, 0);
    let mut i = 0;
    while i < states.len() {
        assert!(states.len() < 100_000, "oracle state cap");
        let (m, fired) = states[i].clone();
        let mut next: Vec<(St, u64)> = Vec::new();
        for (e, ev) in log.events().iter().enumerate() {
            if fired[e] || (0..log.len()).any(|p| log.lt(p, e) && !fired[p]) {
                continue;
            }
            let mut f = fired.clone();
            f[e] = true;
            next.push(((m.clone(), f.clone()), costs.visible));
            for t in 0..net.transitions.len() {
                if !sync_compatible(net, t, ev) {
                    continue;
                }
                for mode in enabled_modes(net, &m, t, &pool) {
                    let inst: BTreeSet<&str> = mode.resource_ids().collect();
                    let want: BTreeSet<String> = ev.instances().into_iter().collect();
                    let want: BTreeSet<&str> = want.iter().map(String::as_str).collect();
                    if mode.case_id() == Some(ev.case.as_str()) && inst == want {
                        next.push(((fire_mode(net, &m, t, &mode).unwrap(), f.clone()), costs.sync));
                    }
                }
            }
        }
        for t in 0..net.transitions.len() {
            let c = if net.transitions[t].label.is_some() { costs.visible } else { costs.tau };
            for mode in enabled_modes(net, &m, t, &pool) {
                next.push(((fire_mode(net, &m, t, &mode).unwrap(), fired.clone()), c));
            }
        }
        for (s, c) in next {
            let j = *index.entry(s.clone()).or_insert_with(|| {
                states.push(s);
                states.len() - 1
            });
            edges.push((i, j, c));
        }
        i += 1;
    }
    let mut dist = vec![u64::MAX; states.len()];
    dist[0] = 0;
    loop {
        let mut changed = false;
        for &(a, b, c) in &edges {
            if dist[a] != u64::MAX && dist[a] + c < dist[b] {
                dist[b] = dist[a] + c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    states
        .iter()
        .enumerate()
        .filter(|(_, (m, f))| *m == goal && f.iter().all(|&x| x))
        .map(|(k, _)| dist[k])
        .min()
}
