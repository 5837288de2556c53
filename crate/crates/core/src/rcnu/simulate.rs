//! Seeded random simulation of nets into event logs, with optional injected deviations.

use super::compiled::{CMarking, CompiledNet, ModeQuery, Universe};
use super::{CaseSpec, PlaceKind, RcError, RcNuNet};
use crate::eventlog::{Event, EventLog, Resource};
use crate::poset::Multiset;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("no run reached the final marking after {0} attempts")]
    Deadlock(usize),
    #[error(transparent)]
    Net(#[from] RcError),
}

/// Counts of deviations injected after a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Deviations {
    /// Events removed from the log.
    pub drop_events: usize,
    /// Cases whose recorded resource instance is replaced by another of the same role.
    pub swap_resources: usize,
    /// Timestamp swaps that make two cases hold one instance at once.
    pub reorder_contention: usize,
}

const ATTEMPTS: usize = 20;
const MAX_STEPS: usize = 10_000;

/// Names of simulated cases.
pub fn case_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("c{i}")).collect()
}

/// Runs the net for `n_cases` cases named `c1..ck` and records visible firings.
///
/// Nets with per-case markings start every case at once; nets creating cases
/// with fresh names draw them in order from the same names. Timestamps are
/// the firing steps, so the log is totally ordered before deviations.
pub fn simulate(net: &RcNuNet, n_cases: usize, seed: u64, deviations: Deviations) -> Result<EventLog, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases = case_names(n_cases);
    let mut events = None;
    for _ in 0..ATTEMPTS {
        if let Some(ev) = run_once(net, &cases, &mut rng)? {
            events = Some(ev);
            break;
        }
    }
    let mut events = events.ok_or(SimError::Deadlock(ATTEMPTS))?;
    inject(net, &mut events, deviations, &mut rng);
    for (i, e) in events.iter_mut().enumerate() {
        e.id = i;
    }
    Ok(EventLog::from_timestamps(events))
}

fn run_once(net: &RcNuNet, cases: &[String], rng: &mut ChaCha8Rng) -> Result<Option<Vec<Event>>, SimError> {
    let per_case = net.initial.iter().any(|e| e.case == CaseSpec::EachCase);
    let start_cases: Vec<String> = if per_case { cases.to_vec() } else { Vec::new() };
    let mi = net.initial_marking(&start_cases);
    let mf = net.final_marking_for(cases);
    let mut ids: Vec<String> = cases.to_vec();
    ids.extend(mi.ids());
    ids.extend(mf.ids());
    let u = Universe::new(ids)?;
    let cn = CompiledNet::new(net);
    let mut m = CMarking::from_colored(&mi, &u)?;
    let goal = CMarking::from_colored(&mf, &u)?;
    let mut unused: Vec<u32> = if per_case { Vec::new() } else { cases.iter().map(|c| u.sym(c).unwrap()).collect() };
    let mut events = Vec::new();
    for step in 1..=MAX_STEPS {
        if m == goal {
            return Ok(Some(events));
        }
        let fresh: Vec<u32> = unused.first().copied().into_iter().collect();
        let mut choices = Vec::new();
        for t in 0..cn.transitions.len() {
            let q = ModeQuery { fixed: vec![None; cn.transitions[t].vars.len()], res_domain: None, fresh: &fresh };
            for b in cn.modes(t, &m, &q) {
                choices.push((t, b));
            }
        }
        let Some((t, b)) = choices.choose(rng).cloned() else { return Ok(None) };
        m = cn.fire(t, &m, &b).expect("enabled mode fires");
        let tr = &cn.transitions[t];
        for &s in &tr.fresh_slots {
            unused.retain(|&x| x != b[s as usize]);
        }
        let mode = cn.to_mode(t, &b, &u);
        if let (Some(label), Some(case)) = (&net.transitions[t].label, mode.case_id()) {
            let mut resources = Multiset::new();
            for a in &net.transitions[t].inputs {
                let tok = mode.apply(&a.inscription).expect("bound");
                if let Some(r) = tok.resource {
                    let role = match &net.places[a.place].kind {
                        PlaceKind::Available(r) | PlaceKind::Busy(r) => r.clone(),
                        PlaceKind::Production => "resource".to_string(),
                    };
                    resources.insert(Resource { role, instance: r }, a.count as u64);
                }
            }
            events.push(Event {
                id: events.len(),
                case: case.to_string(),
                activity: label.clone(),
                timestamp: step as f64,
                resources,
            });
        }
    }
    Ok(None)
}

fn inject(net: &RcNuNet, events: &mut Vec<Event>, d: Deviations, rng: &mut ChaCha8Rng) {
    for _ in 0..d.drop_events {
        if !events.is_empty() {
            let i = rng.gen_range(0..events.len());
            events.remove(i);
        }
    }
    let mut by_role: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (inst, (role, _)) in net.resource_capacities() {
        by_role.entry(role).or_default().insert(inst);
    }
    for _ in 0..d.swap_resources {
        let mut options: Vec<(String, Resource)> = events
            .iter()
            .flat_map(|e| e.resources.support().map(|r| (e.case.clone(), r.clone())).collect::<Vec<_>>())
            .collect();
        options.sort();
        options.dedup();
        let Some((case, res)) = options.choose(rng).cloned() else { break };
        let others: Vec<&String> =
            by_role.get(&res.role).map(|s| s.iter().filter(|x| **x != res.instance).collect()).unwrap_or_default();
        let Some(&other) = others.choose(rng) else { continue };
        let to = Resource { role: res.role.clone(), instance: other.clone() };
        for e in events.iter_mut().filter(|e| e.case == case) {
            let n = e.resources.remove(&res, u64::MAX);
            e.resources.insert(to.clone(), n);
        }
    }
    for _ in 0..d.reorder_contention {
        let mut order: Vec<usize> = (0..events.len()).collect();
        order.sort_by(|&a, &b| events[a].timestamp.total_cmp(&events[b].timestamp).then(a.cmp(&b)));
        let candidates: Vec<(usize, usize)> = order
            .windows(2)
            .map(|w| (w[0], w[1]))
            .filter(|&(a, b)| {
                events[a].case != events[b].case
                    && events[a].timestamp < events[b].timestamp
                    && events[a].instances().iter().any(|x| events[b].instances().contains(x))
            })
            .collect();
        let Some(&(a, b)) = candidates.choose(rng) else { break };
        let (ta, tb) = (events[a].timestamp, events[b].timestamp);
        events[a].timestamp = tb;
        events[b].timestamp = ta;
    }
    events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
}
