use crate::eventlog::{Event, EventLog};
use crate::lognet::{build_log_net, LogNet};
use crate::rcnu::{RcNuNet, Variable};
use std::collections::BTreeSet;

/// A model transition paired with a log event (by position).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SyncPair {
    pub transition: usize,
    pub event: usize,
}

/// Model, log net and the synchronous transitions between them.
///
/// The joint net is kept implicit: a sync transition consumes and produces
/// what its model and log halves do, with the model's case variable bound to
/// the event's case and its resource variables onto the event's instances.
#[derive(Clone, Debug)]
pub struct SyncProduct<'a> {
    pub model: &'a RcNuNet,
    pub log: &'a EventLog,
    pub log_net: LogNet,
    pub syncs: Vec<SyncPair>,
    /// Activities of the log that no model transition carries.
    pub unknown_activities: BTreeSet<String>,
}

impl SyncProduct<'_> {
    /// Model, log and sync transitions together.
    pub fn transition_count(&self) -> usize {
        self.model.transitions.len() + self.log_net.net.transitions.len() + self.syncs.len()
    }

    pub fn syncs_of(&self, event: usize) -> impl Iterator<Item = &SyncPair> {
        self.syncs.iter().filter(move |s| s.event == event)
    }
}

/// Whether transition `t` can move together with `e`: same label, one case
/// variable, no fresh resource and one named resource variable per distinct
/// instance recorded on the event.
pub fn sync_compatible(net: &RcNuNet, t: usize, e: &Event) -> bool {
    if net.transitions[t].label.as_deref() != Some(e.activity.as_str()) {
        return false;
    }
    let vars = net.variables(t);
    let cases = vars.iter().filter(|v| v.is_case()).count();
    let named_res = vars.iter().filter(|v| matches!(v, Variable::Resource(_))).count();
    cases == 1 && !vars.contains(&Variable::NuResource) && named_res == e.instances().len()
}

pub fn build_sync_product<'a>(model: &'a RcNuNet, log: &'a EventLog) -> SyncProduct<'a> {
    let labels: BTreeSet<&str> = model.transitions.iter().filter_map(|t| t.label.as_deref()).collect();
    let mut unknown = BTreeSet::new();
    let mut syncs = Vec::new();
    for (i, e) in log.events().iter().enumerate() {
        if !labels.contains(e.activity.as_str()) {
            unknown.insert(e.activity.clone());
        }
        for t in 0..model.transitions.len() {
            if sync_compatible(model, t, e) {
                syncs.push(SyncPair { transition: t, event: i });
            }
        }
    }
    for a in &unknown {
        log::warn!("activity {a} does not occur in the model; its events can only be log moves");
    }
    SyncProduct { model, log, log_net: build_log_net(log), syncs, unknown_activities: unknown }
}
