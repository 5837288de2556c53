//! GraphViz export of nets, logs and alignment reports.
//!
//! Alignments are drawn as the transitive reduction of their order. Sync
//! moves are green, model moves purple, log moves yellow.

use super::report::AlignmentReport;
use crate::align::MoveKind;
use crate::eventlog::{format_resources, EventLog};
use crate::poset::BitMatrix;
use crate::rcnu::{Arc, PlaceKind, RcNuNet};
use std::collections::BTreeMap;
use std::fmt::Write;

const ROLE_COLORS: [&str; 6] = ["lightblue", "lightsalmon", "palegreen", "plum", "khaki", "lightpink"];

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn kind_color(k: MoveKind) -> &'static str {
    match k {
        MoveKind::Sync => "palegreen3",
        MoveKind::Model => "mediumpurple1",
        MoveKind::Log => "gold",
    }
}

fn inscription(a: &Arc) -> String {
    let s = a.inscription.to_string();
    if a.count == 1 {
        s
    } else {
        format!("{}{s}", a.count)
    }
}

/// Places as circles, resource places filled by role, transitions as boxes.
pub fn net_to_dot(net: &RcNuNet) -> String {
    let roles: Vec<String> = net.roles().into_keys().collect();
    let color = |r: &str| ROLE_COLORS[roles.iter().position(|x| x == r).unwrap_or(0) % ROLE_COLORS.len()];
    let mut out = String::from("digraph net {\n  rankdir=LR;\n");
    for (i, p) in net.places.iter().enumerate() {
        let style = match &p.kind {
            PlaceKind::Production => String::new(),
            PlaceKind::Available(r) => format!(", style=filled, fillcolor={}", color(r)),
            PlaceKind::Busy(r) => format!(", style=\"filled,dashed\", fillcolor={}", color(r)),
        };
        let _ = writeln!(out, "  p{i} [shape=circle, label={}{style}];", quote(&p.id));
    }
    for (i, t) in net.transitions.iter().enumerate() {
        let label = match &t.label {
            Some(l) if l != &t.id => format!("{}\n{l}", t.id),
            Some(_) => t.id.clone(),
            None => format!("{}\ntau", t.id),
        };
        let fill = if t.label.is_none() { ", style=filled, fillcolor=gray80" } else { "" };
        let _ = writeln!(out, "  t{i} [shape=box, label={}{fill}];", quote(&label));
        for a in &t.inputs {
            let _ = writeln!(out, "  p{} -> t{i} [label={}];", a.place, quote(&inscription(a)));
        }
        for a in &t.outputs {
            let _ = writeln!(out, "  t{i} -> p{} [label={}];", a.place, quote(&inscription(a)));
        }
    }
    out.push_str("}\n");
    out
}

/// Events with the covering pairs of the log order, clustered by case.
pub fn log_to_dot(log: &EventLog) -> String {
    let mut out = String::from("digraph log {\n  rankdir=LR;\n  node [shape=box, style=rounded];\n");
    let mut by_case: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in log.events().iter().enumerate() {
        by_case.entry(e.case.as_str()).or_default().push(i);
    }
    for (k, (case, evs)) in by_case.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{k} {{\n    label={};", quote(case));
        for &i in evs {
            let e = log.event(i);
            let mut label = format!("{}\n{}", e.activity, crate::eventlog::format_timestamp(e.timestamp));
            if !e.resources.is_empty() {
                label.push('\n');
                label.push_str(&format_resources(&e.resources));
            }
            let _ = writeln!(out, "    e{i} [label={}];", quote(&label));
        }
        out.push_str("  }\n");
    }
    for (a, b) in log.covers() {
        let _ = writeln!(out, "  e{a} -> e{b};");
    }
    out.push_str("}\n");
    out
}

/// Moves colored by kind with the covering pairs of the order.
pub fn report_to_dot(rep: &AlignmentReport) -> String {
    let n = rep.moves.len();
    let mut order = BitMatrix::new(n);
    for &(a, b) in &rep.order {
        if a < n && b < n {
            order.set(a, b);
        }
    }
    let covers = order.closure().reduction().pairs();
    let mut out = String::from("digraph alignment {\n  rankdir=LR;\n  node [shape=box, style=filled];\n");
    let _ = writeln!(out, "  label={};", quote(&format!("{} alignment, cost {}", rep.mode, rep.total_cost)));
    for m in &rep.moves {
        let top = match (&m.event, m.activity.as_deref()) {
            (Some(_), Some(a)) => a.to_string(),
            _ => ">>".to_string(),
        };
        let bottom = m.transition.as_deref().unwrap_or(">>");
        let case = m.case.as_deref().unwrap_or("-");
        let label = format!("({top}, {bottom})\n{case}");
        let _ = writeln!(out, "  m{} [label={}, fillcolor={}];", m.index, quote(&label), kind_color(m.kind));
    }
    for (a, b) in covers {
        let _ = writeln!(out, "  m{a} -> m{b};");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{align_log, CostTable, SearchOptions};
    use crate::fixtures;

    #[test]
    fn net_has_one_node_per_place_and_transition() {
        let net = fixtures::hospital_net();
        let dot = net_to_dot(&net);
        let nodes = dot.lines().filter(|l| l.contains("[shape=")).count();
        assert_eq!(nodes, net.places.len() + net.transitions.len());
        assert!(dot.contains("fillcolor="));
    }

    #[test]
    fn alignment_edges_are_the_covers() {
        let net = fixtures::hospital_net();
        let r = align_log(&net, &fixtures::hospital_log(), &CostTable::default(), &SearchOptions::default()).unwrap();
        let rep = AlignmentReport::from_alignment(&net, &r.alignment, &CostTable::default(), "exact");
        let dot = report_to_dot(&rep);
        let edges = dot.lines().filter(|l| l.contains("->")).count();
        assert_eq!(edges, r.alignment.covers().len());
        assert_eq!(dot, report_to_dot(&rep));
        assert!(dot.contains("palegreen3"));
    }

    #[test]
    fn log_edges_are_the_covers() {
        let log = fixtures::hospital_violations_log();
        let dot = log_to_dot(&log);
        assert_eq!(dot.lines().filter(|l| l.contains("->")).count(), log.covers().len());
    }

    #[test]
    fn labels_are_escaped() {
        assert_eq!(quote("a\"b\\c"), "\"a\\\"b\\\\c\"");
    }
}
