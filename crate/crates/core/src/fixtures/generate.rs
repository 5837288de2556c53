//! Seeded fixture generators.

use crate::align::{CostTable, SearchOptions};
use crate::approx::{compose_cases, ComposedAlignment};
use crate::eventlog::{Event, EventLog, Resource};
use crate::format::netfile::parse_net;
use crate::poset::Multiset;
use crate::rcnu::simulate::{simulate, Deviations};
use crate::rcnu::RcNuNet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub net: RcNuNet,
    pub log: EventLog,
}

fn coarsen(log: &EventLog, factor: f64) -> EventLog {
    let events: Vec<Event> = log
        .events()
        .iter()
        .map(|e| Event { timestamp: (e.timestamp / factor).floor(), ..e.clone() })
        .collect();
    EventLog::from_timestamps(events)
}

fn random_deviations(rng: &mut ChaCha8Rng) -> Deviations {
    Deviations {
        drop_events: rng.gen_bool(0.3) as usize,
        swap_resources: rng.gen_bool(0.3) as usize,
        reorder_contention: rng.gen_bool(0.4) as usize,
    }
}

/// Simulated log on one of the bundled nets with random deviations; some logs
/// get coarser timestamps so that events of different cases become concurrent.
pub fn generated(seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (name, net) = match seed % 4 {
        0 => ("clinic", super::clinic_net()),
        1 => ("operation", super::operation_net()),
        2 => ("hospital", super::hospital_net()),
        _ => ("arrivals", super::arrivals_net()),
    };
    let cases = rng.gen_range(2..=3);
    let dev = random_deviations(&mut rng);
    let mut log = simulate(&net, cases, seed, dev).expect("bundled nets complete");
    if rng.gen_bool(0.5) {
        log = coarsen(&log, 2.0);
    }
    Fixture { name: format!("{name}-{seed}"), net, log }
}

/// Fixture with at most six events on a net with at most eight transitions.
pub fn small_fixture(seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a11);
    let (name, net, cases) = match seed % 4 {
        0 => ("clinic", super::clinic_net(), 2),
        1 => ("operation", super::operation_net(), 1 + rng.gen_range(0..2)),
        2 => ("hospital", super::hospital_net(), 1),
        _ => ("arrivals", super::arrivals_net(), 2),
    };
    let dev = random_deviations(&mut rng);
    let log = simulate(&net, cases, seed, dev).expect("bundled nets complete");
    let keep: Vec<usize> = (0..log.len().min(6)).collect();
    let mut log = log.sublog(&keep);
    if rng.gen_bool(0.5) {
        log = coarsen(&log, 2.0);
    }
    Fixture { name: format!("{name}-small-{seed}"), net, log }
}

/// A two-step net: take a desk, give it back. `instances` desks of capacity one.
pub fn desk_net(instances: usize) -> RcNuNet {
    let desks: Vec<String> = (1..=instances).map(|i| format!(r#"{{"place": "desk", "resource": "k{i}"}}"#)).collect();
    let desks = desks.join(", ");
    let text = format!(
        r#"{{
  "places": [{{"id": "start"}}, {{"id": "mid"}}, {{"id": "end"}},
             {{"id": "desk", "kind": "available", "role": "desk"}},
             {{"id": "desk_busy", "kind": "busy", "role": "desk"}}],
  "transitions": [
    {{"id": "take", "label": "take",
      "in": [{{"place": "start", "case": "c"}}, {{"place": "desk", "resource": "k"}}],
      "out": [{{"place": "mid", "case": "c"}}, {{"place": "desk_busy", "case": "c", "resource": "k"}}]}},
    {{"id": "give", "label": "give",
      "in": [{{"place": "mid", "case": "c"}}, {{"place": "desk_busy", "case": "c", "resource": "k"}}],
      "out": [{{"place": "end", "case": "c"}}, {{"place": "desk", "resource": "k"}}]}}
  ],
  "initial": [{{"place": "start", "case": "*"}}, {desks}],
  "final": [{{"place": "end", "case": "*"}}, {desks}]
}}"#
    );
    parse_net(&text).expect("desk net parses")
}

/// Per-case fitting desk logs with random, often overlapping, holding times.
/// At most eight events in total.
pub fn tiny_fixture(seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7171);
    let instances = rng.gen_range(1..=2);
    let cases = rng.gen_range(2..=if instances == 1 { 3 } else { 4 });
    let mut events = Vec::new();
    for c in 1..=cases {
        let start = rng.gen_range(0..4) as f64;
        let end = start + rng.gen_range(1..3) as f64;
        let desk = format!("k{}", rng.gen_range(1..=instances));
        let res = Multiset::from_iter([Resource::new("desk", &desk)]);
        for (act, ts) in [("take", start), ("give", end)] {
            events.push(Event {
                id: 0,
                case: format!("c{c}"),
                activity: act.to_string(),
                timestamp: ts,
                resources: res.clone(),
            });
        }
    }
    events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    for (i, e) in events.iter_mut().enumerate() {
        e.id = i;
    }
    Fixture { name: format!("desk-{seed}"), net: desk_net(instances), log: EventLog::from_timestamps(events) }
}

/// Six-step ward process; every case has its own bed, scanners `sc1..sc{scanners}`.
pub fn ward_net(cases: usize, scanners: usize) -> RcNuNet {
    let beds: Vec<String> = (1..=cases).map(|i| format!(r#"{{"place": "bed", "resource": "b{i}"}}"#)).collect();
    let scans: Vec<String> = (1..=scanners).map(|i| format!(r#"{{"place": "scan", "resource": "sc{i}"}}"#)).collect();
    let res = [beds, scans].concat().join(", ");
    let text = format!(
        r#"{{
  "places": [{{"id": "start"}}, {{"id": "w1"}}, {{"id": "w2"}}, {{"id": "w3"}}, {{"id": "w4"}}, {{"id": "w5"}}, {{"id": "end"}},
             {{"id": "bed", "kind": "available", "role": "bed"}},
             {{"id": "bed_busy", "kind": "busy", "role": "bed"}},
             {{"id": "scan", "kind": "available", "role": "scanner"}},
             {{"id": "scan_busy", "kind": "busy", "role": "scanner"}}],
  "transitions": [
    {{"id": "admit", "label": "admit",
      "in": [{{"place": "start", "case": "c"}}, {{"place": "bed", "resource": "b"}}],
      "out": [{{"place": "w1", "case": "c"}}, {{"place": "bed_busy", "case": "c", "resource": "b"}}]}},
    {{"id": "exam", "label": "exam",
      "in": [{{"place": "w1", "case": "c"}}], "out": [{{"place": "w2", "case": "c"}}]}},
    {{"id": "scan_in", "label": "scan_in",
      "in": [{{"place": "w2", "case": "c"}}, {{"place": "scan", "resource": "s"}}],
      "out": [{{"place": "w3", "case": "c"}}, {{"place": "scan_busy", "case": "c", "resource": "s"}}]}},
    {{"id": "scan_out", "label": "scan_out",
      "in": [{{"place": "w3", "case": "c"}}, {{"place": "scan_busy", "case": "c", "resource": "s"}}],
      "out": [{{"place": "w4", "case": "c"}}, {{"place": "scan", "resource": "s"}}]}},
    {{"id": "treat", "label": "treat",
      "in": [{{"place": "w4", "case": "c"}}], "out": [{{"place": "w5", "case": "c"}}]}},
    {{"id": "discharge", "label": "discharge",
      "in": [{{"place": "w5", "case": "c"}}, {{"place": "bed_busy", "case": "c", "resource": "b"}}],
      "out": [{{"place": "end", "case": "c"}}, {{"place": "bed", "resource": "b"}}]}}
  ],
  "initial": [{{"place": "start", "case": "*"}}, {res}],
  "final": [{{"place": "end", "case": "*"}}, {res}]
}}"#
    );
    parse_net(&text).expect("ward net parses")
}

/// Ten cases of six events with layered timestamps; cases `c01` and `c02`
/// share scanner `sc1` with overlapping use, every other case has its own.
pub fn perf_fixture() -> Fixture {
    let cases = 10;
    let net = ward_net(cases, cases - 1);
    Fixture { name: "ward-perf".into(), net, log: contention_log(cases) }
}

/// The log of [`perf_fixture`] for any number of cases (at least two).
pub fn contention_log(cases: usize) -> EventLog {
    let acts = ["admit", "exam", "scan_in", "scan_out", "treat", "discharge"];
    let mut events = Vec::new();
    for c in 1..=cases {
        let scanner = format!("sc{}", if c <= 2 { 1 } else { c - 1 });
        let bed = format!("b{c}");
        for (k, act) in acts.iter().enumerate() {
            let mut ts = (k as f64 + 1.0) * 10.0;
            if c == 2 && (*act == "scan_in" || *act == "scan_out") {
                ts += 5.0;
            }
            let res = match *act {
                "admit" | "discharge" => Multiset::from_iter([Resource::new("bed", &bed)]),
                "scan_in" | "scan_out" => Multiset::from_iter([Resource::new("scanner", &scanner)]),
                _ => Multiset::new(),
            };
            events.push(Event {
                id: 0,
                case: format!("c{c:02}"),
                activity: act.to_string(),
                timestamp: ts,
                resources: res,
            });
        }
    }
    events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    for (i, e) in events.iter_mut().enumerate() {
        e.id = i;
    }
    EventLog::from_timestamps(events)
}


/// Desk and small fixtures whose per-case alignments compose to at most eight moves.
pub fn composed_fixtures() -> Vec<(Fixture, ComposedAlignment)> {
    let mut out = Vec::new();
    let all = (0..40).map(tiny_fixture).chain((0..40).map(small_fixture));
    for f in all {
        let c = compose_cases(&f.net, &f.log, &CostTable::default(), &SearchOptions::default()).expect("small fixtures align");
        if c.len() <= 8 {
            out.push((f, c));
        }
    }
    out
}
