//! Partially ordered event logs and their CSV form.
//!
//! CSV columns are `case,activity,timestamp,resources`. Resources are
//! `role:instance` entries separated by `;`, with an optional `*count`.
//! Timestamps are numbers (seconds) or ISO-8601 date-times.

use crate::poset::{BitMatrix, Multiset, Poset};
use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column {0}")]
    MissingColumn(&'static str),
    #[error("row {row}: cannot parse timestamp {value:?}")]
    BadTimestamp { row: usize, value: String },
    #[error("row {row}: cannot parse resource entry {value:?}")]
    BadResource { row: usize, value: String },
    #[error("invalid log order: {0}")]
    Order(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Resource {
    pub role: String,
    pub instance: String,
}

impl Resource {
    pub fn new(role: &str, instance: &str) -> Self {
        Resource { role: role.into(), instance: instance.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Position in the log this event was first read into; kept by sub-logs.
    pub id: usize,
    pub case: String,
    pub activity: String,
    pub timestamp: f64,
    pub resources: Multiset<Resource>,
}

impl Event {
    /// Distinct resource instances, sorted.
    pub fn instances(&self) -> Vec<String> {
        let s: BTreeSet<String> = self.resources.support().map(|r| r.instance.clone()).collect();
        s.into_iter().collect()
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]#{}", self.activity, self.case, self.id)
    }
}

/// Events with a strict partial order over their positions.
#[derive(Clone, Debug, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
    order: BitMatrix,
}

impl EventLog {
    /// Log with an explicit order given as position pairs; closed transitively.
    pub fn new(events: Vec<Event>, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, LogError> {
        let p = Poset::new(events, pairs).map_err(|e| LogError::Order(e.to_string()))?;
        let (events, order) = p.into_parts();
        let ids: HashSet<usize> = events.iter().map(|e| e.id).collect();
        if ids.len() != events.len() {
            return Err(LogError::Order("duplicate event ids".into()));
        }
        Ok(EventLog { events, order })
    }

    /// Order from timestamps: per case by `(timestamp, position)`, across cases
    /// strictly by timestamp.
    pub fn from_timestamps(events: Vec<Event>) -> Self {
        let n = events.len();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (a, b) = (&events[i], &events[j]);
                let before = if a.case == b.case {
                    (a.timestamp, i) < (b.timestamp, j)
                } else {
                    a.timestamp < b.timestamp
                };
                if before {
                    pairs.push((i, j));
                }
            }
        }
        EventLog::new(events, pairs).expect("timestamp order is acyclic")
    }

    pub fn empty() -> Self {
        EventLog { events: Vec::new(), order: BitMatrix::new(0) }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, pos: usize) -> &Event {
        &self.events[pos]
    }

    pub fn order(&self) -> &BitMatrix {
        &self.order
    }

    /// Strict order between positions.
    pub fn lt(&self, a: usize, b: usize) -> bool {
        self.order.get(a, b)
    }

    /// Position of the event with the given id.
    pub fn position(&self, id: usize) -> Option<usize> {
        self.events.iter().position(|e| e.id == id)
    }

    pub fn by_id(&self, id: usize) -> Option<&Event> {
        self.position(id).map(|p| &self.events[p])
    }

    pub fn cases(&self) -> Vec<String> {
        let s: BTreeSet<&String> = self.events.iter().map(|e| &e.case).collect();
        s.into_iter().cloned().collect()
    }

    pub fn activities(&self) -> BTreeSet<String> {
        self.events.iter().map(|e| e.activity.clone()).collect()
    }

    pub fn resource_ids(&self) -> BTreeSet<String> {
        self.events.iter().flat_map(|e| e.resources.support().map(|r| r.instance.clone())).collect()
    }

    /// Resource instances with their role, sorted by instance.
    pub fn resources(&self) -> BTreeMap<String, String> {
        self.events
            .iter()
            .flat_map(|e| e.resources.support().map(|r| (r.instance.clone(), r.role.clone())))
            .collect()
    }

    /// Restriction to the given positions (kept in ascending position order).
    pub fn sublog(&self, positions: &[usize]) -> EventLog {
        let mut idx = positions.to_vec();
        idx.sort_unstable();
        idx.dedup();
        EventLog { events: idx.iter().map(|&i| self.events[i].clone()).collect(), order: self.order.restrict(&idx) }
    }

    pub fn project_case(&self, case: &str) -> EventLog {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.events[i].case == case).collect();
        self.sublog(&idx)
    }

    pub fn poset(&self) -> Poset<Event> {
        Poset::from_closed(self.events.clone(), self.order.clone()).expect("log order is a strict order")
    }

    /// Covering pairs of the order.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        self.order.reduction().pairs()
    }
}

/// Parses the resource column.
pub fn parse_resources(s: &str) -> Option<Multiset<Resource>> {
    let mut out = Multiset::new();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (body, count) = match part.rsplit_once('*') {
            Some((b, n)) => (b, n.trim().parse::<u64>().ok()?),
            None => (part, 1),
        };
        let (role, inst) = body.split_once(':')?;
        let (role, inst) = (role.trim(), inst.trim());
        if role.is_empty() || inst.is_empty() || count == 0 {
            return None;
        }
        out.insert(Resource::new(role, inst), count);
    }
    Some(out)
}

pub fn format_resources(r: &Multiset<Resource>) -> String {
    r.iter()
        .map(|(r, n)| if n == 1 { format!("{}:{}", r.role, r.instance) } else { format!("{}:{}*{n}", r.role, r.instance) })
        .collect::<Vec<_>>()
        .join(";")
}

/// Seconds since the epoch, from a number or an ISO-8601 date-time.
pub fn parse_timestamp(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(x) = s.parse::<f64>() {
        return x.is_finite().then_some(x);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp_micros() as f64 / 1e6);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp_micros() as f64 / 1e6);
        }
    }
    None
}

pub fn format_timestamp(t: f64) -> String {
    if t.fract() == 0.0 && t.abs() < 9e15 {
        format!("{}", t as i64)
    } else {
        format!("{t}")
    }
}

pub fn read_csv(reader: impl Read) -> Result<EventLog, LogError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| headers.iter().position(|h| h == name).ok_or(LogError::MissingColumn(name));
    let (ci, ai, ti) = (col("case")?, col("activity")?, col("timestamp")?);
    let ri = headers.iter().position(|h| h == "resources");
    let mut events = Vec::new();
    let mut seen = HashSet::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("").to_string();
        let ts_raw = get(ti);
        let timestamp = parse_timestamp(&ts_raw).ok_or(LogError::BadTimestamp { row: row + 1, value: ts_raw })?;
        let res_raw = ri.map(get).unwrap_or_default();
        let resources = parse_resources(&res_raw).ok_or(LogError::BadResource { row: row + 1, value: res_raw })?;
        let ev = Event { id: events.len(), case: get(ci), activity: get(ai), timestamp, resources };
        if !seen.insert((ev.case.clone(), ev.activity.clone(), ev.timestamp.to_bits())) {
            log::warn!("duplicate event {} of case {} at {}; keeping both", ev.activity, ev.case, ev.timestamp);
        }
        events.push(ev);
    }
    Ok(EventLog::from_timestamps(events))
}

pub fn parse_csv(text: &str) -> Result<EventLog, LogError> {
    read_csv(text.as_bytes())
}

pub fn write_csv(log: &EventLog, writer: impl Write) -> Result<(), LogError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["case", "activity", "timestamp", "resources"])?;
    for e in log.events() {
        w.write_record([
            e.case.as_str(),
            e.activity.as_str(),
            &format_timestamp(e.timestamp),
            &format_resources(&e.resources),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn to_csv_string(log: &EventLog) -> String {
    let mut buf = Vec::new();
    write_csv(log, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}
