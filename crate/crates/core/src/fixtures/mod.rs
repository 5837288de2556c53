//! Bundled nets and logs, plus seeded generators for larger test corpora.

mod generate;

pub use generate::{composed_fixtures, contention_log, desk_net, generated, perf_fixture, small_fixture, tiny_fixture, ward_net, Fixture};

use crate::eventlog::{parse_csv, EventLog};
use crate::format::netfile::parse_net;
use crate::net::LabeledNet;
use crate::rcnu::RcNuNet;

pub const OPERATION_JSON: &str = include_str!("data/operation.json");
pub const HOSPITAL_JSON: &str = include_str!("data/hospital.json");
pub const CLINIC_JSON: &str = include_str!("data/clinic.json");
pub const ARRIVALS_JSON: &str = include_str!("data/arrivals.json");
pub const HOSPITAL_CSV: &str = include_str!("data/hospital.csv");
pub const HOSPITAL_VIOLATIONS_CSV: &str = include_str!("data/hospital_violations.csv");

/// Operation process with two surgeons `x` and `y`.
pub fn operation_net() -> RcNuNet {
    parse_net(OPERATION_JSON).expect("bundled net parses")
}

/// Intake with a GP followed by an operation with a surgeon; one of each.
pub fn hospital_net() -> RcNuNet {
    parse_net(HOSPITAL_JSON).expect("bundled net parses")
}

/// Register, consult and discharge with two doctors.
pub fn clinic_net() -> RcNuNet {
    parse_net(CLINIC_JSON).expect("bundled net parses")
}

/// Cases are created by a fresh-name transition and served at one desk.
pub fn arrivals_net() -> RcNuNet {
    parse_net(ARRIVALS_JSON).expect("bundled net parses")
}

/// Two patients, fitting, with shared GP and surgeon.
pub fn hospital_log() -> EventLog {
    parse_csv(HOSPITAL_CSV).expect("bundled log parses")
}

/// Four patients; three separate stretches where two of them hold one resource at once.
pub fn hospital_violations_log() -> EventLog {
    parse_csv(HOSPITAL_VIOLATIONS_CSV).expect("bundled log parses")
}

/// Uncolored operation process with the surgeon pool as a plain place `p_s`.
pub fn operation_classical() -> LabeledNet {
    let mut n = LabeledNet::new();
    for p in ["p_i", "p1", "p2", "p3", "p4", "p5", "p_f", "p_s"] {
        n.add_place(p);
    }
    let arcs: [(&str, Option<&str>, &[&str], &[&str]); 6] = [
        ("o_p", Some("o_p"), &["p_i"], &["p1", "p2"]),
        ("o_a", Some("o_a"), &["p1"], &["p3"]),
        ("o_sc", Some("o_sc"), &["p2", "p_s"], &["p4", "p_s"]),
        ("o_so", Some("o_so"), &["p2", "p_s"], &["p5"]),
        ("o_c", Some("o_c"), &["p3", "p5"], &["p_f", "p_s"]),
        ("tau", None, &["p3", "p4"], &["p_f"]),
    ];
    for (id, label, ins, outs) in arcs {
        let t = n.add_transition(id, label);
        for s in ins {
            let p = n.place_index(s).unwrap();
            n.add_input(p, t, 1);
        }
        for s in outs {
            let p = n.place_index(s).unwrap();
            n.add_output(t, p, 1);
        }
    }
    n
}
