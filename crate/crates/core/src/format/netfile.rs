//! JSON net files.
//!
//! Arc inscription fields are variable names; a missing field is the empty
//! identifier and `"nu"` creates a fresh one. In markings the case `"*"`
//! places one token per case.

use super::FormatError;
use crate::rcnu::{Arc, CaseSpec, Ins, MarkingEntry, Place, PlaceKind, RcNuNet, RcTransition, VarPair};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NetFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub places: Vec<PlaceDef>,
    pub transitions: Vec<TransitionDef>,
    #[serde(default)]
    pub initial: Vec<TokenDef>,
    #[serde(default, rename = "final")]
    pub final_marking: Vec<TokenDef>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PlaceDef {
    pub id: String,
    #[serde(default = "production", skip_serializing_if = "is_production")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
}

fn production() -> String {
    "production".into()
}

fn is_production(s: &str) -> bool {
    s == "production"
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TransitionDef {
    pub id: String,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default, rename = "in")]
    pub inputs: Vec<ArcDef>,
    #[serde(default, rename = "out")]
    pub outputs: Vec<ArcDef>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ArcDef {
    pub place: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<String>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub count: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TokenDef {
    pub place: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<String>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub count: u32,
}

fn one() -> u32 {
    1
}

fn is_one(n: &u32) -> bool {
    *n == 1
}

fn ins(s: &Option<String>) -> Ins {
    match s.as_deref() {
        None | Some("") | Some("eps") => Ins::Eps,
        Some("nu") => Ins::Nu,
        Some(v) => Ins::Var(v.to_string()),
    }
}

fn ins_out(i: &Ins) -> Option<String> {
    match i {
        Ins::Eps => None,
        Ins::Nu => Some("nu".into()),
        Ins::Var(v) => Some(v.clone()),
    }
}

impl NetFile {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("net file serializes")
    }

    pub fn into_net(self) -> Result<RcNuNet, FormatError> {
        let mut net = RcNuNet::default();
        for p in &self.places {
            let kind = match (p.kind.as_str(), &p.role) {
                ("production", _) => PlaceKind::Production,
                ("available" | "resource_available", Some(r)) => PlaceKind::Available(r.clone()),
                ("busy" | "resource_busy", Some(r)) => PlaceKind::Busy(r.clone()),
                (k, _) => return Err(FormatError::Invalid(format!("place {}: bad kind {k:?} or missing role", p.id))),
            };
            if net.place_index(&p.id).is_some() {
                return Err(FormatError::Invalid(format!("duplicate place {}", p.id)));
            }
            net.places.push(Place { id: p.id.clone(), kind });
        }
        let place = |net: &RcNuNet, id: &str| net.place_index(id).ok_or_else(|| FormatError::UnknownPlace(id.to_string()));
        for t in &self.transitions {
            if net.transition_index(&t.id).is_some() {
                return Err(FormatError::Invalid(format!("duplicate transition {}", t.id)));
            }
            let arcs = |defs: &[ArcDef]| -> Result<Vec<Arc>, FormatError> {
                defs.iter()
                    .map(|a| {
                        Ok(Arc {
                            place: place(&net, &a.place)?,
                            inscription: VarPair::new(ins(&a.case), ins(&a.resource)),
                            count: a.count,
                        })
                    })
                    .collect()
            };
            let tr = RcTransition {
                id: t.id.clone(),
                label: t.label.clone().filter(|l| !l.is_empty()),
                inputs: arcs(&t.inputs)?,
                outputs: arcs(&t.outputs)?,
            };
            net.transitions.push(tr);
        }
        let entries = |defs: &[TokenDef]| -> Result<Vec<MarkingEntry>, FormatError> {
            defs.iter()
                .map(|d| {
                    Ok(MarkingEntry {
                        place: place(&net, &d.place)?,
                        case: match d.case.as_deref() {
                            None | Some("") => CaseSpec::Eps,
                            Some("*") => CaseSpec::EachCase,
                            Some(c) => CaseSpec::Id(c.to_string()),
                        },
                        resource: d.resource.clone().filter(|r| !r.is_empty()),
                        count: d.count,
                    })
                })
                .collect()
        };
        let initial = entries(&self.initial)?;
        let final_marking = entries(&self.final_marking)?;
        net.initial = initial;
        net.final_marking = final_marking;
        Ok(net)
    }

    pub fn from_net(net: &RcNuNet) -> Self {
        let places = net
            .places
            .iter()
            .map(|p| match &p.kind {
                PlaceKind::Production => PlaceDef { id: p.id.clone(), kind: production(), role: None },
                PlaceKind::Available(r) => PlaceDef { id: p.id.clone(), kind: "available".into(), role: Some(r.clone()) },
                PlaceKind::Busy(r) => PlaceDef { id: p.id.clone(), kind: "busy".into(), role: Some(r.clone()) },
            })
            .collect();
        let arcs = |v: &[Arc]| -> Vec<ArcDef> {
            v.iter()
                .map(|a| ArcDef {
                    place: net.places[a.place].id.clone(),
                    case: ins_out(&a.inscription.case),
                    resource: ins_out(&a.inscription.resource),
                    count: a.count,
                })
                .collect()
        };
        let tokens = |v: &[MarkingEntry]| -> Vec<TokenDef> {
            v.iter()
                .map(|e| TokenDef {
                    place: net.places[e.place].id.clone(),
                    case: match &e.case {
                        CaseSpec::Eps => None,
                        CaseSpec::EachCase => Some("*".into()),
                        CaseSpec::Id(c) => Some(c.clone()),
                    },
                    resource: e.resource.clone(),
                    count: e.count,
                })
                .collect()
        };
        NetFile {
            name: None,
            places,
            transitions: net
                .transitions
                .iter()
                .map(|t| TransitionDef {
                    id: t.id.clone(),
                    label: t.label.clone(),
                    inputs: arcs(&t.inputs),
                    outputs: arcs(&t.outputs),
                })
                .collect(),
            initial: tokens(&net.initial),
            final_marking: tokens(&net.final_marking),
        }
    }
}

pub fn parse_net(text: &str) -> Result<RcNuNet, FormatError> {
    NetFile::parse(text)?.into_net()
}

pub fn net_to_json(net: &RcNuNet) -> String {
    NetFile::from_net(net).to_json()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn round_trip() {
        for net in [fixtures::operation_net(), fixtures::hospital_net()] {
            let json = net_to_json(&net);
            assert_eq!(parse_net(&json).unwrap(), net);
        }
    }

    #[test]
    fn unknown_place() {
        let text = r#"{"places":[{"id":"a"}],"transitions":[{"id":"t","label":"t","in":[{"place":"b"}]}]}"#;
        assert!(matches!(parse_net(text), Err(FormatError::UnknownPlace(p)) if p == "b"));
    }

    #[test]
    fn bad_kind() {
        let text = r#"{"places":[{"id":"a","kind":"available"}],"transitions":[]}"#;
        assert!(matches!(parse_net(text), Err(FormatError::Invalid(_))));
    }
}
