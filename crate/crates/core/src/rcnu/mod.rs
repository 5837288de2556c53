//! Resource-constrained nu-nets: colored tokens `(case, resource)`, variable
//! inscriptions with fresh-name creation, and resource places per role.

pub mod compiled;
pub mod simulate;

use crate::net::LabeledNet;
use crate::poset::Multiset;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RcError {
    #[error("transition {transition} is not enabled in mode {mode}: {reason}")]
    NotEnabled { transition: String, mode: String, reason: String },
    #[error("unknown place {0}")]
    UnknownPlace(String),
    #[error("unknown transition {0}")]
    UnknownTransition(String),
    #[error("language enumeration exceeded {0} states")]
    StateLimit(usize),
    #[error("{0}")]
    Capacity(String),
}

/// One field of an arc inscription.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ins {
    Eps,
    Var(String),
    /// Creates a fresh identifier; only allowed on output arcs.
    Nu,
}

impl Ins {
    pub fn var(s: &str) -> Self {
        Ins::Var(s.to_string())
    }
}

impl fmt::Display for Ins {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ins::Eps => f.write_str("eps"),
            Ins::Var(v) => f.write_str(v),
            Ins::Nu => f.write_str("nu"),
        }
    }
}

/// Inscription `(case field, resource field)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarPair {
    pub case: Ins,
    pub resource: Ins,
}

impl VarPair {
    pub fn new(case: Ins, resource: Ins) -> Self {
        VarPair { case, resource }
    }
}

impl fmt::Display for VarPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.case, self.resource)
    }
}

/// A colored token; `None` stands for the empty identifier.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Token {
    pub case: Option<String>,
    pub resource: Option<String>,
}

impl Token {
    pub fn case(c: &str) -> Self {
        Token { case: Some(c.to_string()), resource: None }
    }

    pub fn resource(r: &str) -> Self {
        Token { case: None, resource: Some(r.to_string()) }
    }

    pub fn busy(c: &str, r: &str) -> Self {
        Token { case: Some(c.to_string()), resource: Some(r.to_string()) }
    }

    pub fn black() -> Self {
        Token { case: None, resource: None }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |x: &Option<String>| x.clone().unwrap_or_else(|| "eps".into());
        write!(f, "({},{})", s(&self.case), s(&self.resource))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlaceKind {
    Production,
    /// Idle instances of a role.
    Available(String),
    /// Instances of a role currently held by a case.
    Busy(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Place {
    pub id: String,
    pub kind: PlaceKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arc {
    pub place: usize,
    pub inscription: VarPair,
    pub count: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RcTransition {
    pub id: String,
    pub label: Option<String>,
    pub inputs: Vec<Arc>,
    pub outputs: Vec<Arc>,
}

/// Case field of a marking entry.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseSpec {
    Eps,
    Id(String),
    /// One token for every case the marking is instantiated with.
    EachCase,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkingEntry {
    pub place: usize,
    pub case: CaseSpec,
    pub resource: Option<String>,
    pub count: u32,
}

/// Marking template; `CaseSpec::EachCase` entries are expanded per case.
pub type MarkingTemplate = Vec<MarkingEntry>;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RcNuNet {
    pub places: Vec<Place>,
    pub transitions: Vec<RcTransition>,
    pub initial: MarkingTemplate,
    pub final_marking: MarkingTemplate,
}

/// Token multiset per place.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ColoredMarking(pub Vec<Multiset<Token>>);

impl ColoredMarking {
    pub fn empty(n_places: usize) -> Self {
        ColoredMarking(vec![Multiset::new(); n_places])
    }

    pub fn add(&mut self, place: usize, token: Token, n: u64) {
        self.0[place].insert(token, n);
    }

    pub fn count(&self, place: usize, token: &Token) -> u64 {
        self.0[place].count(token)
    }

    /// All identifiers occurring in any token.
    pub fn ids(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for ms in &self.0 {
            for (t, _) in ms.iter() {
                out.extend(t.case.iter().cloned());
                out.extend(t.resource.iter().cloned());
            }
        }
        out
    }

    pub fn leq(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a.leq(b))
    }

    pub fn sum(&self, other: &Self) -> Self {
        ColoredMarking(self.0.iter().zip(&other.0).map(|(a, b)| a.sum(b)).collect())
    }

    pub fn diff(&self, other: &Self) -> Self {
        ColoredMarking(self.0.iter().zip(&other.0).map(|(a, b)| a.diff(b)).collect())
    }
}

/// A variable of a transition; the two fields use separate namespaces.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variable {
    Case(String),
    Resource(String),
    NuCase,
    NuResource,
}

impl Variable {
    pub fn is_fresh(&self) -> bool {
        matches!(self, Variable::NuCase | Variable::NuResource)
    }

    pub fn is_case(&self) -> bool {
        matches!(self, Variable::Case(_) | Variable::NuCase)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::Case(v) => write!(f, "c:{v}"),
            Variable::Resource(v) => write!(f, "r:{v}"),
            Variable::NuCase => f.write_str("c:nu"),
            Variable::NuResource => f.write_str("r:nu"),
        }
    }
}

/// Injective binding of a transition's variables to identifiers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Mode(pub BTreeMap<Variable, String>);

impl Mode {
    pub fn get(&self, v: &Variable) -> Option<&str> {
        self.0.get(v).map(String::as_str)
    }

    /// Identifier bound to the transition's case variable, if it has exactly one.
    pub fn case_id(&self) -> Option<&str> {
        let mut it = self.0.iter().filter(|(k, _)| k.is_case());
        let first = it.next()?;
        if it.next().is_some() {
            return None;
        }
        Some(first.1)
    }

    pub fn resource_ids(&self) -> impl Iterator<Item = &str> {
        self.0.iter().filter(|(k, _)| !k.is_case()).map(|(_, v)| v.as_str())
    }

    fn field(&self, ins: &Ins, fresh: Variable, named: impl Fn(String) -> Variable) -> Option<Option<String>> {
        match ins {
            Ins::Eps => Some(None),
            Ins::Nu => self.0.get(&fresh).map(|v| Some(v.clone())),
            Ins::Var(v) => self.0.get(&named(v.clone())).map(|x| Some(x.clone())),
        }
    }

    /// The token an inscription denotes under this mode; `None` if a variable is unbound.
    pub fn apply(&self, vp: &VarPair) -> Option<Token> {
        Some(Token {
            case: self.field(&vp.case, Variable::NuCase, Variable::Case)?,
            resource: self.field(&vp.resource, Variable::NuResource, Variable::Resource)?,
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

/// Structural problems reported by [`validate_structure`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StructureViolation {
    /// Resource tokens of a role are not conserved by a transition.
    ResourceNotConserved { transition: String, role: String, consumed: Vec<Ins>, produced: Vec<Ins> },
    /// Available instances differ between initial and final marking.
    ResourceMarkingMismatch { place: String, initial: Vec<Token>, final_marking: Vec<Token> },
    /// A busy place is not empty initially or finally.
    BusyNotEmpty { place: String },
    NuOnInput { transition: String, place: String },
    UnboundOutputVariable { transition: String, variable: String },
    RoleWithoutPlaces { role: String },
}

impl StructureViolation {
    /// 1 for resource conservation, 2 for resource markings, none for the rest.
    pub fn restriction(&self) -> Option<u8> {
        match self {
            StructureViolation::ResourceNotConserved { .. } => Some(1),
            StructureViolation::ResourceMarkingMismatch { .. } | StructureViolation::BusyNotEmpty { .. } => Some(2),
            _ => None,
        }
    }
}

impl fmt::Display for StructureViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use StructureViolation::*;
        let list = |v: &[Ins]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" + ");
        let toks = |v: &[Token]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" + ");
        match self {
            ResourceNotConserved { transition, role, consumed, produced } => write!(
                f,
                "resource conservation: transition {transition} consumes [{}] but produces [{}] on role {role}",
                list(consumed),
                list(produced)
            ),
            ResourceMarkingMismatch { place, initial, final_marking } => write!(
                f,
                "resource marking: place {place} holds [{}] initially but [{}] finally",
                toks(initial),
                toks(final_marking)
            ),
            BusyNotEmpty { place } => write!(f, "resource marking: busy place {place} must be empty initially and finally"),
            NuOnInput { transition, place } => write!(f, "transition {transition} has nu on input arc from {place}"),
            UnboundOutputVariable { transition, variable } => {
                write!(f, "transition {transition} uses {variable} on an output arc but not on any input arc")
            }
            RoleWithoutPlaces { role } => write!(f, "role {role} needs one available and one busy place"),
        }
    }
}

impl RcNuNet {
    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.places.iter().position(|p| p.id == id)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    /// Roles with their available and busy place, sorted by role name.
    pub fn roles(&self) -> BTreeMap<String, (Option<usize>, Option<usize>)> {
        let mut out: BTreeMap<String, (Option<usize>, Option<usize>)> = BTreeMap::new();
        for (i, p) in self.places.iter().enumerate() {
            match &p.kind {
                PlaceKind::Available(r) => out.entry(r.clone()).or_default().0 = Some(i),
                PlaceKind::Busy(r) => out.entry(r.clone()).or_default().1 = Some(i),
                PlaceKind::Production => {}
            }
        }
        out
    }

    pub fn role_of(&self, place: usize) -> Option<&str> {
        match &self.places[place].kind {
            PlaceKind::Available(r) | PlaceKind::Busy(r) => Some(r),
            PlaceKind::Production => None,
        }
    }

    /// Resource instances per role with their capacity, read from the initial marking.
    pub fn resource_capacities(&self) -> BTreeMap<String, (String, u64)> {
        let m = self.initial_marking(&[]);
        let mut out = BTreeMap::new();
        for (i, p) in self.places.iter().enumerate() {
            if let PlaceKind::Available(role) = &p.kind {
                for (tok, n) in m.0[i].iter() {
                    if let Some(r) = &tok.resource {
                        let e = out.entry(r.clone()).or_insert((role.clone(), 0));
                        e.1 += n;
                    }
                }
            }
        }
        out
    }

    fn instantiate(&self, template: &MarkingTemplate, cases: &[String]) -> ColoredMarking {
        let mut m = ColoredMarking::empty(self.places.len());
        for e in template {
            let cs: Vec<Option<String>> = match &e.case {
                CaseSpec::Eps => vec![None],
                CaseSpec::Id(c) => vec![Some(c.clone())],
                CaseSpec::EachCase => cases.iter().cloned().map(Some).collect(),
            };
            for c in cs {
                m.add(e.place, Token { case: c, resource: e.resource.clone() }, e.count as u64);
            }
        }
        m
    }

    pub fn initial_marking(&self, cases: &[String]) -> ColoredMarking {
        self.instantiate(&self.initial, cases)
    }

    pub fn final_marking_for(&self, cases: &[String]) -> ColoredMarking {
        self.instantiate(&self.final_marking, cases)
    }

    /// Whether the markings mention per-case tokens that get expanded.
    pub fn has_case_template(&self) -> bool {
        self.initial.iter().chain(&self.final_marking).any(|e| e.case == CaseSpec::EachCase)
    }

    /// Variables of transition `t`, sorted.
    pub fn variables(&self, t: usize) -> Vec<Variable> {
        let tr = &self.transitions[t];
        let mut vars = BTreeSet::new();
        for a in tr.inputs.iter().chain(&tr.outputs) {
            if let Some(v) = case_var(&a.inscription.case) {
                vars.insert(v);
            }
            if let Some(v) = res_var(&a.inscription.resource) {
                vars.insert(v);
            }
        }
        vars.into_iter().collect()
    }

    /// Place/transition skeleton counting tokens regardless of color.
    pub fn skeleton(&self) -> LabeledNet {
        let mut n = LabeledNet::new();
        for p in &self.places {
            n.add_place(p.id.clone());
        }
        for tr in &self.transitions {
            let t = n.add_transition(tr.id.clone(), tr.label.as_deref());
            for a in &tr.inputs {
                n.add_input(a.place, t, a.count as u64);
            }
            for a in &tr.outputs {
                n.add_output(t, a.place, a.count as u64);
            }
        }
        n
    }

    /// Pre-multiset of `t` under `mode`, as `(place, token, count)`.
    pub fn consumed(&self, t: usize, mode: &Mode) -> Option<Vec<(usize, Token, u64)>> {
        self.transitions[t].inputs.iter().map(|a| Some((a.place, mode.apply(&a.inscription)?, a.count as u64))).collect()
    }

    pub fn produced(&self, t: usize, mode: &Mode) -> Option<Vec<(usize, Token, u64)>> {
        self.transitions[t].outputs.iter().map(|a| Some((a.place, mode.apply(&a.inscription)?, a.count as u64))).collect()
    }
}

fn case_var(i: &Ins) -> Option<Variable> {
    match i {
        Ins::Eps => None,
        Ins::Var(v) => Some(Variable::Case(v.clone())),
        Ins::Nu => Some(Variable::NuCase),
    }
}

fn res_var(i: &Ins) -> Option<Variable> {
    match i {
        Ins::Eps => None,
        Ins::Var(v) => Some(Variable::Resource(v.clone())),
        Ins::Nu => Some(Variable::NuResource),
    }
}

/// Checks resource conservation per transition and role, resource place
/// markings, and well-formedness of inscriptions.
pub fn validate_structure(net: &RcNuNet) -> Vec<StructureViolation> {
    let mut out = Vec::new();
    let roles = net.roles();
    for (role, (avail, busy)) in &roles {
        if avail.is_none() || busy.is_none() {
            out.push(StructureViolation::RoleWithoutPlaces { role: role.clone() });
        }
    }
    for tr in &net.transitions {
        for a in &tr.inputs {
            if a.inscription.case == Ins::Nu || a.inscription.resource == Ins::Nu {
                out.push(StructureViolation::NuOnInput {
                    transition: tr.id.clone(),
                    place: net.places[a.place].id.clone(),
                });
            }
        }
        let bound: BTreeSet<Variable> = tr
            .inputs
            .iter()
            .flat_map(|a| [case_var(&a.inscription.case), res_var(&a.inscription.resource)])
            .flatten()
            .collect();
        let mut reported = BTreeSet::new();
        for a in &tr.outputs {
            for v in [case_var(&a.inscription.case), res_var(&a.inscription.resource)].into_iter().flatten() {
                if !v.is_fresh() && !bound.contains(&v) && reported.insert(v.clone()) {
                    out.push(StructureViolation::UnboundOutputVariable {
                        transition: tr.id.clone(),
                        variable: v.to_string(),
                    });
                }
            }
        }
        for role in roles.keys() {
            let side = |arcs: &[Arc]| -> Vec<Ins> {
                let mut v: Vec<Ins> = arcs
                    .iter()
                    .filter(|a| net.role_of(a.place) == Some(role.as_str()))
                    .flat_map(|a| std::iter::repeat(a.inscription.resource.clone()).take(a.count as usize))
                    .collect();
                v.sort();
                v
            };
            let (consumed, produced) = (side(&tr.inputs), side(&tr.outputs));
            if consumed != produced {
                out.push(StructureViolation::ResourceNotConserved {
                    transition: tr.id.clone(),
                    role: role.clone(),
                    consumed,
                    produced,
                });
            }
        }
    }
    let mi = net.initial_marking(&[]);
    let mf = net.final_marking_for(&[]);
    let has_each = |tpl: &MarkingTemplate, p: usize| tpl.iter().any(|e| e.place == p && e.case == CaseSpec::EachCase);
    let flat = |m: &Multiset<Token>| -> Vec<Token> {
        m.iter().flat_map(|(t, n)| std::iter::repeat(t.clone()).take(n as usize)).collect()
    };
    for (i, p) in net.places.iter().enumerate() {
        match p.kind {
            PlaceKind::Available(_) => {
                if mi.0[i] != mf.0[i] || has_each(&net.initial, i) != has_each(&net.final_marking, i) {
                    out.push(StructureViolation::ResourceMarkingMismatch {
                        place: p.id.clone(),
                        initial: flat(&mi.0[i]),
                        final_marking: flat(&mf.0[i]),
                    });
                }
            }
            PlaceKind::Busy(_) => {
                if !mi.0[i].is_empty() || !mf.0[i].is_empty() || has_each(&net.initial, i) || has_each(&net.final_marking, i)
                {
                    out.push(StructureViolation::BusyNotEmpty { place: p.id.clone() });
                }
            }
            PlaceKind::Production => {}
        }
    }
    out
}

/// Reference enumeration of the modes enabling `t` in `m`, sorted.
///
/// Named variables range over identifiers found in the matching token field of
/// the places they read from; fresh variables range over `fresh_pool` minus the
/// identifiers present in `m`.
pub fn enabled_modes(net: &RcNuNet, m: &ColoredMarking, t: usize, fresh_pool: &[String]) -> Vec<Mode> {
    let vars = net.variables(t);
    let tr = &net.transitions[t];
    let present = m.ids();
    let fresh: Vec<String> = fresh_pool.iter().filter(|x| !present.contains(*x)).cloned().collect();
    let domains: Vec<Vec<String>> = vars
        .iter()
        .map(|v| {
            if v.is_fresh() {
                return fresh.clone();
            }
            let mut d = BTreeSet::new();
            for a in &tr.inputs {
                let hit = match v {
                    Variable::Case(x) => a.inscription.case == Ins::Var(x.clone()),
                    Variable::Resource(x) => a.inscription.resource == Ins::Var(x.clone()),
                    _ => false,
                };
                if hit {
                    for (tok, _) in m.0[a.place].iter() {
                        let f = if v.is_case() { &tok.case } else { &tok.resource };
                        d.extend(f.iter().cloned());
                    }
                }
            }
            d.into_iter().collect()
        })
        .collect();
    let mut out = BTreeSet::new();
    let mut current: Vec<String> = Vec::with_capacity(vars.len());
    assign_rec(net, m, t, &vars, &domains, &mut current, &mut out);
    out.into_iter().collect()
}

fn assign_rec(
    net: &RcNuNet,
    m: &ColoredMarking,
    t: usize,
    vars: &[Variable],
    domains: &[Vec<String>],
    current: &mut Vec<String>,
    out: &mut BTreeSet<Mode>,
) {
    let k = current.len();
    if k == vars.len() {
        let mode = Mode(vars.iter().cloned().zip(current.iter().cloned()).collect());
        if check_enabled(net, m, t, &mode).is_ok() {
            out.insert(mode);
        }
        return;
    }
    for val in &domains[k] {
        if current.contains(val) {
            continue;
        }
        current.push(val.clone());
        assign_rec(net, m, t, vars, domains, current, out);
        current.pop();
    }
}

fn check_enabled(net: &RcNuNet, m: &ColoredMarking, t: usize, mode: &Mode) -> Result<(), String> {
    let vars = net.variables(t);
    for v in &vars {
        if mode.get(v).is_none() {
            return Err(format!("variable {v} unbound"));
        }
    }
    if mode.0.keys().any(|k| !vars.contains(k)) {
        return Err("mode binds variables the transition does not use".into());
    }
    let vals: BTreeSet<&String> = mode.0.values().collect();
    if vals.len() != mode.0.len() {
        return Err("mode is not injective".into());
    }
    let present = m.ids();
    for v in [Variable::NuCase, Variable::NuResource] {
        if let Some(x) = mode.get(&v) {
            if present.contains(x) {
                return Err(format!("fresh identifier {x} already present"));
            }
        }
    }
    let mut demand: HashMap<(usize, Token), u64> = HashMap::new();
    for (p, tok, n) in net.consumed(t, mode).ok_or("unbound input variable")? {
        *demand.entry((p, tok)).or_insert(0) += n;
    }
    for ((p, tok), n) in demand {
        if m.count(p, &tok) < n {
            return Err(format!("place {} lacks {n} x {tok}", net.places[p].id));
        }
    }
    Ok(())
}

pub fn is_enabled(net: &RcNuNet, m: &ColoredMarking, t: usize, mode: &Mode) -> bool {
    check_enabled(net, m, t, mode).is_ok()
}

pub fn fire_mode(net: &RcNuNet, m: &ColoredMarking, t: usize, mode: &Mode) -> Result<ColoredMarking, RcError> {
    check_enabled(net, m, t, mode).map_err(|reason| RcError::NotEnabled {
        transition: net.transitions[t].id.clone(),
        mode: mode.to_string(),
        reason,
    })?;
    let mut out = m.clone();
    for (p, tok, n) in net.consumed(t, mode).unwrap() {
        out.0[p].remove(&tok, n);
    }
    for (p, tok, n) in net.produced(t, mode).unwrap() {
        out.0[p].insert(tok, n);
    }
    Ok(out)
}

/// Visible step `(label, case)` of an RC language word.
pub type CaseStep = (String, Option<String>);

/// Case-annotated visible words of firing sequences from `m_i` to `m_f` with at most `max_len` firings.
pub fn language(
    net: &RcNuNet,
    m_i: &ColoredMarking,
    m_f: &ColoredMarking,
    max_len: usize,
    fresh_pool: &[String],
) -> Result<BTreeSet<Vec<CaseStep>>, RcError> {
    let mut memo = HashMap::new();
    let mut visited = 0;
    lang_rec(net, m_i, m_f, max_len, fresh_pool, &mut memo, &mut visited)
}

type LangMemo = HashMap<(ColoredMarking, usize), BTreeSet<Vec<CaseStep>>>;

fn lang_rec(
    net: &RcNuNet,
    m: &ColoredMarking,
    m_f: &ColoredMarking,
    budget: usize,
    pool: &[String],
    memo: &mut LangMemo,
    visited: &mut usize,
) -> Result<BTreeSet<Vec<CaseStep>>, RcError> {
    if let Some(s) = memo.get(&(m.clone(), budget)) {
        return Ok(s.clone());
    }
    *visited += 1;
    if *visited > crate::net::LANGUAGE_STATE_LIMIT {
        return Err(RcError::StateLimit(crate::net::LANGUAGE_STATE_LIMIT));
    }
    let mut out = BTreeSet::new();
    if m == m_f {
        out.insert(Vec::new());
    }
    if budget > 0 {
        for t in 0..net.transitions.len() {
            for mode in enabled_modes(net, m, t, pool) {
                let next = fire_mode(net, m, t, &mode)?;
                for mut w in lang_rec(net, &next, m_f, budget - 1, pool, memo, visited)? {
                    if let Some(l) = &net.transitions[t].label {
                        w.insert(0, (l.clone(), mode.case_id().map(str::to_string)));
                    }
                    out.insert(w);
                }
            }
        }
    }
    memo.insert((m.clone(), budget), out.clone());
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::fixtures;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn operation_net_is_valid() {
        assert_eq!(validate_structure(&fixtures::operation_net()), vec![]);
        assert_eq!(validate_structure(&fixtures::hospital_net()), vec![]);
    }

    #[test]
    fn missing_release_arc_is_reported() {
        let mut net = fixtures::operation_net();
        let t = net.transition_index("o_c").unwrap();
        let ps = net.place_index("p_s").unwrap();
        net.transitions[t].outputs.retain(|a| a.place != ps);
        let v = validate_structure(&net);
        assert_eq!(v.len(), 1);
        match &v[0] {
            StructureViolation::ResourceNotConserved { transition, consumed, produced, .. } => {
                assert_eq!(transition, "o_c");
                assert_eq!(consumed, &vec![Ins::var("r")]);
                assert!(produced.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(v[0].to_string().contains("o_c"));
    }

    #[test]
    fn unequal_resource_markings_are_reported() {
        let mut net = fixtures::operation_net();
        let ps = net.place_index("p_s").unwrap();
        net.final_marking.retain(|e| !(e.place == ps && e.resource.as_deref() == Some("y")));
        let v = validate_structure(&net);
        assert!(matches!(&v[..], [StructureViolation::ResourceMarkingMismatch { place, .. }] if place == "p_s"));
    }

    #[test]
    fn nu_and_unbound_outputs_are_rejected() {
        let mut net = fixtures::operation_net();
        let t = net.transition_index("o_a").unwrap();
        net.transitions[t].inputs[0].inscription.case = Ins::Nu;
        let v = validate_structure(&net);
        assert!(v.iter().any(|x| matches!(x, StructureViolation::NuOnInput { .. })));
        assert!(v.iter().any(|x| matches!(x, StructureViolation::UnboundOutputVariable { .. })));
    }

    #[test]
    fn modes_of_open_surgery() {
        let net = fixtures::operation_net();
        let cases = ids(&["c", "d"]);
        let m = net.initial_marking(&cases);
        let o_p = net.transition_index("o_p").unwrap();
        let modes = enabled_modes(&net, &m, o_p, &[]);
        assert_eq!(modes.len(), 2);
        let m = fire_mode(&net, &m, o_p, &modes[0]).unwrap();
        let o_so = net.transition_index("o_so").unwrap();
        let modes = enabled_modes(&net, &m, o_so, &[]);
        let shown: Vec<String> = modes.iter().map(|m| m.to_string()).collect();
        assert_eq!(shown, vec!["{c:c=c, r:r=x}", "{c:c=c, r:r=y}"]);
    }

    #[test]
    fn fire_rejects_non_injective_and_stale_fresh() {
        let net = fixtures::operation_net();
        let m = net.initial_marking(&ids(&["x"]));
        let o_p = net.transition_index("o_p").unwrap();
        let mode = Mode([(Variable::Case("c".into()), "x".into())].into_iter().collect());
        // case "x" collides with resource "x" only across different tokens, which is allowed
        assert!(fire_mode(&net, &m, o_p, &mode).is_ok());
        let o_so = net.transition_index("o_so").unwrap();
        let m2 = fire_mode(&net, &m, o_p, &mode).unwrap();
        let bad = Mode(
            [(Variable::Case("c".into()), "x".into()), (Variable::Resource("r".into()), "x".into())]
                .into_iter()
                .collect(),
        );
        assert!(fire_mode(&net, &m2, o_so, &bad).is_err());
    }

    #[test]
    fn rc_language_separates_cases() {
        let net = fixtures::operation_net();
        let cases = ids(&["c", "d"]);
        let mi = net.initial_marking(&cases);
        let mf = net.final_marking_for(&cases);
        let lang = language(&net, &mi, &mf, 12, &[]).unwrap();
        let step = |l: &str, c: &str| (l.to_string(), Some(c.to_string()));
        let impossible = vec![
            step("o_p", "c"),
            step("o_a", "c"),
            step("o_sc", "c"),
            step("o_p", "d"),
            step("o_a", "d"),
            step("o_so", "d"),
            step("o_c", "c"),
        ];
        assert!(!lang.contains(&impossible));
        let mut fine = impossible.clone();
        fine[6] = step("o_c", "d");
        assert!(lang.contains(&fine));
    }
}
