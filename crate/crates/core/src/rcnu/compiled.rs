//! Integer-coded nets and packed markings for search.
//!
//! Identifiers become symbols (1-based rank in a sorted universe, 0 is the
//! empty identifier). A marking is a sorted vector of `u64` entries packing
//! place, case symbol, resource symbol and count.

use super::{ColoredMarking, Ins, Mode, RcError, RcNuNet, Token, Variable};
use std::collections::BTreeSet;

pub const EPS: u32 = 0;
const FREE: u32 = u32::MAX;
const PLACE_BITS: u32 = 14;
const ID_BITS: u32 = 17;
const COUNT_BITS: u32 = 16;
const RES_SHIFT: u32 = COUNT_BITS;
const CASE_SHIFT: u32 = RES_SHIFT + ID_BITS;
const PLACE_SHIFT: u32 = CASE_SHIFT + ID_BITS;
const ID_MASK: u64 = (1 << ID_BITS) - 1;
const COUNT_MASK: u64 = (1 << COUNT_BITS) - 1;

/// Sorted identifier table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Universe {
    ids: Vec<String>,
}

impl Universe {
    pub fn new(ids: impl IntoIterator<Item = String>) -> Result<Self, RcError> {
        let set: BTreeSet<String> = ids.into_iter().collect();
        if set.len() as u64 >= ID_MASK {
            return Err(RcError::Capacity(format!("more than {} identifiers", ID_MASK - 1)));
        }
        Ok(Universe { ids: set.into_iter().collect() })
    }

    pub fn sym(&self, id: &str) -> Option<u32> {
        self.ids.binary_search_by(|x| x.as_str().cmp(id)).ok().map(|i| i as u32 + 1)
    }

    pub fn name(&self, sym: u32) -> Option<&str> {
        if sym == EPS {
            None
        } else {
            self.ids.get(sym as usize - 1).map(String::as_str)
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn opt_sym(&self, id: &Option<String>) -> Result<u32, RcError> {
        match id {
            None => Ok(EPS),
            Some(s) => self.sym(s).ok_or_else(|| RcError::Capacity(format!("identifier {s} missing from universe"))),
        }
    }

    pub fn token(&self, t: &Token) -> Result<(u32, u32), RcError> {
        Ok((self.opt_sym(&t.case)?, self.opt_sym(&t.resource)?))
    }
}

#[inline]
pub fn key(place: u32, case: u32, res: u32) -> u64 {
    (place as u64) << PLACE_SHIFT | (case as u64) << CASE_SHIFT | (res as u64) << RES_SHIFT
}

/// `(place, case, resource, count)` of a packed entry.
#[inline]
pub fn unpack(e: u64) -> (u32, u32, u32, u32) {
    (
        (e >> PLACE_SHIFT) as u32,
        (e >> CASE_SHIFT & ID_MASK) as u32,
        (e >> RES_SHIFT & ID_MASK) as u32,
        (e & COUNT_MASK) as u32,
    )
}

#[inline]
fn key_of(e: u64) -> u64 {
    e & !COUNT_MASK
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CMarking(pub Vec<u64>);

impl CMarking {
    pub fn from_colored(m: &ColoredMarking, u: &Universe) -> Result<Self, RcError> {
        if m.0.len() as u64 >= (1 << PLACE_BITS) - 1 {
            return Err(RcError::Capacity(format!("more than {} places", (1u64 << PLACE_BITS) - 1)));
        }
        let mut v = Vec::new();
        for (p, ms) in m.0.iter().enumerate() {
            for (tok, n) in ms.iter() {
                if n > COUNT_MASK {
                    return Err(RcError::Capacity(format!("more than {COUNT_MASK} copies of one token")));
                }
                let (c, r) = u.token(tok)?;
                v.push(key(p as u32, c, r) | n);
            }
        }
        v.sort_unstable();
        Ok(CMarking(v))
    }

    pub fn to_colored(&self, n_places: usize, u: &Universe) -> ColoredMarking {
        let mut m = ColoredMarking::empty(n_places);
        for &e in &self.0 {
            let (p, c, r, n) = unpack(e);
            let tok = Token { case: u.name(c).map(str::to_string), resource: u.name(r).map(str::to_string) };
            m.add(p as usize, tok, n as u64);
        }
        m
    }

    pub fn count(&self, k: u64) -> u32 {
        let i = self.0.partition_point(|&e| key_of(e) < k);
        match self.0.get(i) {
            Some(&e) if key_of(e) == k => (e & COUNT_MASK) as u32,
            _ => 0,
        }
    }

    pub fn place_entries(&self, place: u32) -> &[u64] {
        let lo = (place as u64) << PLACE_SHIFT;
        let hi = (place as u64 + 1) << PLACE_SHIFT;
        let a = self.0.partition_point(|&e| e < lo);
        let b = self.0.partition_point(|&e| e < hi);
        &self.0[a..b]
    }

    pub fn contains_id(&self, sym: u32) -> bool {
        self.0.iter().any(|&e| {
            let (_, c, r, _) = unpack(e);
            c == sym || r == sym
        })
    }

    /// Adds signed deltas keyed by packed keys; `None` if a count would drop below zero.
    pub fn apply(&self, deltas: &[(u64, i64)]) -> Option<CMarking> {
        let mut d: Vec<(u64, i64)> = deltas.to_vec();
        d.sort_unstable_by_key(|x| x.0);
        let mut out = Vec::with_capacity(self.0.len() + d.len());
        let mut i = 0;
        let mut j = 0;
        while i < self.0.len() || j < d.len() {
            let next_key = match (self.0.get(i), d.get(j)) {
                (Some(&e), Some(&(k, _))) => key_of(e).min(k),
                (Some(&e), None) => key_of(e),
                (None, Some(&(k, _))) => k,
                (None, None) => unreachable!(),
            };
            let mut n: i64 = 0;
            if i < self.0.len() && key_of(self.0[i]) == next_key {
                n = (self.0[i] & COUNT_MASK) as i64;
                i += 1;
            }
            while j < d.len() && d[j].0 == next_key {
                n += d[j].1;
                j += 1;
            }
            if n < 0 {
                return None;
            }
            assert!(n as u64 <= COUNT_MASK, "token count overflow");
            if n > 0 {
                out.push(next_key | n as u64);
            }
        }
        Some(CMarking(out))
    }

    /// Total number of tokens.
    pub fn size(&self) -> u64 {
        self.0.iter().map(|&e| e & COUNT_MASK).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Eps,
    Var(u8),
}

#[derive(Clone, Debug)]
pub struct CArc {
    pub place: u32,
    pub case: Slot,
    pub res: Slot,
    pub count: u32,
}

#[derive(Clone, Debug)]
pub struct CTransition {
    pub vars: Vec<Variable>,
    pub inputs: Vec<CArc>,
    pub outputs: Vec<CArc>,
    pub label: Option<String>,
    /// Slots of case variables, named or fresh.
    pub case_slots: Vec<u8>,
    /// Slots of named resource variables.
    pub res_slots: Vec<u8>,
    pub fresh_slots: Vec<u8>,
}

/// Constraints on mode enumeration.
#[derive(Clone, Debug, Default)]
pub struct ModeQuery<'a> {
    /// Pre-bound value per slot, if any.
    pub fixed: Vec<Option<u32>>,
    /// Allowed values for named resource variables.
    pub res_domain: Option<&'a [u32]>,
    /// Candidates for fresh variables that are not fixed.
    pub fresh: &'a [u32],
}

#[derive(Clone, Debug)]
pub struct CompiledNet {
    pub n_places: usize,
    pub transitions: Vec<CTransition>,
}

impl CompiledNet {
    pub fn new(net: &RcNuNet) -> Self {
        let transitions = (0..net.transitions.len())
            .map(|t| {
                let tr = &net.transitions[t];
                let vars = net.variables(t);
                let slot_of = |v: Variable| Slot::Var(vars.iter().position(|x| *x == v).unwrap() as u8);
                let conv = |a: &super::Arc| CArc {
                    place: a.place as u32,
                    case: match &a.inscription.case {
                        Ins::Eps => Slot::Eps,
                        Ins::Var(v) => slot_of(Variable::Case(v.clone())),
                        Ins::Nu => slot_of(Variable::NuCase),
                    },
                    res: match &a.inscription.resource {
                        Ins::Eps => Slot::Eps,
                        Ins::Var(v) => slot_of(Variable::Resource(v.clone())),
                        Ins::Nu => slot_of(Variable::NuResource),
                    },
                    count: a.count,
                };
                let idx = |f: &dyn Fn(&Variable) -> bool| -> Vec<u8> {
                    vars.iter().enumerate().filter(|(_, v)| f(v)).map(|(i, _)| i as u8).collect()
                };
                CTransition {
                    inputs: tr.inputs.iter().map(conv).collect(),
                    outputs: tr.outputs.iter().map(conv).collect(),
                    label: tr.label.clone(),
                    case_slots: idx(&|v| v.is_case()),
                    res_slots: idx(&|v| matches!(v, Variable::Resource(_))),
                    fresh_slots: idx(&|v| v.is_fresh()),
                    vars,
                }
            })
            .collect();
        CompiledNet { n_places: net.places.len(), transitions }
    }

    /// Sorted distinct bindings enabling `t` under the query.
    pub fn modes(&self, t: usize, m: &CMarking, q: &ModeQuery) -> Vec<Vec<u32>> {
        let tr = &self.transitions[t];
        let mut binding = vec![FREE; tr.vars.len()];
        for (s, f) in q.fixed.iter().enumerate() {
            if let Some(v) = f {
                if binding.contains(v) {
                    return Vec::new();
                }
                binding[s] = *v;
            }
        }
        for &s in &tr.fresh_slots {
            if binding[s as usize] != FREE && m.contains_id(binding[s as usize]) {
                return Vec::new();
            }
        }
        let mut out = Vec::new();
        let mut consumed = Vec::new();
        self.rec(tr, m, 0, &mut binding, &mut consumed, q, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        &self,
        tr: &CTransition,
        m: &CMarking,
        k: usize,
        binding: &mut Vec<u32>,
        consumed: &mut Vec<(u64, u32)>,
        q: &ModeQuery,
        out: &mut Vec<Vec<u32>>,
    ) {
        if k == tr.inputs.len() {
            self.finish(tr, 0, binding, q, m, out);
            return;
        }
        let arc = &tr.inputs[k];
        for &e in m.place_entries(arc.place) {
            let (_, c, r, cnt) = unpack(e);
            let mut newly: [Option<usize>; 2] = [None, None];
            let ok = bind_field(arc.case, c, binding, &mut newly[0], None)
                && bind_field(arc.res, r, binding, &mut newly[1], q.res_domain);
            if ok {
                let kk = key_of(e);
                let used = consumed.iter().find(|x| x.0 == kk).map(|x| x.1).unwrap_or(0);
                if cnt >= used + arc.count {
                    match consumed.iter_mut().find(|x| x.0 == kk) {
                        Some(x) => x.1 += arc.count,
                        None => consumed.push((kk, arc.count)),
                    }
                    self.rec(tr, m, k + 1, binding, consumed, q, out);
                    let x = consumed.iter_mut().find(|x| x.0 == kk).unwrap();
                    x.1 -= arc.count;
                    if x.1 == 0 {
                        consumed.retain(|x| x.0 != kk);
                    }
                }
            }
            for s in newly.into_iter().flatten() {
                binding[s] = FREE;
            }
        }
    }

    fn finish(&self, tr: &CTransition, i: usize, binding: &mut Vec<u32>, q: &ModeQuery, m: &CMarking, out: &mut Vec<Vec<u32>>) {
        if i == tr.fresh_slots.len() {
            if binding.iter().all(|&b| b != FREE) {
                out.push(binding.clone());
            }
            return;
        }
        let s = tr.fresh_slots[i] as usize;
        if binding[s] != FREE {
            self.finish(tr, i + 1, binding, q, m, out);
            return;
        }
        for &cand in q.fresh {
            if binding.contains(&cand) || m.contains_id(cand) {
                continue;
            }
            binding[s] = cand;
            self.finish(tr, i + 1, binding, q, m, out);
            binding[s] = FREE;
        }
    }

    fn token_key(arc: &CArc, binding: &[u32]) -> u64 {
        let f = |s: Slot| match s {
            Slot::Eps => EPS,
            Slot::Var(i) => binding[i as usize],
        };
        key(arc.place, f(arc.case), f(arc.res))
    }

    /// Marking after firing `t` with `binding`; `None` if not enough tokens.
    pub fn fire(&self, t: usize, m: &CMarking, binding: &[u32]) -> Option<CMarking> {
        let tr = &self.transitions[t];
        let mut deltas = Vec::with_capacity(tr.inputs.len() + tr.outputs.len());
        for a in &tr.inputs {
            deltas.push((Self::token_key(a, binding), -(a.count as i64)));
        }
        for a in &tr.outputs {
            deltas.push((Self::token_key(a, binding), a.count as i64));
        }
        m.apply(&deltas)
    }

    /// Packed `(key, count)` pairs consumed and produced by a firing.
    pub fn effect(&self, t: usize, binding: &[u32]) -> (Vec<(u64, u32)>, Vec<(u64, u32)>) {
        let tr = &self.transitions[t];
        (
            tr.inputs.iter().map(|a| (Self::token_key(a, binding), a.count)).collect(),
            tr.outputs.iter().map(|a| (Self::token_key(a, binding), a.count)).collect(),
        )
    }

    pub fn to_mode(&self, t: usize, binding: &[u32], u: &Universe) -> Mode {
        let tr = &self.transitions[t];
        Mode(
            tr.vars
                .iter()
                .zip(binding)
                .map(|(v, &b)| (v.clone(), u.name(b).expect("bound symbol").to_string()))
                .collect(),
        )
    }

    pub fn from_mode(&self, t: usize, mode: &Mode, u: &Universe) -> Option<Vec<u32>> {
        self.transitions[t].vars.iter().map(|v| u.sym(mode.get(v)?)).collect()
    }
}

fn bind_field(slot: Slot, val: u32, binding: &mut [u32], newly: &mut Option<usize>, domain: Option<&[u32]>) -> bool {
    match slot {
        Slot::Eps => val == EPS,
        Slot::Var(s) => {
            let s = s as usize;
            if binding[s] != FREE {
                return binding[s] == val;
            }
            if val == EPS || binding.contains(&val) {
                return false;
            }
            if let Some(d) = domain {
                if d.binary_search(&val).is_err() {
                    return false;
                }
            }
            binding[s] = val;
            *newly = Some(s);
            true
        }
    }
}
