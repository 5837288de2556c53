use super::{Alignment, Move};
use crate::poset::PosetError;
use crate::rcnu::{ColoredMarking, RcNuNet, Token};
use std::collections::BTreeMap;

/// Integer token counts per place; entries may be negative, zeros are dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PseudoMarking(pub BTreeMap<(usize, Token), i64>);

impl PseudoMarking {
    pub fn from_marking(m: &ColoredMarking) -> Self {
        let mut out = PseudoMarking::default();
        for (p, ms) in m.0.iter().enumerate() {
            for (tok, n) in ms.iter() {
                out.add(p, tok.clone(), n as i64);
            }
        }
        out
    }

    pub fn add(&mut self, place: usize, token: Token, delta: i64) {
        if delta == 0 {
            return;
        }
        let k = (place, token);
        let v = self.0.get(&k).copied().unwrap_or(0) + delta;
        if v == 0 {
            self.0.remove(&k);
        } else {
            self.0.insert(k, v);
        }
    }

    pub fn get(&self, place: usize, token: &Token) -> i64 {
        self.0.get(&(place, token.clone())).copied().unwrap_or(0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.values().all(|&v| v >= 0)
    }

    /// The marking, when no count is negative.
    pub fn to_marking(&self, n_places: usize) -> Option<ColoredMarking> {
        let mut m = ColoredMarking::empty(n_places);
        for ((p, tok), &v) in &self.0 {
            if v < 0 {
                return None;
            }
            m.add(*p, tok.clone(), v as u64);
        }
        Some(m)
    }

    pub fn apply(&mut self, net: &RcNuNet, mv: &Move) {
        for (p, tok, d) in move_effect(net, mv) {
            self.add(p, tok, d);
        }
    }
}

/// Token changes of a move; log moves change nothing.
pub fn move_effect(net: &RcNuNet, mv: &Move) -> Vec<(usize, Token, i64)> {
    let Some(f) = &mv.firing else { return Vec::new() };
    let mut out = Vec::new();
    for (p, tok, n) in net.consumed(f.transition, &f.mode).expect("mode binds inputs") {
        out.push((p, tok, -(n as i64)));
    }
    for (p, tok, n) in net.produced(f.transition, &f.mode).expect("mode binds outputs") {
        out.push((p, tok, n as i64));
    }
    out
}

/// `m_i` plus the effect of every move, without enabledness checks.
pub fn pseudo_fire<'a>(net: &RcNuNet, m_i: &ColoredMarking, moves: impl IntoIterator<Item = &'a Move>) -> PseudoMarking {
    let mut m = PseudoMarking::from_marking(m_i);
    for mv in moves {
        m.apply(net, mv);
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Before the antichain: its strict prefix.
    Pre,
    /// After the antichain: its closed prefix.
    Post,
}

pub fn antichain_marking(
    net: &RcNuNet,
    m_i: &ColoredMarking,
    al: &Alignment,
    g: &[usize],
    side: Side,
) -> Result<PseudoMarking, PosetError> {
    let prefix = al.prefix(g, side == Side::Pre)?;
    Ok(pseudo_fire(net, m_i, prefix.iter().map(|&i| al.element(i))))
}
