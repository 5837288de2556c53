//! Classical labeled place/transition nets.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

/// Upper bound on search nodes visited by [`language`].
pub const LANGUAGE_STATE_LIMIT: usize = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetError {
    #[error("transition {0} is not enabled")]
    NotEnabled(String),
    #[error("language enumeration exceeded {0} states")]
    StateLimit(usize),
    #[error("unknown place {0}")]
    UnknownPlace(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    /// `None` is the silent label.
    pub label: Option<String>,
}

/// Token counts per place index.
pub type Marking = Vec<u64>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledNet {
    pub places: Vec<String>,
    pub transitions: Vec<Transition>,
    /// Input arcs per transition as `(place, weight)`.
    pub pre: Vec<Vec<(usize, u64)>>,
    /// Output arcs per transition as `(place, weight)`.
    pub post: Vec<Vec<(usize, u64)>>,
}

impl LabeledNet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_place(&mut self, id: impl Into<String>) -> usize {
        self.places.push(id.into());
        self.places.len() - 1
    }

    pub fn add_transition(&mut self, id: impl Into<String>, label: Option<&str>) -> usize {
        self.transitions.push(Transition { id: id.into(), label: label.map(str::to_string) });
        self.pre.push(Vec::new());
        self.post.push(Vec::new());
        self.transitions.len() - 1
    }

    pub fn add_input(&mut self, place: usize, t: usize, weight: u64) {
        add_weight(&mut self.pre[t], place, weight);
    }

    pub fn add_output(&mut self, t: usize, place: usize, weight: u64) {
        add_weight(&mut self.post[t], place, weight);
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.places.iter().position(|p| p == id)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    /// Marking from `(place id, count)` pairs.
    pub fn marking(&self, entries: &[(&str, u64)]) -> Result<Marking, NetError> {
        let mut m = vec![0; self.places.len()];
        for (p, n) in entries {
            let i = self.place_index(p).ok_or_else(|| NetError::UnknownPlace(p.to_string()))?;
            m[i] += n;
        }
        Ok(m)
    }

    /// Incidence matrix `C[p][t] = post - pre`.
    pub fn incidence(&self) -> Vec<Vec<i64>> {
        let mut c = vec![vec![0i64; self.transitions.len()]; self.places.len()];
        for t in 0..self.transitions.len() {
            for &(p, w) in &self.pre[t] {
                c[p][t] -= w as i64;
            }
            for &(p, w) in &self.post[t] {
                c[p][t] += w as i64;
            }
        }
        c
    }
}

fn add_weight(arcs: &mut Vec<(usize, u64)>, place: usize, weight: u64) {
    match arcs.iter_mut().find(|(p, _)| *p == place) {
        Some((_, w)) => *w += weight,
        None => {
            arcs.push((place, weight));
            arcs.sort_unstable();
        }
    }
}

pub fn enabled(net: &LabeledNet, m: &Marking, t: usize) -> bool {
    net.pre[t].iter().all(|&(p, w)| m[p] >= w)
}

pub fn fire(net: &LabeledNet, m: &Marking, t: usize) -> Result<Marking, NetError> {
    if !enabled(net, m, t) {
        return Err(NetError::NotEnabled(net.transitions[t].id.clone()));
    }
    let mut out = m.clone();
    for &(p, w) in &net.pre[t] {
        out[p] -= w;
    }
    for &(p, w) in &net.post[t] {
        out[p] += w;
    }
    Ok(out)
}

/// Visible label sequences of firing sequences from `m_i` to `m_f` with at most `max_len` firings.
pub fn language(
    net: &LabeledNet,
    m_i: &Marking,
    m_f: &Marking,
    max_len: usize,
) -> Result<BTreeSet<Vec<String>>, NetError> {
    let mut out = BTreeSet::new();
    let mut visited = 0usize;
    // Memoizes (marking, remaining budget) -> suffix language.
    let mut memo: HashMap<(Marking, usize), BTreeSet<Vec<String>>> = HashMap::new();
    let suffixes = lang_rec(net, m_i, m_f, max_len, &mut memo, &mut visited)?;
    out.extend(suffixes);
    Ok(out)
}

fn lang_rec(
    net: &LabeledNet,
    m: &Marking,
    m_f: &Marking,
    budget: usize,
    memo: &mut HashMap<(Marking, usize), BTreeSet<Vec<String>>>,
    visited: &mut usize,
) -> Result<BTreeSet<Vec<String>>, NetError> {
    if let Some(s) = memo.get(&(m.clone(), budget)) {
        return Ok(s.clone());
    }
    *visited += 1;
    if *visited > LANGUAGE_STATE_LIMIT {
        return Err(NetError::StateLimit(LANGUAGE_STATE_LIMIT));
    }
    let mut out = BTreeSet::new();
    if m == m_f {
        out.insert(Vec::new());
    }
    if budget > 0 {
        for t in 0..net.transitions.len() {
            if !enabled(net, m, t) {
                continue;
            }
            let next = fire(net, m, t)?;
            let rest = lang_rec(net, &next, m_f, budget - 1, memo, visited)?;
            for mut seq in rest {
                if let Some(l) = &net.transitions[t].label {
                    seq.insert(0, l.clone());
                }
                out.insert(seq);
            }
        }
    }
    memo.insert((m.clone(), budget), out.clone());
    Ok(out)
}

/// Rational basis of `{ y : y^T C = 0 }`, each vector scaled to a primitive
/// integer vector whose first non-zero entry is positive.
pub fn place_invariants(net: &LabeledNet) -> Vec<Vec<BigRational>> {
    let c = net.incidence();
    let np = net.places.len();
    let nt = net.transitions.len();
    // Rows of C^T, one per transition.
    let rows: Vec<Vec<BigRational>> = (0..nt)
        .map(|t| (0..np).map(|p| BigRational::from_integer(BigInt::from(c[p][t]))).collect())
        .collect();
    null_space(rows, np)
}

/// Basis of the right null space of the matrix with the given rows and `ncols` columns.
pub fn null_space(mut rows: Vec<Vec<BigRational>>, ncols: usize) -> Vec<Vec<BigRational>> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        let Some(pr) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else { continue };
        rows.swap(r, pr);
        let inv = rows[r][col].recip();
        for x in rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let f = rows[i][col].clone();
                let pivot_row = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(&pivot_row) {
                    *x = &*x - &f * y;
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); ncols];
            v[f] = BigRational::one();
            for (k, &pc) in pivots.iter().enumerate() {
                v[pc] = -rows[k][f].clone();
            }
            normalize(v)
        })
        .collect()
}

fn normalize(v: Vec<BigRational>) -> Vec<BigRational> {
    let mut den = BigInt::one();
    for x in &v {
        den = den.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x * BigRational::from_integer(den.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        g = BigInt::one();
    }
    let sign = match ints.iter().find(|x| !x.is_zero()) {
        Some(x) if x.is_negative() => -BigInt::one(),
        _ => BigInt::one(),
    };
    ints.into_iter().map(|x| BigRational::from_integer(x * &sign / &g)).collect()
}

/// Whether `v` lies in the span of `basis`.
pub fn in_span(basis: &[Vec<BigRational>], v: &[BigRational]) -> bool {
    let rank = |rows: &[Vec<BigRational>]| -> usize {
        if rows.is_empty() {
            return 0;
        }
        let ncols = rows[0].len();
        ncols - null_space(rows.to_vec(), ncols).len()
    };
    let mut ext = basis.to_vec();
    ext.push(v.to_vec());
    rank(basis) == rank(&ext)
}

/// Whether the integer weighting `y` is a combination of the net's place invariants.
pub fn spans_invariant(net: &LabeledNet, y: &[i64]) -> bool {
    let v: Vec<BigRational> = y.iter().map(|&w| BigRational::from_integer(BigInt::from(w))).collect();
    in_span(&place_invariants(net), &v)
}
