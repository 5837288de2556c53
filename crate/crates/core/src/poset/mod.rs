//! Multisets, strict partial orders and the interval/prefix machinery on them.

mod bitmatrix;
mod multiset;

pub use bitmatrix::BitMatrix;
pub use multiset::{Multiset, MultisetOp};

use thiserror::Error;

/// Largest poset for which maximal antichains are enumerated.
pub const ANTICHAIN_LIMIT: usize = 25;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PosetError {
    #[error("order contains a cycle through element {0}")]
    Cycle(usize),
    #[error("element index {index} out of range for poset of size {size}")]
    OutOfRange { index: usize, size: usize },
    #[error("{0:?} is not an antichain")]
    NotAntichain(Vec<usize>),
    #[error("poset of size {size} exceeds the limit of {limit}")]
    TooLarge { size: usize, limit: usize },
}

/// Interval endpoint: the virtual bottom, the virtual top, or an antichain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Bottom,
    Top,
    Antichain(Vec<usize>),
}

impl Endpoint {
    pub fn set(v: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = v.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Endpoint::Antichain(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntervalKind {
    Closed,
    OpenLeft,
    OpenRight,
    Open,
}

/// A finite set of elements with a strict partial order, kept transitively closed.
#[derive(Clone, Debug, PartialEq)]
pub struct Poset<T> {
    elements: Vec<T>,
    order: BitMatrix,
}

impl<T> Poset<T> {
    /// Builds the poset generated by `pairs` (closed transitively).
    pub fn new(elements: Vec<T>, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, PosetError> {
        let n = elements.len();
        let mut order = BitMatrix::new(n);
        for (a, b) in pairs {
            for index in [a, b] {
                if index >= n {
                    return Err(PosetError::OutOfRange { index, size: n });
                }
            }
            order.set(a, b);
        }
        order.close();
        if let Some(i) = order.first_loop() {
            return Err(PosetError::Cycle(i));
        }
        Ok(Poset { elements, order })
    }

    /// Wraps an order that is already closed; loops or missing transitive pairs are rejected.
    pub fn from_closed(elements: Vec<T>, order: BitMatrix) -> Result<Self, PosetError> {
        assert_eq!(elements.len(), order.len());
        if let Some(i) = order.first_loop() {
            return Err(PosetError::Cycle(i));
        }
        let closed = order.closure();
        if let Some(i) = closed.first_loop() {
            return Err(PosetError::Cycle(i));
        }
        Ok(Poset { elements, order: closed })
    }

    pub fn chain(elements: Vec<T>) -> Self {
        let n = elements.len();
        Poset::new(elements, (1..n).map(|i| (i - 1, i))).expect("chain is acyclic")
    }

    pub fn discrete(elements: Vec<T>) -> Self {
        let n = elements.len();
        Poset { elements, order: BitMatrix::new(n) }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[T] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &T {
        &self.elements[i]
    }

    pub fn order(&self) -> &BitMatrix {
        &self.order
    }

    pub fn into_parts(self) -> (Vec<T>, BitMatrix) {
        (self.elements, self.order)
    }

    #[inline]
    pub fn lt(&self, a: usize, b: usize) -> bool {
        self.order.get(a, b)
    }

    #[inline]
    pub fn le(&self, a: usize, b: usize) -> bool {
        a == b || self.order.get(a, b)
    }

    #[inline]
    pub fn incomparable(&self, a: usize, b: usize) -> bool {
        a != b && !self.order.get(a, b) && !self.order.get(b, a)
    }

    pub fn minimal(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| (0..self.len()).all(|i| !self.lt(i, j))).collect()
    }

    pub fn maximal(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.order.row_iter(i).next().is_none()).collect()
    }

    /// Covering pairs (transitive reduction).
    pub fn covers(&self) -> Vec<(usize, usize)> {
        self.order.reduction().pairs()
    }

    pub fn is_antichain(&self, set: &[usize]) -> bool {
        set.iter().all(|&a| a < self.len())
            && set.iter().enumerate().all(|(k, &a)| set[k + 1..].iter().all(|&b| a != b && self.incomparable(a, b)))
    }

    fn check_endpoint(&self, e: &Endpoint) -> Result<(), PosetError> {
        if let Endpoint::Antichain(s) = e {
            if let Some(&index) = s.iter().find(|&&i| i >= self.len()) {
                return Err(PosetError::OutOfRange { index, size: self.len() });
            }
            if !self.is_antichain(s) {
                return Err(PosetError::NotAntichain(s.clone()));
            }
        }
        Ok(())
    }

    fn above(&self, from: &Endpoint, x: usize) -> bool {
        match from {
            Endpoint::Bottom => true,
            Endpoint::Top => false,
            Endpoint::Antichain(s) => s.iter().any(|&a| self.le(a, x)),
        }
    }

    fn below(&self, to: &Endpoint, x: usize) -> bool {
        match to {
            Endpoint::Bottom => false,
            Endpoint::Top => true,
            Endpoint::Antichain(s) => s.iter().any(|&b| self.le(x, b)),
        }
    }

    /// Indices `x` with `from <= x <= to`, minus open endpoints, ascending.
    pub fn interval(&self, from: &Endpoint, to: &Endpoint, kind: IntervalKind) -> Result<Vec<usize>, PosetError> {
        self.check_endpoint(from)?;
        self.check_endpoint(to)?;
        let drop = |e: &Endpoint, x: usize| matches!(e, Endpoint::Antichain(s) if s.contains(&x));
        let open_left = matches!(kind, IntervalKind::OpenLeft | IntervalKind::Open);
        let open_right = matches!(kind, IntervalKind::OpenRight | IntervalKind::Open);
        Ok((0..self.len())
            .filter(|&x| self.above(from, x) && self.below(to, x))
            .filter(|&x| !(open_left && drop(from, x)) && !(open_right && drop(to, x)))
            .collect())
    }

    /// Down-closed prefix ending at `a`; `open` drops `a` itself.
    pub fn prefix(&self, a: &[usize], open: bool) -> Result<Vec<usize>, PosetError> {
        let kind = if open { IntervalKind::OpenRight } else { IntervalKind::Closed };
        self.interval(&Endpoint::Bottom, &Endpoint::Antichain(a.to_vec()), kind)
    }

    /// Up-closed suffix starting at `a`; `open` drops `a` itself.
    pub fn postfix(&self, a: &[usize], open: bool) -> Result<Vec<usize>, PosetError> {
        let kind = if open { IntervalKind::OpenLeft } else { IntervalKind::Closed };
        self.interval(&Endpoint::Antichain(a.to_vec()), &Endpoint::Top, kind)
    }

    /// Maximal antichains, each sorted, in lexicographic order.
    pub fn maximal_antichains(&self) -> Result<Vec<Vec<usize>>, PosetError> {
        let n = self.len();
        if n > ANTICHAIN_LIMIT {
            return Err(PosetError::TooLarge { size: n, limit: ANTICHAIN_LIMIT });
        }
        if n == 0 {
            return Ok(vec![vec![]]);
        }
        let adj: Vec<u32> = (0..n)
            .map(|i| (0..n).filter(|&j| self.incomparable(i, j)).fold(0u32, |m, j| m | 1 << j))
            .collect();
        let mut out = Vec::new();
        bron_kerbosch(&adj, 0, (1u32 << n) - 1, 0, &mut out);
        let mut sets: Vec<Vec<usize>> =
            out.into_iter().map(|m: u32| (0..n).filter(|&i| m >> i & 1 == 1).collect()).collect();
        sets.sort();
        Ok(sets)
    }

    pub fn is_linearization(&self, seq: &[usize]) -> bool {
        let n = self.len();
        if seq.len() != n {
            return false;
        }
        let mut pos = vec![usize::MAX; n];
        for (k, &x) in seq.iter().enumerate() {
            if x >= n || pos[x] != usize::MAX {
                return false;
            }
            pos[x] = k;
        }
        self.order.pairs().into_iter().all(|(a, b)| pos[a] < pos[b])
    }

    /// All linear extensions in lexicographic order, stopping after `limit`.
    pub fn linearizations(&self, limit: usize) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut indeg: Vec<usize> = (0..n).map(|j| (0..n).filter(|&i| self.lt(i, j)).count()).collect();
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(n);
        let mut used = vec![false; n];
        self.lin_rec(&mut indeg, &mut used, &mut cur, &mut out, limit);
        out
    }

    fn lin_rec(
        &self,
        indeg: &mut [usize],
        used: &mut [bool],
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        limit: usize,
    ) {
        if out.len() >= limit {
            return;
        }
        if cur.len() == self.len() {
            out.push(cur.clone());
            return;
        }
        for x in 0..self.len() {
            if used[x] || indeg[x] > 0 {
                continue;
            }
            used[x] = true;
            cur.push(x);
            for y in self.order.row_iter(x) {
                indeg[y] -= 1;
            }
            self.lin_rec(indeg, used, cur, out, limit);
            for y in self.order.row_iter(x) {
                indeg[y] += 1;
            }
            cur.pop();
            used[x] = false;
        }
    }

    /// One linear extension: repeatedly the smallest index whose predecessors are placed.
    pub fn topological_order(&self) -> Vec<usize> {
        self.linearizations(1).pop().unwrap_or_default()
    }
}

impl<T: Clone> Poset<T> {
    /// Induced subposet on `idx`, keeping the order of `idx`.
    pub fn subposet(&self, idx: &[usize]) -> Poset<T> {
        Poset { elements: idx.iter().map(|&i| self.elements[i].clone()).collect(), order: self.order.restrict(idx) }
    }
}

impl<T> Poset<T> {
    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Poset<U> {
        Poset { elements: self.elements.iter().map(f).collect(), order: self.order.clone() }
    }
}

fn bron_kerbosch(adj: &[u32], r: u32, mut p: u32, mut x: u32, out: &mut Vec<u32>) {
    if p == 0 && x == 0 {
        out.push(r);
        return;
    }
    let pu = p | x;
    let pivot = (0..adj.len()).filter(|&u| pu >> u & 1 == 1).max_by_key(|&u| (adj[u] & p).count_ones()).unwrap();
    let mut cand = p & !adj[pivot];
    while cand != 0 {
        let v = cand.trailing_zeros() as usize;
        cand &= cand - 1;
        bron_kerbosch(adj, r | 1 << v, p & adj[v], x & adj[v], out);
        p &= !(1 << v);
        x |= 1 << v;
    }
}
