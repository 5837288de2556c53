//! Finite multisets over ordered element types.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Multiset with `u64` multiplicities. Zero counts are never stored.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Ord"))]
pub struct Multiset<T: Ord> {
    counts: BTreeMap<T, u64>,
}

/// Binary multiset operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MultisetOp {
    Sum,
    /// Difference clamped at zero.
    Diff,
    /// Pointwise maximum.
    Join,
    /// Pointwise minimum.
    Meet,
}

impl<T: Ord> Default for Multiset<T> {
    fn default() -> Self {
        Multiset { counts: BTreeMap::new() }
    }
}

impl<T: Ord + Clone> Multiset<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(it: impl IntoIterator<Item = (T, u64)>) -> Self {
        let mut m = Self::new();
        for (x, n) in it {
            m.insert(x, n);
        }
        m
    }

    pub fn insert(&mut self, x: T, n: u64) {
        if n > 0 {
            *self.counts.entry(x).or_insert(0) += n;
        }
    }

    /// Removes up to `n` copies and returns how many were actually removed.
    pub fn remove(&mut self, x: &T, n: u64) -> u64 {
        let Some(c) = self.counts.get_mut(x) else { return 0 };
        let taken = n.min(*c);
        *c -= taken;
        if *c == 0 {
            self.counts.remove(x);
        }
        taken
    }

    pub fn count(&self, x: &T) -> u64 {
        self.counts.get(x).copied().unwrap_or(0)
    }

    /// Total number of elements counted with multiplicity.
    pub fn len(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.counts.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, u64)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    pub fn leq(&self, other: &Self) -> bool {
        self.iter().all(|(x, n)| other.count(x) >= n)
    }

    pub fn combine(&self, other: &Self, op: MultisetOp) -> Self {
        let mut out = Self::new();
        let keys: std::collections::BTreeSet<&T> = self.support().chain(other.support()).collect();
        for k in keys {
            let (a, b) = (self.count(k), other.count(k));
            let n = match op {
                MultisetOp::Sum => a + b,
                MultisetOp::Diff => a.saturating_sub(b),
                MultisetOp::Join => a.max(b),
                MultisetOp::Meet => a.min(b),
            };
            out.insert(k.clone(), n);
        }
        out
    }

    pub fn sum(&self, other: &Self) -> Self {
        self.combine(other, MultisetOp::Sum)
    }

    pub fn diff(&self, other: &Self) -> Self {
        self.combine(other, MultisetOp::Diff)
    }

    pub fn join(&self, other: &Self) -> Self {
        self.combine(other, MultisetOp::Join)
    }

    pub fn meet(&self, other: &Self) -> Self {
        self.combine(other, MultisetOp::Meet)
    }

    pub fn add_all(&mut self, other: &Self) {
        for (x, n) in other.iter() {
            self.insert(x.clone(), n);
        }
    }

    pub fn map<U: Ord + Clone>(&self, f: impl Fn(&T) -> U) -> Multiset<U> {
        Multiset::from_counts(self.iter().map(|(x, n)| (f(x), n)))
    }
}

impl<T: Ord + Clone> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(it: I) -> Self {
        Self::from_counts(it.into_iter().map(|x| (x, 1)))
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (k, v)) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if *v == 1 {
                write!(f, "{k:?}")?;
            } else {
                write!(f, "{v}*{k:?}")?;
            }
        }
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ms(v: &[(u8, u64)]) -> Multiset<u8> {
        Multiset::from_counts(v.iter().copied())
    }

    #[test]
    fn diff_clamps() {
        let a = ms(&[(1, 2), (2, 1)]);
        let b = ms(&[(1, 5), (3, 1)]);
        assert_eq!(a.diff(&b), ms(&[(2, 1)]));
        assert_eq!(a.join(&b), ms(&[(1, 5), (2, 1), (3, 1)]));
        assert_eq!(a.meet(&b), ms(&[(1, 2)]));
        assert_eq!(a.sum(&b).len(), 9);
    }

    fn arb() -> impl Strategy<Value = Multiset<u8>> {
        prop::collection::vec((0u8..6, 0u64..4), 0..8).prop_map(|v| Multiset::from_counts(v))
    }

    proptest! {
        #[test]
        fn lattice_laws(a in arb(), b in arb()) {
            prop_assert!(a.meet(&b).leq(&a));
            prop_assert!(a.leq(&a.join(&b)));
            prop_assert_eq!(a.sum(&b).diff(&b), a.clone());
            prop_assert_eq!(a.join(&b), b.join(&a));
            prop_assert_eq!(a.meet(&b).sum(&a.join(&b)), a.sum(&b));
            prop_assert_eq!(a.diff(&b).is_empty(), a.leq(&b));
        }
    }
}
