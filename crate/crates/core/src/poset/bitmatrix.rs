//! Dense square bit matrices used as binary relations.

use std::fmt;

/// An `n x n` boolean matrix stored row-major, one `u64` word per 64 columns.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BitMatrix { n, words, bits: vec![0; n * words] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.n && j < self.n);
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize) {
        debug_assert!(i < self.n && j < self.n);
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    #[inline]
    pub fn unset(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] &= !(1 << (j % 64));
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// Column indices set in row `i`, ascending.
    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.n;
        self.row(i).iter().enumerate().flat_map(move |(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + b)
            })
            .filter(move |&j| j < n)
        })
    }

    /// All set pairs in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n).flat_map(|i| self.row_iter(i).map(move |j| (i, j))).collect()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Warshall closure in place.
    pub fn close(&mut self) {
        let w = self.words;
        for k in 0..self.n {
            let row_k: Vec<u64> = self.row(k).to_vec();
            for i in 0..self.n {
                if self.get(i, k) {
                    let dst = &mut self.bits[i * w..(i + 1) * w];
                    for (d, s) in dst.iter_mut().zip(&row_k) {
                        *d |= s;
                    }
                }
            }
        }
    }

    pub fn closure(&self) -> Self {
        let mut m = self.clone();
        m.close();
        m
    }

    pub fn is_transitive(&self) -> bool {
        self.closure() == *self
    }

    /// First index `i` with `(i, i)` set.
    pub fn first_loop(&self) -> Option<usize> {
        (0..self.n).find(|&i| self.get(i, i))
    }

    /// Transitive reduction of a closed acyclic relation.
    pub fn reduction(&self) -> Self {
        let w = self.words;
        let mut out = self.clone();
        for i in 0..self.n {
            let mut two_step = vec![0u64; w];
            for k in self.row_iter(i) {
                for (t, s) in two_step.iter_mut().zip(self.row(k)) {
                    *t |= s;
                }
            }
            for (d, t) in out.bits[i * w..(i + 1) * w].iter_mut().zip(&two_step) {
                *d &= !t;
            }
        }
        out
    }

    /// The relation restricted to `idx`, renumbered in the order given.
    pub fn restrict(&self, idx: &[usize]) -> Self {
        let mut out = BitMatrix::new(idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                if self.get(i, j) {
                    out.set(a, b);
                }
            }
        }
        out
    }

    pub fn union_with(&mut self, other: &BitMatrix) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn is_subset_of(&self, other: &BitMatrix) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = BitMatrix::new(self.n);
        for (i, j) in self.pairs() {
            t.set(j, i);
        }
        t
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BitMatrix").field("n", &self.n).field("pairs", &self.pairs()).finish()
    }
}
