use super::{solve_instance, ComposedAlignment, IlpInstance};
use crate::ilp::IlpError;
use crate::poset::BitMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;
use std::collections::BTreeSet;

/// A convex set of moves of the reordered composition with its minimal and maximal moves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub moves: Vec<usize>,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IntervalSet {
    pub intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Extraction {
    /// The reordered composition's order.
    pub order: BitMatrix,
    pub objective: i64,
    pub proven: bool,
    pub nodes: usize,
    pub reversals: Vec<(usize, usize)>,
    pub new_pairs: Vec<(usize, usize)>,
    /// Moves between the two ends of some reversed pair, in the original order.
    pub touched: Vec<usize>,
    pub intervals: IntervalSet,
}

/// Solves the program and turns the spans between reversed pairs, taken in
/// the original order, into disjoint convex intervals of the new order.
pub fn solve_and_extract(comp: &ComposedAlignment, inst: &IlpInstance, budget: usize) -> Result<Extraction, IlpError> {
    let out = solve_instance(inst, budget)?;
    let order = inst.order_of(&out.x);
    let reversals = inst.reversals(&out.x);
    let new_pairs = inst.new_pairs(&out.x);
    let r = comp.moves.order();
    let spans: Vec<BTreeSet<usize>> = reversals
        .iter()
        .map(|&(i, j)| (0..inst.n).filter(|&g| (g == j || r.get(j, g)) && (g == i || r.get(g, i))).collect())
        .collect();
    let touched: Vec<usize> = spans.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let regions = regions(&order, spans);
    let intervals = regions
        .into_iter()
        .map(|moves| {
            let a = moves.iter().copied().filter(|&g| !moves.iter().any(|&h| order.get(h, g))).collect();
            let b = moves.iter().copied().filter(|&g| !moves.iter().any(|&h| order.get(g, h))).collect();
            Interval { moves, a, b }
        })
        .collect();
    Ok(Extraction {
        order,
        objective: out.objective,
        proven: out.proven,
        nodes: out.nodes,
        reversals,
        new_pairs,
        touched,
        intervals: IntervalSet { intervals },
    })
}

/// Merges the spans of reversed pairs into disjoint convex sets of `order`
/// whose contraction keeps the order acyclic: overlapping spans are joined,
/// every set is widened to its convex hull and sets on a common cycle of the
/// contracted order are merged, until nothing changes.
fn regions(order: &BitMatrix, spans: Vec<BTreeSet<usize>>) -> Vec<Vec<usize>> {
    let n = order.len();
    let mut sets = spans;
    loop {
        let mut merged: Vec<BTreeSet<usize>> = Vec::new();
        for mut s in sets.drain(..) {
            s = (0..n)
                .filter(|&g| s.contains(&g) || (s.iter().any(|&a| order.get(a, g)) && s.iter().any(|&b| order.get(g, b))))
                .collect();
            while let Some(k) = merged.iter().position(|m| !m.is_disjoint(&s)) {
                s.extend(merged.swap_remove(k));
            }
            merged.push(s);
        }
        let mut block: Vec<usize> = (0..n).map(|g| merged.len() + g).collect();
        for (k, s) in merged.iter().enumerate() {
            for &g in s {
                block[g] = k;
            }
        }
        let mut graph: DiGraph<(), ()> = DiGraph::new();
        let nodes: Vec<_> = (0..merged.len() + n).map(|_| graph.add_node(())).collect();
        let mut edges = BTreeSet::new();
        for x in 0..n {
            for y in 0..n {
                if order.get(x, y) && block[x] != block[y] && edges.insert((block[x], block[y])) {
                    graph.add_edge(nodes[block[x]], nodes[block[y]], ());
                }
            }
        }
        let cycles: Vec<Vec<usize>> =
            tarjan_scc(&graph).into_iter().filter(|c| c.len() > 1).map(|c| c.iter().map(|v| v.index()).collect()).collect();
        if cycles.is_empty() {
            let mut out: Vec<Vec<usize>> = merged.into_iter().map(|s| s.into_iter().collect()).collect();
            out.sort();
            return out;
        }
        let mut on_cycle = vec![false; merged.len()];
        for c in &cycles {
            let mut s = BTreeSet::new();
            for &b in c {
                match merged.get(b) {
                    Some(m) => {
                        on_cycle[b] = true;
                        s.extend(m.iter().copied());
                    }
                    None => {
                        s.insert(b - merged.len());
                    }
                }
            }
            sets.push(s);
        }
        sets.extend(merged.into_iter().enumerate().filter(|(k, _)| !on_cycle[*k]).map(|(_, s)| s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_order(n: usize, pairs: &[(usize, usize)]) -> BitMatrix {
        let mut m = BitMatrix::new(n);
        for &(a, b) in pairs {
            m.set(a, b);
        }
        m.closure()
    }

    fn sets(v: &[&[usize]]) -> Vec<BTreeSet<usize>> {
        v.iter().map(|s| s.iter().copied().collect()).collect()
    }

    #[test]
    fn hull_fills_the_gap() {
        let o = chain_order(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(regions(&o, sets(&[&[0, 2]])), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn separate_spans_stay_apart() {
        let o = chain_order(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
        assert_eq!(regions(&o, sets(&[&[0, 1], &[4, 5]])), vec![vec![0, 1], vec![4, 5]]);
    }

    #[test]
    fn overlapping_spans_join() {
        let o = chain_order(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert_eq!(regions(&o, sets(&[&[0, 2], &[2, 3]])), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn interleaved_spans_merge() {
        // {0,1} and {2,3} are convex, but 0 < 2 and 3 < 1 make them precede each other.
        let o = chain_order(4, &[(0, 2), (3, 1)]);
        assert_eq!(regions(&o, sets(&[&[0, 1], &[2, 3]])), vec![vec![0, 1, 2, 3]]);
        let o = chain_order(4, &[(0, 2), (2, 1), (1, 3)]);
        assert_eq!(regions(&o, sets(&[&[0, 1], &[3]])), vec![vec![0, 1, 2], vec![3]]);
    }
}
