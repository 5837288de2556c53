//! Brute force over the reorderings of small compositions.

use super::{antichain_violates, Resources};
use crate::align::{Alignment, Move};
use crate::poset::{BitMatrix, Poset};
use crate::rcnu::{fire_mode, ColoredMarking, RcNuNet};
use std::collections::BTreeSet;

/// Calls `f` on every transitively closed, acyclic order containing `order`
/// until it returns false. Returns false if stopped early.
pub fn for_each_extension(order: &BitMatrix, f: &mut dyn FnMut(&BitMatrix) -> bool) -> bool {
    let n = order.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut apart = Vec::new();
    extend(order.closure(), &pairs, 0, &mut apart, f)
}

fn extend(
    o: BitMatrix,
    pairs: &[(usize, usize)],
    mut at: usize,
    apart: &mut Vec<(usize, usize)>,
    f: &mut dyn FnMut(&BitMatrix) -> bool,
) -> bool {
    while at < pairs.len() && (o.get(pairs[at].0, pairs[at].1) || o.get(pairs[at].1, pairs[at].0)) {
        at += 1;
    }
    if at == pairs.len() {
        return f(&o);
    }
    let (i, j) = pairs[at];
    apart.push((i, j));
    let go = extend(o.clone(), pairs, at + 1, apart, f);
    apart.pop();
    if !go {
        return false;
    }
    for (a, b) in [(i, j), (j, i)] {
        let mut e = o.clone();
        let below: Vec<usize> = (0..o.len()).filter(|&x| x == a || o.get(x, a)).collect();
        let above: Vec<usize> = (0..o.len()).filter(|&y| y == b || o.get(b, y)).collect();
        for &x in &below {
            for &y in &above {
                e.set(x, y);
            }
        }
        if apart.iter().any(|&(p, q)| e.get(p, q) || e.get(q, p)) {
            continue;
        }
        if !extend(e, pairs, at + 1, apart, f) {
            return false;
        }
    }
    true
}

pub fn extensions(order: &BitMatrix) -> Vec<BitMatrix> {
    let mut out = Vec::new();
    for_each_extension(order, &mut |o| {
        out.push(o.clone());
        true
    });
    out
}

/// Whether the order has a maximal antichain that claims more than is available.
pub fn has_violating_antichain(net: &RcNuNet, moves: &[Move], order: &BitMatrix) -> bool {
    let res = Resources::of(net);
    let cr: Vec<_> = moves.iter().map(|m| res.claims_releases(net, m)).collect();
    let shape = Poset::from_closed(vec![(); moves.len()], order.clone()).expect("extensions are strict orders");
    shape.maximal_antichains().expect("small poset").iter().any(|g| antichain_violates(&res, &cr, order, g))
}

/// Violation by definition: every reordering has a violating maximal antichain.
pub fn is_violating_by_enumeration(net: &RcNuNet, al: &Alignment) -> bool {
    let moves = al.elements();
    let mut all_violate = true;
    for_each_extension(al.order(), &mut |o| {
        all_violate = has_violating_antichain(net, moves, o);
        all_violate
    });
    all_violate
}

/// Number of linearizations of the alignment whose firings replay from
/// `m_i` and end in `m_f`.
pub fn replaying_linearizations(net: &RcNuNet, al: &Alignment, m_i: &ColoredMarking, m_f: &ColoredMarking) -> usize {
    let firing: Vec<usize> = (0..al.len()).filter(|&i| al.element(i).firing.is_some()).collect();
    let sub = al.subposet(&firing);
    sub.linearizations(usize::MAX)
        .into_iter()
        .filter(|lin| {
            let mut m = m_i.clone();
            for &i in lin {
                let f = sub.element(i).firing.as_ref().unwrap();
                match fire_mode(net, &m, f.transition, &f.mode) {
                    Ok(next) => m = next,
                    Err(_) => return false,
                }
            }
            &m == m_f
        })
        .count()
}

/// Whether firing the given moves, in some order compatible with `al`, from
/// `m_i` succeeds. Depth-first over sets of fired moves.
pub fn replayable(net: &RcNuNet, al: &Alignment, subset: &[usize], m_i: &ColoredMarking) -> bool {
    let mut dead: BTreeSet<Vec<usize>> = BTreeSet::new();
    fn go(
        net: &RcNuNet,
        al: &Alignment,
        subset: &[usize],
        done: &mut Vec<usize>,
        m: &ColoredMarking,
        dead: &mut BTreeSet<Vec<usize>>,
    ) -> bool {
        if done.len() == subset.len() {
            return true;
        }
        let mut key = done.clone();
        key.sort_unstable();
        if dead.contains(&key) {
            return false;
        }
        for &i in subset {
            if done.contains(&i) || subset.iter().any(|&j| !done.contains(&j) && al.lt(j, i)) {
                continue;
            }
            let next = match &al.element(i).firing {
                Some(f) => match fire_mode(net, m, f.transition, &f.mode) {
                    Ok(x) => x,
                    Err(_) => continue,
                },
                None => m.clone(),
            };
            done.push(i);
            if go(net, al, subset, done, &next, dead) {
                return true;
            }
            done.pop();
        }
        dead.insert(key);
        false
    }
    go(net, al, subset, &mut Vec::new(), m_i, &mut dead)
}
