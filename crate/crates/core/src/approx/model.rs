use super::{ComposedAlignment, Resources};
use crate::ilp::{check_feasible, solve_with, BinaryProgram, Cmp, Constraint, IlpError, Infeasibility};
use crate::poset::BitMatrix;
use crate::rcnu::RcNuNet;
use rustc_hash::FxHashSet;

/// Up to this many moves every transitivity row is part of the program.
pub const FULL_TRANSITIVITY: usize = 24;

/// Objective weight of reversing an ordered pair and of ordering an unordered one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Weights {
    pub reversal: i64,
    pub new_pair: i64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { reversal: 1000, new_pair: 1 }
    }
}

/// The reordering program of a composed alignment; variable `x_i_j` says
/// move `i` comes before move `j`.
#[derive(Clone, Debug)]
pub struct IlpInstance {
    pub n: usize,
    pub r: BitMatrix,
    /// Case index of every move.
    pub case_of: Vec<usize>,
    pub instances: Vec<String>,
    pub c_clm: Vec<Vec<u64>>,
    pub c_rls: Vec<Vec<u64>>,
    pub k: Vec<u64>,
    pub program: BinaryProgram,
    /// Whether transitivity rows outside interacting triples are left to cuts.
    pub lazy_transitivity: bool,
    interacts: BitMatrix,
}

impl IlpInstance {
    pub fn var(&self, i: usize, j: usize) -> Option<usize> {
        (i != j).then(|| i * (self.n - 1) + if j < i { j } else { j - 1 })
    }

    pub fn pair(&self, v: usize) -> (usize, usize) {
        let i = v / (self.n - 1);
        let j = v % (self.n - 1);
        (i, if j < i { j } else { j + 1 })
    }

    /// Number of free variables: pairs of moves from different cases.
    pub fn free_vars(&self) -> usize {
        self.program.n_vars - self.program.fixings.len()
    }

    /// Checks the program's rows and, for lazy instances, every transitivity triple.
    pub fn check(&self, x: &[bool]) -> Result<(), Infeasibility> {
        check_feasible(&self.program, x)?;
        let n = self.n;
        let at = |i, j| self.var(i, j).is_some_and(|v| x[v]);
        for i in 0..n {
            for j in 0..n {
                if i == j || !at(i, j) {
                    continue;
                }
                for k in 0..n {
                    if k != j && at(j, k) && !at(i, k) && (k != i || at(i, j)) {
                        return Err(Infeasibility::Constraint {
                            index: self.program.constraints.len() + (i * n + j) * n + k,
                            name: format!("trans_{i}_{j}_{k}"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Block upper triangular assignment: case blocks in index order, each
    /// keeping its own order.
    pub fn block_triangular(&self) -> Vec<bool> {
        let mut x = vec![false; self.program.n_vars];
        for (v, slot) in x.iter_mut().enumerate() {
            let (i, j) = self.pair(v);
            *slot = if self.case_of[i] == self.case_of[j] { self.r.get(i, j) } else { self.case_of[i] < self.case_of[j] };
        }
        x
    }

    /// The order an assignment describes.
    pub fn order_of(&self, x: &[bool]) -> BitMatrix {
        let mut m = BitMatrix::new(self.n);
        for (v, &b) in x.iter().enumerate() {
            if b {
                let (i, j) = self.pair(v);
                m.set(i, j);
            }
        }
        m
    }

    /// Pairs ordered one way by `R` and the other way by `x`.
    pub fn reversals(&self, x: &[bool]) -> Vec<(usize, usize)> {
        (0..x.len()).filter(|&v| x[v]).map(|v| self.pair(v)).filter(|&(i, j)| self.r.get(j, i)).collect()
    }

    /// Pairs unordered by `R` that `x` orders.
    pub fn new_pairs(&self, x: &[bool]) -> Vec<(usize, usize)> {
        (0..x.len())
            .filter(|&v| x[v])
            .map(|v| self.pair(v))
            .filter(|&(i, j)| !self.r.get(i, j) && !self.r.get(j, i))
            .collect()
    }

    fn trans_row(&self, i: usize, j: usize, k: usize) -> Constraint {
        let (a, b) = (self.var(i, j).unwrap(), self.var(j, k).unwrap());
        let mut terms = vec![(a, 1), (b, 1)];
        if let Some(c) = self.var(i, k) {
            terms.push((c, -1));
        }
        Constraint::new(format!("trans_{i}_{j}_{k}"), terms, Cmp::Le, 1)
    }
}

pub fn build_ilp(net: &RcNuNet, comp: &ComposedAlignment) -> IlpInstance {
    build_ilp_weighted(net, comp, Weights::default())
}

pub fn build_ilp_weighted(net: &RcNuNet, comp: &ComposedAlignment, w: Weights) -> IlpInstance {
    let n = comp.len();
    let res = Resources::of(net);
    let case_of: Vec<usize> = comp.case_of.iter().map(|c| comp.cases.iter().position(|x| x == c).unwrap()).collect();
    let (c_clm, c_rls): (Vec<_>, Vec<_>) = comp.moves.elements().iter().map(|m| res.claims_releases(net, m)).unzip();
    let r = comp.moves.order().clone();
    let mut interacts = BitMatrix::new(n);
    for i in 0..n {
        for j in 0..n {
            let shared = (0..res.len()).any(|k| (c_clm[i][k] + c_rls[i][k]) > 0 && (c_clm[j][k] + c_rls[j][k]) > 0);
            if i != j && (case_of[i] == case_of[j] || shared) {
                interacts.set(i, j);
            }
        }
    }
    let n_vars = if n > 1 { n * (n - 1) } else { 0 };
    let mut inst = IlpInstance {
        n,
        r,
        case_of,
        instances: res.instances.clone(),
        c_clm,
        c_rls,
        k: res.capacity.clone(),
        program: BinaryProgram::new(n_vars),
        lazy_transitivity: n > FULL_TRANSITIVITY,
        interacts,
    };
    let mut p = BinaryProgram::new(n_vars);
    p.names = (0..n_vars).map(|v| inst.pair(v)).map(|(i, j)| format!("x_{i}_{j}")).collect();
    for v in 0..n_vars {
        let (i, j) = inst.pair(v);
        let (rij, rji) = (inst.r.get(i, j), inst.r.get(j, i));
        p.preferred[v] = rij;
        p.objective[v] = if rij {
            0
        } else if rji {
            w.reversal
        } else {
            w.new_pair
        };
        if inst.case_of[i] == inst.case_of[j] {
            p.fixings.insert(v, rij);
        }
    }
    let same = |i: usize, j: usize| inst.case_of[i] == inst.case_of[j];
    for i in 0..n {
        for j in 0..n {
            if i != j && !same(i, j) && inst.r.get(i, j) {
                let terms = vec![(inst.var(i, j).unwrap(), 1), (inst.var(j, i).unwrap(), 1)];
                p.constraints.push(Constraint::new(format!("rev_{i}_{j}"), terms, Cmp::Ge, 1));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if !same(i, j) {
                let terms = vec![(inst.var(i, j).unwrap(), 1), (inst.var(j, i).unwrap(), 1)];
                p.constraints.push(Constraint::new(format!("anti_{i}_{j}"), terms, Cmp::Le, 1));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || j == k || i == k || (same(i, j) && same(j, k)) {
                    continue;
                }
                let eager = !inst.lazy_transitivity
                    || (inst.interacts.get(i, j) && inst.interacts.get(j, k) && inst.interacts.get(i, k));
                if eager {
                    p.constraints.push(inst.trans_row(i, j, k));
                }
            }
        }
    }
    let mut in_capacity = vec![false; n_vars];
    for i in 0..n {
        for k in 0..inst.k.len() {
            let total: i64 = (0..n).map(|j| inst.c_clm[j][k] as i64).sum();
            let bound = inst.k[k] as i64 - total;
            if bound >= 0 {
                continue;
            }
            let mut terms = Vec::new();
            for j in (0..n).filter(|&j| j != i) {
                if inst.c_clm[j][k] > 0 {
                    terms.push((inst.var(i, j).unwrap(), -(inst.c_clm[j][k] as i64)));
                }
                if inst.c_rls[j][k] > 0 {
                    terms.push((inst.var(j, i).unwrap(), -(inst.c_rls[j][k] as i64)));
                }
            }
            for &(v, _) in &terms {
                in_capacity[v] = true;
            }
            p.constraints.push(Constraint::new(format!("cap_{i}_{}", inst.instances[k]), terms, Cmp::Le, bound));
        }
    }
    for v in (0..n_vars).filter(|&v| in_capacity[v]) {
        let (i, j) = inst.pair(v);
        if !inst.r.get(j, i) {
            // Ordering an unordered pair is cheap and can only free capacity.
            p.preferred[v] = true;
        }
    }
    let free = |v: &usize| !p.fixings.contains_key(v);
    let mut order: Vec<usize> = (0..n_vars).filter(free).filter(|&v| in_capacity[v]).collect();
    order.sort_by_key(|&v| {
        let (i, j) = inst.pair(v);
        (!inst.interacts.get(i, j), v)
    });
    order.extend((0..n_vars).filter(free).filter(|&v| !in_capacity[v]));
    p.branch_order = order;
    inst.program = p;
    inst
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IlpOutcome {
    pub x: Vec<bool>,
    pub objective: i64,
    pub nodes: usize,
    /// False when the node budget ran out and `x` is the best assignment found.
    pub proven: bool,
}

/// Solves with the block triangular assignment as first incumbent and, on
/// lazy instances, transitivity rows added as cuts when they can propagate.
pub fn solve_instance(inst: &IlpInstance, budget: usize) -> Result<IlpOutcome, IlpError> {
    let n = inst.n;
    let mut added: FxHashSet<(u32, u32, u32)> = FxHashSet::default();
    let lazy = inst.lazy_transitivity;
    let mut cuts = |x: &[i8], fresh: &[usize]| -> Vec<Constraint> {
        let mut out = Vec::new();
        if !lazy {
            return out;
        }
        let val = |i: usize, j: usize| inst.var(i, j).map_or(0, |v| x[v]);
        let mut push = |i: usize, j: usize, k: usize, out: &mut Vec<Constraint>| {
            if i != j && j != k && i != k && added.insert((i as u32, j as u32, k as u32)) {
                out.push(inst.trans_row(i, j, k));
            }
        };
        for &v in fresh {
            let (i, j) = inst.pair(v);
            if x[v] == 1 {
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    if val(j, k) != 0 && val(i, k) != 1 {
                        push(i, j, k, &mut out);
                    }
                    if val(k, i) != 0 && val(k, j) != 1 {
                        push(k, i, j, &mut out);
                    }
                }
            } else {
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    let (a, b) = (val(i, k), val(k, j));
                    if (a == 1 && b != 0) || (b == 1 && a != 0) {
                        push(i, k, j, &mut out);
                    }
                }
            }
        }
        out
    };
    let seed = inst.block_triangular();
    debug_assert!(inst.check(&seed).is_ok());
    let (sol, proven) = match solve_with(&inst.program, budget, Some(seed), &mut cuts) {
        Ok(s) => (s, true),
        Err(IlpError::BudgetExceeded { incumbent: Some(s), .. }) => {
            log::warn!("reordering program not solved to optimality within {budget} nodes; using the best order found");
            (s, false)
        }
        Err(e) => return Err(e),
    };
    debug_assert!(inst.check(&sol.assignment).is_ok());
    Ok(IlpOutcome { x: sol.assignment, objective: sol.objective, nodes: sol.nodes, proven })
}
