//! Exact 0/1 integer programs: depth-first branch and bound with bound
//! propagation and cuts supplied during the search.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    /// Sparse `(variable, coefficient)` terms.
    pub terms: Vec<(usize, i64)>,
    pub cmp: Cmp,
    pub bound: i64,
}

impl Constraint {
    pub fn new(name: impl Into<String>, terms: Vec<(usize, i64)>, cmp: Cmp, bound: i64) -> Self {
        Constraint { name: name.into(), terms, cmp, bound }
    }

    pub fn lhs(&self, x: &[bool]) -> i64 {
        self.terms.iter().map(|&(v, a)| if x[v] { a } else { 0 }).sum()
    }

    pub fn holds(&self, x: &[bool]) -> bool {
        let l = self.lhs(x);
        match self.cmp {
            Cmp::Le => l <= self.bound,
            Cmp::Ge => l >= self.bound,
            Cmp::Eq => l == self.bound,
        }
    }

    /// The same condition as `<=` rows.
    fn as_le(&self) -> Vec<Vec<(usize, i64)>> {
        let neg = |t: &[(usize, i64)]| t.iter().map(|&(v, a)| (v, -a)).collect::<Vec<_>>();
        match self.cmp {
            Cmp::Le => vec![self.terms.clone()],
            Cmp::Ge => vec![neg(&self.terms)],
            Cmp::Eq => vec![self.terms.clone(), neg(&self.terms)],
        }
    }

    fn le_bounds(&self) -> Vec<i64> {
        match self.cmp {
            Cmp::Le => vec![self.bound],
            Cmp::Ge => vec![-self.bound],
            Cmp::Eq => vec![self.bound, -self.bound],
        }
    }
}

/// Minimize `constant + Σ objective[v]·x[v]` over binary `x`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BinaryProgram {
    pub n_vars: usize,
    pub objective: Vec<i64>,
    pub constant: i64,
    pub constraints: Vec<Constraint>,
    pub fixings: BTreeMap<usize, bool>,
    /// Value tried first when branching on each variable (default 0).
    pub preferred: Vec<bool>,
    /// Branching order; variables missing from it come after, by index.
    pub branch_order: Vec<usize>,
    /// Optional variable names for dumps.
    pub names: Vec<String>,
}

impl BinaryProgram {
    pub fn new(n_vars: usize) -> Self {
        BinaryProgram { n_vars, objective: vec![0; n_vars], preferred: vec![false; n_vars], ..Default::default() }
    }

    pub fn value(&self, x: &[bool]) -> i64 {
        self.constant + x.iter().zip(&self.objective).map(|(&b, &c)| if b { c } else { 0 }).sum::<i64>()
    }

    fn var_name(&self, v: usize) -> String {
        self.names.get(v).cloned().unwrap_or_else(|| format!("x{v}"))
    }

    /// LP-like text: objective line, then one line per fixing and constraint.
    pub fn dump(&self) -> String {
        let terms = |ts: &mut dyn Iterator<Item = (usize, i64)>| -> String {
            let parts: Vec<String> = ts
                .enumerate()
                .map(|(k, (v, a))| match (k, a < 0) {
                    (_, true) => format!("- {} {}", -a, self.var_name(v)),
                    (0, false) => format!("{a} {}", self.var_name(v)),
                    _ => format!("+ {a} {}", self.var_name(v)),
                })
                .collect();
            parts.join(" ")
        };
        let mut s = String::new();
        let obj = terms(&mut self.objective.iter().copied().enumerate().filter(|(_, a)| *a != 0));
        let _ = writeln!(s, "minimize: {obj} + {}", self.constant);
        for (v, b) in &self.fixings {
            let _ = writeln!(s, "fix {} = {}", self.var_name(*v), *b as u8);
        }
        for c in &self.constraints {
            let op = match c.cmp {
                Cmp::Le => "<=",
                Cmp::Ge => ">=",
                Cmp::Eq => "=",
            };
            let _ = writeln!(s, "{}: {} {op} {}", c.name, terms(&mut c.terms.iter().copied()), c.bound);
        }
        s
    }
}

impl fmt::Display for BinaryProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub assignment: Vec<bool>,
    pub objective: i64,
    /// Branching nodes visited.
    pub nodes: usize,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum IlpError {
    #[error("the program is infeasible")]
    Infeasible,
    #[error("node budget of {nodes} exhausted before optimality was proven")]
    BudgetExceeded { incumbent: Option<Solution>, nodes: usize },
}

/// Reports the first constraint or fixing `x` breaks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Infeasibility {
    Fixing(usize),
    Constraint { index: usize, name: String },
    Length,
}

pub fn check_feasible(p: &BinaryProgram, x: &[bool]) -> Result<(), Infeasibility> {
    if x.len() != p.n_vars {
        return Err(Infeasibility::Length);
    }
    for (&v, &b) in &p.fixings {
        if x[v] != b {
            return Err(Infeasibility::Fixing(v));
        }
    }
    for (i, c) in p.constraints.iter().enumerate() {
        if !c.holds(x) {
            return Err(Infeasibility::Constraint { index: i, name: c.name.clone() });
        }
    }
    Ok(())
}

/// Cut generator: sees the partial assignment (`-1` free) and the variables
/// fixed since its last call on this path, returns valid constraints to add.
pub type CutFn<'a> = dyn FnMut(&[i8], &[usize]) -> Vec<Constraint> + 'a;

pub fn solve(p: &BinaryProgram, budget: usize) -> Result<Solution, IlpError> {
    solve_with(p, budget, None, &mut |_, _| Vec::new())
}

/// Branch and bound. `incumbent`, if given, must be feasible for `p` and
/// every cut `cuts` may produce; it bounds the search from the start.
pub fn solve_with(
    p: &BinaryProgram,
    budget: usize,
    incumbent: Option<Vec<bool>>,
    cuts: &mut CutFn,
) -> Result<Solution, IlpError> {
    let mut s = Search::new(p);
    if let Some(x) = incumbent {
        debug_assert!(check_feasible(p, &x).is_ok());
        s.best = Some((p.value(&x), x));
    }
    s.run(budget, cuts)
}

struct Row {
    terms: Vec<(usize, i64)>,
    bound: i64,
}

struct Search<'a> {
    p: &'a BinaryProgram,
    rows: Vec<Row>,
    occurs: Vec<Vec<(usize, i64)>>,
    min_act: Vec<i64>,
    x: Vec<i8>,
    trail: Vec<usize>,
    lb: i64,
    order: Vec<usize>,
    best: Option<(i64, Vec<bool>)>,
    queue: Vec<usize>,
    /// Trail position up to which the cut generator has seen fixings.
    seen: usize,
}

impl<'a> Search<'a> {
    fn new(p: &'a BinaryProgram) -> Self {
        let mut order: Vec<usize> = Vec::with_capacity(p.n_vars);
        let mut listed = vec![false; p.n_vars];
        for &v in &p.branch_order {
            if !listed[v] {
                listed[v] = true;
                order.push(v);
            }
        }
        order.extend((0..p.n_vars).filter(|&v| !listed[v]));
        let lb = p.constant + p.objective.iter().filter(|&&c| c < 0).sum::<i64>();
        let mut s = Search {
            p,
            rows: Vec::new(),
            occurs: vec![Vec::new(); p.n_vars],
            min_act: Vec::new(),
            x: vec![-1; p.n_vars],
            trail: Vec::new(),
            lb,
            order,
            best: None,
            queue: Vec::new(),
            seen: 0,
        };
        for c in &p.constraints {
            s.add_constraint(c);
        }
        s
    }

    fn add_constraint(&mut self, c: &Constraint) {
        for (terms, bound) in c.as_le().into_iter().zip(c.le_bounds()) {
            let mut merged: BTreeMap<usize, i64> = BTreeMap::new();
            for (v, a) in terms {
                *merged.entry(v).or_insert(0) += a;
            }
            let terms: Vec<(usize, i64)> = merged.into_iter().filter(|&(_, a)| a != 0).collect();
            let r = self.rows.len();
            let mut act = 0;
            for &(v, a) in &terms {
                act += match self.x[v] {
                    -1 => a.min(0),
                    b => a * b as i64,
                };
                self.occurs[v].push((r, a));
            }
            self.min_act.push(act);
            self.rows.push(Row { terms, bound });
            self.queue.push(r);
        }
    }

    fn fix(&mut self, v: usize, val: bool) {
        debug_assert_eq!(self.x[v], -1);
        self.x[v] = val as i8;
        self.trail.push(v);
        let c = self.p.objective[v];
        self.lb += if val { c } else { 0 } - c.min(0);
        for &(r, a) in &self.occurs[v] {
            self.min_act[r] += if val { a } else { 0 } - a.min(0);
            self.queue.push(r);
        }
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let v = self.trail.pop().unwrap();
            let val = self.x[v] == 1;
            self.x[v] = -1;
            let c = self.p.objective[v];
            self.lb -= if val { c } else { 0 } - c.min(0);
            for &(r, a) in &self.occurs[v] {
                self.min_act[r] -= if val { a } else { 0 } - a.min(0);
            }
        }
        self.seen = self.seen.min(len);
        self.queue.clear();
    }

    /// Unit propagation over the queued rows; `false` on conflict.
    fn propagate(&mut self) -> bool {
        while let Some(r) = self.queue.pop() {
            let slack = self.rows[r].bound - self.min_act[r];
            if slack < 0 {
                self.queue.clear();
                return false;
            }
            let mut forced = Vec::new();
            for &(v, a) in &self.rows[r].terms {
                if self.x[v] == -1 && a.abs() > slack {
                    forced.push((v, a < 0));
                }
            }
            for (v, val) in forced {
                if self.x[v] == -1 {
                    self.fix(v, val);
                } else if (self.x[v] == 1) != val {
                    self.queue.clear();
                    return false;
                }
            }
        }
        true
    }

    fn settle(&mut self, cuts: &mut CutFn) -> bool {
        loop {
            if !self.propagate() {
                return false;
            }
            if self.seen == self.trail.len() {
                return true;
            }
            let fresh: Vec<usize> = self.trail[self.seen..].to_vec();
            self.seen = self.trail.len();
            let new = cuts(&self.x, &fresh);
            for c in &new {
                self.add_constraint(c);
            }
        }
    }

    fn run(&mut self, budget: usize, cuts: &mut CutFn) -> Result<Solution, IlpError> {
        for (&v, &b) in &self.p.fixings {
            match self.x[v] {
                -1 => self.fix(v, b),
                cur if (cur == 1) != b => return Err(IlpError::Infeasible),
                _ => {}
            }
        }
        // frames: (variable, second value tried, trail length before the branch)
        let mut stack: Vec<(usize, bool, usize)> = Vec::new();
        let mut nodes = 0usize;
        let mut cursor = 0usize;
        let mut ok = self.settle(cuts);
        loop {
            let prune = !ok || self.best.as_ref().is_some_and(|(b, _)| self.lb >= *b);
            if !prune {
                while cursor < self.order.len() && self.x[self.order[cursor]] != -1 {
                    cursor += 1;
                }
                if cursor == self.order.len() {
                    let x: Vec<bool> = self.x.iter().map(|&b| b == 1).collect();
                    self.best = Some((self.lb, x));
                } else {
                    if nodes >= budget {
                        return Err(IlpError::BudgetExceeded { incumbent: self.solution(nodes), nodes });
                    }
                    nodes += 1;
                    let v = self.order[cursor];
                    stack.push((v, false, self.trail.len()));
                    self.fix(v, self.p.preferred[v]);
                    ok = self.settle(cuts);
                    continue;
                }
            }
            // backtrack
            loop {
                let Some((v, second, len)) = stack.pop() else {
                    return self.solution(nodes).ok_or(IlpError::Infeasible);
                };
                self.undo_to(len);
                cursor = 0;
                if !second {
                    stack.push((v, true, len));
                    self.fix(v, !self.p.preferred[v]);
                    ok = self.settle(cuts);
                    break;
                }
            }
        }
    }

    fn solution(&self, nodes: usize) -> Option<Solution> {
        self.best.as_ref().map(|(v, x)| Solution { assignment: x.clone(), objective: *v, nodes })
    }
}
