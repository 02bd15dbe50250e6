//! Mixed-integer linear programming over binary variables by LP-relaxation
//! branch-and-bound.
//!
//! Node selection is best-bound (ties by creation order) with a depth-first
//! dive every eighth selection; branching picks the most fractional binary,
//! lowest index first. Node relaxations are re-optimized with the dual
//! simplex from the parent's tableau when memory allows, otherwise from the
//! root tableau.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::qp::{write_block, write_vec, DumpReader};
use crate::scalar::Real;
use crate::simplex::{LpProblem, LpStatus, Simplex};

#[derive(Clone, Debug)]
pub struct MilpProblem<T> {
    pub c: Vec<T>,
    pub a_in: Matrix<T>,
    pub b_in: Vec<T>,
    pub a_eq: Matrix<T>,
    pub b_eq: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub binary: Vec<bool>,
}

impl<T: Real> MilpProblem<T> {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.c.len();
        let rows_ok = |m: &Matrix<T>, b: &[T]| m.rows() == b.len() && (m.rows() == 0 || m.cols() == p);
        if !rows_ok(&self.a_in, &self.b_in) || !rows_ok(&self.a_eq, &self.b_eq) {
            return Err(Error::dim("constraint block sizes are inconsistent"));
        }
        if self.lower.len() != p || self.upper.len() != p || self.binary.len() != p {
            return Err(Error::dim("bounds and binary mask need one entry per variable"));
        }
        for j in 0..p {
            if !(self.lower[j] <= self.upper[j]) {
                return Err(Error::arg(format!("variable {j}: lower bound exceeds upper bound")));
            }
            if self.binary[j] && (self.lower[j] < T::zero() || self.upper[j] > T::one()) {
                return Err(Error::arg(format!("binary variable {j} has bounds outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &[T]) -> T {
        x.iter().zip(&self.c).map(|(&a, &b)| a * b).sum()
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut v = T::zero();
        if self.a_in.rows() > 0 {
            for (i, ax) in self.a_in.matvec(x).into_iter().enumerate() {
                v = v.max(ax - self.b_in[i]);
            }
        }
        if self.a_eq.rows() > 0 {
            for (i, ax) in self.a_eq.matvec(x).into_iter().enumerate() {
                v = v.max((ax - self.b_eq[i]).abs());
            }
        }
        for j in 0..x.len() {
            v = v.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        v
    }

    /// The LP relaxation.
    pub fn relaxation(&self) -> LpProblem<T> {
        LpProblem {
            c: self.c.clone(),
            a_ub: self.a_in.clone(),
            b_ub: self.b_in.clone(),
            a_eq: self.a_eq.clone(),
            b_eq: self.b_eq.clone(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }

    /// Same dense text layout as the QP dump, plus a binary-mask line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "milp {} {} {}", self.c.len(), self.a_eq.rows(), self.a_in.rows());
        write_vec(&mut s, "c", &self.c);
        write_block(&mut s, "A_eq", &self.a_eq);
        write_vec(&mut s, "b_eq", &self.b_eq);
        write_block(&mut s, "A_in", &self.a_in);
        write_vec(&mut s, "b_in", &self.b_in);
        write_vec(&mut s, "lower", &self.lower);
        write_vec(&mut s, "upper", &self.upper);
        let mask: Vec<&str> = self.binary.iter().map(|&b| if b { "1" } else { "0" }).collect();
        let _ = writeln!(s, "binary {}", self.binary.len());
        let _ = writeln!(s, "{}", mask.join(" "));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = DumpReader::new(text);
        let d = r.header("milp", 3)?;
        let (p, q, m) = (d[0], d[1], d[2]);
        let c = r.vec("c", p)?;
        let a_eq = r.block("A_eq", q, p)?;
        let b_eq = r.vec("b_eq", q)?;
        let a_in = r.block("A_in", m, p)?;
        let b_in = r.vec("b_in", m)?;
        let lower = r.vec("lower", p)?;
        let upper = r.vec("upper", p)?;
        r.header("binary", 1)?;
        let (ln, line) = r.raw_line()?;
        let binary: Vec<bool> = line
            .split_whitespace()
            .map(|t| match t {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(Error::Parse { line: ln, msg: format!("bad mask entry `{t}`") }),
            })
            .collect::<Result<_>>()?;
        let prob = Self { c, a_in, b_in, a_eq, b_eq, lower, upper, binary };
        prob.validate()?;
        Ok(prob)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    GapLimit,
}

#[derive(Clone, Debug)]
pub struct MilpSolution<T> {
    pub x: Vec<T>,
    pub objective: T,
    pub status: MilpStatus,
    /// Relative gap `(incumbent − bound) / max(1, |incumbent|)`.
    pub gap: T,
    /// Proven lower bound on the optimum.
    pub bound: T,
    pub root_bound: T,
    pub nodes_explored: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct MilpOptions<T> {
    pub gap_tol: T,
    pub node_limit: usize,
    pub int_tol: T,
    /// Nodes between depth-first dives.
    pub dive_every: usize,
    /// Upper limit on memory held by cached node tableaus.
    pub warm_start_bytes: usize,
}

impl<T: Real> Default for MilpOptions<T> {
    fn default() -> Self {
        Self {
            gap_tol: T::lit(1e-9),
            node_limit: 1_000_000,
            int_tol: T::lit(1e-6),
            dive_every: 8,
            warm_start_bytes: 256 << 20,
        }
    }
}

/// Proposes binary values from a relaxation solution. Only the entries at
/// binary positions of the returned vector are used.
pub type Heuristic<'a, T> = &'a dyn Fn(&[T]) -> Option<Vec<T>>;

pub fn solve_milp<T: Real>(problem: &MilpProblem<T>, gap_tol: T, node_limit: usize) -> Result<MilpSolution<T>> {
    let opts = MilpOptions { gap_tol, node_limit, ..MilpOptions::default() };
    solve_milp_with(problem, &opts, None)
}

struct Node<T> {
    id: usize,
    bound: T,
    depth: usize,
    fixings: Vec<(usize, T)>,
    warm: Option<Arc<Simplex<T>>>,
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
struct Key<T>(T, usize);

impl<T: PartialOrd> Eq for Key<T> {}

impl<T: PartialOrd> Ord for Key<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .partial_cmp(&other.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(self.1.cmp(&other.1))
    }
}

struct Search<'a, T: Real> {
    prob: &'a MilpProblem<T>,
    opts: &'a MilpOptions<T>,
    root: Arc<Simplex<T>>,
    incumbent: Option<(T, Vec<T>)>,
    open: BTreeMap<Key<T>, Node<T>>,
    next_id: usize,
    warm_live: usize,
    warm_cap: usize,
    heuristic: Option<Heuristic<'a, T>>,
}

impl<'a, T: Real> Search<'a, T> {
    fn cutoff(&self) -> T {
        match &self.incumbent {
            Some((v, _)) => *v - self.opts.gap_tol * v.abs().max(T::one()),
            None => T::infinity(),
        }
    }

    /// LP with all binaries fixed to `vals`, warm-started from `base`.
    fn evaluate_fixed(&self, base: &Simplex<T>, vals: &[T]) -> Option<(T, Vec<T>)> {
        let mut s = base.clone();
        for j in 0..vals.len() {
            if self.prob.binary[j] {
                let v = if vals[j] >= T::lit(0.5) { T::one() } else { T::zero() };
                if v < self.prob.lower[j] || v > self.prob.upper[j] {
                    return None;
                }
                s.set_var_bounds(j, v, v);
            }
        }
        if s.reoptimize() != LpStatus::Optimal {
            return None;
        }
        let mut x = s.user_x();
        for j in 0..x.len() {
            if self.prob.binary[j] {
                x[j] = x[j].round();
            }
        }
        Some((self.prob.objective(&x), x))
    }

    fn offer(&mut self, obj: T, x: Vec<T>) {
        let better = match &self.incumbent {
            Some((v, _)) => obj < *v,
            None => true,
        };
        if better {
            self.incumbent = Some((obj, x));
        }
    }

    fn push(&mut self, node: Node<T>) {
        self.open.insert(Key(node.bound, node.id), node);
    }

    fn pop_best(&mut self) -> Option<Node<T>> {
        let k = *self.open.keys().next()?;
        self.open.remove(&k)
    }

    fn pop_deepest(&mut self) -> Option<Node<T>> {
        let k = self
            .open
            .iter()
            .max_by(|a, b| a.1.depth.cmp(&b.1.depth).then(b.0.cmp(a.0)))
            .map(|(k, _)| *k)?;
        self.open.remove(&k)
    }

    fn release(&mut self, node: &mut Node<T>) {
        if node.warm.take().is_some() {
            self.warm_live -= 1;
        }
    }
}

/// Branch-and-bound with options and an optional rounding heuristic.
pub fn solve_milp_with<T: Real>(
    problem: &MilpProblem<T>,
    opts: &MilpOptions<T>,
    heuristic: Option<Heuristic<'_, T>>,
) -> Result<MilpSolution<T>> {
    problem.validate()?;
    let lp = problem.relaxation();
    let mut root = Simplex::new(&lp);
    let root_status = root.solve();
    let p = problem.num_vars();
    match root_status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Ok(MilpSolution {
                x: vec![T::zero(); p],
                objective: T::infinity(),
                status: MilpStatus::Infeasible,
                gap: T::infinity(),
                bound: T::infinity(),
                root_bound: T::infinity(),
                nodes_explored: 1,
            })
        }
        LpStatus::Unbounded => return Err(Error::Numerical("LP relaxation is unbounded".into())),
        LpStatus::IterationLimit => {
            return Err(Error::Numerical("simplex iteration limit at the root relaxation".into()))
        }
    }
    let root_x = root.user_x();
    let root_bound = problem.objective(&root_x);
    let tableau_bytes = (lp.a_ub.rows() + lp.a_eq.rows() + 1) * (2 * p + lp.a_ub.rows() + lp.a_eq.rows() + 1)
        * std::mem::size_of::<T>();
    let warm_cap = opts.warm_start_bytes / tableau_bytes.max(1);
    let root = Arc::new(root);
    let mut search = Search {
        prob: problem,
        opts,
        root: root.clone(),
        incumbent: None,
        open: BTreeMap::new(),
        next_id: 1,
        warm_live: 0,
        warm_cap,
        heuristic,
    };
    search.push(Node { id: 0, bound: root_bound, depth: 0, fixings: Vec::new(), warm: None });

    let mut explored = 0usize;
    let mut selections = 0usize;
    let mut hit_limit = false;
    'outer: loop {
        let dive = opts.dive_every > 0 && selections % opts.dive_every == opts.dive_every - 1;
        let first = if dive { search.pop_deepest() } else { search.pop_best() };
        let Some(first) = first else { break };
        selections += 1;
        let mut current = Some(first);
        while let Some(mut node) = current.take() {
            if node.bound >= search.cutoff() {
                search.release(&mut node);
                continue;
            }
            if explored >= opts.node_limit {
                search.push(node);
                hit_limit = true;
                break 'outer;
            }
            explored += 1;
            // node relaxation
            let state: Simplex<T> = if node.id == 0 {
                (*search.root).clone()
            } else {
                let base = node.warm.clone().unwrap_or_else(|| search.root.clone());
                let mut s = (*base).clone();
                for &(j, v) in &node.fixings {
                    s.set_var_bounds(j, v, v);
                }
                if s.reoptimize() != LpStatus::Optimal {
                    search.release(&mut node);
                    continue;
                }
                s
            };
            search.release(&mut node);
            let x = state.user_x();
            let obj = problem.objective(&x);
            if obj >= search.cutoff() {
                continue;
            }
            // branching candidate
            let mut branch = None;
            let mut best_frac = opts.int_tol;
            for j in 0..p {
                if !problem.binary[j] {
                    continue;
                }
                let f = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
                if f > best_frac {
                    best_frac = f;
                    branch = Some(j);
                }
            }
            let Some(j) = branch else {
                // integral relaxation: polish binaries and accept
                if let Some((v, xi)) = search.evaluate_fixed(&state, &x) {
                    search.offer(v, xi);
                }
                continue;
            };
            // heuristic completion
            let proposal = match search.heuristic {
                Some(h) => h(&x),
                None => Some(x.iter().map(|v| v.round()).collect()),
            };
            if let Some(vals) = proposal {
                if let Some((v, xi)) = search.evaluate_fixed(&state, &vals) {
                    search.offer(v, xi);
                }
            }
            if obj >= search.cutoff() {
                continue;
            }
            let state = Arc::new(state);
            let up_first = x[j] >= T::lit(0.5);
            let mut children = Vec::with_capacity(2);
            for val in [T::zero(), T::one()] {
                let mut fixings = node.fixings.clone();
                fixings.push((j, val));
                let warm = if search.warm_live < search.warm_cap {
                    search.warm_live += 1;
                    Some(state.clone())
                } else {
                    None
                };
                children.push(Node { id: search.next_id, bound: obj, depth: node.depth + 1, fixings, warm });
                search.next_id += 1;
            }
            let (down, up) = {
                let up = children.pop().expect("two children");
                let down = children.pop().expect("two children");
                (down, up)
            };
            if dive {
                let (go, keep) = if up_first { (up, down) } else { (down, up) };
                search.push(keep);
                current = Some(go);
            } else {
                search.push(down);
                search.push(up);
            }
        }
    }

    let open_bound = search.open.keys().next().map(|k| k.0);
    match search.incumbent.take() {
        None => {
            let bound = open_bound.unwrap_or(T::infinity());
            Ok(MilpSolution {
                x: vec![T::zero(); p],
                objective: T::infinity(),
                status: if hit_limit { MilpStatus::GapLimit } else { MilpStatus::Infeasible },
                gap: T::infinity(),
                bound,
                root_bound,
                nodes_explored: explored,
            })
        }
        Some((obj, x)) => {
            let bound = match open_bound {
                Some(b) if hit_limit => b.min(obj),
                _ => obj,
            };
            let gap = (obj - bound) / obj.abs().max(T::one());
            let status = if hit_limit && gap > opts.gap_tol { MilpStatus::GapLimit } else { MilpStatus::Optimal };
            Ok(MilpSolution { x, objective: obj, status, gap, bound: if status == MilpStatus::Optimal { bound.min(obj) } else { bound }, root_bound, nodes_explored: explored })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_binaries() -> MilpProblem<f64> {
        MilpProblem {
            c: vec![-1.0, -1.0],
            a_in: Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            b_in: vec![1.0],
            a_eq: Matrix::zeros(0, 2),
            b_eq: vec![],
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
            binary: vec![true, true],
        }
    }

    #[test]
    fn tie_goes_to_first_variable() {
        let s = solve_milp(&two_binaries(), 1e-9, 1000).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert_eq!(s.objective, -1.0);
        assert_eq!(s.x, vec![1.0, 0.0]);
    }

    #[test]
    fn no_binaries_is_lp() {
        let mut p = two_binaries();
        p.binary = vec![false, false];
        p.b_in = vec![1.5];
        let s = solve_milp(&p, 1e-9, 1000).unwrap();
        assert!((s.objective + 1.5).abs() < 1e-12);
        assert_eq!(s.nodes_explored, 1);
    }

    #[test]
    fn knapsack_needs_branching() {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let p = MilpProblem {
            c: vec![-5.0, -4.0, -3.0],
            a_in: Matrix::from_rows(&[vec![2.0, 3.0, 1.0], vec![4.0, 1.0, 2.0], vec![3.0, 4.0, 2.0]]).unwrap(),
            b_in: vec![5.0, 11.0, 8.0],
            a_eq: Matrix::zeros(0, 3),
            b_eq: vec![],
            lower: vec![0.0; 3],
            upper: vec![1.0; 3],
            binary: vec![true; 3],
        };
        let s = solve_milp(&p, 1e-9, 1000).unwrap();
        // enumerate
        let mut best = f64::INFINITY;
        for m in 0..8u32 {
            let x: Vec<f64> = (0..3).map(|j| ((m >> j) & 1) as f64).collect();
            if p.max_violation(&x) <= 0.0 {
                best = best.min(p.objective(&x));
            }
        }
        assert_eq!(s.objective, best);
        assert!(s.root_bound <= s.objective);
    }

    #[test]
    fn infeasible_and_dump() {
        let mut p = two_binaries();
        p.a_in = Matrix::from_rows(&[vec![-1.0, -1.0]]).unwrap();
        p.b_in = vec![-1.5];
        p.upper = vec![1.0, 0.0];
        let s = solve_milp(&p, 1e-9, 1000).unwrap();
        assert_eq!(s.status, MilpStatus::Infeasible);
        let t = p.to_text();
        assert_eq!(MilpProblem::<f64>::from_text(&t).unwrap().to_text(), t);
    }
}
