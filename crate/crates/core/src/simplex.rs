//! Dense bounded-variable simplex.
//!
//! Solves `min cᵀx` subject to `A_ub x ≤ b_ub`, `A_eq x = b_eq` and
//! `l ≤ x ≤ u` (entries of `l`, `u` may be infinite). The engine keeps a full
//! tableau `B⁻¹[A | I]` so that a solved instance can be cloned, have variable
//! bounds tightened, and be re-optimized with the dual simplex; this is what
//! the branch-and-bound driver relies on.
//!
//! Start strategy: primal simplex when the slack basis is feasible, dual
//! simplex when it is dual feasible, otherwise a two-phase primal method with
//! artificial variables. Pricing is Dantzig with lowest-index ties; after a
//! run of degenerate steps the primal method switches to Bland's rule.

use crate::linalg::{axpy, Matrix};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Linear program in the solver's input form.
#[derive(Clone, Debug)]
pub struct LpProblem<T> {
    pub c: Vec<T>,
    pub a_ub: Matrix<T>,
    pub b_ub: Vec<T>,
    pub a_eq: Matrix<T>,
    pub b_eq: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> LpProblem<T> {
    /// An LP with `n` variables, no rows and bounds `[0, ∞)`.
    pub fn new(c: Vec<T>) -> Self {
        let n = c.len();
        Self {
            c,
            a_ub: Matrix::zeros(0, n),
            b_ub: Vec::new(),
            a_eq: Matrix::zeros(0, n),
            b_eq: Vec::new(),
            lower: vec![T::zero(); n],
            upper: vec![T::infinity(); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }
}

#[derive(Clone, Debug)]
pub struct LpResult<T> {
    pub status: LpStatus,
    pub x: Vec<T>,
    pub objective: T,
    /// Multipliers of the `≤` rows, reported as `z ≥ 0` with stationarity
    /// `c + A_ubᵀ z - A_eqᵀ y - r = 0` where `r` are the reduced costs.
    pub ub_duals: Vec<T>,
    /// Multipliers `y` of the equality rows.
    pub eq_duals: Vec<T>,
    /// Reduced costs `r` of the user variables.
    pub reduced_costs: Vec<T>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
enum ColMap {
    Plain(usize),
    Negated(usize),
    Split(usize, usize),
}

/// Tableau state. Cloneable for warm starts.
#[derive(Clone, Debug)]
pub struct Simplex<T> {
    m: usize,
    ncols: usize,
    n_std: usize,
    n_user: usize,
    map: Vec<ColMap>,
    tab: Vec<T>,
    beta: Vec<T>,
    cost: Vec<T>,
    d: Vec<T>,
    lo: Vec<T>,
    up: Vec<T>,
    x: Vec<T>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    at_upper: Vec<bool>,
    is_artificial: Vec<bool>,
    n_ub: usize,
    status: Option<LpStatus>,
    iterations: usize,
    max_iter: usize,
    pivots_since_refresh: usize,
    feas_tol: T,
    opt_tol: T,
    piv_tol: T,
}

const NONE: usize = usize::MAX;

impl<T: Real> Simplex<T> {
    pub fn new(p: &LpProblem<T>) -> Self {
        let n_user = p.c.len();
        let n_ub = p.a_ub.rows();
        let m = n_ub + p.a_eq.rows();
        debug_assert!(p.a_ub.cols() == n_user || n_ub == 0);
        debug_assert!(p.a_eq.cols() == n_user || p.a_eq.rows() == 0);

        let mut map = Vec::with_capacity(n_user);
        let mut n_std = 0;
        for j in 0..n_user {
            let (l, u) = (p.lower[j], p.upper[j]);
            if l.is_finite() {
                map.push(ColMap::Plain(n_std));
                n_std += 1;
            } else if u.is_finite() {
                map.push(ColMap::Negated(n_std));
                n_std += 1;
            } else {
                map.push(ColMap::Split(n_std, n_std + 1));
                n_std += 2;
            }
        }

        // rows in standardized columns, then the right-hand side
        let mut rows: Vec<Vec<T>> = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let std_row = |src: &[T]| {
            let mut r = vec![T::zero(); n_std];
            for (j, cm) in map.iter().enumerate() {
                let v = src[j];
                match *cm {
                    ColMap::Plain(c) => r[c] = v,
                    ColMap::Negated(c) => r[c] = -v,
                    ColMap::Split(a, b) => {
                        r[a] = v;
                        r[b] = -v;
                    }
                }
            }
            r
        };
        for i in 0..n_ub {
            rows.push(std_row(p.a_ub.row(i)));
            rhs.push(p.b_ub[i]);
        }
        for i in 0..p.a_eq.rows() {
            rows.push(std_row(p.a_eq.row(i)));
            rhs.push(p.b_eq[i]);
        }

        let mut cost = vec![T::zero(); n_std];
        let mut lo = vec![T::zero(); n_std];
        let mut up = vec![T::infinity(); n_std];
        for (j, cm) in map.iter().enumerate() {
            match *cm {
                ColMap::Plain(c) => {
                    cost[c] = p.c[j];
                    lo[c] = p.lower[j];
                    up[c] = p.upper[j];
                }
                ColMap::Negated(c) => {
                    cost[c] = -p.c[j];
                    lo[c] = -p.upper[j];
                    up[c] = T::infinity();
                }
                ColMap::Split(a, b) => {
                    cost[a] = p.c[j];
                    cost[b] = -p.c[j];
                }
            }
        }

        let ncols = n_std + m;
        let mut tab = vec![T::zero(); m * ncols];
        for i in 0..m {
            tab[i * ncols..i * ncols + n_std].copy_from_slice(&rows[i]);
            tab[i * ncols + n_std + i] = T::one();
        }
        for i in 0..m {
            cost.push(T::zero());
            lo.push(T::zero());
            up.push(if i < n_ub { T::infinity() } else { T::zero() });
        }

        let tol = T::default_tol();
        let mut s = Self {
            m,
            ncols,
            n_std,
            n_user,
            map,
            tab,
            beta: rhs,
            d: cost.clone(),
            cost,
            lo,
            up,
            x: vec![T::zero(); ncols],
            basis: (n_std..n_std + m).collect(),
            pos: vec![NONE; ncols],
            at_upper: vec![false; ncols],
            is_artificial: vec![false; ncols],
            n_ub,
            status: None,
            iterations: 0,
            max_iter: 50 * (ncols + m) + 1000,
            pivots_since_refresh: 0,
            feas_tol: tol * T::lit(0.1),
            opt_tol: tol * T::lit(0.1),
            piv_tol: tol * T::lit(0.1),
        };
        for i in 0..m {
            s.pos[n_std + i] = i;
        }
        for j in 0..n_std {
            s.x[j] = s.lo[j];
        }
        s.refresh_basic_values();
        s
    }

    pub fn status(&self) -> Option<LpStatus> {
        self.status
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn set_iteration_limit(&mut self, limit: usize) {
        self.max_iter = limit;
    }

    #[inline]
    fn t(&self, i: usize, j: usize) -> T {
        self.tab[i * self.ncols + j]
    }

    fn refresh_basic_values(&mut self) {
        let mut xb = self.beta.clone();
        for j in 0..self.ncols {
            if self.pos[j] != NONE {
                continue;
            }
            let v = self.x[j];
            if v == T::zero() {
                continue;
            }
            for (i, xbi) in xb.iter_mut().enumerate() {
                *xbi -= self.tab[i * self.ncols + j] * v;
            }
        }
        for i in 0..self.m {
            self.x[self.basis[i]] = xb[i];
        }
        self.pivots_since_refresh = 0;
    }

    fn recompute_reduced_costs(&mut self, cost: &[T]) {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != T::zero() {
                axpy(-cb, &self.tab[i * self.ncols..(i + 1) * self.ncols], &mut d);
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = T::zero();
        }
        self.d = d;
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let p = self.tab[r * nc + q];
        let inv = T::one() / p;
        {
            let row = &mut self.tab[r * nc..(r + 1) * nc];
            row.iter_mut().for_each(|v| *v *= inv);
        }
        self.beta[r] *= inv;
        let prow: Vec<T> = self.tab[r * nc..(r + 1) * nc].to_vec();
        let pb = self.beta[r];
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * nc + q];
            if f == T::zero() {
                continue;
            }
            axpy(-f, &prow, &mut self.tab[i * nc..(i + 1) * nc]);
            self.tab[i * nc + q] = T::zero();
            self.beta[i] -= f * pb;
        }
        let f = self.d[q];
        if f != T::zero() {
            axpy(-f, &prow, &mut self.d);
        }
        self.d[q] = T::zero();
        let leaving = self.basis[r];
        self.pos[leaving] = NONE;
        self.basis[r] = q;
        self.pos[q] = r;
        self.pivots_since_refresh += 1;
    }

    fn after_pivot_maintenance(&mut self) {
        if self.pivots_since_refresh >= 100 {
            self.refresh_basic_values();
        }
    }

    /// Moves nonbasic variable `j` by `delta`, updating basic values.
    fn shift_nonbasic(&mut self, j: usize, delta: T) {
        if delta == T::zero() {
            return;
        }
        self.x[j] += delta;
        for i in 0..self.m {
            let a = self.t(i, j);
            if a != T::zero() {
                let b = self.basis[i];
                self.x[b] -= a * delta;
            }
        }
    }

    fn primal_feasible(&self) -> bool {
        (0..self.m).all(|i| {
            let b = self.basis[i];
            let v = self.x[b];
            v >= self.lo[b] - self.feas_tol && v <= self.up[b] + self.feas_tol
        })
    }

    fn dual_feasible(&self) -> bool {
        (0..self.ncols).all(|j| {
            if self.pos[j] != NONE || self.lo[j] == self.up[j] {
                return true;
            }
            if self.at_upper[j] {
                self.d[j] <= self.opt_tol
            } else {
                self.d[j] >= -self.opt_tol
            }
        })
    }

    /// Solves from the current state.
    pub fn solve(&mut self) -> LpStatus {
        let cost = self.cost.clone();
        self.recompute_reduced_costs(&cost);
        let st = if self.primal_feasible() {
            self.primal_loop()
        } else {
            // try to make the slack basis dual feasible by parking negative
            // cost columns at finite upper bounds
            let mut ok = true;
            for j in 0..self.ncols {
                if self.pos[j] != NONE || self.lo[j] == self.up[j] {
                    continue;
                }
                if self.d[j] < -self.opt_tol {
                    if self.up[j].is_finite() {
                        if !self.at_upper[j] {
                            let delta = self.up[j] - self.x[j];
                            self.shift_nonbasic(j, delta);
                            self.x[j] = self.up[j];
                            self.at_upper[j] = true;
                        }
                    } else {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                match self.dual_loop() {
                    LpStatus::Optimal => self.finish_after_dual(),
                    other => other,
                }
            } else {
                self.two_phase()
            }
        };
        self.finalize(st)
    }

    /// Tightens the bounds of user variable `j` (which must map to a single
    /// tableau column with a finite lower bound, as binaries do).
    pub fn set_var_bounds(&mut self, j: usize, lower: T, upper: T) {
        let c = match self.map[j] {
            ColMap::Plain(c) => c,
            _ => panic!("set_var_bounds requires a variable with finite lower bound"),
        };
        self.lo[c] = lower;
        self.up[c] = upper;
        if self.pos[c] == NONE {
            let target = if self.at_upper[c] && upper.is_finite() {
                upper
            } else {
                self.at_upper[c] = false;
                lower
            };
            let delta = target - self.x[c];
            self.shift_nonbasic(c, delta);
            self.x[c] = target;
        }
        self.status = None;
    }

    /// Re-optimizes after bound changes, starting from a dual feasible basis.
    pub fn reoptimize(&mut self) -> LpStatus {
        if !self.dual_feasible() {
            return self.solve_from_current();
        }
        let st = match self.dual_loop() {
            LpStatus::Optimal => self.finish_after_dual(),
            other => other,
        };
        self.finalize(st)
    }

    fn solve_from_current(&mut self) -> LpStatus {
        let st = if self.primal_feasible() {
            self.primal_loop()
        } else {
            self.two_phase()
        };
        self.finalize(st)
    }

    fn finish_after_dual(&mut self) -> LpStatus {
        self.refresh_basic_values();
        let cost = self.cost.clone();
        self.recompute_reduced_costs(&cost);
        if self.dual_feasible() {
            LpStatus::Optimal
        } else if self.primal_feasible() {
            self.primal_loop()
        } else {
            self.two_phase()
        }
    }

    fn finalize(&mut self, st: LpStatus) -> LpStatus {
        self.refresh_basic_values();
        self.status = Some(st);
        st
    }

    fn primal_loop(&mut self) -> LpStatus {
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= self.max_iter {
                return LpStatus::IterationLimit;
            }
            // pricing
            let mut q = NONE;
            let mut best = T::zero();
            for j in 0..self.ncols {
                if self.pos[j] != NONE || self.lo[j] == self.up[j] {
                    continue;
                }
                let dj = self.d[j];
                let viol = if self.at_upper[j] { dj } else { -dj };
                if viol > self.opt_tol {
                    if bland {
                        q = j;
                        break;
                    }
                    if viol > best {
                        best = viol;
                        q = j;
                    }
                }
            }
            if q == NONE {
                return LpStatus::Optimal;
            }
            self.iterations += 1;
            let dir = if self.at_upper[q] { -T::one() } else { T::one() };
            let mut tmax = self.up[q] - self.lo[q];
            let mut leave = NONE;
            let mut leave_to_upper = false;
            let mut leave_piv = T::zero();
            for i in 0..self.m {
                let a = self.t(i, q) * dir;
                let b = self.basis[i];
                let (lim, to_up) = if a > self.piv_tol {
                    (((self.x[b] - self.lo[b]) / a).max(T::zero()), false)
                } else if a < -self.piv_tol && self.up[b].is_finite() {
                    (((self.up[b] - self.x[b]) / (-a)).max(T::zero()), true)
                } else {
                    continue;
                };
                let better = if lim < tmax {
                    true
                } else if lim == tmax && leave != NONE {
                    if bland {
                        b < self.basis[leave]
                    } else {
                        a.abs() > leave_piv
                    }
                } else {
                    false
                };
                if better {
                    tmax = lim;
                    leave = i;
                    leave_to_upper = to_up;
                    leave_piv = a.abs();
                }
            }
            if !tmax.is_finite() {
                return LpStatus::Unbounded;
            }
            if tmax <= self.feas_tol {
                degenerate += 1;
                if degenerate > 50 {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
            self.shift_nonbasic(q, dir * tmax);
            if leave == NONE {
                self.at_upper[q] = !self.at_upper[q];
                self.x[q] = if self.at_upper[q] { self.up[q] } else { self.lo[q] };
            } else {
                let b = self.basis[leave];
                self.pivot(leave, q);
                self.at_upper[b] = leave_to_upper;
                self.x[b] = if leave_to_upper { self.up[b] } else { self.lo[b] };
                self.at_upper[q] = false;
                self.after_pivot_maintenance();
            }
        }
    }

    fn dual_loop(&mut self) -> LpStatus {
        loop {
            if self.iterations >= self.max_iter {
                return LpStatus::IterationLimit;
            }
            let mut r = NONE;
            let mut worst = self.feas_tol;
            for i in 0..self.m {
                let b = self.basis[i];
                let v = self.x[b];
                let inf = (self.lo[b] - v).max(v - self.up[b]);
                if inf > worst {
                    worst = inf;
                    r = i;
                }
            }
            if r == NONE {
                return LpStatus::Optimal;
            }
            self.iterations += 1;
            let b = self.basis[r];
            let below = self.x[b] < self.lo[b];
            let target = if below { self.lo[b] } else { self.up[b] };
            let mut q = NONE;
            let mut best_ratio = T::infinity();
            let mut best_piv = T::zero();
            for j in 0..self.ncols {
                if self.pos[j] != NONE || self.lo[j] == self.up[j] {
                    continue;
                }
                let a = self.t(r, j);
                let eligible = if below {
                    (!self.at_upper[j] && a < -self.piv_tol) || (self.at_upper[j] && a > self.piv_tol)
                } else {
                    (!self.at_upper[j] && a > self.piv_tol) || (self.at_upper[j] && a < -self.piv_tol)
                };
                if !eligible {
                    continue;
                }
                let ratio = self.d[j].abs() / a.abs();
                if ratio < best_ratio || (ratio == best_ratio && a.abs() > best_piv) {
                    best_ratio = ratio;
                    best_piv = a.abs();
                    q = j;
                }
            }
            if q == NONE {
                return LpStatus::Infeasible;
            }
            let delta = (self.x[b] - target) / self.t(r, q);
            self.shift_nonbasic(q, delta);
            self.pivot(r, q);
            self.at_upper[b] = !below;
            self.x[b] = target;
            self.at_upper[q] = false;
            self.after_pivot_maintenance();
        }
    }

    fn two_phase(&mut self) -> LpStatus {
        // add one artificial column per infeasible row
        let infeasible: Vec<usize> = (0..self.m)
            .filter(|&i| {
                let b = self.basis[i];
                let v = self.x[b];
                v < self.lo[b] - self.feas_tol || v > self.up[b] + self.feas_tol
            })
            .collect();
        if !infeasible.is_empty() {
            self.add_artificials(&infeasible);
        }
        let mut phase1 = vec![T::zero(); self.ncols];
        for j in 0..self.ncols {
            if self.is_artificial[j] {
                phase1[j] = T::one();
            }
        }
        self.recompute_reduced_costs(&phase1);
        match self.primal_loop() {
            LpStatus::Optimal => {}
            LpStatus::Unbounded => return LpStatus::Infeasible,
            other => return other,
        }
        self.refresh_basic_values();
        let infeas: T = (0..self.ncols)
            .filter(|&j| self.is_artificial[j])
            .map(|j| self.x[j].abs())
            .sum();
        let scale = T::one() + crate::linalg::norm_inf(&self.beta);
        if infeas > self.feas_tol * T::lit(10.0) * scale {
            return LpStatus::Infeasible;
        }
        // drive basic artificials out where possible, then fix them at zero
        for r in 0..self.m {
            let b = self.basis[r];
            if !self.is_artificial[b] {
                continue;
            }
            let mut q = NONE;
            let mut best = self.piv_tol * T::lit(10.0);
            for j in 0..self.ncols {
                if self.pos[j] != NONE || self.is_artificial[j] {
                    continue;
                }
                let a = self.t(r, j).abs();
                if a > best {
                    best = a;
                    q = j;
                }
            }
            if q != NONE {
                let delta = (self.x[b] - T::zero()) / self.t(r, q);
                self.shift_nonbasic(q, delta);
                self.pivot(r, q);
                self.x[b] = T::zero();
                self.at_upper[b] = false;
                self.at_upper[q] = false;
            }
        }
        for j in 0..self.ncols {
            if self.is_artificial[j] {
                self.lo[j] = T::zero();
                self.up[j] = T::zero();
                if self.pos[j] == NONE {
                    self.x[j] = T::zero();
                    self.at_upper[j] = false;
                }
            }
        }
        self.refresh_basic_values();
        let cost = self.cost.clone();
        self.recompute_reduced_costs(&cost);
        self.primal_loop()
    }

    fn add_artificials(&mut self, rows: &[usize]) {
        let extra = rows.len();
        let old = self.ncols;
        let nc = old + extra;
        let mut tab = vec![T::zero(); self.m * nc];
        for i in 0..self.m {
            tab[i * nc..i * nc + old].copy_from_slice(&self.tab[i * old..(i + 1) * old]);
        }
        self.tab = tab;
        self.ncols = nc;
        for v in [&mut self.cost, &mut self.d, &mut self.lo, &mut self.x] {
            v.resize(nc, T::zero());
        }
        self.up.resize(nc, T::infinity());
        self.pos.resize(nc, NONE);
        self.at_upper.resize(nc, false);
        self.is_artificial.resize(nc, true);
        for (k, &r) in rows.iter().enumerate() {
            let col = old + k;
            let b = self.basis[r];
            let v = self.x[b];
            // park the old basic variable at its violated bound
            let target = if v < self.lo[b] { self.lo[b] } else { self.up[b] };
            let resid = v - target;
            // express row r with the artificial: old basic at target, artificial absorbs
            let sign = if resid >= T::zero() { T::one() } else { -T::one() };
            self.tab[r * nc + col] = sign;
            // pivot artificial into basis in row r
            self.pos[b] = NONE;
            self.at_upper[b] = target == self.up[b] && self.up[b].is_finite() && target != self.lo[b];
            self.x[b] = target;
            self.basis[r] = col;
            self.pos[col] = r;
            // row r currently has coefficient 1 on b; turn the artificial column into a unit
            // column by scaling the row by `sign`
            if sign < T::zero() {
                for j in 0..nc {
                    self.tab[r * nc + j] = -self.tab[r * nc + j];
                }
                self.beta[r] = -self.beta[r];
            }
            self.x[col] = resid.abs();
        }
        self.max_iter += 50 * extra;
        self.refresh_basic_values();
    }

    /// Values of the user variables.
    pub fn user_x(&self) -> Vec<T> {
        self.map
            .iter()
            .map(|cm| match *cm {
                ColMap::Plain(c) => self.x[c],
                ColMap::Negated(c) => -self.x[c],
                ColMap::Split(a, b) => self.x[a] - self.x[b],
            })
            .collect()
    }

    pub fn result(&self, original_c: &[T]) -> LpResult<T> {
        let x = self.user_x();
        let objective = x.iter().zip(original_c).map(|(&a, &b)| a * b).sum();
        let mut ub_duals = Vec::with_capacity(self.n_ub);
        let mut eq_duals = Vec::with_capacity(self.m - self.n_ub);
        for i in 0..self.m {
            // y_i = -d[slack_i]
            let y = -self.d[self.n_std + i];
            if i < self.n_ub {
                ub_duals.push(-y);
            } else {
                eq_duals.push(y);
            }
        }
        let reduced_costs = self
            .map
            .iter()
            .map(|cm| match *cm {
                ColMap::Plain(c) => self.d[c],
                ColMap::Negated(c) => -self.d[c],
                ColMap::Split(a, _) => self.d[a],
            })
            .collect();
        LpResult {
            status: self.status.unwrap_or(LpStatus::IterationLimit),
            x,
            objective,
            ub_duals,
            eq_duals,
            reduced_costs,
            iterations: self.iterations,
        }
    }

    pub fn num_user_vars(&self) -> usize {
        self.n_user
    }
}

/// One-shot LP solve.
pub fn solve_lp<T: Real>(p: &LpProblem<T>) -> LpResult<T> {
    let mut s = Simplex::new(p);
    s.solve();
    s.result(&p.c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bound_active_lp() {
        // min -x, 0 <= x <= 3
        let mut p = LpProblem::new(vec![-1.0]);
        p.upper[0] = 3.0;
        let r = solve_lp(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert_abs_diff_eq!(r.x[0], 3.0);
        assert_abs_diff_eq!(r.objective, -3.0);
    }

    #[test]
    fn hinge_inactive() {
        // min xi s.t. xi >= 1 - m with m = 2, xi >= 0  ->  -xi <= m - 1
        let mut p = LpProblem::new(vec![1.0]);
        p.a_ub = Matrix::from_rows(&[vec![-1.0]]).unwrap();
        p.b_ub = vec![2.0 - 1.0];
        let r = solve_lp(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert_abs_diff_eq!(r.x[0], 0.0);
    }

    #[test]
    fn dual_start_needed() {
        // min x1 + x2 s.t. x1 + x2 >= 2, x1 - x2 = 0.5
        let mut p = LpProblem::new(vec![1.0, 2.0]);
        p.a_ub = Matrix::from_rows(&[vec![-1.0, -1.0]]).unwrap();
        p.b_ub = vec![-2.0];
        p.a_eq = Matrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        p.b_eq = vec![0.5];
        let r = solve_lp(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert_abs_diff_eq!(r.x[0], 1.25, epsilon = 1e-12);
        assert_abs_diff_eq!(r.x[1], 0.75, epsilon = 1e-12);
        // stationarity c + A_ubᵀ z - A_eqᵀ y - r = 0
        for j in 0..2 {
            let s = p.c[j] + p.a_ub[(0, j)] * r.ub_duals[0]
                - p.a_eq[(0, j)] * r.eq_duals[0]
                - r.reduced_costs[j];
            assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
        }
        assert!(r.ub_duals[0] >= 0.0);
    }

    #[test]
    fn two_phase_with_negative_costs() {
        // min -x1 - x2, x1 + x2 >= 1, x1 <= 3, x2 <= 2 (free upper otherwise)
        let mut p = LpProblem::new(vec![-1.0, -1.0]);
        p.a_ub = Matrix::from_rows(&[vec![-1.0, -1.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        p.b_ub = vec![-1.0, 3.0, 2.0];
        let r = solve_lp(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert_abs_diff_eq!(r.objective, -5.0, epsilon = 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut p = LpProblem::new(vec![1.0]);
        p.a_ub = Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        p.b_ub = vec![1.0, -2.0];
        assert_eq!(solve_lp(&p).status, LpStatus::Infeasible);

        let mut q = LpProblem::new(vec![-1.0, 0.0]);
        q.a_ub = Matrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        q.b_ub = vec![1.0];
        assert_eq!(solve_lp(&q).status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_negated_variables() {
        // min x + y  s.t. x >= -2 via row, y in (-inf, 5], y >= -1 via row, x free
        let mut p = LpProblem::new(vec![1.0, 1.0]);
        p.lower = vec![f64::NEG_INFINITY, f64::NEG_INFINITY];
        p.upper = vec![f64::INFINITY, 5.0];
        p.a_ub = Matrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        p.b_ub = vec![2.0, 1.0];
        let r = solve_lp(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert_abs_diff_eq!(r.x[0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.x[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn warm_reoptimize_after_bound_change() {
        // min -x1 - x2, x1 + x2 <= 1.5, x in [0,1]^2
        let mut p = LpProblem::new(vec![-1.0, -1.0]);
        p.upper = vec![1.0, 1.0];
        p.a_ub = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        p.b_ub = vec![1.5];
        let mut s = Simplex::new(&p);
        assert_eq!(s.solve(), LpStatus::Optimal);
        let base = s.result(&p.c);
        assert_abs_diff_eq!(base.objective, -1.5, epsilon = 1e-12);
        let frac = if (base.x[0] - 0.5f64).abs() < 1e-9 { 0 } else { 1 };
        let mut child = s.clone();
        child.set_var_bounds(frac, 0.0, 0.0);
        assert_eq!(child.reoptimize(), LpStatus::Optimal);
        let r = child.result(&p.c);
        assert_abs_diff_eq!(r.objective, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.x[frac], 0.0, epsilon = 1e-12);
    }
}
