//! Convex quadratic programming by a primal-dual interior-point method.
//!
//! Problem form: minimize `½ θᵀQθ + cᵀθ` subject to `A_eq θ = b_eq`,
//! `A_in θ ≤ b_in` and `lower ≤ θ ≤ upper`. Multipliers follow the
//! stationarity convention
//!
//! ```text
//! Qθ + c − A_eqᵀ y + A_inᵀ z − z_lower + z_upper = 0,   z, z_lower, z_upper ≥ 0.
//! ```
//!
//! Problems with `Q = 0` are routed to the simplex engine, which returns a
//! basic optimal solution.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{axpy, cholesky, cholesky_jittered, chol_solve, dot, norm_inf, Matrix};
use crate::scalar::Real;
use crate::simplex::{LpProblem, LpStatus, Simplex};

/// Quadratic term of a QP.
#[derive(Clone, Debug)]
pub enum Hessian<T> {
    /// Explicit symmetric positive semidefinite matrix.
    Dense(Matrix<T>),
    /// `Q = V Vᵀ` with `V` of size `p x r`. Lets the solver work with
    /// `r x r` systems when `r` is much smaller than `p`.
    LowRank(Matrix<T>),
}

impl<T: Real> Hessian<T> {
    pub fn dim(&self) -> usize {
        match self {
            Hessian::Dense(q) => q.rows(),
            Hessian::LowRank(v) => v.rows(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Hessian::Dense(q) => q.as_slice().iter().all(|&v| v == T::zero()),
            Hessian::LowRank(v) => v.cols() == 0 || v.as_slice().iter().all(|&x| x == T::zero()),
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        match self {
            Hessian::Dense(q) => q.matvec(x),
            Hessian::LowRank(v) => v.matvec(&v.matvec_t(x)),
        }
    }

    pub fn to_dense(&self) -> Matrix<T> {
        match self {
            Hessian::Dense(q) => q.clone(),
            Hessian::LowRank(v) => {
                let w = vec![T::one(); v.cols()];
                v.transpose().weighted_gram(&w)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct QpProblem<T> {
    pub q: Hessian<T>,
    pub c: Vec<T>,
    pub a_eq: Matrix<T>,
    pub b_eq: Vec<T>,
    pub a_in: Matrix<T>,
    pub b_in: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> QpProblem<T> {
    /// Unconstrained problem; add rows and bounds by assigning fields.
    pub fn new(q: Hessian<T>, c: Vec<T>) -> Self {
        let p = c.len();
        Self {
            q,
            c,
            a_eq: Matrix::zeros(0, p),
            b_eq: Vec::new(),
            a_in: Matrix::zeros(0, p),
            b_in: Vec::new(),
            lower: vec![T::neg_infinity(); p],
            upper: vec![T::infinity(); p],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.c.len();
        if self.q.dim() != p {
            return Err(Error::dim(format!("Q is {} but c has {p} entries", self.q.dim())));
        }
        if let Hessian::Dense(q) = &self.q {
            if q.cols() != p {
                return Err(Error::dim("Q must be square"));
            }
            let tol = T::lit(1e-10) * (T::one() + q.max_abs());
            if !q.is_symmetric(tol) {
                return Err(Error::arg("Q is not symmetric"));
            }
        }
        let rows_ok = |m: &Matrix<T>, b: &[T]| m.rows() == b.len() && (m.rows() == 0 || m.cols() == p);
        if !rows_ok(&self.a_eq, &self.b_eq) || !rows_ok(&self.a_in, &self.b_in) {
            return Err(Error::dim("constraint block sizes are inconsistent"));
        }
        if self.lower.len() != p || self.upper.len() != p {
            return Err(Error::dim("bound vectors must have one entry per variable"));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::arg("lower bound exceeds upper bound"));
        }
        Ok(())
    }

    pub fn objective(&self, theta: &[T]) -> T {
        let qx = self.q.apply(theta);
        T::lit(0.5) * dot(theta, &qx) + dot(&self.c, theta)
    }

    fn as_lp(&self) -> LpProblem<T> {
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

    /// Plain-text dump: a dimensions header followed by dense row-major
    /// blocks, one matrix row per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = self.c.len();
        let _ = writeln!(s, "qp {} {} {}", p, self.a_eq.rows(), self.a_in.rows());
        write_block(&mut s, "Q", &self.q.to_dense());
        write_vec(&mut s, "c", &self.c);
        write_block(&mut s, "A_eq", &self.a_eq);
        write_vec(&mut s, "b_eq", &self.b_eq);
        write_block(&mut s, "A_in", &self.a_in);
        write_vec(&mut s, "b_in", &self.b_in);
        write_vec(&mut s, "lower", &self.lower);
        write_vec(&mut s, "upper", &self.upper);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = DumpReader::new(text);
        let dims = r.header("qp", 3)?;
        let (p, q, m) = (dims[0], dims[1], dims[2]);
        let hq = r.block("Q", p, p)?;
        let c = r.vec("c", p)?;
        let a_eq = r.block("A_eq", q, p)?;
        let b_eq = r.vec("b_eq", q)?;
        let a_in = r.block("A_in", m, p)?;
        let b_in = r.vec("b_in", m)?;
        let lower = r.vec("lower", p)?;
        let upper = r.vec("upper", p)?;
        let prob = Self { q: Hessian::Dense(hq), c, a_eq, b_eq, a_in, b_in, lower, upper };
        prob.validate()?;
        Ok(prob)
    }
}

pub(crate) fn write_block<T: Real>(s: &mut String, name: &str, m: &Matrix<T>) {
    let _ = writeln!(s, "{name} {} {}", m.rows(), m.cols());
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| fmt_real(*v)).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
}

pub(crate) fn write_vec<T: Real>(s: &mut String, name: &str, v: &[T]) {
    let line: Vec<String> = v.iter().map(|x| fmt_real(*x)).collect();
    let _ = writeln!(s, "{name} {}", v.len());
    let _ = writeln!(s, "{}", line.join(" "));
}

fn fmt_real<T: Real>(v: T) -> String {
    let x = v.to_f64_lossy();
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

pub(crate) struct DumpReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> DumpReader<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self { lines: text.lines().enumerate() }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l.trim()))
            .ok_or(Error::Parse { line: 0, msg: "unexpected end of dump".into() })
    }

    pub(crate) fn header(&mut self, tag: &str, count: usize) -> Result<Vec<usize>> {
        let (ln, line) = self.next_line()?;
        let mut it = line.split_whitespace();
        if it.next() != Some(tag) {
            return Err(Error::Parse { line: ln, msg: format!("expected `{tag}` header") });
        }
        let dims: Vec<usize> = it
            .map(|t| t.parse().map_err(|_| Error::Parse { line: ln, msg: format!("bad dimension `{t}`") }))
            .collect::<Result<_>>()?;
        if dims.len() != count {
            return Err(Error::Parse { line: ln, msg: "wrong number of dimensions".into() });
        }
        Ok(dims)
    }

    fn values<T: Real>(ln: usize, line: &str, expected: usize) -> Result<Vec<T>> {
        let vals: Vec<T> = line
            .split_whitespace()
            .map(|t| {
                let x: f64 = match t {
                    "inf" => f64::INFINITY,
                    "-inf" => f64::NEG_INFINITY,
                    _ => t.parse().map_err(|_| Error::Parse { line: ln, msg: format!("bad number `{t}`") })?,
                };
                Ok(T::from_f64(x).unwrap_or_else(T::nan))
            })
            .collect::<Result<_>>()?;
        if vals.len() != expected {
            return Err(Error::Parse { line: ln, msg: format!("expected {expected} values, found {}", vals.len()) });
        }
        Ok(vals)
    }

    pub(crate) fn block<T: Real>(&mut self, name: &str, rows: usize, cols: usize) -> Result<Matrix<T>> {
        let d = self.header(name, 2)?;
        if d[0] != rows || d[1] != cols {
            return Err(Error::Parse { line: 0, msg: format!("block {name} has wrong shape") });
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (ln, line) = self.next_line()?;
            data.extend(Self::values::<T>(ln, line, cols)?);
        }
        Matrix::from_vec(rows, cols, data)
    }

    pub(crate) fn vec<T: Real>(&mut self, name: &str, len: usize) -> Result<Vec<T>> {
        let d = self.header(name, 1)?;
        if d[0] != len {
            return Err(Error::Parse { line: 0, msg: format!("vector {name} has wrong length") });
        }
        let (ln, line) = self.next_line()?;
        Self::values(ln, line, len)
    }

    pub(crate) fn raw_line(&mut self) -> Result<(usize, &'a str)> {
        self.next_line()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

/// Scaled KKT residuals of a returned point (∞-norms).
#[derive(Clone, Copy, Debug, Default)]
pub struct KktResiduals<T> {
    pub primal: T,
    pub dual: T,
    pub complementarity: T,
    /// Primal minus dual objective.
    pub gap: T,
}

#[derive(Clone, Debug)]
pub struct QpSolution<T> {
    pub status: QpStatus,
    pub theta: Vec<T>,
    pub objective: T,
    pub eq_duals: Vec<T>,
    pub in_duals: Vec<T>,
    pub lower_duals: Vec<T>,
    pub upper_duals: Vec<T>,
    pub iterations: usize,
    pub residuals: KktResiduals<T>,
}

impl<T: Real> QpSolution<T> {
    /// Net bound multipliers `z_lower − z_upper`.
    pub fn bound_duals(&self) -> Vec<T> {
        self.lower_duals.iter().zip(&self.upper_duals).map(|(&l, &u)| l - u).collect()
    }
}

/// Dual objective `−½θᵀQθ + b_eqᵀy − b_inᵀz + lᵀz_l − uᵀz_u` of a candidate.
pub fn dual_objective<T: Real>(p: &QpProblem<T>, s: &QpSolution<T>) -> T {
    let qx = p.q.apply(&s.theta);
    let mut d = -T::lit(0.5) * dot(&s.theta, &qx) + dot(&p.b_eq, &s.eq_duals) - dot(&p.b_in, &s.in_duals);
    for j in 0..p.c.len() {
        if p.lower[j].is_finite() {
            d += p.lower[j] * s.lower_duals[j];
        }
        if p.upper[j].is_finite() {
            d -= p.upper[j] * s.upper_duals[j];
        }
    }
    d
}

/// KKT residuals of `s` for `p`, each in ∞-norm.
pub fn kkt_residuals<T: Real>(p: &QpProblem<T>, s: &QpSolution<T>) -> KktResiduals<T> {
    let x = &s.theta;
    let mut rd = p.q.apply(x);
    for j in 0..rd.len() {
        rd[j] += p.c[j] - s.lower_duals[j] + s.upper_duals[j];
    }
    if p.a_eq.rows() > 0 {
        axpy(-T::one(), &p.a_eq.matvec_t(&s.eq_duals), &mut rd);
    }
    if p.a_in.rows() > 0 {
        axpy(T::one(), &p.a_in.matvec_t(&s.in_duals), &mut rd);
    }
    let mut primal = T::zero();
    let mut compl = T::zero();
    if p.a_eq.rows() > 0 {
        let ax = p.a_eq.matvec(x);
        for i in 0..ax.len() {
            primal = primal.max((ax[i] - p.b_eq[i]).abs());
        }
    }
    if p.a_in.rows() > 0 {
        let gx = p.a_in.matvec(x);
        for i in 0..gx.len() {
            let slack = p.b_in[i] - gx[i];
            primal = primal.max((-slack).max(T::zero()));
            compl = compl.max((slack * s.in_duals[i]).abs());
        }
    }
    for j in 0..x.len() {
        primal = primal.max((p.lower[j] - x[j]).max(x[j] - p.upper[j]).max(T::zero()));
        if p.lower[j].is_finite() {
            compl = compl.max(((x[j] - p.lower[j]) * s.lower_duals[j]).abs());
        }
        if p.upper[j].is_finite() {
            compl = compl.max(((p.upper[j] - x[j]) * s.upper_duals[j]).abs());
        }
    }
    KktResiduals {
        primal,
        dual: norm_inf(&rd),
        complementarity: compl,
        gap: p.objective(x) - dual_objective(p, s),
    }
}

/// Solves an LP given in QP form (`Q` must be zero) with the simplex engine.
pub fn solve_lp_via_qp<T: Real>(problem: &QpProblem<T>) -> Result<QpSolution<T>> {
    problem.validate()?;
    if !problem.q.is_zero() {
        return Err(Error::arg("solve_lp_via_qp requires Q = 0"));
    }
    let lp = problem.as_lp();
    let mut simplex = Simplex::new(&lp);
    let st = simplex.solve();
    let r = simplex.result(&lp.c);
    let status = match st {
        LpStatus::Optimal => QpStatus::Optimal,
        LpStatus::Infeasible => QpStatus::Infeasible,
        LpStatus::Unbounded => QpStatus::Unbounded,
        LpStatus::IterationLimit => QpStatus::MaxIter,
    };
    let lower_duals = r.reduced_costs.iter().map(|&v| v.max(T::zero())).collect();
    let upper_duals = r.reduced_costs.iter().map(|&v| (-v).max(T::zero())).collect();
    let mut sol = QpSolution {
        status,
        objective: r.objective,
        theta: r.x,
        eq_duals: r.eq_duals,
        in_duals: r.ub_duals,
        lower_duals,
        upper_duals,
        iterations: r.iterations,
        residuals: KktResiduals::default(),
    };
    sol.residuals = kkt_residuals(problem, &sol);
    Ok(sol)
}

/// Solves a convex QP. `tol` applies to the KKT residuals scaled by
/// `1 + ‖c‖∞`; `max_iter` bounds the interior-point iterations.
pub fn solve_qp<T: Real>(problem: &QpProblem<T>, tol: T, max_iter: usize) -> Result<QpSolution<T>> {
    problem.validate()?;
    if problem.q.is_zero() {
        return solve_lp_via_qp(problem);
    }
    // phase-1 feasibility certificate
    let mut feas = problem.as_lp();
    feas.c = vec![T::zero(); problem.c.len()];
    let mut s = Simplex::new(&feas);
    match s.solve() {
        LpStatus::Infeasible => {
            let p = problem.c.len();
            return Ok(QpSolution {
                status: QpStatus::Infeasible,
                theta: s.user_x(),
                objective: T::nan(),
                eq_duals: vec![T::zero(); problem.a_eq.rows()],
                in_duals: vec![T::zero(); problem.a_in.rows()],
                lower_duals: vec![T::zero(); p],
                upper_duals: vec![T::zero(); p],
                iterations: 0,
                residuals: KktResiduals::default(),
            });
        }
        _ => {}
    }
    Ipm::new(problem).run(tol, max_iter)
}

/// Factorization of the reduced Newton matrix `H = Q + D (+ GᵀWG)`.
enum Factor<T> {
    Dense(Matrix<T>),
    LowRank { v: Matrix<T>, dinv: Vec<T>, dg: Vec<T>, inner: Matrix<T> },
}

impl<T: Real> Factor<T> {
    fn solve(&self, b: &[T]) -> Vec<T> {
        match self {
            Factor::Dense(l) => {
                let mut x = b.to_vec();
                chol_solve(l, &mut x);
                x
            }
            Factor::LowRank { v, dinv, dg, inner } => {
                let woodbury = |rhs: &[T]| -> Vec<T> {
                    let t: Vec<T> = rhs.iter().zip(dinv).map(|(&a, &d)| a * d).collect();
                    let mut w = v.matvec_t(&t);
                    chol_solve(inner, &mut w);
                    let vw = v.matvec(&w);
                    t.iter().zip(&vw).zip(dinv).map(|((&a, &b), &d)| a - d * b).collect()
                };
                let mut x = woodbury(b);
                // iterative refinement against the exact operator
                for _ in 0..2 {
                    let hx = v.matvec(&v.matvec_t(&x));
                    let r: Vec<T> = (0..b.len()).map(|i| b[i] - hx[i] - dg[i] * x[i]).collect();
                    let dx = woodbury(&r);
                    axpy(T::one(), &dx, &mut x);
                }
                x
            }
        }
    }
}

struct Ipm<'a, T> {
    prob: &'a QpProblem<T>,
    q: Hessian<T>,
    a: Matrix<T>,
    b: Vec<T>,
    has_l: Vec<bool>,
    has_u: Vec<bool>,
    free_bounds_fixed: Vec<usize>,
}

/// A step that survives `v ± step` rounding.
fn ulp<T: Real>(v: T) -> T {
    (v.abs() * T::epsilon() * T::lit(2.0)).max(T::min_positive_value())
}

impl<'a, T: Real> Ipm<'a, T> {
    fn new(prob: &'a QpProblem<T>) -> Self {
        let p = prob.c.len();
        // fixed variables become equality rows
        let mut rows: Vec<Vec<T>> = (0..prob.a_eq.rows()).map(|i| prob.a_eq.row(i).to_vec()).collect();
        let mut b = prob.b_eq.clone();
        let mut fixed = Vec::new();
        let mut has_l = vec![false; p];
        let mut has_u = vec![false; p];
        for j in 0..p {
            if prob.lower[j] == prob.upper[j] {
                let mut r = vec![T::zero(); p];
                r[j] = T::one();
                rows.push(r);
                b.push(prob.lower[j]);
                fixed.push(j);
            } else {
                has_l[j] = prob.lower[j].is_finite();
                has_u[j] = prob.upper[j].is_finite();
            }
        }
        let a = if rows.is_empty() {
            Matrix::zeros(0, p)
        } else {
            Matrix::from_rows(&rows).expect("rows share width")
        };
        let q = match &prob.q {
            Hessian::LowRank(v) if prob.a_in.rows() > 0 || has_l.iter().zip(&has_u).any(|(l, u)| !l && !u) => {
                Hessian::Dense(Hessian::LowRank(v.clone()).to_dense())
            }
            other => other.clone(),
        };
        Self { prob, q, a, b, has_l, has_u, free_bounds_fixed: fixed }
    }

    fn run(&self, tol: T, max_iter: usize) -> Result<QpSolution<T>> {
        let prob = self.prob;
        let p = prob.c.len();
        let me = self.a.rows();
        let mi = prob.a_in.rows();
        let g = &prob.a_in;
        let (lo, up) = (&prob.lower, &prob.upper);
        let scale = T::one() + norm_inf(&prob.c);
        let target = tol * scale;
        let zero = T::zero();
        let one = T::one();

        // starting point
        let mut x = vec![zero; p];
        for j in 0..p {
            x[j] = match (self.has_l[j], self.has_u[j]) {
                (true, true) => lo[j] + (up[j] - lo[j]) * T::lit(0.5).min(one / (up[j] - lo[j]).max(one)),
                (true, false) => lo[j] + one,
                (false, true) => up[j] - one,
                (false, false) => if lo[j] == up[j] { lo[j] } else { zero },
            };
        }
        let mut y = vec![zero; me];
        let mut zl: Vec<T> = self.has_l.iter().map(|&h| if h { one } else { zero }).collect();
        let mut zu: Vec<T> = self.has_u.iter().map(|&h| if h { one } else { zero }).collect();
        let gx0 = if mi > 0 { g.matvec(&x) } else { Vec::new() };
        let mut sg: Vec<T> = (0..mi).map(|i| (prob.b_in[i] - gx0[i]).max(one)).collect();
        let mut zg = vec![one; mi];
        let n_pairs = self.has_l.iter().filter(|&&h| h).count() + self.has_u.iter().filter(|&&h| h).count() + mi;

        let reg = T::lit(1e-10);
        let mut status = QpStatus::MaxIter;
        let mut iters = 0;
        for it in 0..=max_iter {
            iters = it;
            // residuals
            let qx = self.q.apply(&x);
            let mut rd: Vec<T> = (0..p).map(|j| qx[j] + prob.c[j] - zl[j] + zu[j]).collect();
            if me > 0 {
                axpy(-one, &self.a.matvec_t(&y), &mut rd);
            }
            if mi > 0 {
                axpy(one, &g.matvec_t(&zg), &mut rd);
            }
            let rp: Vec<T> = if me > 0 {
                self.a.matvec(&x).iter().zip(&self.b).map(|(&a, &b)| a - b).collect()
            } else {
                Vec::new()
            };
            let rg: Vec<T> = if mi > 0 {
                let gx = g.matvec(&x);
                (0..mi).map(|i| gx[i] + sg[i] - prob.b_in[i]).collect()
            } else {
                Vec::new()
            };
            let sl: Vec<T> = (0..p).map(|j| if self.has_l[j] { x[j] - lo[j] } else { one }).collect();
            let su: Vec<T> = (0..p).map(|j| if self.has_u[j] { up[j] - x[j] } else { one }).collect();
            let mut comp_sum = zero;
            let mut comp_max = zero;
            for j in 0..p {
                if self.has_l[j] {
                    comp_sum += sl[j] * zl[j];
                    comp_max = comp_max.max(sl[j] * zl[j]);
                }
                if self.has_u[j] {
                    comp_sum += su[j] * zu[j];
                    comp_max = comp_max.max(su[j] * zu[j]);
                }
            }
            for i in 0..mi {
                comp_sum += sg[i] * zg[i];
                comp_max = comp_max.max(sg[i] * zg[i]);
            }
            let mu = if n_pairs > 0 { comp_sum / T::from_usize_lossy(n_pairs) } else { zero };
            let res_p = norm_inf(&rp).max(norm_inf(&rg));
            let res_d = norm_inf(&rd);
            // stationarity is judged relative to its largest term: with large
            // Hessian entries Qx cannot be evaluated more accurately than that
            let mut d_size = norm_inf(&qx).max(norm_inf(&zl)).max(norm_inf(&zu));
            if me > 0 {
                d_size = d_size.max(norm_inf(&self.a.matvec_t(&y)));
            }
            let target_d = target.max(tol * d_size);
            if res_p <= target && res_d <= target_d && comp_max <= target {
                status = QpStatus::Optimal;
                break;
            }
            if it == max_iter || !res_d.is_finite() || !mu.is_finite() {
                break;
            }

            // Newton matrix
            let mut dg = vec![zero; p];
            for j in 0..p {
                let mut d = reg;
                if self.has_l[j] {
                    d += zl[j] / sl[j];
                }
                if self.has_u[j] {
                    d += zu[j] / su[j];
                }
                dg[j] = d;
            }
            let w: Vec<T> = (0..mi).map(|i| zg[i] / sg[i]).collect();
            let factor = match &self.q {
                Hessian::Dense(qm) => {
                    let mut h = qm.clone();
                    for j in 0..p {
                        h[(j, j)] += dg[j];
                    }
                    if mi > 0 {
                        let gw = g.weighted_gram(&w);
                        for (hv, gv) in h.as_mut_slice().iter_mut().zip(gw.as_slice()) {
                            *hv += *gv;
                        }
                    }
                    let l = match cholesky(&h) {
                        Ok(l) => l,
                        Err(_) => cholesky_jittered(&h, reg)?.0,
                    };
                    Factor::Dense(l)
                }
                Hessian::LowRank(v) => {
                    let dinv: Vec<T> = dg.iter().map(|&d| one / d).collect();
                    let mut inner = v.weighted_gram(&dinv);
                    for k in 0..inner.rows() {
                        inner[(k, k)] += one;
                    }
                    let inner = match cholesky(&inner) {
                        Ok(l) => l,
                        Err(_) => cholesky_jittered(&inner, reg)?.0,
                    };
                    Factor::LowRank { v: v.clone(), dinv, dg: dg.clone(), inner }
                }
            };
            // Schur complement for equalities
            let hinv_at: Vec<Vec<T>> = (0..me).map(|i| factor.solve(self.a.row(i))).collect();
            let schur = Matrix::from_fn(me, me, |i, k| dot(self.a.row(i), &hinv_at[k]));
            let schur_l = if me > 0 {
                let s_scale = schur.trace() / T::from_usize_lossy(me);
                Some(cholesky_jittered(&schur, T::lit(1e-14) * s_scale.max(T::min_positive_value()))?.0)
            } else {
                None
            };

            // solves for a given complementarity target, returns (dx, dy, dzl, dzu, dsg, dzg)
            let newton_raw = |rd: &[T], rp: &[T], rg: &[T], rcl: &[T], rcu: &[T], rcg: &[T]| {
                let mut rhs1: Vec<T> = rd.iter().map(|&v| -v).collect();
                for j in 0..p {
                    if self.has_l[j] {
                        rhs1[j] += rcl[j] / sl[j];
                    }
                    if self.has_u[j] {
                        rhs1[j] -= rcu[j] / su[j];
                    }
                }
                if mi > 0 {
                    let t: Vec<T> = (0..mi).map(|i| (rcg[i] + zg[i] * rg[i]) / sg[i]).collect();
                    axpy(-one, &g.matvec_t(&t), &mut rhs1);
                }
                let mut dx = factor.solve(&rhs1);
                let mut dy = vec![zero; me];
                if let Some(l) = &schur_l {
                    let adx = self.a.matvec(&dx);
                    dy = (0..me).map(|i| -rp[i] - adx[i]).collect();
                    chol_solve(l, &mut dy);
                    for i in 0..me {
                        axpy(dy[i], &hinv_at[i], &mut dx);
                    }
                }
                let mut dzl = vec![zero; p];
                let mut dzu = vec![zero; p];
                for j in 0..p {
                    if self.has_l[j] {
                        dzl[j] = (rcl[j] - zl[j] * dx[j]) / sl[j];
                    }
                    if self.has_u[j] {
                        dzu[j] = (rcu[j] + zu[j] * dx[j]) / su[j];
                    }
                }
                let (mut dsg, mut dzg) = (vec![zero; mi], vec![zero; mi]);
                if mi > 0 {
                    let gdx = g.matvec(&dx);
                    for i in 0..mi {
                        dsg[i] = -rg[i] - gdx[i];
                        dzg[i] = (rcg[i] - zg[i] * dsg[i]) / sg[i];
                    }
                }
                (dx, dy, dzl, dzu, dsg, dzg)
            };
            // iterative refinement on the stationarity and equality rows
            let newton = |rcl: &[T], rcu: &[T], rcg: &[T]| {
                let mut out = newton_raw(&rd, &rp, &rg, rcl, rcu, rcg);
                let (zp, zm) = (vec![zero; p], vec![zero; mi]);
                let mut last = T::infinity();
                for _ in 0..8 {
                    let (dx, dy, dzl, dzu, _, dzg) = &out;
                    let mut e1 = self.q.apply(dx);
                    for j in 0..p {
                        e1[j] += rd[j] - dzl[j] + dzu[j];
                    }
                    if me > 0 {
                        axpy(-one, &self.a.matvec_t(dy), &mut e1);
                    }
                    if mi > 0 {
                        axpy(one, &g.matvec_t(dzg), &mut e1);
                    }
                    let e2: Vec<T> = if me > 0 {
                        self.a.matvec(dx).iter().zip(&rp).map(|(&a, &b)| a + b).collect()
                    } else {
                        Vec::new()
                    };
                    let err = norm_inf(&e1).max(norm_inf(&e2));
                    if err <= T::lit(0.01) * target || err >= T::lit(0.5) * last {
                        break;
                    }
                    last = err;
                    let c = newton_raw(&e1, &e2, &zm, &zp, &zp, &zm);
                    let o = &mut out;
                    axpy(one, &c.0, &mut o.0);
                    axpy(one, &c.1, &mut o.1);
                    axpy(one, &c.2, &mut o.2);
                    axpy(one, &c.3, &mut o.3);
                    axpy(one, &c.4, &mut o.4);
                    axpy(one, &c.5, &mut o.5);
                }
                out
            };

            let max_step = |dx: &[T], dzl: &[T], dzu: &[T], dsg: &[T], dzg: &[T]| -> (T, T) {
                let mut ap = one;
                let mut ad = one;
                for j in 0..p {
                    if self.has_l[j] {
                        if dx[j] < zero {
                            ap = ap.min(-sl[j] / dx[j]);
                        }
                        if dzl[j] < zero {
                            ad = ad.min(-zl[j] / dzl[j]);
                        }
                    }
                    if self.has_u[j] {
                        if dx[j] > zero {
                            ap = ap.min(su[j] / dx[j]);
                        }
                        if dzu[j] < zero {
                            ad = ad.min(-zu[j] / dzu[j]);
                        }
                    }
                }
                for i in 0..mi {
                    if dsg[i] < zero {
                        ap = ap.min(-sg[i] / dsg[i]);
                    }
                    if dzg[i] < zero {
                        ad = ad.min(-zg[i] / dzg[i]);
                    }
                }
                (ap, ad)
            };

            // predictor
            let rcl: Vec<T> = (0..p).map(|j| -sl[j] * zl[j]).collect();
            let rcu: Vec<T> = (0..p).map(|j| -su[j] * zu[j]).collect();
            let rcg: Vec<T> = (0..mi).map(|i| -sg[i] * zg[i]).collect();
            let (dx, _dy, dzl, dzu, dsg, dzg) = newton(&rcl, &rcu, &rcg);
            let (ap, ad) = max_step(&dx, &dzl, &dzu, &dsg, &dzg);
            let a_aff = ap.min(ad);
            let mut mu_aff = zero;
            for j in 0..p {
                if self.has_l[j] {
                    mu_aff += (sl[j] + a_aff * dx[j]) * (zl[j] + a_aff * dzl[j]);
                }
                if self.has_u[j] {
                    mu_aff += (su[j] - a_aff * dx[j]) * (zu[j] + a_aff * dzu[j]);
                }
            }
            for i in 0..mi {
                mu_aff += (sg[i] + a_aff * dsg[i]) * (zg[i] + a_aff * dzg[i]);
            }
            let sigma = if n_pairs > 0 && mu > zero {
                let r = mu_aff / T::from_usize_lossy(n_pairs) / mu;
                (r * r * r).min(one)
            } else {
                zero
            };
            let smu = sigma * mu;
            // corrector
            let rcl: Vec<T> = (0..p)
                .map(|j| if self.has_l[j] { smu - sl[j] * zl[j] - dx[j] * dzl[j] } else { zero })
                .collect();
            let rcu: Vec<T> = (0..p)
                .map(|j| if self.has_u[j] { smu - su[j] * zu[j] + dx[j] * dzu[j] } else { zero })
                .collect();
            let rcg: Vec<T> = (0..mi).map(|i| smu - sg[i] * zg[i] - dsg[i] * dzg[i]).collect();
            let (dx, dy, dzl, dzu, dsg, dzg) = newton(&rcl, &rcu, &rcg);
            let (ap, ad) = max_step(&dx, &dzl, &dzu, &dsg, &dzg);
            let frac = T::lit(0.995);
            let step = (frac * ap.min(ad)).min(one);
            axpy(step, &dx, &mut x);
            axpy(step, &dy, &mut y);
            for j in 0..p {
                if self.has_l[j] {
                    zl[j] += step * dzl[j];
                    // keep x strictly inside after rounding
                    if x[j] <= lo[j] {
                        x[j] = lo[j] + (sl[j] * T::lit(1e-3)).max(ulp(lo[j]));
                    }
                }
                if self.has_u[j] {
                    zu[j] += step * dzu[j];
                    if x[j] >= up[j] {
                        x[j] = up[j] - (su[j] * T::lit(1e-3)).max(ulp(up[j]));
                    }
                }
            }
            for i in 0..mi {
                sg[i] += step * dsg[i];
                zg[i] += step * dzg[i];
            }
        }

        // map back; drop the multipliers of rows added for fixed variables
        let mut eq_duals = y[..prob.a_eq.rows()].to_vec();
        let mut lower_duals = zl;
        let mut upper_duals = zu;
        for (k, &j) in self.free_bounds_fixed.iter().enumerate() {
            let v = y[prob.a_eq.rows() + k];
            // y on `x_j = l_j` acts like a net bound multiplier
            lower_duals[j] = v.max(zero);
            upper_duals[j] = (-v).max(zero);
        }
        eq_duals.truncate(prob.a_eq.rows());
        for j in 0..p {
            x[j] = x[j].max(lo[j]).min(up[j]);
        }
        let mut sol = QpSolution {
            status,
            objective: prob.objective(&x),
            theta: x,
            eq_duals,
            in_duals: zg,
            lower_duals,
            upper_duals,
            iterations: iters,
            residuals: KktResiduals::default(),
        };
        sol.residuals = kkt_residuals(prob, &sol);
        Ok(sol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn interior_minimum() {
        let mut p = QpProblem::new(Hessian::Dense(Matrix::identity(1)), vec![-1.0]);
        p.lower = vec![0.0];
        p.upper = vec![10.0];
        let s = solve_qp(&p, 1e-8, 200).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        assert_abs_diff_eq!(s.theta[0], 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(s.objective, -0.5, epsilon = 1e-10);
    }

    #[test]
    fn equality_symmetric() {
        let mut p = QpProblem::new(Hessian::Dense(Matrix::identity(2)), vec![0.0, 0.0]);
        p.a_eq = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        p.b_eq = vec![1.0];
        let s = solve_qp(&p, 1e-8, 200).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        assert_abs_diff_eq!(s.theta[0], 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(s.theta[1], 0.5, epsilon = 1e-8);
    }

    #[test]
    fn low_rank_matches_dense() {
        let v = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 1.0], vec![0.0, 2.0]]).unwrap();
        let c = vec![-1.0, -1.0, -1.0];
        let mut a = QpProblem::new(Hessian::LowRank(v.clone()), c.clone());
        a.lower = vec![0.0; 3];
        a.upper = vec![2.0; 3];
        a.a_eq = Matrix::from_rows(&[vec![1.0, -1.0, 1.0]]).unwrap();
        a.b_eq = vec![0.0];
        let mut b = a.clone();
        b.q = Hessian::Dense(a.q.to_dense());
        let sa = solve_qp(&a, 1e-9, 200).unwrap();
        let sb = solve_qp(&b, 1e-9, 200).unwrap();
        assert_eq!(sa.status, QpStatus::Optimal);
        assert_eq!(sb.status, QpStatus::Optimal);
        for j in 0..3 {
            assert_abs_diff_eq!(sa.theta[j], sb.theta[j], epsilon = 1e-6);
        }
    }

    #[test]
    fn inequality_rows_and_infeasibility() {
        // min ½‖x‖² - x1 - x2  s.t. x1 + x2 <= 1
        let mut p = QpProblem::new(Hessian::Dense(Matrix::identity(2)), vec![-1.0, -1.0]);
        p.a_in = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        p.b_in = vec![1.0];
        let s = solve_qp(&p, 1e-8, 200).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        assert_abs_diff_eq!(s.theta[0], 0.5, epsilon = 1e-7);
        assert_abs_diff_eq!(s.in_duals[0], 0.5, epsilon = 1e-6);

        let mut q = p.clone();
        q.lower = vec![1.0, 1.0];
        assert_eq!(solve_qp(&q, 1e-8, 200).unwrap().status, QpStatus::Infeasible);
    }

    #[test]
    fn fixed_variable_is_handled() {
        let mut p = QpProblem::new(Hessian::Dense(Matrix::identity(2)), vec![-1.0, -1.0]);
        p.lower = vec![0.25, 0.0];
        p.upper = vec![0.25, 5.0];
        let s = solve_qp(&p, 1e-8, 200).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        assert_abs_diff_eq!(s.theta[0], 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(s.theta[1], 1.0, epsilon = 1e-7);
    }

    #[test]
    fn lp_route_and_dump_round_trip() {
        let mut p = QpProblem::new(Hessian::Dense(Matrix::zeros(1, 1)), vec![-1.0]);
        p.lower = vec![0.0];
        p.upper = vec![3.0];
        let s = solve_lp_via_qp(&p).unwrap();
        assert_eq!(s.theta, vec![3.0]);
        let text = p.to_text();
        let back = QpProblem::<f64>::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
    }
}
