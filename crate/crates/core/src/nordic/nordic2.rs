//! NORDIC-2: L1-penalized hinge loss with sign-ordering logical constraints,
//! solved as a mixed-integer LP.
//!
//! Variables, in order: `ω⁺, ω⁻ ≥ 0` (`P` entries per boundary, `P = n` for
//! kernels and `P = d` for the linear model), biases `b` (free), slacks
//! `ξ ≥ 0` and the binaries. For every training point `i` and adjacent pair
//! `(k, k+1)` the logical rows are
//!
//! ```text
//! −f_k(x_i)     − M1 z1 ≤ −ε
//!  f_{k+1}(x_i) − M2 z2 ≤ −ε
//!  z1 + z2 ≤ 1
//! ```
//!
//! so `f_k(x_i) ≥ ε` or `f_{k+1}(x_i) ≤ −ε`. With `reduce_binaries` a single
//! `z` replaces the pair: `−f_k − M1 z ≤ −ε`, `f_{k+1} + M2 z ≤ M2 − ε`.

use crate::data::OrdinalDataset;
use crate::error::{Error, Result};
use crate::kernel::gram_sym;
use crate::linalg::{norm_inf, Matrix};
use crate::milp::{solve_milp_with, MilpOptions, MilpProblem, MilpStatus};
use crate::scalar::Real;
use crate::simplex::{solve_lp, LpProblem, LpStatus};

use super::dual::signed_labels;
use super::model::{OrdinalModel, TrainInfo};
use super::{check_subproblems, HyperParams, Method, Nordic2Config};

/// Column indices of the NORDIC-2 MILP.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Nordic2Layout {
    pub n: usize,
    /// Coefficients per boundary.
    pub p: usize,
    /// Boundaries, `K − 1`.
    pub m: usize,
    pub reduced: bool,
}

impl Nordic2Layout {
    pub fn new(n: usize, p: usize, num_classes: usize, reduced: bool) -> Self {
        Self { n, p, m: num_classes - 1, reduced }
    }

    pub fn omega_plus(&self, k: usize, j: usize) -> usize {
        k * self.p + j
    }

    pub fn omega_minus(&self, k: usize, j: usize) -> usize {
        (self.m + k) * self.p + j
    }

    pub fn bias(&self, k: usize) -> usize {
        2 * self.m * self.p + k
    }

    pub fn xi(&self, k: usize, i: usize) -> usize {
        2 * self.m * self.p + self.m + k * self.n + i
    }

    fn z_base(&self) -> usize {
        2 * self.m * self.p + self.m + self.m * self.n
    }

    /// `z1` (or the single `z` in reduced form) for pair `(k, k+1)`.
    pub fn z1(&self, k: usize, i: usize) -> usize {
        self.z_base() + k * self.n + i
    }

    /// `z2` for pair `(k, k+1)`; absent in reduced form.
    pub fn z2(&self, k: usize, i: usize) -> Option<usize> {
        (!self.reduced).then(|| self.z_base() + (self.m - 1 + k) * self.n + i)
    }

    pub fn num_binaries(&self) -> usize {
        let per = if self.reduced { 1 } else { 2 };
        per * self.n * (self.m - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.z_base() + self.num_binaries()
    }

    /// `f_k(x_i)` for every boundary and training point from a solution vector.
    pub fn decision_values<T: Real>(&self, design: &Matrix<T>, x: &[T]) -> Matrix<T> {
        let (w, b) = self.coefficients(x);
        let mut f = Matrix::zeros(self.m, self.n);
        for k in 0..self.m {
            for i in 0..self.n {
                f[(k, i)] = crate::linalg::dot(design.row(i), w.row(k)) + b[k];
            }
        }
        f
    }

    /// `(ω, b)` from a solution vector.
    pub fn coefficients<T: Real>(&self, x: &[T]) -> (Matrix<T>, Vec<T>) {
        let w = Matrix::from_fn(self.m, self.p, |k, j| x[self.omega_plus(k, j)] - x[self.omega_minus(k, j)]);
        let b = (0..self.m).map(|k| x[self.bias(k)]).collect();
        (w, b)
    }
}

/// Rows shared by the MILP and the unconstrained L1-SVM LP.
struct Base<T> {
    c: Vec<T>,
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    lower: Vec<T>,
    upper: Vec<T>,
}

fn base_problem<T: Real>(layout: &Nordic2Layout, y: &[Vec<T>], design: &Matrix<T>, lambda: T, nvars: usize) -> Base<T> {
    let mut c = vec![T::zero(); nvars];
    let mut lower = vec![T::zero(); nvars];
    let mut upper = vec![T::infinity(); nvars];
    for k in 0..layout.m {
        for j in 0..layout.p {
            c[layout.omega_plus(k, j)] = lambda;
            c[layout.omega_minus(k, j)] = lambda;
        }
        for i in 0..layout.n {
            c[layout.xi(k, i)] = T::one();
        }
        lower[layout.bias(k)] = T::neg_infinity();
    }
    let mut rows = Vec::with_capacity(layout.m * layout.n);
    let mut rhs = Vec::with_capacity(layout.m * layout.n);
    for k in 0..layout.m {
        for i in 0..layout.n {
            // −y f_k(x_i) − ξ ≤ −1
            let mut r = vec![T::zero(); nvars];
            let yi = y[k][i];
            for j in 0..layout.p {
                let d = design[(i, j)];
                r[layout.omega_plus(k, j)] = -yi * d;
                r[layout.omega_minus(k, j)] = yi * d;
            }
            r[layout.bias(k)] = -yi;
            r[layout.xi(k, i)] = -T::one();
            rows.push(r);
            rhs.push(-T::one());
        }
    }
    for v in upper.iter_mut().skip(layout.z_base()) {
        *v = T::one();
    }
    Base { c, rows, rhs, lower, upper }
}

/// Writes `s · f_k(x_i)` into row `r`.
fn add_f<T: Real>(r: &mut [T], layout: &Nordic2Layout, design: &Matrix<T>, k: usize, i: usize, s: T) {
    for j in 0..layout.p {
        let d = design[(i, j)] * s;
        r[layout.omega_plus(k, j)] += d;
        r[layout.omega_minus(k, j)] -= d;
    }
    r[layout.bias(k)] += s;
}

fn matrix_from_rows<T: Real>(rows: Vec<Vec<T>>, cols: usize) -> Matrix<T> {
    let n = rows.len();
    let data: Vec<T> = rows.into_iter().flatten().collect();
    Matrix::from_vec(n, cols, data).expect("row lengths agree")
}

fn design_matrix<T: Real>(ds: &OrdinalDataset<T>, params: &HyperParams<T>) -> Result<Matrix<T>> {
    if params.kernel.is_linear() {
        Ok(ds.features().clone())
    } else {
        gram_sym(ds.features(), &params.kernel)
    }
}

/// Big-M default `10 (1 + max_i Σ_j |D_ij|) · max(1, ‖ω⁰‖∞, ‖b⁰‖∞)` where
/// `(ω⁰, b⁰)` solves the L1-SVM without logical rows and `D` is the Gram
/// matrix (kernel) or the feature matrix (linear).
pub fn default_big_m<T: Real>(ds: &OrdinalDataset<T>, design: &Matrix<T>, lambda: T) -> Result<T> {
    let layout = Nordic2Layout::new(ds.len(), design.cols(), ds.num_classes(), true);
    let y = signed_labels(ds);
    let nvars = layout.z_base();
    let base = base_problem(&layout, &y, design, lambda, nvars);
    let lp = LpProblem {
        c: base.c,
        a_ub: matrix_from_rows(base.rows, nvars),
        b_ub: base.rhs,
        a_eq: Matrix::zeros(0, nvars),
        b_eq: Vec::new(),
        lower: base.lower,
        upper: base.upper,
    };
    let res = solve_lp(&lp);
    if res.status != LpStatus::Optimal {
        return Err(Error::Training {
            context: format!("nordic2 big-M, n={}", ds.len()),
            msg: format!("unconstrained L1-SVM returned {:?}", res.status),
        });
    }
    let (w, b) = layout.coefficients(&res.x);
    let scale = T::one().max(w.max_abs()).max(norm_inf(&b));
    let row_sum = (0..design.rows())
        .map(|i| design.row(i).iter().map(|v| v.abs()).sum::<T>())
        .fold(T::zero(), T::max);
    Ok(T::lit(10.0) * (T::one() + row_sum) * scale)
}

/// Assembles the NORDIC-2 MILP over `design` (Gram matrix for kernels, the
/// feature matrix for the linear model). Missing big-M values are filled
/// with [`default_big_m`].
pub fn assemble_milp_nordic2<T: Real>(
    ds: &OrdinalDataset<T>,
    design: &Matrix<T>,
    params: &HyperParams<T>,
    config: &Nordic2Config<T>,
) -> Result<(MilpProblem<T>, Nordic2Layout)> {
    config.validate()?;
    if design.rows() != ds.len() {
        return Err(Error::dim("design matrix must have one row per training point"));
    }
    let layout = Nordic2Layout::new(ds.len(), design.cols(), ds.num_classes(), config.reduce_binaries);
    let (m1, m2) = match (config.m1, config.m2) {
        (Some(a), Some(b)) => (a, b),
        (a, b) => {
            let d = default_big_m(ds, design, params.lambda)?;
            (a.unwrap_or(d), b.unwrap_or(d))
        }
    };
    let y = signed_labels(ds);
    let nvars = layout.num_vars();
    let Base { c, mut rows, mut rhs, lower, upper } = base_problem(&layout, &y, design, params.lambda, nvars);
    let eps = config.sign_margin;
    for k in 0..layout.m.saturating_sub(1) {
        for i in 0..layout.n {
            let z1 = layout.z1(k, i);
            let mut r1 = vec![T::zero(); nvars];
            add_f(&mut r1, &layout, design, k, i, -T::one());
            r1[z1] = -m1;
            rows.push(r1);
            rhs.push(-eps);
            let mut r2 = vec![T::zero(); nvars];
            add_f(&mut r2, &layout, design, k + 1, i, T::one());
            match layout.z2(k, i) {
                Some(z2) => {
                    r2[z2] = -m2;
                    rows.push(r2);
                    rhs.push(-eps);
                    let mut r3 = vec![T::zero(); nvars];
                    r3[z1] = T::one();
                    r3[z2] = T::one();
                    rows.push(r3);
                    rhs.push(T::one());
                }
                None => {
                    r2[z1] = m2;
                    rows.push(r2);
                    rhs.push(m2 - eps);
                }
            }
        }
    }
    let mut binary = vec![false; nvars];
    for b in binary.iter_mut().skip(layout.z_base()) {
        *b = true;
    }
    let problem = MilpProblem {
        c,
        a_in: matrix_from_rows(rows, nvars),
        b_in: rhs,
        a_eq: Matrix::zeros(0, nvars),
        b_eq: Vec::new(),
        lower,
        upper,
        binary,
    };
    Ok((problem, layout))
}

/// Binary assignment from a relaxation point: each training point gets the
/// monotone sign profile closest to its current decision values, and the
/// binaries are set to enforce that profile. The assignment is always
/// consistent across adjacent pairs.
pub fn nordic2_heuristic<T: Real>(layout: &Nordic2Layout, design: &Matrix<T>, x: &[T]) -> Vec<T> {
    let f = layout.decision_values(design, x);
    let mut out = x.to_vec();
    for i in 0..layout.n {
        // profile with the first t boundaries positive
        let mut best = (T::infinity(), 0);
        for t in 0..=layout.m {
            let mut cost = T::zero();
            for k in 0..layout.m {
                let v = f[(k, i)];
                cost += if k < t { (-v).max(T::zero()) } else { v.max(T::zero()) };
            }
            if cost < best.0 {
                best = (cost, t);
            }
        }
        let t = best.1;
        for k in 0..layout.m.saturating_sub(1) {
            // k < t: require f_k ≥ ε; otherwise require f_{k+1} ≤ −ε
            let positive = k < t;
            match layout.z2(k, i) {
                Some(z2) => {
                    out[layout.z1(k, i)] = if positive { T::zero() } else { T::one() };
                    out[z2] = if positive { T::one() } else { T::zero() };
                }
                None => out[layout.z1(k, i)] = if positive { T::zero() } else { T::one() },
            }
        }
    }
    out
}

pub fn train_nordic2<T: Real>(
    ds: &OrdinalDataset<T>,
    params: &HyperParams<T>,
    config: &Nordic2Config<T>,
) -> Result<OrdinalModel<T>> {
    params.validate()?;
    let context = format!("nordic2, n={}, K={}", ds.len(), ds.num_classes());
    check_subproblems(ds, &context)?;
    let design = design_matrix(ds, params)?;
    let (problem, layout) = assemble_milp_nordic2(ds, &design, params, config)?;
    let heuristic = |x: &[T]| Some(nordic2_heuristic(&layout, &design, x));
    let opts = MilpOptions { gap_tol: config.gap_tol, node_limit: config.node_limit, ..MilpOptions::default() };
    let sol = solve_milp_with(&problem, &opts, Some(&heuristic)).map_err(|e| Error::Training {
        context: context.clone(),
        msg: e.to_string(),
    })?;
    if sol.status == MilpStatus::Infeasible {
        return Err(Error::Training { context, msg: "MILP reported infeasible".into() });
    }
    let mut warnings = Vec::new();
    if sol.status == MilpStatus::GapLimit {
        warnings.push(format!(
            "node limit reached; returning incumbent with relative gap {:e}",
            sol.gap.to_f64_lossy()
        ));
    }
    let (omega, bias) = layout.coefficients(&sol.x);
    let f = layout.decision_values(&design, &sol.x);
    let crossings = (0..layout.n)
        .filter(|&i| (1..layout.m).any(|k| f[(k - 1, i)] < T::zero() && f[(k, i)] >= T::zero()))
        .count();
    if crossings > 0 {
        warnings.push(format!("{crossings} training points with unordered signs"));
    }
    let info = TrainInfo {
        objective: sol.objective,
        dual_objective: None,
        status: format!("{:?}", sol.status),
        iterations: 0,
        nodes: sol.nodes_explored,
        gap: Some(sol.gap),
        warnings,
        c: params.c,
        lambda: params.lambda,
    };
    Ok(OrdinalModel {
        method: Method::Nordic2,
        kernel: params.kernel,
        support_points: (!params.kernel.is_linear()).then(|| ds.features().clone()),
        omega,
        bias,
        num_classes: ds.num_classes(),
        info,
    })
}
