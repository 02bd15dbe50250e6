//! Dual QPs of NORDIC-0/1 and of the plain binary SVM.
//!
//! Dual variables are stacked as `θ = (α; φ; γ)` with `m = K − 1`
//! boundaries (0-based `k` below):
//!
//! * `α_{k,i}`, `k < m`, box `[0, C]`, multipliers of the hinge rows;
//! * `φ_{k,i}`, `k < m − 1`, `≥ 0`, multipliers of the coefficient ordering
//!   between boundary `k` and `k + 1`;
//! * `γ_k`, `k < m − 1`, `≥ 0`, multipliers of `b_k ≥ b_{k+1}`.
//!
//! Coefficients are recovered as `ω_k = Y_k α_k + T(φ_k − φ_{k−1})` with
//! `T = I` (NORDIC-1) or `T = (K + εI)⁻¹` (NORDIC-0), missing blocks taken
//! as zero. The minimization form is `½ Σ_k ω_kᵀ G ω_k − eᵀα` subject to
//! `−y_kᵀα_k − γ_k + γ_{k−1} = 0` for every `k`, with `G = K` (NORDIC-1)
//! or `G = K + εI` (NORDIC-0).

use crate::data::OrdinalDataset;
use crate::error::{Error, Result};
use crate::kernel::gram_sym;
use crate::linalg::{cholesky, chol_solve, lower_inverse, pivoted_cholesky, Matrix};
use crate::qp::{solve_qp, Hessian, KktResiduals, QpProblem, QpStatus};
use crate::scalar::Real;

use super::bias::bias_lp;
use super::model::{OrdinalModel, TrainInfo};
use super::{check_subproblems, HyperParams, Method};

/// Which ordering constraint the dual encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualVariant {
    /// `ω_k ≥ ω_{k+1}` elementwise.
    Nordic0,
    /// `Kω_k ≥ Kω_{k+1}` elementwise.
    Nordic1,
}

/// Index arithmetic for `θ = (α; φ; γ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DualLayout {
    pub n: usize,
    /// Number of boundaries, `K − 1`.
    pub m: usize,
}

impl DualLayout {
    pub fn new(n: usize, num_classes: usize) -> Self {
        Self { n, m: num_classes - 1 }
    }

    pub fn alpha(&self, k: usize, i: usize) -> usize {
        k * self.n + i
    }

    pub fn phi(&self, k: usize, i: usize) -> usize {
        self.m * self.n + k * self.n + i
    }

    pub fn gamma(&self, k: usize) -> usize {
        self.m * self.n + (self.m - 1) * self.n + k
    }

    pub fn num_alpha(&self) -> usize {
        self.m * self.n
    }

    pub fn num_phi(&self) -> usize {
        (self.m - 1) * self.n
    }

    pub fn num_gamma(&self) -> usize {
        self.m - 1
    }

    pub fn len(&self) -> usize {
        self.num_alpha() + self.num_phi() + self.num_gamma()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
pub struct DualSolution<T> {
    /// `α`, `n(K−1)` entries, block `k` first.
    pub alpha: Vec<T>,
    pub phi: Vec<T>,
    pub gamma: Vec<T>,
    /// Dual objective `eᵀα − ½θᵀQθ` (maximization form).
    pub objective: T,
    pub status: QpStatus,
    pub iterations: usize,
    pub residuals: KktResiduals<T>,
}

impl<T: Real> DualSolution<T> {
    pub fn layout(&self, n: usize) -> DualLayout {
        DualLayout { n, m: self.alpha.len() / n.max(1) }
    }

    pub fn theta(&self) -> Vec<T> {
        let mut t = self.alpha.clone();
        t.extend_from_slice(&self.phi);
        t.extend_from_slice(&self.gamma);
        t
    }
}

/// `±1` dummy labels of every boundary, as scalars.
pub(crate) fn signed_labels<T: Real>(ds: &OrdinalDataset<T>) -> Vec<Vec<T>> {
    (1..ds.num_classes())
        .map(|k| ds.labels().iter().map(|&y| if y > k { T::one() } else { -T::one() }).collect())
        .collect()
}

pub(crate) fn ridge_epsilon<T: Real>(gram: &Matrix<T>) -> T {
    T::lit(1e-8) * gram.trace() / T::from_usize_lossy(gram.rows().max(1))
}

/// `K + εI` and its Cholesky factor.
pub(crate) struct Ridge<T> {
    pub(crate) matrix: Matrix<T>,
    pub(crate) chol: Matrix<T>,
}

impl<T: Real> Ridge<T> {
    pub(crate) fn new(gram: &Matrix<T>) -> Result<Self> {
        let eps = ridge_epsilon(gram);
        let mut matrix = gram.clone();
        for i in 0..matrix.rows() {
            matrix[(i, i)] += eps;
        }
        let chol = cholesky(&matrix).map_err(|e| Error::Numerical(format!("K + εI is not positive definite: {e}")))?;
        Ok(Self { matrix, chol })
    }

    pub(crate) fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        chol_solve(&self.chol, &mut x);
        x
    }
}

/// One contribution `coef · e_point` of a θ entry to `ω_k`.
#[derive(Clone, Copy)]
struct Term<T> {
    theta: usize,
    point: usize,
    coef: T,
    phi: bool,
}

fn block_terms<T: Real>(layout: &DualLayout, y: &[Vec<T>], k: usize) -> Vec<Term<T>> {
    let n = layout.n;
    let mut out = Vec::with_capacity(3 * n);
    for i in 0..n {
        out.push(Term { theta: layout.alpha(k, i), point: i, coef: y[k][i], phi: false });
    }
    if k + 1 < layout.m {
        for i in 0..n {
            out.push(Term { theta: layout.phi(k, i), point: i, coef: T::one(), phi: true });
        }
    }
    if k >= 1 {
        for i in 0..n {
            out.push(Term { theta: layout.phi(k - 1, i), point: i, coef: -T::one(), phi: true });
        }
    }
    out
}

fn check_inputs<T: Real>(y: &[Vec<T>], gram: &Matrix<T>) -> Result<DualLayout> {
    if y.is_empty() {
        return Err(Error::arg("need at least two classes"));
    }
    let n = gram.rows();
    if gram.cols() != n || y.iter().any(|v| v.len() != n) {
        return Err(Error::dim("Gram matrix and labels disagree in size"));
    }
    Ok(DualLayout { n, m: y.len() })
}

/// Linear part, equality rows and bounds, shared by both Hessian forms.
fn constraints<T: Real>(layout: &DualLayout, y: &[Vec<T>], c: T, q: Hessian<T>) -> QpProblem<T> {
    let p = layout.len();
    let mut c_vec = vec![T::zero(); p];
    for v in c_vec.iter_mut().take(layout.num_alpha()) {
        *v = -T::one();
    }
    let mut qp = QpProblem::new(q, c_vec);
    let mut a_eq = Matrix::zeros(layout.m, p);
    for k in 0..layout.m {
        for i in 0..layout.n {
            a_eq[(k, layout.alpha(k, i))] = -y[k][i];
        }
        if k + 1 < layout.m {
            a_eq[(k, layout.gamma(k))] = -T::one();
        }
        if k >= 1 {
            a_eq[(k, layout.gamma(k - 1))] = T::one();
        }
    }
    qp.a_eq = a_eq;
    qp.b_eq = vec![T::zero(); layout.m];
    qp.lower = vec![T::zero(); p];
    qp.upper = vec![T::infinity(); p];
    for v in qp.upper.iter_mut().take(layout.num_alpha()) {
        *v = c;
    }
    qp
}

fn dense_hessian<T: Real>(layout: &DualLayout, y: &[Vec<T>], gram: &Matrix<T>, variant: DualVariant) -> Result<Matrix<T>> {
    let p = layout.len();
    let mut q = Matrix::zeros(p, p);
    let (g, ginv) = match variant {
        DualVariant::Nordic1 => (gram.clone(), None),
        DualVariant::Nordic0 => {
            let ridge = Ridge::new(gram)?;
            let linv = lower_inverse(&ridge.chol);
            let ones = vec![T::one(); linv.rows()];
            (ridge.matrix, Some(linv.weighted_gram(&ones)))
        }
    };
    for k in 0..layout.m {
        let terms = block_terms(layout, y, k);
        for a in &terms {
            for b in &terms {
                let v = match (&ginv, a.phi, b.phi) {
                    (None, _, _) | (Some(_), false, false) => g[(a.point, b.point)],
                    (Some(inv), true, true) => inv[(a.point, b.point)],
                    (Some(_), _, _) => {
                        if a.point == b.point {
                            T::one()
                        } else {
                            continue;
                        }
                    }
                };
                q[(a.theta, b.theta)] += a.coef * b.coef * v;
            }
        }
    }
    Ok(q)
}

/// Factor `W` with `Q = W Wᵀ`, one column block of width `r` per boundary.
fn factored_hessian<T: Real>(layout: &DualLayout, y: &[Vec<T>], gram: &Matrix<T>, variant: DualVariant) -> Result<Matrix<T>> {
    // rows of `a` feed α terms, rows of `b` feed φ terms
    let (a, b) = match variant {
        DualVariant::Nordic1 => {
            let l = pivoted_cholesky(gram, T::lit(1e-12));
            (l.clone(), l)
        }
        DualVariant::Nordic0 => {
            let ridge = Ridge::new(gram)?;
            let linv_t = lower_inverse(&ridge.chol).transpose();
            (ridge.chol, linv_t)
        }
    };
    let r = a.cols();
    let mut w = Matrix::zeros(layout.len(), layout.m * r);
    for k in 0..layout.m {
        for t in block_terms(layout, y, k) {
            let src = if t.phi { b.row(t.point) } else { a.row(t.point) };
            let dst = &mut w.row_mut(t.theta)[k * r..(k + 1) * r];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += t.coef * s;
            }
        }
    }
    Ok(w)
}

/// Dual QP in minimization form with an explicit dense Hessian.
pub fn assemble_dual<T: Real>(
    ds: &OrdinalDataset<T>,
    gram: &Matrix<T>,
    params: &HyperParams<T>,
    variant: DualVariant,
) -> Result<QpProblem<T>> {
    check_subproblems(ds, &format!("{variant:?} dual"))?;
    let y = signed_labels(ds);
    let layout = check_inputs(&y, gram)?;
    let q = dense_hessian(&layout, &y, gram, variant)?;
    Ok(constraints(&layout, &y, params.c, Hessian::Dense(q)))
}

/// Same problem with the Hessian given as a factor `Q = WWᵀ`.
pub fn assemble_dual_factored<T: Real>(
    ds: &OrdinalDataset<T>,
    gram: &Matrix<T>,
    params: &HyperParams<T>,
    variant: DualVariant,
) -> Result<QpProblem<T>> {
    check_subproblems(ds, &format!("{variant:?} dual"))?;
    let y = signed_labels(ds);
    let layout = check_inputs(&y, gram)?;
    let w = factored_hessian(&layout, &y, gram, variant)?;
    Ok(constraints(&layout, &y, params.c, Hessian::LowRank(w)))
}

const DENSE_LIMIT: usize = 600;

/// Builds and solves the dual for explicit labels (`y[k]` holds `±1`).
pub(crate) fn solve_dual_labels<T: Real>(
    y: &[Vec<T>],
    gram: &Matrix<T>,
    c: T,
    variant: DualVariant,
) -> Result<DualSolution<T>> {
    let layout = check_inputs(y, gram)?;
    let p = layout.len();
    let hessian = if p <= DENSE_LIMIT {
        Hessian::Dense(dense_hessian(&layout, y, gram, variant)?)
    } else {
        let w = factored_hessian(&layout, y, gram, variant)?;
        if 2 * w.cols() < p {
            Hessian::LowRank(w)
        } else {
            Hessian::Dense(Hessian::LowRank(w).to_dense())
        }
    };
    let qp = constraints(&layout, y, c, hessian);
    let sol = solve_qp(&qp, T::lit(1e-8), 200)?;
    if sol.status == QpStatus::Infeasible || sol.status == QpStatus::Unbounded {
        return Err(Error::Training {
            context: format!("{variant:?} dual, n={}, K={}", layout.n, layout.m + 1),
            msg: format!("QP solver returned {:?}", sol.status),
        });
    }
    let snap = T::lit(1e-10);
    let theta: Vec<T> = sol
        .theta
        .iter()
        .zip(qp.lower.iter().zip(&qp.upper))
        .map(|(&v, (&lo, &hi))| {
            let v = v.max(lo).min(hi);
            if v - lo <= snap {
                lo
            } else if hi - v <= snap {
                hi
            } else {
                v
            }
        })
        .collect();
    let objective = -qp.objective(&theta);
    let (na, nf) = (layout.num_alpha(), layout.num_phi());
    Ok(DualSolution {
        alpha: theta[..na].to_vec(),
        phi: theta[na..na + nf].to_vec(),
        gamma: theta[na + nf..].to_vec(),
        objective,
        status: sol.status,
        iterations: sol.iterations,
        residuals: sol.residuals,
    })
}

/// Solves the NORDIC-0/1 dual; large problems use the factored Hessian.
pub fn solve_dual<T: Real>(
    ds: &OrdinalDataset<T>,
    gram: &Matrix<T>,
    params: &HyperParams<T>,
    variant: DualVariant,
) -> Result<DualSolution<T>> {
    check_subproblems(ds, &format!("{variant:?} dual"))?;
    solve_dual_labels(&signed_labels(ds), gram, params.c, variant)
}

pub(crate) fn recover_omega_labels<T: Real>(
    y: &[Vec<T>],
    dual: &DualSolution<T>,
    variant: DualVariant,
    gram: &Matrix<T>,
) -> Result<Matrix<T>> {
    let layout = check_inputs(y, gram)?;
    let n = layout.n;
    if dual.alpha.len() != layout.num_alpha() || dual.phi.len() != layout.num_phi() {
        return Err(Error::dim("dual solution does not match the Gram matrix"));
    }
    let ridge = match variant {
        DualVariant::Nordic0 if layout.m > 1 => Some(Ridge::new(gram)?),
        _ => None,
    };
    let mut omega = Matrix::zeros(layout.m, n);
    for k in 0..layout.m {
        let mut diff = vec![T::zero(); n];
        if k + 1 < layout.m {
            for i in 0..n {
                diff[i] += dual.phi[k * n + i];
            }
        }
        if k >= 1 {
            for i in 0..n {
                diff[i] -= dual.phi[(k - 1) * n + i];
            }
        }
        if let Some(r) = &ridge {
            diff = r.solve(&diff);
        }
        let row = omega.row_mut(k);
        for i in 0..n {
            row[i] = y[k][i] * dual.alpha[k * n + i] + diff[i];
        }
    }
    Ok(omega)
}

/// `ω_k = Y_k α_k + T(φ_k − φ_{k−1})`, one row per boundary.
pub fn recover_omega<T: Real>(
    ds: &OrdinalDataset<T>,
    dual: &DualSolution<T>,
    variant: DualVariant,
    gram: &Matrix<T>,
) -> Result<Matrix<T>> {
    recover_omega_labels(&signed_labels(ds), dual, variant, gram)
}

/// Decision values without bias at the training points, `F[k][i] = (Kω_k)_i`.
pub(crate) fn train_scores<T: Real>(omega: &Matrix<T>, gram: &Matrix<T>) -> Matrix<T> {
    // gram is symmetric, so (Kω_k)ᵀ = ω_kᵀK
    omega.matmul(gram).expect("omega and gram sizes agree")
}

/// `½ Σ_k ω_kᵀ G ω_k + C Σ hinge`.
pub(crate) fn primal_objective<T: Real>(
    y: &[Vec<T>],
    quad: &Matrix<T>,
    omega: &Matrix<T>,
    scores: &Matrix<T>,
    bias: &[T],
    c: T,
) -> T {
    let mut obj = T::zero();
    for k in 0..omega.rows() {
        let gw = quad.matvec(omega.row(k));
        obj += T::lit(0.5) * crate::linalg::dot(omega.row(k), &gw);
        for i in 0..omega.cols() {
            let m = T::one() - y[k][i] * (scores[(k, i)] + bias[k]);
            if m > T::zero() {
                obj += c * m;
            }
        }
    }
    obj
}

/// Turns kernel-space coefficients into primal weights for the linear kernel.
pub(crate) fn finish_model<T: Real>(
    ds: &OrdinalDataset<T>,
    method: Method,
    params: &HyperParams<T>,
    omega: Matrix<T>,
    bias: Vec<T>,
    info: TrainInfo<T>,
) -> OrdinalModel<T> {
    let (omega, support) = if params.kernel.is_linear() {
        (omega.matmul(ds.features()).expect("sizes agree"), None)
    } else {
        (omega, Some(ds.features().clone()))
    };
    OrdinalModel {
        method,
        kernel: params.kernel,
        support_points: support,
        omega,
        bias,
        num_classes: ds.num_classes(),
        info,
    }
}

fn train_dual<T: Real>(ds: &OrdinalDataset<T>, params: &HyperParams<T>, variant: DualVariant) -> Result<OrdinalModel<T>> {
    params.validate()?;
    let method = match variant {
        DualVariant::Nordic0 => Method::Nordic0,
        DualVariant::Nordic1 => Method::Nordic1,
    };
    if variant == DualVariant::Nordic0 && params.kernel.is_linear() {
        return Err(Error::arg(
            "nordic0 needs a nonnegative kernel; the linear kernel is not supported",
        ));
    }
    let context = format!("{method}, n={}, K={}", ds.len(), ds.num_classes());
    check_subproblems(ds, &context)?;
    let gram = gram_sym(ds.features(), &params.kernel)?;
    let y = signed_labels(ds);
    let dual = solve_dual_labels(&y, &gram, params.c, variant).map_err(|e| match e {
        Error::Training { msg, .. } => Error::Training { context: context.clone(), msg },
        other => Error::Training { context: context.clone(), msg: other.to_string() },
    })?;
    let mut warnings = Vec::new();
    if dual.status == QpStatus::MaxIter {
        warnings.push(format!(
            "QP solver hit the iteration limit (primal {:e}, dual {:e})",
            dual.residuals.primal.to_f64_lossy(),
            dual.residuals.dual.to_f64_lossy()
        ));
    }
    let mut omega = recover_omega_labels(&y, &dual, variant, &gram)?;
    if variant == DualVariant::Nordic0 {
        // remove round-off violations of ω_k ≥ ω_{k+1}
        for k in 1..omega.rows() {
            for i in 0..omega.cols() {
                let prev = omega[(k - 1, i)];
                if omega[(k, i)] > prev {
                    omega[(k, i)] = prev;
                }
            }
        }
    }
    let scores = train_scores(&omega, &gram);
    let bias = bias_lp(&y, &scores, params.c, true)?;
    let quad = match variant {
        DualVariant::Nordic0 => Ridge::new(&gram)?.matrix,
        DualVariant::Nordic1 => gram,
    };
    let objective = primal_objective(&y, &quad, &omega, &scores, &bias, params.c);
    if variant == DualVariant::Nordic1 {
        let mut worst = T::zero();
        for k in 1..scores.rows() {
            for i in 0..scores.cols() {
                worst = worst.max(scores[(k, i)] - scores[(k - 1, i)]);
            }
        }
        if worst > T::lit(1e-6) {
            warnings.push(format!("training-point ordering violated by {:e}", worst.to_f64_lossy()));
        }
    }
    let info = TrainInfo {
        objective,
        dual_objective: Some(dual.objective),
        status: format!("{:?}", dual.status),
        iterations: dual.iterations,
        nodes: 0,
        gap: None,
        warnings,
        c: params.c,
        lambda: params.lambda,
    };
    Ok(finish_model(ds, method, params, omega, bias, info))
}

/// NORDIC-1: ordered decision values at the training points.
pub fn train_nordic1<T: Real>(ds: &OrdinalDataset<T>, params: &HyperParams<T>) -> Result<OrdinalModel<T>> {
    train_dual(ds, params, DualVariant::Nordic1)
}

/// NORDIC-0: elementwise ordered coefficients (RBF kernel only).
pub fn train_nordic0<T: Real>(ds: &OrdinalDataset<T>, params: &HyperParams<T>) -> Result<OrdinalModel<T>> {
    train_dual(ds, params, DualVariant::Nordic0)
}
