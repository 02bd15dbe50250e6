//! Independent binary SVMs and the shared-coefficient (parallel boundary)
//! model.

use crate::data::OrdinalDataset;
use crate::error::{Error, Result};
use crate::kernel::gram_sym;
use crate::linalg::{dot, pivoted_cholesky, Matrix};
use crate::qp::{solve_qp, Hessian, QpProblem, QpStatus};
use crate::scalar::Real;

use super::bias::bias_lp;
use super::dual::{finish_model, primal_objective, signed_labels, solve_dual_labels, train_scores, DualVariant};
use super::model::{OrdinalModel, TrainInfo};
use super::{check_subproblems, HyperParams, Method};

/// `K − 1` binary SVMs trained separately; nothing ties the boundaries.
pub fn train_bsvm<T: Real>(ds: &OrdinalDataset<T>, params: &HyperParams<T>) -> Result<OrdinalModel<T>> {
    params.validate()?;
    let context = format!("bsvm, n={}, K={}", ds.len(), ds.num_classes());
    check_subproblems(ds, &context)?;
    let gram = gram_sym(ds.features(), &params.kernel)?;
    let y = signed_labels(ds);
    let n = ds.len();
    let mut omega = Matrix::zeros(y.len(), n);
    let mut dual_obj = T::zero();
    let mut iterations = 0;
    let mut warnings = Vec::new();
    let mut status = QpStatus::Optimal;
    for (k, yk) in y.iter().enumerate() {
        let dual = solve_dual_labels(std::slice::from_ref(yk), &gram, params.c, DualVariant::Nordic1).map_err(|e| {
            Error::Training { context: format!("{context}, k={}", k + 1), msg: e.to_string() }
        })?;
        if dual.status != QpStatus::Optimal {
            status = dual.status;
            warnings.push(format!("boundary {}: QP solver returned {:?}", k + 1, dual.status));
        }
        dual_obj += dual.objective;
        iterations += dual.iterations;
        for i in 0..n {
            omega[(k, i)] = yk[i] * dual.alpha[i];
        }
    }
    let scores = train_scores(&omega, &gram);
    let bias = bias_lp(&y, &scores, params.c, false)?;
    let objective = primal_objective(&y, &gram, &omega, &scores, &bias, params.c);
    let info = TrainInfo {
        objective,
        dual_objective: Some(dual_obj),
        status: format!("{status:?}"),
        iterations,
        nodes: 0,
        gap: None,
        warnings,
        c: params.c,
        lambda: params.lambda,
    };
    Ok(finish_model(ds, Method::Bsvm, params, omega, bias, info))
}

/// One coefficient vector shared by all boundaries, biases ordered:
/// minimize `½ωᵀKω + C Σ ξ` subject to `y_{k,i}((Kω)_i + b_k) ≥ 1 − ξ_{k,i}`,
/// `ξ ≥ 0`, `b_k ≥ b_{k+1}`.
///
/// Solved through its dual: `ω = Σ_k Y_k α_k`, maximize
/// `eᵀα − ½ωᵀKω` subject to `−y_kᵀα_k − γ_k + γ_{k−1} = 0`, `0 ≤ α ≤ C`,
/// `γ ≥ 0`; the biases then come from the ordered bias LP.
pub fn train_ck<T: Real>(ds: &OrdinalDataset<T>, params: &HyperParams<T>) -> Result<OrdinalModel<T>> {
    params.validate()?;
    let context = format!("ck, n={}, K={}", ds.len(), ds.num_classes());
    check_subproblems(ds, &context)?;
    let gram = gram_sym(ds.features(), &params.kernel)?;
    let y = signed_labels(ds);
    let (n, m) = (ds.len(), y.len());
    let na = n * m;
    let p = na + m - 1;
    let hessian = if p <= 600 {
        let mut q = Matrix::zeros(p, p);
        for a in 0..na {
            let (ka, ia) = (a / n, a % n);
            for b in 0..na {
                let (kb, ib) = (b / n, b % n);
                q[(a, b)] = y[ka][ia] * y[kb][ib] * gram[(ia, ib)];
            }
        }
        Hessian::Dense(q)
    } else {
        let l = pivoted_cholesky(&gram, T::lit(1e-12));
        let r = l.cols();
        let mut w = Matrix::zeros(p, r);
        for a in 0..na {
            let (k, i) = (a / n, a % n);
            for (d, &s) in w.row_mut(a).iter_mut().zip(l.row(i)) {
                *d = y[k][i] * s;
            }
        }
        Hessian::LowRank(w)
    };
    let mut cvec = vec![T::zero(); p];
    for v in cvec.iter_mut().take(na) {
        *v = -T::one();
    }
    let mut qp = QpProblem::new(hessian, cvec);
    let mut a_eq = Matrix::zeros(m, p);
    for k in 0..m {
        for i in 0..n {
            a_eq[(k, k * n + i)] = -y[k][i];
        }
        if k + 1 < m {
            a_eq[(k, na + k)] = -T::one();
        }
        if k >= 1 {
            a_eq[(k, na + k - 1)] = T::one();
        }
    }
    qp.a_eq = a_eq;
    qp.b_eq = vec![T::zero(); m];
    qp.lower = vec![T::zero(); p];
    for j in 0..na {
        qp.upper[j] = params.c;
    }
    let sol = solve_qp(&qp, T::lit(1e-8), 200)?;
    if matches!(sol.status, QpStatus::Infeasible | QpStatus::Unbounded) {
        return Err(Error::Training { context, msg: format!("QP solver returned {:?}", sol.status) });
    }
    let mut warnings = Vec::new();
    if sol.status == QpStatus::MaxIter {
        warnings.push("QP solver hit the iteration limit".to_string());
    }
    let mut shared = vec![T::zero(); n];
    for k in 0..m {
        for i in 0..n {
            shared[i] += y[k][i] * sol.theta[k * n + i].max(T::zero()).min(params.c);
        }
    }
    let mut omega = Matrix::zeros(m, n);
    for k in 0..m {
        omega.row_mut(k).copy_from_slice(&shared);
    }
    let scores = train_scores(&omega, &gram);
    let bias = bias_lp(&y, &scores, params.c, true)?;
    let kw = gram.matvec(&shared);
    let mut objective = T::lit(0.5) * dot(&shared, &kw);
    for k in 0..m {
        for i in 0..n {
            let h = T::one() - y[k][i] * (kw[i] + bias[k]);
            if h > T::zero() {
                objective += params.c * h;
            }
        }
    }
    let info = TrainInfo {
        objective,
        dual_objective: Some(-sol.objective),
        status: format!("{:?}", sol.status),
        iterations: sol.iterations,
        nodes: 0,
        gap: None,
        warnings,
        c: params.c,
        lambda: params.lambda,
    };
    Ok(finish_model(ds, Method::Ck, params, omega, bias, info))
}
