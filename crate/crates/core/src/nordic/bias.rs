//! Bias recovery for fixed coefficients.
//!
//! With `F_{k,i} = (Kω_k)_i` fixed, the biases solve the LP
//!
//! ```text
//! minimize   C Σ ξ_{k,i}
//! subject to y_{k,i} (F_{k,i} + b_k) ≥ 1 − ξ_{k,i},  ξ ≥ 0,  b_k ≥ b_{k+1}.
//! ```
//!
//! It is solved through its dual, which has only `K − 1` rows:
//! maximize `Σ α_{k,i} (1 − y_{k,i} F_{k,i})` subject to
//! `−y_kᵀα_k − γ_k + γ_{k−1} = 0`, `0 ≤ α ≤ C`, `γ ≥ 0`. The biases are
//! the multipliers of the equality rows.

use crate::data::OrdinalDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::simplex::{solve_lp, LpProblem, LpStatus};

use super::dual::{signed_labels, train_scores};

pub(crate) fn bias_lp<T: Real>(y: &[Vec<T>], scores: &Matrix<T>, c: T, ordered: bool) -> Result<Vec<T>> {
    let m = y.len();
    let n = scores.cols();
    if scores.rows() != m || y.iter().any(|v| v.len() != n) {
        return Err(Error::dim("scores and labels disagree in size"));
    }
    let ng = if ordered { m - 1 } else { 0 };
    let p = m * n + ng;
    let mut lp = LpProblem::new(vec![T::zero(); p]);
    let mut a_eq = Matrix::zeros(m, p);
    for k in 0..m {
        for i in 0..n {
            let j = k * n + i;
            lp.c[j] = -(T::one() - y[k][i] * scores[(k, i)]);
            lp.upper[j] = c;
            a_eq[(k, j)] = -y[k][i];
        }
        if ordered {
            if k + 1 < m {
                a_eq[(k, m * n + k)] = -T::one();
            }
            if k >= 1 {
                a_eq[(k, m * n + k - 1)] = T::one();
            }
        }
    }
    lp.a_eq = a_eq;
    lp.b_eq = vec![T::zero(); m];
    let res = solve_lp(&lp);
    if res.status != LpStatus::Optimal {
        return Err(Error::Training {
            context: format!("bias LP, n={n}, boundaries={m}"),
            msg: format!("simplex returned {:?}", res.status),
        });
    }
    let mut b = res.eq_duals;
    if ordered {
        for k in 1..m {
            if b[k] > b[k - 1] {
                b[k] = b[k - 1];
            }
        }
    }
    Ok(b)
}

/// Optimal biases for coefficients `omega` (one row per boundary) over the
/// training Gram matrix, with `b_k ≥ b_{k+1}` imposed.
pub fn recover_bias<T: Real>(ds: &OrdinalDataset<T>, gram: &Matrix<T>, omega: &Matrix<T>, c: T) -> Result<Vec<T>> {
    bias_lp(&signed_labels(ds), &train_scores(omega, gram), c, true)
}

/// Same LP without the ordering rows (independent binary problems).
pub fn recover_bias_unordered<T: Real>(
    ds: &OrdinalDataset<T>,
    gram: &Matrix<T>,
    omega: &Matrix<T>,
    c: T,
) -> Result<Vec<T>> {
    bias_lp(&signed_labels(ds), &train_scores(omega, gram), c, false)
}

/// Average of `y_i − F_{k,i}` over the points with `δ < α_{k,i} < C − δ`,
/// `δ = 1e-6·C`. `None` for boundaries without such a point.
pub fn bias_from_support_vectors<T: Real>(
    ds: &OrdinalDataset<T>,
    gram: &Matrix<T>,
    omega: &Matrix<T>,
    alpha: &[T],
    c: T,
) -> Vec<Option<T>> {
    let y = signed_labels(ds);
    let scores = train_scores(omega, gram);
    let n = ds.len();
    let delta = T::lit(1e-6) * c;
    (0..y.len())
        .map(|k| {
            let mut sum = T::zero();
            let mut cnt = 0usize;
            for i in 0..n {
                let a = alpha[k * n + i];
                if a > delta && a < c - delta {
                    sum += y[k][i] - scores[(k, i)];
                    cnt += 1;
                }
            }
            (cnt > 0).then(|| sum / T::from_usize_lossy(cnt))
        })
        .collect()
}
