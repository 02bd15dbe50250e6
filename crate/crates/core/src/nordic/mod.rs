//! Noncrossing ordinal classifiers and their baselines.
//!
//! Five trainers share one model type:
//!
//! * `Nordic0`: kernel SVMs with `ω_k ≥ ω_{k+1}` and `b_k ≥ b_{k+1}`. With a
//!   nonnegative kernel this orders the decision functions everywhere.
//! * `Nordic1`: `Kω_k ≥ Kω_{k+1}` and `b_k ≥ b_{k+1}`, ordering the decision
//!   values at the training points.
//! * `Nordic2`: L1-penalized hinge loss with big-M logical constraints that
//!   order the signs of the decision functions at the training points.
//! * `Bsvm`: K−1 independent binary SVMs.
//! * `Ck`: one shared coefficient vector with ordered biases (parallel
//!   boundaries).

mod baselines;
mod bias;
mod dual;
mod model;
mod nordic2;
mod tune;

use serde::{Deserialize, Serialize};

use crate::data::OrdinalDataset;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::scalar::Real;

pub use baselines::{train_bsvm, train_ck};
pub use bias::{bias_from_support_vectors, recover_bias, recover_bias_unordered};
pub use dual::{
    assemble_dual, assemble_dual_factored, recover_omega, solve_dual, DualLayout, DualSolution, DualVariant,
};
pub use model::{OrdinalModel, TrainInfo, MODEL_FORMAT_VERSION};
pub use nordic2::{assemble_milp_nordic2, default_big_m, nordic2_heuristic, train_nordic2, Nordic2Layout};
pub use tune::{default_grid, tune, GridCell, TuneMetric, TuneRow, TuneTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nordic0,
    Nordic1,
    Nordic2,
    Bsvm,
    Ck,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Nordic0, Method::Nordic1, Method::Nordic2, Method::Bsvm, Method::Ck];

    pub fn name(self) -> &'static str {
        match self {
            Method::Nordic0 => "nordic0",
            Method::Nordic1 => "nordic1",
            Method::Nordic2 => "nordic2",
            Method::Bsvm => "bsvm",
            Method::Ck => "ck",
        }
    }

    /// Name of the penalty parameter the trainer exposes.
    pub fn penalty_name(self) -> &'static str {
        if self == Method::Nordic2 {
            "lambda"
        } else {
            "C"
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::arg(format!("unknown method `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParams<T> {
    /// Slack cost (NORDIC-0/1, BSVM, CK).
    pub c: T,
    /// L1 penalty weight (NORDIC-2).
    pub lambda: T,
    pub kernel: KernelSpec<T>,
}

impl<T: Real> HyperParams<T> {
    pub fn new(c: T, lambda: T, kernel: KernelSpec<T>) -> Self {
        Self { c, lambda, kernel }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > T::zero()) || !self.c.is_finite() {
            return Err(Error::arg("C must be positive"));
        }
        if !(self.lambda > T::zero()) || !self.lambda.is_finite() {
            return Err(Error::arg("lambda must be positive"));
        }
        self.kernel.validate()
    }

    /// Copy with the penalty parameter of `method` set to `value`.
    pub fn with_penalty(mut self, method: Method, value: T) -> Self {
        if method == Method::Nordic2 {
            self.lambda = value;
        } else {
            self.c = value;
        }
        self
    }

    pub fn penalty(&self, method: Method) -> T {
        if method == Method::Nordic2 {
            self.lambda
        } else {
            self.c
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real"))]
pub struct Nordic2Config<T> {
    /// Big-M constants; `None` selects the data-driven default.
    pub m1: Option<T>,
    pub m2: Option<T>,
    /// Single-binary reformulation of the logical constraints.
    pub reduce_binaries: bool,
    /// Logical constraints require `f_k ≥ margin` or `f_{k+1} ≤ −margin` so
    /// that signs stay ordered after floating-point evaluation.
    pub sign_margin: T,
    pub gap_tol: T,
    pub node_limit: usize,
}

impl<T: Real> Default for Nordic2Config<T> {
    fn default() -> Self {
        Self {
            m1: None,
            m2: None,
            reduce_binaries: false,
            sign_margin: T::lit(1e-6),
            gap_tol: T::lit(1e-9),
            node_limit: 1_000_000,
        }
    }
}

impl<T: Real> Nordic2Config<T> {
    pub fn validate(&self) -> Result<()> {
        for m in [self.m1, self.m2].into_iter().flatten() {
            if !(m >= T::one()) {
                return Err(Error::arg("big-M constants must be at least 1"));
            }
        }
        if !(self.sign_margin >= T::zero()) {
            return Err(Error::arg("sign margin must be nonnegative"));
        }
        Ok(())
    }
}

/// Rejects datasets where some binary subproblem sees a single sign.
pub(crate) fn check_subproblems<T: Real>(ds: &OrdinalDataset<T>, context: &str) -> Result<()> {
    let counts = ds.class_counts();
    let k_total = ds.num_classes();
    for k in 1..k_total {
        let neg: usize = counts[..k].iter().sum();
        let pos: usize = counts[k..].iter().sum();
        if neg == 0 || pos == 0 {
            return Err(Error::Training {
                context: format!("{context}, k={k}, n={}", ds.len()),
                msg: format!("binary subproblem {k} has only one sign"),
            });
        }
    }
    Ok(())
}

/// Trains `method` with `params`; `n2` configures NORDIC-2.
pub fn train<T: Real>(
    ds: &OrdinalDataset<T>,
    method: Method,
    params: &HyperParams<T>,
    n2: &Nordic2Config<T>,
) -> Result<OrdinalModel<T>> {
    match method {
        Method::Nordic0 => dual::train_nordic0(ds, params),
        Method::Nordic1 => dual::train_nordic1(ds, params),
        Method::Nordic2 => train_nordic2(ds, params, n2),
        Method::Bsvm => train_bsvm(ds, params),
        Method::Ck => train_ck(ds, params),
    }
}

pub use dual::{train_nordic0, train_nordic1};
