use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{gram, KernelSpec};
use crate::linalg::{dot, Matrix};
use crate::scalar::Real;

use super::Method;

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_FORMAT: &str = "nordic-model";

/// Solver diagnostics recorded at training time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainInfo<T> {
    /// Primal objective of the returned model.
    pub objective: T,
    pub dual_objective: Option<T>,
    pub status: String,
    pub iterations: usize,
    /// Branch-and-bound nodes (NORDIC-2 only).
    pub nodes: usize,
    pub gap: Option<T>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub c: T,
    pub lambda: T,
}

/// A trained ordinal classifier with `K − 1` decision functions
/// `f_k(x) = Σ_j ω_{k,j} K(x_j, x) + b_k` (kernel) or `f_k(x) = ω_kᵀx + b_k`
/// (linear, `support_points` absent).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrdinalModel<T> {
    pub method: Method,
    pub kernel: KernelSpec<T>,
    pub support_points: Option<Matrix<T>>,
    /// One row per boundary.
    pub omega: Matrix<T>,
    pub bias: Vec<T>,
    pub num_classes: usize,
    pub info: TrainInfo<T>,
}

#[derive(Serialize, Deserialize)]
struct Envelope<M> {
    format: String,
    version: u32,
    model: M,
}

impl<T: Real> OrdinalModel<T> {
    pub fn num_boundaries(&self) -> usize {
        self.num_classes - 1
    }

    /// Input dimension the model expects.
    pub fn dim(&self) -> usize {
        match &self.support_points {
            Some(s) => s.cols(),
            None => self.omega.cols(),
        }
    }

    /// `(K−1) x n` matrix of decision values `f_k(x_i)` for the rows of `x`.
    pub fn decision_values(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.cols() != self.dim() {
            return Err(Error::dim(format!(
                "model expects {} features, got {}",
                self.dim(),
                x.cols()
            )));
        }
        let m = self.num_boundaries();
        let mut out = Matrix::zeros(m, x.rows());
        match &self.support_points {
            Some(sp) => {
                let kx = gram(x, sp, &self.kernel)?;
                for i in 0..x.rows() {
                    for k in 0..m {
                        out[(k, i)] = dot(kx.row(i), self.omega.row(k)) + self.bias[k];
                    }
                }
            }
            None => {
                for i in 0..x.rows() {
                    for k in 0..m {
                        out[(k, i)] = dot(x.row(i), self.omega.row(k)) + self.bias[k];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let env = Envelope { format: MODEL_FORMAT.to_string(), version: MODEL_FORMAT_VERSION, model: self };
        serde_json::to_string_pretty(&env).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope<Self> = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if env.format != MODEL_FORMAT {
            return Err(Error::Serialization(format!("not a model file (format `{}`)", env.format)));
        }
        if env.version != MODEL_FORMAT_VERSION {
            return Err(Error::Serialization(format!("unsupported model version {}", env.version)));
        }
        env.model.check()?;
        Ok(env.model)
    }

    fn check(&self) -> Result<()> {
        let m = self.num_classes.checked_sub(1).filter(|&m| m >= 1);
        let Some(m) = m else {
            return Err(Error::Serialization("model needs at least two classes".into()));
        };
        let cells = self.omega.rows() * self.omega.cols();
        if self.omega.as_slice().len() != cells || self.omega.rows() != m || self.bias.len() != m {
            return Err(Error::Serialization("coefficient sizes do not match the class count".into()));
        }
        if let Some(sp) = &self.support_points {
            if sp.as_slice().len() != sp.rows() * sp.cols() || sp.rows() != self.omega.cols() {
                return Err(Error::Serialization("support points do not match ω".into()));
            }
        }
        self.kernel.validate()
    }
}
