//! Noncrossing ordinal classification.
//!
//! `K − 1` SVM-style decision functions `f_1, …, f_{K−1}` are trained jointly
//! so that the induced ordinal labels never contradict each other. The crate
//! ships its own convex QP interior-point solver, a bounded simplex and a
//! branch-and-bound MILP solver, the training routines, the two simulated
//! data generators used for evaluation, a balance-scale loader, metrics and
//! an experiment harness.
//!
//! Everything numeric is generic over [`Real`] (`f32`, `f64`); the aliases
//! below fix `f64`.

pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod kernel;
pub mod linalg;
pub mod milp;
pub mod nordic;
pub mod predict;
pub mod qp;
pub mod rng;
pub mod scalar;
pub mod simplex;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Dataset = data::OrdinalDataset<f64>;
pub type Mat = linalg::Matrix<f64>;
pub type Kernel = kernel::KernelSpec<f64>;
pub type Params = nordic::HyperParams<f64>;
pub type Model = nordic::OrdinalModel<f64>;
pub type Nordic2Settings = nordic::Nordic2Config<f64>;
pub type Prediction = predict::PredictionResult<f64>;
pub type Qp = qp::QpProblem<f64>;
pub type QpResult = qp::QpSolution<f64>;
pub type Milp = milp::MilpProblem<f64>;
pub type MilpResult = milp::MilpSolution<f64>;
