//! Decision values, prediction-set aggregation, crossing detection and the
//! ordinal Bayes rule.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::CostMatrix;
use crate::linalg::Matrix;
use crate::nordic::OrdinalModel;
use crate::rng;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionResult<T> {
    /// `(K−1) x m`, `f_k(x_j)`.
    pub decision_values: Matrix<T>,
    /// 1-based labels.
    pub labels: Vec<usize>,
    /// Columns whose sign profile is not nonincreasing (empty intersection
    /// of prediction sets); their label is the count fallback.
    pub ambiguous: Vec<bool>,
    /// `(K−1) x m` signs, `+1` for `f ≥ 0`.
    pub sign_profile: Vec<Vec<i8>>,
}

impl<T: Real> PredictionResult<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn ambiguity_rate(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.ambiguous.iter().filter(|&&a| a).count() as f64 / self.labels.len() as f64
    }

    /// CSV with header `index,label,ambiguous,f_1..f_{K−1}`; `index` is the
    /// 0-based row of the input.
    pub fn to_csv(&self) -> String {
        let m = self.decision_values.rows();
        let mut s = String::from("index,label,ambiguous");
        for k in 1..=m {
            let _ = write!(s, ",f_{k}");
        }
        s.push('\n');
        for j in 0..self.labels.len() {
            let _ = write!(s, "{j},{},{}", self.labels[j], u8::from(self.ambiguous[j]));
            for k in 0..m {
                let _ = write!(s, ",{}", self.decision_values[(k, j)]);
            }
            s.push('\n');
        }
        s
    }
}

/// Labels (and ambiguity flags) from a predictions CSV written by
/// [`PredictionResult::to_csv`].
pub fn labels_from_csv(text: &str) -> Result<(Vec<usize>, Vec<bool>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse { line: 1, msg: "empty predictions file".into() })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("missing `{name}` column") })
    };
    let (li, ai) = (find("label")?, find("ambiguous")?);
    let mut labels = Vec::new();
    let mut amb = Vec::new();
    for (ln, line) in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| f.get(i).copied().ok_or_else(|| Error::Parse { line: ln + 1, msg: "short row".into() });
        labels.push(get(li)?.parse().map_err(|e| Error::Parse { line: ln + 1, msg: format!("{e}") })?);
        amb.push(matches!(get(ai)?, "1" | "true"));
    }
    Ok((labels, amb))
}

pub fn decision_values<T: Real>(model: &OrdinalModel<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
    model.decision_values(x)
}

/// Prediction sets `{1..k}` for `f_k < 0` and `{k+1..K}` otherwise,
/// intersected; the label is `1 + #{k : f_k ≥ 0}`.
pub fn aggregate<T: Real>(decision_values: &Matrix<T>) -> PredictionResult<T> {
    let (m, n) = (decision_values.rows(), decision_values.cols());
    let sign_profile: Vec<Vec<i8>> = (0..m)
        .map(|k| decision_values.row(k).iter().map(|&f| if f >= T::zero() { 1 } else { -1 }).collect())
        .collect();
    let mut labels = Vec::with_capacity(n);
    let mut ambiguous = Vec::with_capacity(n);
    for j in 0..n {
        let pos = (0..m).filter(|&k| sign_profile[k][j] > 0).count();
        labels.push(1 + pos);
        ambiguous.push((1..m).any(|k| sign_profile[k - 1][j] < sign_profile[k][j]));
    }
    PredictionResult { decision_values: decision_values.clone(), labels, ambiguous, sign_profile }
}

pub fn predict<T: Real>(model: &OrdinalModel<T>, x: &Matrix<T>) -> Result<PredictionResult<T>> {
    Ok(aggregate(&model.decision_values(x)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingMode {
    /// `f_k(x) < f_{k+1}(x) − 1e-6`.
    Values,
    /// `f_k(x) < 0 ≤ f_{k+1}(x)`.
    Signs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub violations: usize,
    /// Largest `f_{k+1} − f_k` among the violations (0 when there are none).
    pub worst_gap: f64,
    /// `(probe index, k)` with 1-based `k` for the pair `(f_k, f_{k+1})`.
    pub locations: Vec<(usize, usize)>,
}

pub fn crossing_report<T: Real>(decision_values: &Matrix<T>, mode: CrossingMode) -> CrossingReport {
    let tol = T::lit(1e-6);
    let mut rep = CrossingReport { violations: 0, worst_gap: 0.0, locations: Vec::new() };
    for j in 0..decision_values.cols() {
        for k in 1..decision_values.rows() {
            let (a, b) = (decision_values[(k - 1, j)], decision_values[(k, j)]);
            let bad = match mode {
                CrossingMode::Values => a < b - tol,
                CrossingMode::Signs => a < T::zero() && b >= T::zero(),
            };
            if bad {
                rep.violations += 1;
                rep.worst_gap = rep.worst_gap.max((b - a).to_f64_lossy());
                rep.locations.push((j, k));
            }
        }
    }
    rep
}

pub fn check_noncrossing<T: Real>(model: &OrdinalModel<T>, probes: &Matrix<T>, mode: CrossingMode) -> Result<CrossingReport> {
    if probes.rows() == 0 {
        return Err(Error::arg("probe set is empty"));
    }
    Ok(crossing_report(&model.decision_values(probes)?, mode))
}

/// `count` points drawn uniformly from the bounding box of `points`.
pub fn box_probes<T: Real>(points: &Matrix<T>, count: usize, seed: u64) -> Result<Matrix<T>> {
    if points.rows() == 0 {
        return Err(Error::arg("cannot take the bounding box of no points"));
    }
    let d = points.cols();
    let mut lo = points.row(0).to_vec();
    let mut hi = lo.clone();
    for i in 1..points.rows() {
        for (j, &v) in points.row(i).iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let mut r = rng::for_purpose(seed, rng::Purpose::Probe);
    Ok(Matrix::from_fn(count, d, |_, j| {
        let u: f64 = r.random();
        lo[j] + T::lit(u) * (hi[j] - lo[j])
    }))
}

fn check_eta(eta: &[f64]) -> Result<()> {
    let sum: f64 = eta.iter().sum();
    if eta.is_empty() || eta.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > 1e-10 {
        return Err(Error::arg("η must be a probability vector"));
    }
    Ok(())
}

/// Ordinal Bayes rule: the class where the cumulative probability first
/// reaches 1/2 (smallest such class on an exact tie).
pub fn bayes_ordinal(eta: &[f64]) -> Result<usize> {
    check_eta(eta)?;
    let mut cum = 0.0;
    for (k, &p) in eta.iter().enumerate() {
        cum += p;
        if cum >= 0.5 - 1e-12 {
            return Ok(k + 1);
        }
    }
    Ok(eta.len())
}

/// Mean over `points` of `Σ_k η_k(x) cost(bayes(η(x)), k)`.
pub fn bayes_risk_estimate<F>(oracle: F, points: &Matrix<f64>, cost: &CostMatrix) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if points.rows() == 0 {
        return Err(Error::arg("no points"));
    }
    let mut total = 0.0;
    for i in 0..points.rows() {
        let eta = oracle(points.row(i));
        if eta.len() != cost.num_classes() {
            return Err(Error::dim("oracle and cost matrix disagree on K"));
        }
        let b = bayes_ordinal(&eta)?;
        total += eta.iter().enumerate().map(|(k, &p)| p * cost.entry(b, k + 1)).sum::<f64>();
    }
    Ok(total / points.rows() as f64)
}
