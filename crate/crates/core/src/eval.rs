//! Error rates, cost-weighted error, confusion matrices and distance loss.
//!
//! Labels are 1-based throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `entry(p, t)` is the cost of predicting `p` when the truth is `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    num_classes: usize,
    /// Row-major, row = predicted class.
    entries: Vec<f64>,
}

impl CostMatrix {
    /// `rows[p-1][t-1]` = cost of predicting `p` for truth `t`.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if k < 2 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::arg("cost matrix must be square with at least two classes"));
        }
        let entries: Vec<f64> = rows.iter().flatten().copied().collect();
        if entries.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::arg("costs must be finite and nonnegative"));
        }
        if (0..k).any(|i| entries[i * k + i] != 0.0) {
            return Err(Error::arg("cost matrix must have a zero diagonal"));
        }
        Ok(Self { num_classes: k, entries })
    }

    pub fn zero_one(num_classes: usize) -> Self {
        let rows: Vec<Vec<f64>> = (0..num_classes)
            .map(|p| (0..num_classes).map(|t| if p == t { 0.0 } else { 1.0 }).collect())
            .collect();
        Self::new(&rows).expect("valid zero-one costs")
    }

    /// Three-class donut costs: truth 1 misclassified costs 1, truth 2
    /// misclassified costs 2, truth 3 costs 1 (to class 2) or 3 (to class 1).
    pub fn donut() -> Self {
        Self::new(&[vec![0.0, 2.0, 3.0], vec![1.0, 0.0, 1.0], vec![1.0, 2.0, 0.0]]).expect("valid donut costs")
    }

    /// Three-class balance-scale costs: a two-step error costs 2, others 1.
    pub fn balance() -> Self {
        Self::new(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).expect("valid balance costs")
    }

    /// Named presets `zero-one`, `donut-costs` and `balance-costs`.
    pub fn preset(name: &str, num_classes: usize) -> Result<Self> {
        let m = match name {
            "zero-one" => return Ok(Self::zero_one(num_classes)),
            "donut-costs" => Self::donut(),
            "balance-costs" => Self::balance(),
            other => return Err(Error::arg(format!("unknown cost preset `{other}`"))),
        };
        if m.num_classes != num_classes {
            return Err(Error::arg(format!("preset `{name}` is for {} classes, data has {num_classes}", m.num_classes)));
        }
        Ok(m)
    }

    /// Parses `K` lines of `K` comma- or whitespace-separated costs.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse { line: ln + 1, msg: e.to_string() }))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(&rows)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn entry(&self, predicted: usize, truth: usize) -> f64 {
        self.entries[(predicted - 1) * self.num_classes + (truth - 1)]
    }
}

fn check_pair(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::dim(format!("{} predictions for {} labels", pred.len(), truth.len())));
    }
    if pred.is_empty() {
        return Err(Error::arg("no predictions to evaluate"));
    }
    Ok(())
}

fn check_range(labels: &[usize], k: usize) -> Result<()> {
    match labels.iter().find(|&&l| l == 0 || l > k) {
        Some(l) => Err(Error::arg(format!("label {l} outside 1..={k}"))),
        None => Ok(()),
    }
}

pub fn error_rate(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_pair(pred, truth)?;
    let wrong = pred.iter().zip(truth).filter(|(p, t)| p != t).count();
    Ok(wrong as f64 / pred.len() as f64)
}

pub fn weighted_error(pred: &[usize], truth: &[usize], cost: &CostMatrix) -> Result<f64> {
    check_pair(pred, truth)?;
    check_range(pred, cost.num_classes)?;
    check_range(truth, cost.num_classes)?;
    let total: f64 = pred.iter().zip(truth).map(|(&p, &t)| cost.entry(p, t)).sum();
    Ok(total / pred.len() as f64)
}

pub fn distance_loss(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_pair(pred, truth)?;
    let total: usize = pred.iter().zip(truth).map(|(&p, &t)| p.abs_diff(t)).sum();
    Ok(total as f64 / pred.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub num_classes: usize,
    /// `counts[p-1][t-1]`: points of true class `t` predicted as `p`.
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn count(&self, predicted: usize, truth: usize) -> usize {
        self.counts[predicted - 1][truth - 1]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.num_classes).map(|i| self.counts[i][i]).sum()
    }

    /// Each column divided by its sum (all-zero columns stay zero).
    pub fn column_normalized(&self) -> Vec<Vec<f64>> {
        let k = self.num_classes;
        let sums: Vec<usize> = (0..k).map(|t| (0..k).map(|p| self.counts[p][t]).sum()).collect();
        (0..k)
            .map(|p| {
                (0..k)
                    .map(|t| if sums[t] == 0 { 0.0 } else { self.counts[p][t] as f64 / sums[t] as f64 })
                    .collect()
            })
            .collect()
    }
}

pub fn confusion(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<ConfusionMatrix> {
    check_pair(pred, truth)?;
    check_range(pred, num_classes)?;
    check_range(truth, num_classes)?;
    let mut counts = vec![vec![0usize; num_classes]; num_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[p - 1][t - 1] += 1;
    }
    Ok(ConfusionMatrix { num_classes, counts })
}

/// All metrics of one prediction run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub error_rate: f64,
    pub weighted_error: f64,
    pub distance_loss: f64,
    pub ambiguity_rate: f64,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate(pred: &[usize], truth: &[usize], ambiguous: &[bool], cost: &CostMatrix) -> Result<Metrics> {
    let k = cost.num_classes();
    Ok(Metrics {
        error_rate: error_rate(pred, truth)?,
        weighted_error: weighted_error(pred, truth, cost)?,
        distance_loss: distance_loss(pred, truth)?,
        ambiguity_rate: ambiguous.iter().filter(|&&a| a).count() as f64 / pred.len() as f64,
        confusion: confusion(pred, truth, k)?,
    })
}
