//! Grid search over the penalty parameter and the RBF width.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::OrdinalDataset;
use crate::error::{Error, Result};
use crate::eval::{error_rate, weighted_error, CostMatrix};
use crate::kernel::{bandwidth_candidates, KernelSpec};
use crate::predict::predict;
use crate::scalar::Real;

use super::{train, HyperParams, Method, Nordic2Config};

/// One grid point: the method's penalty (`C` or `λ`) and a kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell<T> {
    pub penalty: T,
    pub kernel: KernelSpec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TuneMetric {
    ErrorRate,
    Weighted(CostMatrix),
}

impl TuneMetric {
    fn score(&self, pred: &[usize], truth: &[usize]) -> Result<f64> {
        match self {
            TuneMetric::ErrorRate => error_rate(pred, truth),
            TuneMetric::Weighted(c) => weighted_error(pred, truth, c),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneRow<T> {
    pub cell: GridCell<T>,
    /// Tuning-set metric, absent when training failed.
    pub metric: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneTable<T> {
    pub method: Method,
    pub rows: Vec<TuneRow<T>>,
    /// Index into `rows` of the selected cell.
    pub best: usize,
}

/// Penalties `2^-4, …, 2^4` crossed with the 10/50/90% pairwise-distance
/// quantiles of `train` (27 cells), or the 9 penalties alone for the linear
/// kernel.
pub fn default_grid<T: Real>(train: &OrdinalDataset<T>, linear: bool) -> Result<Vec<GridCell<T>>> {
    let penalties: Vec<T> = (-4..=4).map(|e| T::lit(2f64.powi(e))).collect();
    let kernels: Vec<KernelSpec<T>> = if linear {
        vec![KernelSpec::Linear]
    } else {
        bandwidth_candidates(train.features())?
            .into_iter()
            .map(KernelSpec::rbf)
            .collect::<Result<_>>()?
    };
    let mut out = Vec::with_capacity(penalties.len() * kernels.len());
    for &p in &penalties {
        for &k in &kernels {
            out.push(GridCell { penalty: p, kernel: k });
        }
    }
    Ok(out)
}

fn width<T: Real>(k: &KernelSpec<T>) -> T {
    match *k {
        KernelSpec::Rbf { width } => width,
        KernelSpec::Linear => T::zero(),
    }
}

/// Trains `method` on `train` for every cell, scores it on `tune_set` and
/// returns the best parameters. Ties go to the smaller penalty, then the
/// smaller width. Cells that fail to train are recorded and skipped.
pub fn tune<T: Real>(
    train_set: &OrdinalDataset<T>,
    tune_set: &OrdinalDataset<T>,
    method: Method,
    grid: &[GridCell<T>],
    metric: &TuneMetric,
    n2: &Nordic2Config<T>,
) -> Result<(HyperParams<T>, TuneTable<T>)> {
    if grid.is_empty() {
        return Err(Error::arg("tuning grid is empty"));
    }
    if tune_set.is_empty() {
        return Err(Error::arg("tuning set is empty"));
    }
    let base = HyperParams::new(T::one(), T::one(), KernelSpec::Linear);
    let rows: Vec<TuneRow<T>> = grid
        .par_iter()
        .map(|cell| {
            let params = HyperParams { kernel: cell.kernel, ..base }.with_penalty(method, cell.penalty);
            let outcome = train(train_set, method, &params, n2)
                .and_then(|m| predict(&m, tune_set.features()))
                .and_then(|p| metric.score(&p.labels, tune_set.labels()));
            match outcome {
                Ok(v) => TuneRow { cell: *cell, metric: Some(v), error: None },
                Err(e) => TuneRow { cell: *cell, metric: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, r) in rows.iter().enumerate() {
        let Some(v) = r.metric else { continue };
        let better = match best {
            None => true,
            Some(b) => {
                let (bv, bc) = (rows[b].metric.unwrap(), rows[b].cell);
                v < bv
                    || (v == bv
                        && (r.cell.penalty < bc.penalty
                            || (r.cell.penalty == bc.penalty && width(&r.cell.kernel) < width(&bc.kernel))))
            }
        };
        if better {
            best = Some(i);
        }
    }
    let Some(best) = best else {
        let first = rows.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        return Err(Error::Training {
            context: format!("{method} tuning, {} cells", rows.len()),
            msg: format!("every grid cell failed; first error: {first}"),
        });
    };
    let cell = rows[best].cell;
    let params = HyperParams { kernel: cell.kernel, ..base }.with_penalty(method, cell.penalty);
    Ok((params, TuneTable { method, rows, best }))
}
