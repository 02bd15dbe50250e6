//! Replicated experiments: generate or split data, tune every method on the
//! tuning set, train with the chosen parameters, evaluate on the test set.
//!
//! Configs are TOML (or JSON with the same schema):
//!
//! ```toml
//! name = "nonlinear3"
//! methods = ["nordic0", "nordic1", "nordic2", "bsvm", "ck"]
//! replications = 20
//! base_seed = 1
//! cost = "zero-one"          # preset name, inline rows, or { file = "..." }
//! tune_metric = "error-rate" # or "weighted"
//!
//! [dataset]
//! kind = "generator"         # or "balance-scale", "csv", "ordered-gaussians"
//! family = "nonlinear3"
//! d = 10
//! sigma = 0.5
//!
//! [split]
//! n_train = 100
//! n_tune = 100
//! n_test = 2000
//!
//! [grid]                     # optional; defaults to 2^-4..2^4 and the
//! linear = false             # 10/50/90% distance quantiles
//! ```
//!
//! Replication `r` (0-based) uses seed `base_seed + r`. Generated data is
//! drawn as one sample of `n_train + n_tune + n_test` points cut in that
//! order; file data is split with a class-stratified shuffle.
//!
//! `results.csv` columns, in order: `case, replication, seed, method,
//! penalty_name, penalty, kernel, width, tune_score, failed_cells, status,
//! iterations, nodes, warnings, n_train, n_tune, n_test, error_rate,
//! weighted_error, distance_loss, ambiguity_rate, sign_crossings,
//! value_crossings, confusion, error`. `confusion` lists the counts row by
//! row (row = predicted class), rows joined by `|` and entries by `;`.
//! Wall-clock times (tuning plus final training) go to `timings.csv` so that
//! the result file is reproducible byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    gen_ordered_gaussians, load_balance_scale, stratified_split, GeneratorConfig, GeneratorFamily, OrdinalDataset,
    SplitSpec,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, ConfusionMatrix, CostMatrix};
use crate::kernel::{bandwidth_candidates, KernelSpec};
use crate::nordic::{default_grid, train, tune, GridCell, HyperParams, Method, Nordic2Config, TuneMetric};
use crate::predict::{crossing_report, predict, CrossingMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    Generator { family: GeneratorFamily, d: usize, sigma: f64 },
    /// Equal-prior 1-D Gaussian classes.
    OrderedGaussians { means: Vec<f64>, sd: f64 },
    BalanceScale { path: PathBuf },
    /// Rows `label,x1,...,xd` with 1-based labels.
    Csv { path: PathBuf, num_classes: Option<usize> },
}

impl DatasetSpec {
    fn is_generated(&self) -> bool {
        matches!(self, DatasetSpec::Generator { .. } | DatasetSpec::OrderedGaussians { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub n_train: usize,
    pub n_tune: usize,
    /// Required for generated data; file data uses every remaining row
    /// unless this caps it.
    pub n_test: Option<usize>,
}

/// Overrides of the split sizes, one experiment per case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub name: String,
    pub n_train: usize,
    pub n_tune: usize,
    pub n_test: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Defaults to `2^-4, …, 2^4`.
    pub penalties: Option<Vec<f64>>,
    /// RBF widths; defaults to the training-set distance quantiles.
    pub widths: Option<Vec<f64>>,
    pub linear: bool,
}

impl GridConfig {
    pub fn cells(&self, train: &OrdinalDataset<f64>) -> Result<Vec<GridCell<f64>>> {
        if self.penalties.is_none() && self.widths.is_none() {
            return default_grid(train, self.linear);
        }
        let penalties = self.penalties.clone().unwrap_or_else(|| (-4..=4).map(|e| 2f64.powi(e)).collect());
        let kernels: Vec<KernelSpec<f64>> = if self.linear {
            vec![KernelSpec::Linear]
        } else {
            let widths = match &self.widths {
                Some(w) => w.clone(),
                None => bandwidth_candidates(train.features())?.to_vec(),
            };
            widths.into_iter().map(KernelSpec::rbf).collect::<Result<_>>()?
        };
        if penalties.is_empty() || kernels.is_empty() {
            return Err(Error::arg("tuning grid is empty"));
        }
        let mut out = Vec::new();
        for &penalty in &penalties {
            if !(penalty > 0.0 && penalty.is_finite()) {
                return Err(Error::arg(format!("grid penalty {penalty} must be positive")));
            }
            for &kernel in &kernels {
                out.push(GridCell { penalty, kernel });
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostSpec {
    Preset(String),
    Inline(Vec<Vec<f64>>),
    File { file: PathBuf },
}

impl Default for CostSpec {
    fn default() -> Self {
        CostSpec::Preset("zero-one".into())
    }
}

impl CostSpec {
    pub fn resolve(&self, num_classes: usize) -> Result<CostMatrix> {
        let m = match self {
            CostSpec::Preset(name) => CostMatrix::preset(name, num_classes)?,
            CostSpec::Inline(rows) => CostMatrix::new(rows)?,
            CostSpec::File { file } => CostMatrix::from_text(&std::fs::read_to_string(file)?)?,
        };
        if m.num_classes() != num_classes {
            return Err(Error::arg(format!("cost matrix is {0}x{0}, data has {num_classes} classes", m.num_classes())));
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuneMetricSpec {
    #[default]
    ErrorRate,
    Weighted,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_replications() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub dataset: DatasetSpec,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub split: SplitConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub cost: CostSpec,
    #[serde(default)]
    pub tune_metric: TuneMetricSpec,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub nordic2: Nordic2Config<f64>,
    #[serde(default)]
    pub cases: Vec<CaseConfig>,
}

impl ExperimentConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative data, cost and output paths are taken
    /// relative to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::parse(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut cfg.dataset {
            DatasetSpec::BalanceScale { path } | DatasetSpec::Csv { path, .. } => fix(path),
            _ => {}
        }
        if let CostSpec::File { file } = &mut cfg.cost {
            fix(file);
        }
        if let Some(out) = &mut cfg.output_dir {
            fix(out);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::arg("replications must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::arg("methods must not be empty"));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::arg("methods contain duplicates"));
        }
        self.nordic2.validate()?;
        let check = |n_train: usize, n_tune: usize, n_test: Option<usize>| {
            if n_train == 0 || n_tune == 0 {
                return Err(Error::arg("n_train and n_tune must be positive"));
            }
            if self.dataset.is_generated() && !matches!(n_test, Some(t) if t > 0) {
                return Err(Error::arg("generated data needs a positive n_test"));
            }
            Ok(())
        };
        check(self.split.n_train, self.split.n_tune, self.split.n_test)?;
        for c in &self.cases {
            check(c.n_train, c.n_tune, c.n_test)?;
        }
        Ok(())
    }

    /// One config per case (the config itself when there are no cases).
    pub fn expand(&self) -> Vec<ExperimentConfig> {
        if self.cases.is_empty() {
            return vec![self.clone()];
        }
        self.cases
            .iter()
            .map(|c| ExperimentConfig {
                name: format!("{}-{}", self.name, c.name),
                split: SplitConfig { n_train: c.n_train, n_tune: c.n_tune, n_test: c.n_test },
                cases: Vec::new(),
                ..self.clone()
            })
            .collect()
    }
}

/// One (replication, method) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub case: String,
    pub replication: usize,
    pub seed: u64,
    pub method: Method,
    pub penalty: Option<f64>,
    /// `None` for the linear kernel.
    pub width: Option<f64>,
    pub linear: bool,
    pub tune_score: Option<f64>,
    pub failed_cells: usize,
    pub status: String,
    pub iterations: usize,
    pub nodes: usize,
    pub warnings: usize,
    pub n_train: usize,
    pub n_tune: usize,
    pub n_test: usize,
    pub error_rate: Option<f64>,
    pub weighted_error: Option<f64>,
    pub distance_loss: Option<f64>,
    pub ambiguity_rate: Option<f64>,
    /// Sign-profile inversions over the test points.
    pub sign_crossings: Option<usize>,
    /// `f_k < f_{k+1} − 1e-6` events over the test points.
    pub value_crossings: Option<usize>,
    pub confusion: Option<ConfusionMatrix>,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std_error: f64,
}

fn stat(values: &[f64]) -> Option<Stat> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_error = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    Some(Stat { mean, std_error })
}

/// Per-method summary over the replications that succeeded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub penalty_name: String,
    pub succeeded: usize,
    pub failed: usize,
    pub error_rate: Option<Stat>,
    pub weighted_error: Option<Stat>,
    pub distance_loss: Option<Stat>,
    pub ambiguity_rate: Option<Stat>,
    pub sign_crossings: Option<Stat>,
    pub value_crossings: Option<Stat>,
    /// Column-normalized confusion matrix averaged over replications.
    pub confusion: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub case: String,
    pub replications: usize,
    pub base_seed: u64,
    pub methods: Vec<MethodSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimingRow {
    pub replication: usize,
    pub method: Method,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// Sorted by replication, then method.
    pub rows: Vec<ResultRow>,
    pub timings: Vec<TimingRow>,
    pub summary: Summary,
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const RESULT_COLUMNS: &str = "case,replication,seed,method,penalty_name,penalty,kernel,width,tune_score,\
failed_cells,status,iterations,nodes,warnings,n_train,n_tune,n_test,error_rate,weighted_error,distance_loss,\
ambiguity_rate,sign_crossings,value_crossings,confusion,error";

impl ExperimentResult {
    pub fn results_csv(&self) -> String {
        let mut s = String::from(RESULT_COLUMNS);
        s.push('\n');
        for r in &self.rows {
            let confusion = r
                .confusion
                .as_ref()
                .map(|c| {
                    c.counts
                        .iter()
                        .map(|row| row.iter().map(usize::to_string).collect::<Vec<_>>().join(";"))
                        .collect::<Vec<_>>()
                        .join("|")
                })
                .unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                csv_field(&r.case),
                r.replication,
                r.seed,
                r.method,
                r.method.penalty_name(),
                opt(&r.penalty),
                if r.linear { "linear" } else { "rbf" },
                opt(&r.width),
                opt(&r.tune_score),
                r.failed_cells,
                csv_field(&r.status),
                r.iterations,
                r.nodes,
                r.warnings,
                r.n_train,
                r.n_tune,
                r.n_test,
                opt(&r.error_rate),
                opt(&r.weighted_error),
                opt(&r.distance_loss),
                opt(&r.ambiguity_rate),
                opt(&r.sign_crossings),
                opt(&r.value_crossings),
                confusion,
                csv_field(r.error.as_deref().unwrap_or("")),
            );
        }
        s
    }

    pub fn timings_csv(&self) -> String {
        let mut s = String::from("case,replication,method,seconds\n");
        for t in &self.timings {
            let _ = writeln!(s, "{},{},{},{:.6}", csv_field(&self.summary.case), t.replication, t.method, t.seconds);
        }
        s
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes") + "\n"
    }

    /// Plain-text table of the per-method means.
    pub fn summary_table(&self) -> String {
        let mut s = format!("{} ({} replications)\n", self.summary.case, self.summary.replications);
        let _ = writeln!(
            s,
            "{:<8} {:>4} {:>16} {:>16} {:>16} {:>9} {:>9}",
            "method", "ok", "error", "weighted", "distance", "ambig", "secs"
        );
        let fmt = |st: &Option<Stat>| match st {
            Some(st) => format!("{:.4} ± {:.4}", st.mean, st.std_error),
            None => "-".into(),
        };
        for m in &self.summary.methods {
            let secs: Vec<f64> = self.timings.iter().filter(|t| t.method == m.method).map(|t| t.seconds).collect();
            let mean_secs = if secs.is_empty() { 0.0 } else { secs.iter().sum::<f64>() / secs.len() as f64 };
            let _ = writeln!(
                s,
                "{:<8} {:>4} {:>16} {:>16} {:>16} {:>9} {:>9.3}",
                m.method.name(),
                m.succeeded,
                fmt(&m.error_rate),
                fmt(&m.weighted_error),
                fmt(&m.distance_loss),
                m.ambiguity_rate.as_ref().map(|a| format!("{:.4}", a.mean)).unwrap_or_else(|| "-".into()),
                mean_secs
            );
        }
        s
    }

    /// Writes `results.csv`, `timings.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), self.results_csv())?;
        std::fs::write(dir.join("timings.csv"), self.timings_csv())?;
        std::fs::write(dir.join("summary.json"), self.summary_json())?;
        Ok(())
    }
}

type Splits = (OrdinalDataset<f64>, OrdinalDataset<f64>, OrdinalDataset<f64>);

fn take_rows(ds: &OrdinalDataset<f64>, range: std::ops::Range<usize>) -> OrdinalDataset<f64> {
    ds.subset(&range.collect::<Vec<_>>())
}

/// Train, tune and test sets of one replication.
pub fn replicate_data(cfg: &ExperimentConfig, seed: u64, loaded: Option<&OrdinalDataset<f64>>) -> Result<Splits> {
    let sp = cfg.split;
    match &cfg.dataset {
        DatasetSpec::Generator { .. } | DatasetSpec::OrderedGaussians { .. } => {
            let n_test = sp.n_test.ok_or_else(|| Error::arg("generated data needs n_test"))?;
            let total = sp.n_train + sp.n_tune + n_test;
            let all: OrdinalDataset<f64> = match &cfg.dataset {
                DatasetSpec::Generator { family, d, sigma } => {
                    GeneratorConfig { family: *family, n: total, d: *d, sigma: *sigma, seed }.generate()?
                }
                DatasetSpec::OrderedGaussians { means, sd } => gen_ordered_gaussians(means, *sd, total, seed)?,
                _ => unreachable!(),
            };
            let a = sp.n_train;
            let b = a + sp.n_tune;
            Ok((take_rows(&all, 0..a), take_rows(&all, a..b), take_rows(&all, b..total)))
        }
        DatasetSpec::BalanceScale { .. } | DatasetSpec::Csv { .. } => {
            let data = loaded.ok_or_else(|| Error::arg("file dataset was not loaded"))?;
            let (train, tune_set, test) =
                stratified_split(data, &SplitSpec { n_train: sp.n_train, n_tune: sp.n_tune, seed })?;
            let test = match sp.n_test {
                Some(n) if n < test.len() => take_rows(&test, 0..n),
                _ => test,
            };
            if test.is_empty() {
                return Err(Error::arg("split leaves no test points"));
            }
            Ok((train, tune_set, test))
        }
    }
}

fn load_file_dataset(spec: &DatasetSpec) -> Result<Option<OrdinalDataset<f64>>> {
    Ok(match spec {
        DatasetSpec::BalanceScale { path } => Some(load_balance_scale(path)?),
        DatasetSpec::Csv { path, num_classes } => {
            Some(OrdinalDataset::from_csv(&std::fs::read_to_string(path)?, *num_classes)?)
        }
        _ => None,
    })
}

struct CellInput<'a> {
    case: &'a str,
    replication: usize,
    seed: u64,
    method: Method,
}

fn run_cell(
    cfg: &ExperimentConfig,
    input: &CellInput<'_>,
    data: &Result<Splits, String>,
    cost: &CostMatrix,
) -> (ResultRow, f64) {
    let mut row = ResultRow {
        case: input.case.to_string(),
        replication: input.replication,
        seed: input.seed,
        method: input.method,
        penalty: None,
        width: None,
        linear: cfg.grid.linear,
        tune_score: None,
        failed_cells: 0,
        status: String::new(),
        iterations: 0,
        nodes: 0,
        warnings: 0,
        n_train: 0,
        n_tune: 0,
        n_test: 0,
        error_rate: None,
        weighted_error: None,
        distance_loss: None,
        ambiguity_rate: None,
        sign_crossings: None,
        value_crossings: None,
        confusion: None,
        error: None,
    };
    let (train_set, tune_set, test) = match data {
        Ok(d) => d,
        Err(e) => {
            row.error = Some(e.clone());
            return (row, 0.0);
        }
    };
    row.n_train = train_set.len();
    row.n_tune = tune_set.len();
    row.n_test = test.len();
    let metric = match cfg.tune_metric {
        TuneMetricSpec::ErrorRate => TuneMetric::ErrorRate,
        TuneMetricSpec::Weighted => TuneMetric::Weighted(cost.clone()),
    };
    let start = Instant::now();
    let trained = cfg.grid.cells(train_set).and_then(|grid| {
        let (params, table) = tune(train_set, tune_set, input.method, &grid, &metric, &cfg.nordic2)?;
        let best = &table.rows[table.best];
        row.penalty = Some(best.cell.penalty);
        if let KernelSpec::Rbf { width } = best.cell.kernel {
            row.width = Some(width);
        }
        row.linear = best.cell.kernel.is_linear();
        row.tune_score = best.metric;
        row.failed_cells = table.rows.iter().filter(|r| r.metric.is_none()).count();
        let params: HyperParams<f64> = params;
        train(train_set, input.method, &params, &cfg.nordic2)
    });
    let seconds = start.elapsed().as_secs_f64();
    let outcome = trained.and_then(|model| {
        row.status = model.info.status.clone();
        row.iterations = model.info.iterations;
        row.nodes = model.info.nodes;
        row.warnings = model.info.warnings.len();
        let pred = predict(&model, test.features())?;
        let m = evaluate(&pred.labels, test.labels(), &pred.ambiguous, cost)?;
        row.sign_crossings = Some(crossing_report(&pred.decision_values, CrossingMode::Signs).violations);
        row.value_crossings = Some(crossing_report(&pred.decision_values, CrossingMode::Values).violations);
        row.error_rate = Some(m.error_rate);
        row.weighted_error = Some(m.weighted_error);
        row.distance_loss = Some(m.distance_loss);
        row.ambiguity_rate = Some(m.ambiguity_rate);
        row.confusion = Some(m.confusion);
        Ok(())
    });
    if let Err(e) = outcome {
        row.error = Some(e.to_string());
    }
    (row, seconds)
}

fn summarize(cfg: &ExperimentConfig, rows: &[ResultRow]) -> Summary {
    let methods = cfg
        .methods
        .iter()
        .map(|&method| {
            let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.method == method).collect();
            let ok: Vec<&&ResultRow> = mine.iter().filter(|r| r.ok()).collect();
            let col = |f: &dyn Fn(&ResultRow) -> Option<f64>| stat(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
            let confusion = if ok.is_empty() {
                None
            } else {
                let k = ok[0].confusion.as_ref().map_or(0, |c| c.num_classes);
                let mut acc = vec![vec![0.0; k]; k];
                for r in &ok {
                    if let Some(c) = &r.confusion {
                        for (a, row) in acc.iter_mut().zip(c.column_normalized()) {
                            for (x, v) in a.iter_mut().zip(row) {
                                *x += v / ok.len() as f64;
                            }
                        }
                    }
                }
                Some(acc)
            };
            MethodSummary {
                method,
                penalty_name: method.penalty_name().to_string(),
                succeeded: ok.len(),
                failed: mine.len() - ok.len(),
                error_rate: col(&|r| r.error_rate),
                weighted_error: col(&|r| r.weighted_error),
                distance_loss: col(&|r| r.distance_loss),
                ambiguity_rate: col(&|r| r.ambiguity_rate),
                sign_crossings: col(&|r| r.sign_crossings.map(|v| v as f64)),
                value_crossings: col(&|r| r.value_crossings.map(|v| v as f64)),
                confusion,
            }
        })
        .collect();
    Summary { case: cfg.name.clone(), replications: cfg.replications, base_seed: cfg.base_seed, methods }
}

/// Runs one experiment (a config without cases). Cells run in parallel;
/// rows come back sorted by replication and method. Fails only when every
/// cell failed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    if !cfg.cases.is_empty() {
        return Err(Error::arg("expand the cases before running (ExperimentConfig::expand)"));
    }
    let loaded = load_file_dataset(&cfg.dataset)?;
    let num_classes = match (&loaded, &cfg.dataset) {
        (Some(d), _) => d.num_classes(),
        (None, DatasetSpec::OrderedGaussians { means, .. }) => means.len(),
        _ => 3,
    };
    let cost = cfg.cost.resolve(num_classes)?;
    let data: Vec<Result<Splits, String>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| replicate_data(cfg, cfg.base_seed + r as u64, loaded.as_ref()).map_err(|e| e.to_string()))
        .collect();
    let mut methods = cfg.methods.clone();
    methods.sort();
    let cells: Vec<(usize, Method)> =
        (0..cfg.replications).flat_map(|r| methods.iter().map(move |&m| (r, m))).collect();
    let outcomes: Vec<(ResultRow, f64)> = cells
        .par_iter()
        .map(|&(r, method)| {
            let input = CellInput { case: &cfg.name, replication: r, seed: cfg.base_seed + r as u64, method };
            run_cell(cfg, &input, &data[r], &cost)
        })
        .collect();
    if outcomes.iter().all(|(r, _)| !r.ok()) {
        let first = outcomes.first().and_then(|(r, _)| r.error.clone()).unwrap_or_default();
        return Err(Error::Training {
            context: format!("experiment {}", cfg.name),
            msg: format!("every cell failed; first error: {first}"),
        });
    }
    let timings = outcomes
        .iter()
        .map(|(r, s)| TimingRow { replication: r.replication, method: r.method, seconds: *s })
        .collect();
    let rows: Vec<ResultRow> = outcomes.into_iter().map(|(r, _)| r).collect();
    let summary = summarize(cfg, &rows);
    Ok(ExperimentResult { config: cfg.clone(), rows, timings, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_toml_and_json() {
        let cfg = ExperimentConfig::parse(
            r#"
            methods = ["bsvm", "nordic1"]
            replications = 2
            base_seed = 5
            cost = "donut-costs"
            [dataset]
            kind = "generator"
            family = "donut"
            d = 2
            sigma = 0.4
            [split]
            n_train = 30
            n_tune = 20
            n_test = 50
            [nordic2]
            reduce_binaries = true
            "#,
        )
        .unwrap();
        assert_eq!(cfg.methods, vec![Method::Bsvm, Method::Nordic1]);
        assert!(cfg.nordic2.reduce_binaries);
        assert_eq!(cfg.nordic2.node_limit, 1_000_000);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::parse(&json).unwrap(), cfg);
        assert!(ExperimentConfig::parse("replications = 0\n[dataset]\nkind='generator'\nfamily='donut'\nd=2\nsigma=0\n[split]\nn_train=1\nn_tune=1\nn_test=1").is_err());
        assert!(ExperimentConfig::parse("bogus = 1").is_err());
    }

    #[test]
    fn cost_spec_forms() {
        let c: CostSpec = serde_json::from_str("[[0,1],[1,0]]").unwrap();
        assert_eq!(c.resolve(2).unwrap(), CostMatrix::zero_one(2));
        let c: CostSpec = serde_json::from_str("\"balance-costs\"").unwrap();
        assert!(c.resolve(4).is_err());
    }

    #[test]
    fn stat_values() {
        let s = stat(&[1.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.std_error - 1.0).abs() < 1e-15);
        assert_eq!(stat(&[4.0]).unwrap().std_error, 0.0);
    }
}
