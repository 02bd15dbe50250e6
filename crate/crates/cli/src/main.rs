//! `nordic`: generate data, train and apply ordinal models, evaluate
//! predictions, run benchmark configs and check models for crossings.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use nordic::data::{gen_ordered_gaussians, load_balance_scale, GeneratorConfig, GeneratorFamily};
use nordic::eval::{evaluate, CostMatrix};
use nordic::experiment::{run_experiment, ExperimentConfig, GridConfig};
use nordic::kernel::KernelSpec;
use nordic::nordic::{train, tune, Method, TuneMetric};
use nordic::predict::{box_probes, check_noncrossing, labels_from_csv, predict, CrossingMode};
use nordic::{Dataset, Mat, Model, Nordic2Settings, Params};

#[derive(Parser)]
#[command(name = "nordic", version, about = "Noncrossing ordinal classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a simulated dataset (or the balance-scale data) as CSV.
    Generate(GenerateArgs),
    /// Train a model, optionally tuning it on a second dataset first.
    Train(TrainArgs),
    /// Apply a model to a CSV and write the predictions.
    Predict(PredictArgs),
    /// Score a predictions CSV against the true labels.
    Evaluate(EvaluateArgs),
    /// Run a benchmark config.
    Bench(BenchArgs),
    /// Count boundary crossings of a model over probe points.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Nonlinear3,
    Donut,
    OrderedGaussians,
    BalanceScale,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Class means for `ordered-gaussians`.
    #[arg(long, value_delimiter = ',', default_value = "-2,0,2")]
    means: Vec<f64>,
    /// Class standard deviation for `ordered-gaussians`.
    #[arg(long, default_value_t = 1.0)]
    sd: f64,
    /// Source file for `balance-scale`.
    #[arg(long)]
    path: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training CSV (`label,x1,...`).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    method: Method,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// RBF width; the linear kernel is used with `--linear`.
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    #[arg(long)]
    linear: bool,
    /// Tuning CSV; selects the penalty and width by grid search.
    #[arg(long)]
    tune: Option<PathBuf>,
    /// Penalty grid (defaults to 2^-4..2^4).
    #[arg(long, value_delimiter = ',')]
    grid_c: Option<Vec<f64>>,
    /// Width grid (defaults to the 10/50/90% distance quantiles).
    #[arg(long, value_delimiter = ',')]
    grid_width: Option<Vec<f64>>,
    /// Tune on weighted error with this cost instead of the error rate.
    #[arg(long)]
    cost: Option<String>,
    /// Number of classes (defaults to the largest label).
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    reduce_binaries: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// The CSV has no label column.
    #[arg(long)]
    no_labels: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predictions CSV written by `predict`.
    #[arg(long)]
    pred: PathBuf,
    /// Dataset CSV holding the true labels.
    #[arg(long)]
    truth: PathBuf,
    /// `zero-one`, `donut-costs`, `balance-costs` or a cost-matrix file.
    #[arg(long, default_value = "zero-one")]
    cost: String,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to one method.
    #[arg(long)]
    method: Option<Method>,
    #[arg(long, value_delimiter = ',')]
    grid_c: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    grid_width: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Values,
    Signs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    /// Probe CSV; without it, `--random` points are drawn from the bounding
    /// box of the model's support points.
    #[arg(long)]
    probes: Option<PathBuf>,
    #[arg(long)]
    no_labels: bool,
    #[arg(long, default_value_t = 1000)]
    random: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "values")]
    mode: Mode,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_dataset(path: &Path, classes: Option<usize>) -> Result<Dataset> {
    Dataset::from_csv(&read(path)?, classes).with_context(|| format!("parsing {}", path.display()))
}

/// Feature matrix of a CSV, skipping the leading label column unless
/// `no_labels` is set.
fn load_features(path: &Path, no_labels: bool) -> Result<Mat> {
    let text = read(path)?;
    if !no_labels {
        return Ok(Dataset::from_csv(&text, None)?.features().clone());
    }
    let rows = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.split(',')
                .map(|f| f.trim().parse::<f64>().with_context(|| format!("line {}: bad number `{f}`", i + 1)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Mat::from_rows(&rows)?)
}

fn parse_cost(spec: &str, classes: usize) -> Result<CostMatrix> {
    match spec {
        "zero-one" | "donut-costs" | "balance-costs" => Ok(CostMatrix::preset(spec, classes)?),
        path => {
            let m = CostMatrix::from_text(&read(Path::new(path))?)?;
            if m.num_classes() != classes {
                bail!("cost matrix is {0}x{0}, labels span {classes} classes", m.num_classes());
            }
            Ok(m)
        }
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let ds: Dataset = match a.family {
        Family::Nonlinear3 | Family::Donut => {
            let family = if matches!(a.family, Family::Donut) { GeneratorFamily::Donut } else { GeneratorFamily::Nonlinear3 };
            GeneratorConfig { family, n: a.n, d: a.d, sigma: a.sigma, seed: a.seed }.generate()?
        }
        Family::OrderedGaussians => gen_ordered_gaussians(&a.means, a.sd, a.n, a.seed)?,
        Family::BalanceScale => {
            let path = a.path.context("balance-scale needs --path")?;
            load_balance_scale(path)?
        }
    };
    write_or_print(a.out.as_deref(), &ds.to_csv())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let train_set = load_dataset(&a.data, a.classes)?;
    let n2 = Nordic2Settings { reduce_binaries: a.reduce_binaries, ..Default::default() };
    let params = match &a.tune {
        Some(tune_path) => {
            let tune_set = load_dataset(tune_path, Some(train_set.num_classes()))?;
            let grid = GridConfig { penalties: a.grid_c.clone(), widths: a.grid_width.clone(), linear: a.linear }
                .cells(&train_set)?;
            let metric = match &a.cost {
                Some(c) => TuneMetric::Weighted(parse_cost(c, train_set.num_classes())?),
                None => TuneMetric::ErrorRate,
            };
            let (params, table) = tune(&train_set, &tune_set, a.method, &grid, &metric, &n2)?;
            let best = &table.rows[table.best];
            eprintln!(
                "tuned {}: {} = {}, kernel {:?}, tuning score {:.6}",
                a.method,
                a.method.penalty_name(),
                best.cell.penalty,
                best.cell.kernel,
                best.metric.unwrap_or(f64::NAN)
            );
            params
        }
        None => {
            if a.grid_c.is_some() || a.grid_width.is_some() {
                bail!("--grid-c/--grid-width need --tune");
            }
            let kernel = if a.linear { KernelSpec::Linear } else { KernelSpec::rbf(a.width)? };
            Params::new(a.c, a.lambda, kernel)
        }
    };
    let model = train(&train_set, a.method, &params, &n2)?;
    for w in &model.info.warnings {
        eprintln!("warning: {w}");
    }
    std::fs::write(&a.out, model.to_json()?).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!("{}: status {}, objective {}", a.method, model.info.status, model.info.objective);
    Ok(())
}

fn load_model(path: &Path) -> Result<Model> {
    Model::from_json(&read(path)?).with_context(|| format!("loading model {}", path.display()))
}

fn predict_cmd(a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let x = load_features(&a.data, a.no_labels)?;
    let pred = predict(&model, &x)?;
    write_or_print(a.out.as_deref(), &pred.to_csv())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let (pred, ambiguous) = labels_from_csv(&read(&a.pred)?)?;
    let truth = load_dataset(&a.truth, a.classes)?;
    let k = match (a.classes, a.cost.as_str()) {
        (Some(k), _) => k,
        (None, "donut-costs" | "balance-costs") => 3,
        (None, _) => truth.num_classes().max(pred.iter().copied().max().unwrap_or(0)),
    };
    let cost = parse_cost(&a.cost, k)?;
    let metrics = evaluate(&pred, truth.labels(), &ambiguous, &cost)?;
    write_or_print(a.out.as_deref(), &(serde_json::to_string_pretty(&metrics)? + "\n"))
}

fn bench(a: BenchArgs) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(&a.config).with_context(|| format!("loading {}", a.config.display()))?;
    if let Some(s) = a.seed {
        cfg.base_seed = s;
    }
    if let Some(m) = a.method {
        cfg.methods = vec![m];
    }
    if a.grid_c.is_some() {
        cfg.grid.penalties = a.grid_c;
    }
    if a.grid_width.is_some() {
        cfg.grid.widths = a.grid_width;
    }
    let out = a.out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("bench-out"));
    let cases = cfg.expand();
    let mut any_ok = false;
    for case in &cases {
        let dir = if cases.len() == 1 { out.clone() } else { out.join(&case.name) };
        match run_experiment(case) {
            Ok(res) => {
                res.write(&dir)?;
                print!("{}", res.summary_table());
                println!("written to {}", dir.display());
                any_ok = true;
            }
            Err(e) => eprintln!("{}: {e}", case.name),
        }
    }
    Ok(any_ok)
}

fn verify(a: VerifyArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let probes = match &a.probes {
        Some(p) => load_features(p, a.no_labels)?,
        None => {
            let support = model
                .support_points
                .as_ref()
                .context("linear models have no support points; pass --probes")?;
            box_probes(support, a.random, a.seed)?
        }
    };
    let mode = match a.mode {
        Mode::Values => CrossingMode::Values,
        Mode::Signs => CrossingMode::Signs,
    };
    let report = check_noncrossing(&model, &probes, mode)?;
    let json = serde_json::json!({
        "method": model.method,
        "mode": mode,
        "probes": probes.rows(),
        "violations": report.violations,
        "worst_gap": report.worst_gap,
        "locations": report.locations,
    });
    write_or_print(a.out.as_deref(), &(serde_json::to_string_pretty(&json)? + "\n"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Bench(a) => match bench(a) {
            Ok(true) => Ok(()),
            Ok(false) => Err(anyhow::anyhow!("every experiment failed")),
            Err(e) => Err(e),
        },
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
