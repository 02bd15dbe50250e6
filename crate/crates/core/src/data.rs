//! Ordinal datasets, dummy labels, stratified splits, simulation generators
//! and the balance-scale loader.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;
use crate::scalar::Real;

/// Feature matrix with ordinal labels in `1..=K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrdinalDataset<T> {
    features: Matrix<T>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl<T: Real> OrdinalDataset<T> {
    pub fn new(features: Matrix<T>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::arg("need at least two classes"));
        }
        if labels.is_empty() {
            return Err(Error::arg("dataset must contain at least one observation"));
        }
        if features.rows() != labels.len() {
            return Err(Error::dim(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y < 1 || y > num_classes) {
            return Err(Error::arg(format!("label {bad} outside 1..={num_classes}")));
        }
        Ok(Self { features, labels, num_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.num_classes];
        for &y in &self.labels {
            c[y - 1] += 1;
        }
        c
    }

    /// Rows at `idx`, in that order. Empty selections are allowed and give a
    /// dataset view with no rows (only useful as an empty tune set).
    pub fn subset(&self, idx: &[usize]) -> Self {
        let d = self.dim();
        let mut data = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            data.extend_from_slice(self.features.row(i));
        }
        Self {
            features: Matrix::from_vec(idx.len(), d, data).expect("consistent shape"),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    /// Dummy labels of the `k`-th binary subproblem.
    pub fn dummy(&self, k: usize) -> Result<Vec<i8>> {
        dummy_labels(&self.labels, self.num_classes, k)
    }

    /// CSV with rows `label,x1,...,xd`, shortest round-trip decimal form.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.len() {
            let _ = write!(s, "{}", self.labels[i]);
            for &v in self.features.row(i) {
                let _ = write!(s, ",{}", v.to_f64_lossy());
            }
            s.push('\n');
        }
        s
    }

    /// Parses the CSV layout written by [`to_csv`](Self::to_csv). With
    /// `num_classes = None` the number of classes is the largest label.
    pub fn from_csv(text: &str, num_classes: Option<usize>) -> Result<Self> {
        let mut labels = Vec::new();
        let mut data = Vec::new();
        let mut width = None;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse_err = |msg: String| Error::Parse { line: ln + 1, msg };
            let y: usize = fields
                .next()
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| parse_err("label is not a positive integer".into()))?;
            let mut row = Vec::new();
            for f in fields {
                let v: f64 = f.trim().parse().map_err(|_| parse_err(format!("bad number `{f}`")))?;
                row.push(T::lit(v));
            }
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => return Err(parse_err(format!("expected {w} features"))),
                _ => {}
            }
            labels.push(y);
            data.extend(row);
        }
        let d = width.ok_or(Error::Parse { line: 0, msg: "no data rows".into() })?;
        let k = num_classes.unwrap_or_else(|| labels.iter().copied().max().unwrap_or(0).max(2));
        Self::new(Matrix::from_vec(labels.len(), d, data)?, labels, k)
    }
}

/// `-1` where `label <= k`, `+1` otherwise.
pub fn dummy_labels(labels: &[usize], num_classes: usize, k: usize) -> Result<Vec<i8>> {
    if k < 1 || k >= num_classes {
        return Err(Error::arg(format!("subproblem index {k} outside 1..{num_classes}")));
    }
    Ok(labels.iter().map(|&y| if y <= k { -1 } else { 1 }).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n_train: usize,
    pub n_tune: usize,
    pub seed: u64,
}

/// Row indices of a three-way split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub tune: Vec<usize>,
    pub test: Vec<usize>,
}

/// Largest-remainder allocation of `total` across groups proportional to
/// `weights`, never exceeding `caps`. Ties go to the lower group index.
fn allocate(total: usize, weights: &[usize], caps: &[usize]) -> Vec<usize> {
    let wsum: usize = weights.iter().sum();
    let mut out = vec![0usize; weights.len()];
    if wsum == 0 || total == 0 {
        return out;
    }
    let mut rema: Vec<(u128, usize)> = Vec::with_capacity(weights.len());
    for (g, &w) in weights.iter().enumerate() {
        let num = total as u128 * w as u128;
        out[g] = ((num / wsum as u128) as usize).min(caps[g]);
        rema.push((num % wsum as u128, g));
    }
    rema.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut left = total - out.iter().sum::<usize>().min(total);
    // first pass by remainder, then fill any remaining slack in group order
    for &(_, g) in &rema {
        if left == 0 {
            break;
        }
        if out[g] < caps[g] {
            out[g] += 1;
            left -= 1;
        }
    }
    for g in 0..out.len() {
        while left > 0 && out[g] < caps[g] {
            out[g] += 1;
            left -= 1;
        }
    }
    out
}

/// Stratified three-way split of row indices. Within each class the rows are
/// shuffled with the split seed; each part is returned in ascending order.
pub fn stratified_split_indices(labels: &[usize], num_classes: usize, spec: &SplitSpec) -> Result<SplitIndices> {
    let n = labels.len();
    if spec.n_train + spec.n_tune > n {
        return Err(Error::arg(format!(
            "n_train + n_tune = {} exceeds {n} observations",
            spec.n_train + spec.n_tune
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y - 1].push(i);
    }
    let counts: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let train_q = allocate(spec.n_train, &counts, &counts);
    let caps: Vec<usize> = counts.iter().zip(&train_q).map(|(c, t)| c - t).collect();
    let tune_q = allocate(spec.n_tune, &counts, &caps);
    let mut r = rng::for_purpose(spec.seed, rng::Purpose::Split);
    let mut out = SplitIndices { train: Vec::new(), tune: Vec::new(), test: Vec::new() };
    for (g, rows) in by_class.iter_mut().enumerate() {
        // Fisher-Yates with the crate's stream
        for i in (1..rows.len()).rev() {
            let j = r.random_range(0..=i);
            rows.swap(i, j);
        }
        out.train.extend_from_slice(&rows[..train_q[g]]);
        out.tune.extend_from_slice(&rows[train_q[g]..train_q[g] + tune_q[g]]);
        out.test.extend_from_slice(&rows[train_q[g] + tune_q[g]..]);
    }
    out.train.sort_unstable();
    out.tune.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

pub fn stratified_split<T: Real>(
    data: &OrdinalDataset<T>,
    spec: &SplitSpec,
) -> Result<(OrdinalDataset<T>, OrdinalDataset<T>, OrdinalDataset<T>)> {
    let s = stratified_split_indices(data.labels(), data.num_classes(), spec)?;
    Ok((data.subset(&s.train), data.subset(&s.tune), data.subset(&s.test)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorFamily {
    Nonlinear3,
    Donut,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub family: GeneratorFamily,
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn generate<T: Real>(&self) -> Result<OrdinalDataset<T>> {
        match self.family {
            GeneratorFamily::Nonlinear3 => gen_nonlinear3(self),
            GeneratorFamily::Donut => gen_donut(self),
        }
    }

    fn check(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::arg("generator needs d >= 2"));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::arg("noise level must be nonnegative"));
        }
        if self.n == 0 {
            return Err(Error::arg("generator needs n >= 1"));
        }
        Ok(())
    }
}

/// Class scores of the three-class nonlinear model at noise-free `(x1, x2)`.
pub fn nonlinear3_scores(x1: f64, x2: f64) -> [f64; 3] {
    [
        -2.0 * x1 + 0.2 * x1 * x1 - 0.1 * x2 * x2 + 0.2,
        -0.4 * x1 * x1 + 0.2 * x2 * x2 - 0.4,
        2.0 * x1 + 0.2 * x1 * x1 - 0.1 * x2 * x2 + 0.2,
    ]
}

/// Class posteriors of the three-class nonlinear model (softmax of the
/// scores).
pub fn nonlinear3_eta(x1: f64, x2: f64) -> [f64; 3] {
    let f = nonlinear3_scores(x1, x2);
    let m = f[0].max(f[1]).max(f[2]);
    let e = [(f[0] - m).exp(), (f[1] - m).exp(), (f[2] - m).exp()];
    let s = e[0] + e[1] + e[2];
    [e[0] / s, e[1] / s, e[2] / s]
}

fn sample_categorical<R: Rng>(r: &mut R, p: &[f64]) -> usize {
    let u: f64 = r.random();
    let mut acc = 0.0;
    for (k, &pk) in p.iter().enumerate() {
        acc += pk;
        if u < acc {
            return k + 1;
        }
    }
    p.len()
}

pub fn gen_nonlinear3<T: Real>(cfg: &GeneratorConfig) -> Result<OrdinalDataset<T>> {
    cfg.check()?;
    let mut r = rng::for_purpose(cfg.seed, rng::Purpose::Data);
    let mut data = Vec::with_capacity(cfg.n * cfg.d);
    let mut labels = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let x1: f64 = r.random_range(-3.0..3.0);
        let x2: f64 = r.random_range(-6.0..6.0);
        labels.push(sample_categorical(&mut r, &nonlinear3_eta(x1, x2)));
        let e1: f64 = StandardNormal.sample(&mut r);
        let e2: f64 = StandardNormal.sample(&mut r);
        data.push(T::lit(x1 + cfg.sigma * e1));
        data.push(T::lit(x2 + cfg.sigma * e2));
        for _ in 2..cfg.d {
            let z: f64 = StandardNormal.sample(&mut r);
            data.push(T::lit(z));
        }
    }
    OrdinalDataset::new(Matrix::from_vec(cfg.n, cfg.d, data)?, labels, 3)
}

/// Class of a noise-free donut point from its first two coordinates.
pub fn donut_label(x1: f64, x2: f64) -> usize {
    let c3 = 3f64.sqrt() + 0.1;
    if (x1 - c3).powi(2) + x2 * x2 < 3.0 {
        3
    } else if (x1 - 1.9).powi(2) + x2 * x2 < 4.0 {
        2
    } else {
        1
    }
}

pub fn gen_donut<T: Real>(cfg: &GeneratorConfig) -> Result<OrdinalDataset<T>> {
    cfg.check()?;
    let mut r = rng::for_purpose(cfg.seed, rng::Purpose::Data);
    let mut data = Vec::with_capacity(cfg.n * cfg.d);
    let mut labels = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let u: f64 = r.random();
        let v: f64 = r.random();
        let rad = 4.0 * u.sqrt();
        let ang = 2.0 * std::f64::consts::PI * v;
        let (x1, x2) = (rad * ang.cos(), rad * ang.sin());
        labels.push(donut_label(x1, x2));
        for j in 0..cfg.d {
            let base = match j {
                0 => x1,
                1 => x2,
                _ => 0.0,
            };
            let z: f64 = StandardNormal.sample(&mut r);
            data.push(T::lit(base + cfg.sigma * z));
        }
    }
    OrdinalDataset::new(Matrix::from_vec(cfg.n, cfg.d, data)?, labels, 3)
}

/// One-dimensional ordered Gaussian classes with equal priors: class `k` is
/// drawn from `N(means[k-1], sd²)`.
pub fn gen_ordered_gaussians<T: Real>(means: &[f64], sd: f64, n: usize, seed: u64) -> Result<OrdinalDataset<T>> {
    if means.len() < 2 || !(sd > 0.0) {
        return Err(Error::arg("need at least two classes and a positive standard deviation"));
    }
    let mut r = rng::for_purpose(seed, rng::Purpose::Data);
    let k = means.len();
    let mut data = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y = r.random_range(1..=k);
        let z: f64 = StandardNormal.sample(&mut r);
        labels.push(y);
        data.push(T::lit(means[y - 1] + sd * z));
    }
    OrdinalDataset::new(Matrix::from_vec(n, 1, data)?, labels, k)
}

/// Class posteriors of [`gen_ordered_gaussians`] at `x`.
pub fn ordered_gaussians_eta(means: &[f64], sd: f64, x: f64) -> Vec<f64> {
    let logs: Vec<f64> = means.iter().map(|m| -0.5 * ((x - m) / sd).powi(2)).collect();
    let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logs.iter().map(|l| (l - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Parses the balance-scale layout: `tag,lw,ld,rw,rd` per line with tag in
/// `{L,B,R}` mapped to `1,2,3`.
pub fn parse_balance_scale<T: Real>(text: &str) -> Result<OrdinalDataset<T>> {
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: ln + 1, msg };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let y = match fields[0] {
            "L" => 1,
            "B" => 2,
            "R" => 3,
            other => return Err(err(format!("unknown class tag `{other}`"))),
        };
        for f in &fields[1..] {
            let v: u32 = f.parse().map_err(|_| err(format!("bad attribute `{f}`")))?;
            if !(1..=5).contains(&v) {
                return Err(err(format!("attribute {v} outside 1..5")));
            }
            data.push(T::lit(v as f64));
        }
        labels.push(y);
    }
    if labels.is_empty() {
        return Err(Error::Parse { line: 0, msg: "no records".into() });
    }
    OrdinalDataset::new(Matrix::from_vec(labels.len(), 4, data)?, labels, 3)
}

pub fn load_balance_scale<T: Real>(path: impl AsRef<Path>) -> Result<OrdinalDataset<T>> {
    parse_balance_scale(&std::fs::read_to_string(path)?)
}
