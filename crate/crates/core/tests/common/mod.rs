//! Reference computations used as test oracles. They avoid the library's
//! solver paths they check (or use a different formulation of the same
//! problem) so that agreement means something.

#![allow(dead_code)]

use nordic::milp::MilpProblem;
use nordic::qp::{Hessian, QpProblem};
use nordic::simplex::{solve_lp, LpProblem, LpStatus};
use nordic::{Dataset, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dataset(rows: &[Vec<f64>], labels: &[usize], k: usize) -> Dataset {
    Dataset::new(Mat::from_rows(rows).unwrap(), labels.to_vec(), k).unwrap()
}

/// Three 1-D clusters at −2, 0, 2 (uniform jitter ±0.3), labels 1, 2, 3.
pub fn separable_1d(per_class: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (k, c) in [-2.0, 0.0, 2.0].iter().enumerate() {
        for _ in 0..per_class {
            rows.push(vec![c + r.random_range(-0.3..0.3)]);
            labels.push(k + 1);
        }
    }
    dataset(&rows, &labels, 3)
}

/// Ordered 2-D Gaussian blobs far apart along the first axis.
pub fn well_separated(per_class: usize, k: usize, gap: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for class in 0..k {
        for _ in 0..per_class {
            let u: f64 = r.random_range(-0.5..0.5);
            let v: f64 = r.random_range(-1.0..1.0);
            rows.push(vec![class as f64 * gap + u, v]);
            labels.push(class + 1);
        }
    }
    dataset(&rows, &labels, k)
}

/// `±1` labels per boundary as `f64`.
pub fn signed(ds: &Dataset) -> Vec<Vec<f64>> {
    (1..ds.num_classes())
        .map(|k| ds.labels().iter().map(|&y| if y <= k { -1.0 } else { 1.0 }).collect())
        .collect()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigs(a: &Mat) -> Vec<f64> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        let scale: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-26 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Projection onto `{lo ≤ θ ≤ hi, aᵀθ = b}` by bisection on the multiplier.
fn project(v: &[f64], a: &[f64], b: f64, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let at = |tau: f64| -> (Vec<f64>, f64) {
        let x: Vec<f64> = (0..v.len()).map(|i| (v[i] - tau * a[i]).clamp(lo[i], hi[i])).collect();
        let s = x.iter().zip(a).map(|(x, a)| x * a).sum::<f64>();
        (x, s)
    };
    // aᵀθ(τ) is nonincreasing in τ
    let (mut l, mut h) = (-1.0, 1.0);
    while at(l).1 < b {
        l *= 2.0;
        if l < -1e12 {
            break;
        }
    }
    while at(h).1 > b {
        h *= 2.0;
        if h > 1e12 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (l + h);
        if at(mid).1 > b {
            l = mid;
        } else {
            h = mid;
        }
        if h - l <= 1e-15 * (1.0 + l.abs()) {
            break;
        }
    }
    at(0.5 * (l + h)).0
}

/// Projected gradient for `min ½θᵀQθ + cᵀθ` over a box and one equality row
/// with step `1/L`, `L` the largest eigenvalue of `Q`.
pub fn pg_oracle(q: &Mat, c: &[f64], a: &[f64], b: f64, lo: &[f64], hi: &[f64], iters: usize) -> Vec<f64> {
    let p = c.len();
    let l = sym_eigs(q).last().copied().unwrap().max(1e-12);
    let mut x = project(&vec![0.0; p], a, b, lo, hi);
    for _ in 0..iters {
        let g: Vec<f64> = (0..p).map(|i| (0..p).map(|j| q[(i, j)] * x[j]).sum::<f64>() + c[i]).collect();
        let v: Vec<f64> = (0..p).map(|i| x[i] - g[i] / l).collect();
        x = project(&v, a, b, lo, hi);
    }
    x
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..n {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum of `cᵀx` over `{A x ≤ b, lo ≤ x ≤ hi}` (finite bounds) by
/// enumerating every vertex.
pub fn lp_vertex_enum(c: &[f64], a: &[Vec<f64>], b: &[f64], lo: &[f64], hi: &[f64]) -> Option<f64> {
    let p = c.len();
    let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..p {
        let mut e = vec![0.0; p];
        e[j] = 1.0;
        rows.push((e.clone(), hi[j]));
        e[j] = -1.0;
        rows.push((e, -lo[j]));
    }
    let m = rows.len();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..p).collect();
    loop {
        let sys: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].0.clone()).collect();
        let rhs: Vec<f64> = idx.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = solve_square(sys, rhs) {
            let feasible = rows.iter().all(|(g, h)| g.iter().zip(&x).map(|(g, x)| g * x).sum::<f64>() <= h + 1e-9);
            if feasible {
                let v: f64 = c.iter().zip(&x).map(|(c, x)| c * x).sum();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        // next combination
        let mut i = p;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - p + i {
                idx[i] += 1;
                for j in i + 1..p {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// `C Σ (1 − y (F + b))₊`.
pub fn bias_objective(y: &[Vec<f64>], scores: &Mat, b: &[f64], c: f64) -> f64 {
    let mut s = 0.0;
    for k in 0..y.len() {
        for i in 0..y[k].len() {
            s += c * (1.0 - y[k][i] * (scores[(k, i)] + b[k])).max(0.0);
        }
    }
    s
}

/// Bias LP in its primal form: variables `(b, ξ)`, minimize `C Σ ξ` subject
/// to `y (F + b) ≥ 1 − ξ`, `ξ ≥ 0` and, when `ordered`, `b_k ≥ b_{k+1}`.
pub fn primal_bias_oracle(y: &[Vec<f64>], scores: &Mat, c: f64, ordered: bool) -> (Vec<f64>, f64) {
    let m = y.len();
    let n = y[0].len();
    let nv = m + m * n;
    let mut lp = LpProblem::new((0..nv).map(|j| if j < m { 0.0 } else { c }).collect());
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for k in 0..m {
        for i in 0..n {
            let mut r = vec![0.0; nv];
            r[k] = -y[k][i];
            r[m + k * n + i] = -1.0;
            rows.push(r);
            rhs.push(-1.0 + y[k][i] * scores[(k, i)]);
        }
    }
    if ordered {
        for k in 0..m.saturating_sub(1) {
            let mut r = vec![0.0; nv];
            r[k + 1] = 1.0;
            r[k] = -1.0;
            rows.push(r);
            rhs.push(0.0);
        }
    }
    lp.a_ub = Mat::from_rows(&rows).unwrap();
    lp.b_ub = rhs;
    lp.lower = (0..nv).map(|j| if j < m { f64::NEG_INFINITY } else { 0.0 }).collect();
    lp.upper = vec![f64::INFINITY; nv];
    let res = solve_lp(&lp);
    assert_eq!(res.status, LpStatus::Optimal);
    (res.x[..m].to_vec(), res.objective)
}

/// Exhaustive search over the binary variables of a MILP; each assignment
/// is one LP. Returns the best objective (None if every LP is infeasible).
pub fn brute_force_milp(problem: &MilpProblem<f64>) -> Option<f64> {
    let bins: Vec<usize> = (0..problem.num_vars()).filter(|&j| problem.binary[j]).collect();
    assert!(bins.len() <= 16, "too many binaries to enumerate");
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << bins.len()) {
        let mut lp = problem.relaxation();
        for (t, &j) in bins.iter().enumerate() {
            let v = f64::from((mask >> t) & 1);
            lp.lower[j] = v;
            lp.upper[j] = v;
        }
        let res = solve_lp(&lp);
        if res.status == LpStatus::Optimal {
            best = Some(best.map_or(res.objective, |b: f64| b.min(res.objective)));
        }
    }
    best
}

/// Random dataset with Gaussian features and labels from a noisy ordered
/// score, every class present.
pub fn random_ordinal(n: usize, d: usize, k: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    loop {
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let labels: Vec<usize> = rows
            .iter()
            .map(|x| {
                let s: f64 = x.iter().sum::<f64>() + r.random_range(-1.0..1.0);
                let t = ((s + 2.0) / 4.0 * k as f64).floor() as i64;
                (t.clamp(0, k as i64 - 1) + 1) as usize
            })
            .collect();
        let mut seen = vec![false; k];
        for &l in &labels {
            seen[l - 1] = true;
        }
        if seen.iter().all(|&s| s) {
            return dataset(&rows, &labels, k);
        }
    }
}

/// Strictly convex QP with `2 ≤ p ≤ 8`, a box `[0, u]` and one feasible
/// `±1` equality row.
pub fn random_box_eq_qp(seed: u64) -> QpProblem<f64> {
    let mut r = rng(seed);
    let p = r.random_range(2..=8);
    let a = Mat::from_fn(p, p, |_, _| r.random_range(-1.0..1.0));
    let mut q = a.transpose().matmul(&a).unwrap();
    for i in 0..p {
        q[(i, i)] += 0.1;
    }
    let c: Vec<f64> = (0..p).map(|_| r.random_range(-2.0..2.0)).collect();
    let upper: Vec<f64> = (0..p).map(|_| r.random_range(0.5..2.0)).collect();
    let row: Vec<f64> = (0..p).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let inside: Vec<f64> = upper.iter().map(|u| u * r.random_range(0.1..0.9)).collect();
    let b: f64 = row.iter().zip(&inside).map(|(a, x)| a * x).sum();
    let mut qp = QpProblem::new(Hessian::Dense(q), c);
    qp.a_eq = Mat::from_rows(&[row]).unwrap();
    qp.b_eq = vec![b];
    qp.lower = vec![0.0; p];
    qp.upper = upper;
    qp
}
