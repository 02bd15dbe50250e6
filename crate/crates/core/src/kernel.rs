//! Kernels, Gram matrices and distance-quantile bandwidth candidates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec<T> {
    /// `exp(−‖x − x′‖² / (2 width²))`.
    Rbf { width: T },
    Linear,
}

impl<T: Real> KernelSpec<T> {
    pub fn rbf(width: T) -> Result<Self> {
        if !(width > T::zero()) || !width.is_finite() {
            return Err(Error::arg("RBF width must be positive and finite"));
        }
        Ok(KernelSpec::Rbf { width })
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, KernelSpec::Linear)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { width } => Self::rbf(width).map(|_| ()),
            KernelSpec::Linear => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, a: &[T], b: &[T]) -> T {
        match *self {
            KernelSpec::Rbf { width } => {
                let d2: T = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
                (-d2 / (T::lit(2.0) * width * width)).exp()
            }
            KernelSpec::Linear => dot(a, b),
        }
    }
}

/// Gram matrix `K[i][j] = k(x_i, x′_j)` between the rows of `x` and `x2`.
pub fn gram<T: Real>(x: &Matrix<T>, x2: &Matrix<T>, spec: &KernelSpec<T>) -> Result<Matrix<T>> {
    if x.cols() != x2.cols() {
        return Err(Error::arg(format!(
            "feature widths differ ({} vs {})",
            x.cols(),
            x2.cols()
        )));
    }
    spec.validate()?;
    let (n, m) = (x.rows(), x2.rows());
    let mut out = Matrix::zeros(n, m);
    if m == 0 {
        return Ok(out);
    }
    let fill = |(i, row): (usize, &mut [T])| {
        let xi = x.row(i);
        for (j, v) in row.iter_mut().enumerate() {
            *v = spec.eval(xi, x2.row(j));
        }
    };
    if n * m >= 1 << 16 {
        out.as_mut_slice().par_chunks_mut(m).enumerate().for_each(fill);
    } else {
        out.as_mut_slice().chunks_mut(m).enumerate().for_each(fill);
    }
    Ok(out)
}

/// Symmetric Gram matrix of `x` with itself.
pub fn gram_sym<T: Real>(x: &Matrix<T>, spec: &KernelSpec<T>) -> Result<Matrix<T>> {
    gram(x, x, spec)
}

/// Empirical quantile with linear interpolation between order statistics
/// (`h = (N − 1) q`). `sorted` must be ascending and nonempty.
pub fn quantile_sorted<T: Real>(sorted: &[T], q: f64) -> T {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = T::lit(h - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// The 10%, 50% and 90% quantiles of all pairwise Euclidean distances.
pub fn bandwidth_candidates<T: Real>(x: &Matrix<T>) -> Result<[T; 3]> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::arg("bandwidth candidates need at least two points"));
    }
    let mut dist = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d2: T = x.row(i).iter().zip(x.row(j)).map(|(&a, &b)| (a - b) * (a - b)).sum();
            dist.push(d2.sqrt());
        }
    }
    dist.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let out = [
        quantile_sorted(&dist, 0.1),
        quantile_sorted(&dist, 0.5),
        quantile_sorted(&dist, 0.9),
    ];
    if !(out[0] > T::zero()) {
        return Err(Error::arg("10% distance quantile is zero; widths would be degenerate"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn rbf_and_linear_values() {
        let spec = KernelSpec::rbf(1.0).unwrap();
        let a = m(&[vec![0.0, 0.0]]);
        let b = m(&[vec![1.0, 1.0]]);
        assert_eq!(gram(&a, &a, &spec).unwrap()[(0, 0)], 1.0);
        assert!((gram(&a, &b, &spec).unwrap()[(0, 0)] - (-1f64).exp()).abs() < 1e-15);
        let l = gram(&m(&[vec![1.0, 2.0]]), &m(&[vec![3.0, -1.0]]), &KernelSpec::Linear).unwrap();
        assert_eq!(l[(0, 0)], 1.0);
        assert!(gram(&a, &m(&[vec![1.0]]), &spec).is_err());
        assert!(KernelSpec::rbf(0.0).is_err());
    }

    #[test]
    fn bandwidth_examples() {
        let x = m(&[vec![0.0], vec![1.0], vec![2.0]]);
        assert_eq!(bandwidth_candidates(&x).unwrap()[1], 1.0);
        let y = m(&[vec![0.0, 0.0], vec![3.0, 4.0]]);
        assert_eq!(bandwidth_candidates(&y).unwrap(), [5.0, 5.0, 5.0]);
        assert!(bandwidth_candidates(&m(&[vec![1.0], vec![1.0]])).is_err());
        assert!(bandwidth_candidates(&m(&[vec![1.0]])).is_err());
        // one duplicate among four distinct points: 1 zero distance of 10
        let z = m(&[vec![0.0], vec![0.0], vec![1.0], vec![3.0], vec![7.0]]);
        assert!(bandwidth_candidates(&z).unwrap()[0] > 0.0);
    }
}
