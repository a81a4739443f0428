//! Small dense linear-algebra helpers backed by `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Ordinary least squares fit `y ≈ intercept + coefs · x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub coefs: Vec<f64>,
    /// Set when the centered Gram matrix was rank-deficient and a ridge term was added.
    pub ridge: bool,
}

impl LinearFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Relative eigenvalue threshold below which the Gram matrix counts as singular.
const RANK_TOL: f64 = 1e-10;

/// Least squares with intercept on centered normal equations.
///
/// A rank-deficient design gets a ridge of `1e-6 · trace(XᵀX) / p`; an all-constant
/// design yields zero slopes and the mean as intercept.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LinearFit> {
    let n = rows.len();
    if n == 0 || n != y.len() {
        return Err(Error::Shape(format!("{n} design rows but {} targets", y.len())));
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::Shape("ragged design matrix".into()));
    }
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let x_mean: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    if p == 0 {
        return Ok(LinearFit { intercept: y_mean, coefs: vec![], ridge: false });
    }
    let xc = DMatrix::from_fn(n, p, |i, j| rows[i][j] - x_mean[j]);
    let yc = DVector::from_fn(n, |i, _| y[i] - y_mean);
    let mut gram = xc.transpose() * &xc;
    let rhs = xc.transpose() * yc;
    let trace = gram.trace();
    let mut ridge = false;
    if trace <= 0.0 {
        return Ok(LinearFit { intercept: y_mean, coefs: vec![0.0; p], ridge: true });
    }
    let eig = SymmetricEigen::new(gram.clone());
    let max = eig.eigenvalues.iter().copied().fold(f64::MIN, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::MAX, f64::min);
    if min <= RANK_TOL * max {
        ridge = true;
        let lambda = 1e-6 * trace / p as f64;
        for j in 0..p {
            gram[(j, j)] += lambda;
        }
    }
    let coefs = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Undefined("singular normal equations".into()))?,
    };
    let coefs: Vec<f64> = coefs.iter().copied().collect();
    let intercept = y_mean - coefs.iter().zip(&x_mean).map(|(a, m)| a * m).sum::<f64>();
    Ok(LinearFit { intercept, coefs, ridge })
}

/// Eigenvalues of a symmetric matrix given row-major, ascending.
pub fn symmetric_eigenvalues(k: usize, data: &[f64]) -> Result<Vec<f64>> {
    if data.len() != k * k {
        return Err(Error::Shape(format!("expected {k}x{k} matrix")));
    }
    let m = DMatrix::from_row_slice(k, k, data);
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}
