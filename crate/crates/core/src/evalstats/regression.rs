use serde::{Deserialize, Serialize};

use crate::linalg::{least_squares, LinearFit};
use crate::{Error, Result};

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Result {
    /// R² of the pooled held-out predictions.
    pub cv_r2: f64,
    /// `1 − (1 − R²)(n − 1)/(n − p − 1)` from the full-data fit.
    pub adjusted_r2: f64,
    pub full_r2: f64,
    pub folds: usize,
    pub ridge: bool,
}

/// `1 − SS_res / SS_tot`.
pub fn r_squared(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let ss_tot: f64 = targets.iter().map(|g| (g - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Undefined("targets have zero variance".into()));
    }
    let ss_res: f64 = predictions.iter().zip(targets).map(|(p, g)| (p - g).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Fold of sample `i` under interleaved assignment.
pub fn fold_of(i: usize, folds: usize) -> usize {
    i % folds
}

/// Held-out predictions: each sample is predicted by a fit that excluded its fold.
///
/// Returns the predictions and whether any fold needed the ridge fallback.
pub fn cross_fitted_predictions(features: &[Vec<f64>], targets: &[f64], folds: usize) -> Result<(Vec<f64>, bool)> {
    let n = targets.len();
    if features.len() != n {
        return Err(Error::Shape(format!("{} feature rows but {n} targets", features.len())));
    }
    let folds = folds.min(n);
    if folds < 2 {
        return Err(Error::Undefined(format!("cross-validation needs at least 2 samples, got {n}")));
    }
    let mut predictions = vec![0.0; n];
    let mut ridge = false;
    for f in 0..folds {
        let (train_x, train_y): (Vec<Vec<f64>>, Vec<f64>) = (0..n)
            .filter(|&i| fold_of(i, folds) != f)
            .map(|i| (features[i].clone(), targets[i]))
            .unzip();
        let fit = least_squares(&train_x, &train_y)?;
        ridge |= fit.ridge;
        for i in (0..n).filter(|&i| fold_of(i, folds) == f) {
            predictions[i] = fit.predict(&features[i]);
        }
    }
    Ok((predictions, ridge))
}

/// Full-data fit plus its in-sample R².
pub fn full_fit(features: &[Vec<f64>], targets: &[f64]) -> Result<(LinearFit, f64)> {
    let fit = least_squares(features, targets)?;
    let preds: Vec<f64> = features.iter().map(|x| fit.predict(x)).collect();
    let r2 = r_squared(&preds, targets)?;
    Ok((fit, r2))
}

/// Cross-validated and adjusted R² of a linear regression from measures to gaps.
pub fn regression_r2(features: &[Vec<f64>], gaps: &[f64], folds: usize) -> Result<R2Result> {
    let n = gaps.len();
    let dim = features.first().map_or(0, Vec::len);
    if n <= dim + 1 {
        return Err(Error::Undefined(format!("need more than {} models for {dim} features, got {n}", dim + 1)));
    }
    let (preds, ridge_cv) = cross_fitted_predictions(features, gaps, folds)?;
    let cv_r2 = r_squared(&preds, gaps)?;
    let (fit, full_r2) = full_fit(features, gaps)?;
    let adjusted_r2 = 1.0 - (1.0 - full_r2) * (n - 1) as f64 / (n - dim - 1) as f64;
    Ok(R2Result { cv_r2, adjusted_r2, full_r2, folds: folds.min(n), ridge: ridge_cv || fit.ridge })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_affine_relation() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64 * 0.7).sin()]).collect();
        let g: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let r = regression_r2(&x, &g, 10).unwrap();
        assert!((r.cv_r2 - 1.0).abs() < 1e-10);
        assert!((r.adjusted_r2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_regressor_predicts_fold_mean() {
        let x = vec![vec![3.0]; 12];
        let g: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let (preds, ridge) = cross_fitted_predictions(&x, &g, 4).unwrap();
        assert!(ridge);
        for f in 0..4 {
            let rest: Vec<f64> = (0..12).filter(|&i| i % 4 != f).map(|i| g[i]).collect();
            let mean = rest.iter().sum::<f64>() / rest.len() as f64;
            for i in (0..12).filter(|&i| i % 4 == f) {
                assert!((preds[i] - mean).abs() < 1e-12);
            }
        }
        assert!(regression_r2(&x, &g, 4).unwrap().cv_r2 <= 0.0);
    }

    #[test]
    fn constant_gaps_undefined() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        assert!(matches!(regression_r2(&x, &[1.0; 5], 5), Err(Error::Undefined(_))));
    }
}
