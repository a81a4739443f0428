use serde::{Deserialize, Serialize};

use crate::evalstats::regression::{cross_fitted_predictions, fold_of};
use crate::linalg::least_squares;
use crate::nncore::Mode;
use crate::{Dataset, Error, Network, Result};

/// Which activations the margins are measured at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeLayers {
    /// The network input and the input of the final parameterized layer.
    #[default]
    InputAndLastHidden,
    /// The input of every parameterized layer.
    AllParameterized,
    /// The logits themselves.
    Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarginConfig {
    pub probes: ProbeLayers,
    /// Floor added to the gradient norm in the denominator.
    pub eps_den: f64,
}

impl Default for MarginConfig {
    fn default() -> Self {
        Self { probes: ProbeLayers::InputAndLastHidden, eps_den: 1e-9 }
    }
}

/// Five order statistics of the normalized margins at each probed layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginFeatures {
    /// Probed activation index (`i` = input of layer `i`; `layers.len()` = logits).
    pub layers: Vec<usize>,
    /// `(min, Q1, median, Q3, max)` per probed layer.
    pub stats: Vec<[f64; 5]>,
}

impl MarginFeatures {
    /// Concatenated feature vector `φ`, length `5 × layers`.
    pub fn vector(&self) -> Vec<f64> {
        self.stats.iter().flatten().copied().collect()
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `(min, Q1, median, Q3, max)`.
pub fn five_statistics(values: &[f64]) -> Result<[f64; 5]> {
    if values.is_empty() {
        return Err(Error::Config("no margins to summarize".into()));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok([s[0], quantile(&s, 0.25), quantile(&s, 0.5), quantile(&s, 0.75), s[s.len() - 1]])
}

/// Logit gap `z_y − max_{j≠y} z_j` and the competing class.
pub fn output_margin(logits: &[f64], label: usize) -> (f64, usize) {
    let mut runner = usize::MAX;
    for (j, &z) in logits.iter().enumerate() {
        if j != label && (runner == usize::MAX || z > logits[runner]) {
            runner = j;
        }
    }
    (logits[label] - logits[runner], runner)
}

pub fn probe_indices(network: &Network, probes: ProbeLayers) -> Vec<usize> {
    let last = network.parameterized_layers().last().unwrap_or(0);
    match probes {
        ProbeLayers::InputAndLastHidden => vec![0, last],
        ProbeLayers::AllParameterized => network.parameterized_layers().collect(),
        ProbeLayers::Output => vec![network.layers().len()],
    }
}

/// Normalized margins at activation `probe` for every sample:
/// `(z_y − z_j) / (‖∇_h (z_y − z_j)‖₂ + ε)` with `j` the strongest competing class.
pub fn sample_margins(network: &Network, data: &Dataset, probes: &[usize], eps_den: f64) -> Result<Vec<Vec<f64>>> {
    let n_layers = network.layers().len();
    if probes.iter().any(|&p| p > n_layers) {
        return Err(Error::Config("probe index beyond the output".into()));
    }
    let k = network.classes();
    let mut out = vec![Vec::with_capacity(data.len()); probes.len()];
    let want_input = probes.contains(&0);
    for (batch, labels) in data.chunks(256) {
        let cache = network.forward_cached(&batch, Mode::Eval)?;
        let logits = cache.logits();
        let n = labels.len();
        let mut upstream = vec![0.0; n * k];
        let mut gaps = Vec::with_capacity(n);
        for (s, &y) in labels.iter().enumerate() {
            let (gap, j) = output_margin(&logits[s * k..(s + 1) * k], y);
            upstream[s * k + y] = 1.0;
            upstream[s * k + j] = -1.0;
            gaps.push(gap);
        }
        let back = network.backward(&cache, &upstream, want_input);
        for (slot, &p) in probes.iter().enumerate() {
            let grads: &[f64] = if p == n_layers { &upstream } else { back.inputs[p].as_deref().expect("requested gradient") };
            let width = grads.len() / n;
            for s in 0..n {
                let g = &grads[s * width..(s + 1) * width];
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                out[slot].push(gaps[s] / (norm + eps_den));
            }
        }
    }
    Ok(out)
}

pub fn margin_features(network: &Network, data: &Dataset, config: &MarginConfig) -> Result<MarginFeatures> {
    let layers = probe_indices(network, config.probes);
    let margins = sample_margins(network, data, &layers, config.eps_den)?;
    let stats = margins.iter().map(|m| five_statistics(m)).collect::<Result<_>>()?;
    Ok(MarginFeatures { layers, stats })
}

/// Sweep-level normalized-margins regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginsRegression {
    /// Held-out prediction of each model's target.
    pub predictions: Vec<f64>,
    /// Feature with the largest absolute standardized coefficient.
    pub best_variable: usize,
    pub best_values: Vec<f64>,
    pub folds: usize,
    /// Fold index of every model.
    pub fold_of: Vec<usize>,
    pub degenerate: bool,
}

pub const MIN_REGRESSION_MODELS: usize = 10;

/// Cross-fitted linear regression from margin features to `targets`.
pub fn normalized_margins(features: &[Vec<f64>], targets: &[f64], folds: usize) -> Result<MarginsRegression> {
    let n = targets.len();
    if n < MIN_REGRESSION_MODELS || features.len() != n {
        return Err(Error::Undefined(format!(
            "margins regression needs at least {MIN_REGRESSION_MODELS} models with features, got {n}"
        )));
    }
    let p = features[0].len();
    let folds = folds.min(n);
    let (predictions, ridge) = cross_fitted_predictions(features, targets, folds)?;

    // Standardized full fit for the best single variable.
    let mean: Vec<f64> = (0..p).map(|j| features.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let sd: Vec<f64> = (0..p)
        .map(|j| (features.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n as f64).sqrt())
        .collect();
    let standardized: Vec<Vec<f64>> = features
        .iter()
        .map(|r| (0..p).map(|j| if sd[j] > 0.0 { (r[j] - mean[j]) / sd[j] } else { 0.0 }).collect())
        .collect();
    let fit = least_squares(&standardized, targets)?;
    let best_variable = (0..p)
        .max_by(|&a, &b| fit.coefs[a].abs().total_cmp(&fit.coefs[b].abs()).then(b.cmp(&a)))
        .unwrap_or(0);
    let degenerate = sd.iter().all(|&s| s == 0.0);
    Ok(MarginsRegression {
        predictions,
        best_variable,
        best_values: features.iter().map(|r| r[best_variable]).collect(),
        folds,
        fold_of: (0..n).map(|i| fold_of(i, folds)).collect(),
        degenerate: degenerate || ridge || fit.ridge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::{LayerSpec, Tensor};

    #[test]
    fn output_margin_of_correct_sample() {
        assert_eq!(output_margin(&[3.0, 1.0, 0.0], 0), (2.0, 1));
        let (m, j) = output_margin(&[3.0, 1.0, 0.0], 2);
        assert_eq!((m, j), (-3.0, 0));
    }

    #[test]
    fn five_stats_of_one_to_five() {
        assert_eq!(five_statistics(&[5.0, 3.0, 1.0, 4.0, 2.0]).unwrap(), [1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn input_margin_of_linear_model_is_hyperplane_distance() {
        // f(x) = W x, two classes.
        let w = vec![1.0, 2.0, -1.0, 0.5];
        let net = Network::from_params(vec![2], vec![LayerSpec::Dense { inputs: 2, outputs: 2, bias: false }], w.clone()).unwrap();
        let x = Tensor::from_rows(&[vec![0.3, -0.4], vec![1.0, 1.0]]).unwrap();
        let data = Dataset::new(x.clone(), vec![0, 1], 2).unwrap();
        let m = sample_margins(&net, &data, &[0], 0.0).unwrap();
        let diff = [w[0] - w[2], w[1] - w[3]];
        let dn = (diff[0] * diff[0] + diff[1] * diff[1]).sqrt();
        for (s, &y) in [0usize, 1].iter().enumerate() {
            let sgn = if y == 0 { 1.0 } else { -1.0 };
            let xs = x.row(s);
            let expected = sgn * (diff[0] * xs[0] + diff[1] * xs[1]) / dn;
            assert!((m[0][s] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_single_feature_fit() {
        let feats: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let g: Vec<f64> = feats.iter().map(|r| r[0]).collect();
        let r = normalized_margins(&feats, &g, 10).unwrap();
        for (p, t) in r.predictions.iter().zip(&g) {
            assert!((p - t).abs() < 1e-8);
        }
        assert_eq!(r.best_variable, 0);
    }

    #[test]
    fn constant_features_predict_mean() {
        let feats = vec![vec![1.0, 2.0]; 10];
        let g: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let r = normalized_margins(&feats, &g, 10).unwrap();
        assert!(r.degenerate);
        for (i, p) in r.predictions.iter().enumerate() {
            let others: f64 = (0..10).filter(|&j| j != i).map(|j| g[j]).sum::<f64>() / 9.0;
            assert!((p - others).abs() < 1e-9);
        }
    }
}
