use serde::{Deserialize, Serialize};

use crate::linalg::symmetric_eigenvalues;
use crate::{Dataset, Error, Network, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EffDimConfig {
    /// Regularizer `z > 0`.
    pub z: f64,
    /// Largest parameter count for which the dense Hessian is formed.
    pub hessian_limit: usize,
    /// Central-difference step on the gradient.
    pub step: f64,
}

impl Default for EffDimConfig {
    fn default() -> Self {
        Self { z: 1.0, hessian_limit: 5000, step: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveDimensionality {
    /// `(1/k) Σᵢ λᵢ / (λᵢ + z)`.
    pub value: f64,
    pub eigenvalues: Vec<f64>,
}

/// `(1/k) Σᵢ λᵢ / (λᵢ + z)`; negative eigenvalues are included as they are.
pub fn normalized_effective_dim(eigenvalues: &[f64], z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Config("z must be positive".into()));
    }
    if eigenvalues.is_empty() {
        return Err(Error::Config("no eigenvalues".into()));
    }
    let sum: f64 = eigenvalues.iter().map(|&l| l / (l + z)).sum();
    Ok(sum / eigenvalues.len() as f64)
}

/// Symmetrized Hessian (row-major `k×k`) by central differences of a gradient.
pub fn hessian_fd(w: &[f64], step: f64, mut grad: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let k = w.len();
    let mut h = vec![0.0; k * k];
    let mut probe = w.to_vec();
    for j in 0..k {
        probe[j] = w[j] + step;
        let plus = grad(&probe)?;
        probe[j] = w[j] - step;
        let minus = grad(&probe)?;
        probe[j] = w[j];
        for i in 0..k {
            h[i * k + j] = (plus[i] - minus[i]) / (2.0 * step);
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            let s = 0.5 * (h[i * k + j] + h[j * k + i]);
            h[i * k + j] = s;
            h[j * k + i] = s;
        }
    }
    Ok(h)
}

/// Effective dimensionality from the eigen-spectrum of a gradient's finite-difference Hessian.
pub fn effective_dim_of(w: &[f64], config: &EffDimConfig, grad: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<EffectiveDimensionality> {
    let h = hessian_fd(w, config.step, grad)?;
    let eigenvalues = symmetric_eigenvalues(w.len(), &h)?;
    let value = normalized_effective_dim(&eigenvalues, config.z)?;
    Ok(EffectiveDimensionality { value, eigenvalues })
}

/// Effective dimensionality of the mean train cross-entropy Hessian.
pub fn effective_dimensionality(network: &Network, train: &Dataset, config: &EffDimConfig) -> Result<EffectiveDimensionality> {
    let k = network.param_count();
    if k > config.hessian_limit {
        return Err(Error::Unsupported(format!(
            "effective dimensionality needs a dense {k}x{k} Hessian; limit is {}",
            config.hessian_limit
        )));
    }
    let mut scratch = network.clone();
    effective_dim_of(network.params(), config, |p| {
        scratch.params_mut().copy_from_slice(p);
        scratch.dataset_gradient(train)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_spectra() {
        assert_eq!(normalized_effective_dim(&[0.0; 4], 1.0).unwrap(), 0.0);
        assert_eq!(normalized_effective_dim(&[2.0; 3], 2.0).unwrap(), 0.5);
        assert!(normalized_effective_dim(&[1.0], 0.0).is_err());
    }

    #[test]
    fn nonincreasing_in_z() {
        let eig = [0.1, 1.0, 5.0, 20.0];
        let mut prev = f64::INFINITY;
        for z in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let v = normalized_effective_dim(&eig, z).unwrap();
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn oversized_network_is_unsupported() {
        use crate::nncore::LayerSpec;
        let net = Network::new(vec![4], vec![LayerSpec::dense(4, 3)], &mut crate::seeded_rng(0)).unwrap();
        let data = Dataset::new(crate::Tensor::zeros(vec![2, 4]), vec![0, 1], 3).unwrap();
        let cfg = EffDimConfig { hessian_limit: 10, ..Default::default() };
        assert!(matches!(effective_dimensionality(&net, &data, &cfg), Err(Error::Unsupported(_))));
    }
}
