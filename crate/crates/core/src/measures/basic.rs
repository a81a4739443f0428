//! Norm, count and loss-trace measures.

use crate::pruning::PruneMask;
use crate::{ModelRecord, Network, Result};

/// Squared Frobenius norm of every parameterized layer (weights and bias).
pub fn layer_squared_norms(network: &Network) -> Vec<f64> {
    network
        .parameterized_layers()
        .map(|i| network.params()[network.layer_range(i)].iter().map(|v| v * v).sum())
        .collect()
}

/// `d · (∏ᵢ ‖Wᵢ‖_F²)^{1/d}`, evaluated in log space. `None` flags a zero-norm layer.
pub fn frobenius_measure(network: &Network) -> Option<f64> {
    let norms = layer_squared_norms(network);
    if norms.contains(&0.0) {
        return None;
    }
    let d = norms.len() as f64;
    let mean_log = norms.iter().map(|n| n.ln()).sum::<f64>() / d;
    Some(d * mean_log.exp())
}

/// Negative sum of the per-epoch train losses.
pub fn sotl(record: &ModelRecord) -> f64 {
    -record.epoch_losses.iter().sum::<f64>()
}

/// `Σᵢ ‖Wᵢ‖²` over all parameterized layers.
pub fn sum_two_norms(params: &[f64]) -> f64 {
    params.iter().map(|v| v * v).sum()
}

/// Kept parameters that are also nonzero.
pub fn pruned_parameter_count(params: &[f64], mask: &PruneMask) -> Result<usize> {
    let pruned = mask.apply(params)?;
    Ok(pruned.iter().filter(|&&v| v != 0.0).count())
}

pub fn sum_two_norms_pruned(params: &[f64], mask: &PruneMask) -> Result<f64> {
    Ok(sum_two_norms(&mask.apply(params)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::LayerSpec;
    use crate::pruning::magnitude_prune;

    fn scalar_chain(a: f64, b: f64) -> Network {
        let layers = vec![
            LayerSpec::Dense { inputs: 1, outputs: 1, bias: false },
            LayerSpec::Dense { inputs: 1, outputs: 1, bias: false },
        ];
        Network::from_params(vec![1], layers, vec![a, b]).unwrap()
    }

    #[test]
    fn frobenius_of_unit_layers() {
        assert!((frobenius_measure(&scalar_chain(1.0, 1.0)).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(frobenius_measure(&scalar_chain(0.0, 1.0)), None);
    }

    #[test]
    fn two_norm_sum() {
        assert_eq!(sum_two_norms(scalar_chain(1.0, 2.0).params()), 5.0);
    }

    #[test]
    fn pruned_variants_with_identity_mask() {
        let w = [0.0, 1.0, -2.0, 3.0];
        let id = PruneMask::identity(4);
        assert_eq!(pruned_parameter_count(&w, &id).unwrap(), 3);
        assert_eq!(sum_two_norms_pruned(&w, &id).unwrap(), sum_two_norms(&w));
        let half = magnitude_prune(&w, 0.5).unwrap();
        assert_eq!(pruned_parameter_count(&w, &half).unwrap(), 2);
        assert!(sum_two_norms_pruned(&w, &half).unwrap() <= sum_two_norms(&w));
    }
}
