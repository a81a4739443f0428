use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Network, Result};

/// Which weights survive pruning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneMask {
    kept: Vec<bool>,
    kept_fraction: f64,
}

/// `round(fraction · n)` clamped to `[0, n]`.
pub fn kept_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round().max(0.0) as usize).min(n)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!("keep fraction {fraction} outside [0,1]")));
    }
    Ok(())
}

impl PruneMask {
    pub fn identity(n: usize) -> Self {
        Self { kept: vec![true; n], kept_fraction: 1.0 }
    }

    pub fn from_kept(kept: Vec<bool>) -> Self {
        let n = kept.len();
        let count = kept.iter().filter(|&&k| k).count();
        let kept_fraction = if n == 0 { 1.0 } else { count as f64 / n as f64 };
        Self { kept, kept_fraction }
    }

    pub fn kept(&self) -> &[bool] {
        &self.kept
    }

    pub fn kept_fraction(&self) -> f64 {
        self.kept_fraction
    }

    pub fn kept_count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    /// Flat indices that are zeroed.
    pub fn removed_indices(&self) -> Vec<usize> {
        self.kept.iter().enumerate().filter(|(_, &k)| !k).map(|(i, _)| i).collect()
    }

    /// Copy of `w` with removed positions set to exactly zero.
    pub fn apply(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.kept.len() {
            return Err(Error::MaskLength { expected: w.len(), got: self.kept.len() });
        }
        Ok(w.iter().zip(&self.kept).map(|(&v, &k)| if k { v } else { 0.0 }).collect())
    }
}

/// Keeps the `round(α·ω)` largest-magnitude entries. Equal magnitudes keep the lower flat index.
pub fn magnitude_prune(w: &[f64], keep_fraction: f64) -> Result<PruneMask> {
    check_fraction(keep_fraction)?;
    let k = kept_count(w.len(), keep_fraction);
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
    let mut kept = vec![false; w.len()];
    for &i in &order[..k] {
        kept[i] = true;
    }
    Ok(PruneMask { kept, kept_fraction: keep_fraction })
}

/// Keeps a uniformly random subset of `round(α·ω)` entries.
pub fn random_prune(w: &[f64], keep_fraction: f64, rng: &mut impl Rng) -> Result<PruneMask> {
    check_fraction(keep_fraction)?;
    let n = w.len();
    let k = kept_count(n, keep_fraction);
    let mut kept = vec![false; n];
    for i in rand::seq::index::sample(rng, n, k) {
        kept[i] = true;
    }
    Ok(PruneMask { kept, kept_fraction: keep_fraction })
}

/// Fresh network with the masked parameters zeroed; `network` is not touched.
pub fn apply_mask(network: &Network, mask: &PruneMask) -> Result<Network> {
    network.with_params(mask.apply(network.params())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::LayerSpec;
    use crate::seeded_rng;

    #[test]
    fn keeps_largest_magnitudes() {
        let m = magnitude_prune(&[1.0, -2.0, 3.0, -4.0], 0.5).unwrap();
        assert_eq!(m.kept(), &[false, false, true, true]);
        assert_eq!(m.kept_count(), 2);
    }

    #[test]
    fn keep_all_is_identity() {
        let w = [0.0, 1.0, -1.0];
        assert_eq!(magnitude_prune(&w, 1.0).unwrap().kept(), PruneMask::identity(3).kept());
        assert_eq!(random_prune(&w, 1.0, &mut seeded_rng(0)).unwrap().kept(), PruneMask::identity(3).kept());
    }

    #[test]
    fn ties_keep_lower_index() {
        let m = magnitude_prune(&[1.0, -1.0, 1.0, 0.5], 0.5).unwrap();
        assert_eq!(m.kept(), &[true, true, false, false]);
    }

    #[test]
    fn random_keep_zero_removes_everything() {
        let m = random_prune(&[1.0; 10], 0.0, &mut seeded_rng(1)).unwrap();
        assert_eq!(m.kept_count(), 0);
        let a = random_prune(&[1.0; 50], 0.3, &mut seeded_rng(7)).unwrap();
        let b = random_prune(&[1.0; 50], 0.3, &mut seeded_rng(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.kept_count(), 15);
    }

    #[test]
    fn apply_validates_length_and_is_idempotent() {
        let m = magnitude_prune(&[1.0, 2.0, 3.0], 0.34).unwrap();
        assert!(matches!(m.apply(&[1.0, 2.0]), Err(Error::MaskLength { .. })));
        let once = m.apply(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.apply(&once).unwrap(), once);
    }

    #[test]
    fn all_zero_mask_gives_constant_logits() {
        let net = Network::new(vec![2], vec![LayerSpec::dense(2, 4), LayerSpec::Relu, LayerSpec::dense(4, 3)], &mut seeded_rng(2)).unwrap();
        let before = net.clone();
        let pruned = apply_mask(&net, &PruneMask::from_kept(vec![false; net.param_count()])).unwrap();
        assert_eq!(net, before);
        let x = crate::Tensor::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        assert!(pruned.logits(&x).unwrap().data().iter().all(|&v| v == 0.0));
    }
}
