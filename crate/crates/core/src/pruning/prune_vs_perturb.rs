use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::mask::{apply_mask, magnitude_prune};
use crate::{Dataset, Error, Network, Result};

/// How the random perturbation is matched to the pruned weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbMatching {
    /// Uniform direction on the sphere, Euclidean norm equal to the removed sub-vector.
    #[default]
    EuclideanNorm,
    /// Each selected coordinate moves by `±|wᵢ|` with a random sign.
    PerCoordinate,
}

/// One row of the prune-vs-perturb experiment. Deltas are relative to the unpruned model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneVsPerturbRow {
    pub fraction: f64,
    pub removed_count: usize,
    pub removed_norm: f64,
    pub perturbation_norm: f64,
    pub d_train_prune: f64,
    pub d_test_prune: f64,
    pub d_train_perturb: f64,
    pub d_test_perturb: f64,
}

impl PruneVsPerturbRow {
    pub const CSV_HEADER: &'static str =
        "fraction,removed_count,removed_norm,perturbation_norm,d_train_prune,d_test_prune,d_train_perturb,d_test_perturb";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.fraction,
            self.removed_count,
            self.removed_norm,
            self.perturbation_norm,
            self.d_train_prune,
            self.d_test_prune,
            self.d_train_perturb,
            self.d_test_perturb
        )
    }
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Random vector over `removed` coordinates with the same size as `w` restricted to them.
pub fn matched_perturbation(w: &[f64], removed: &[usize], matching: PerturbMatching, rng: &mut impl Rng) -> Vec<f64> {
    match matching {
        PerturbMatching::EuclideanNorm => {
            let target = norm(removed.iter().map(|&i| w[i]));
            let z: Vec<f64> = removed.iter().map(|_| StandardNormal.sample(rng)).collect();
            let zn = norm(z.iter().copied());
            if target == 0.0 || zn == 0.0 {
                return vec![0.0; removed.len()];
            }
            z.iter().map(|v| v / zn * target).collect()
        }
        PerturbMatching::PerCoordinate => removed
            .iter()
            .map(|&i| if rng.random_bool(0.5) { w[i].abs() } else { -w[i].abs() })
            .collect(),
    }
}

/// For each removed fraction, compares magnitude pruning with a size-matched random
/// perturbation of the same coordinates.
pub fn prune_vs_perturb(
    network: &Network,
    train: &Dataset,
    test: &Dataset,
    fractions: &[f64],
    matching: PerturbMatching,
    rng: &mut impl Rng,
) -> Result<Vec<PruneVsPerturbRow>> {
    let base_train = network.loss(train)?;
    let base_test = network.loss(test)?;
    let w = network.params();
    let mut rows = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Config(format!("fraction {fraction} outside [0,1)")));
        }
        let mask = magnitude_prune(w, 1.0 - fraction)?;
        let removed = mask.removed_indices();
        let pruned = apply_mask(network, &mask)?;

        let delta = matched_perturbation(w, &removed, matching, rng);
        let mut perturbed_params = w.to_vec();
        for (&i, d) in removed.iter().zip(&delta) {
            perturbed_params[i] += d;
        }
        let perturbed = network.with_params(perturbed_params)?;

        rows.push(PruneVsPerturbRow {
            fraction,
            removed_count: removed.len(),
            removed_norm: norm(removed.iter().map(|&i| w[i])),
            perturbation_norm: norm(delta.iter().copied()),
            d_train_prune: pruned.loss(train)? - base_train,
            d_test_prune: pruned.loss(test)? - base_test,
            d_train_perturb: perturbed.loss(train)? - base_train,
            d_test_perturb: perturbed.loss(test)? - base_test,
        });
    }
    Ok(rows)
}
