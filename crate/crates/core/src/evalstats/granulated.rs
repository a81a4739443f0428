use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::kendall::kendall_tau;
use super::HyperparamConfig;
use crate::{Error, Result};

/// Coefficient for one hyperparameter axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisPsi {
    pub axis: String,
    /// `None` when no slice varies this axis.
    pub psi: Option<f64>,
    pub slices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Granulated {
    pub per_axis: Vec<AxisPsi>,
    /// Mean of the defined `ψᵢ`; `None` when none is defined.
    pub psi: Option<f64>,
}

impl Granulated {
    pub fn axis(&self, name: &str) -> Option<f64> {
        self.per_axis.iter().find(|a| a.axis == name).and_then(|a| a.psi)
    }
}

/// Per-axis Kendall coefficients: for axis `i`, τ is averaged over every slice in
/// which all other hyperparameters (seed included) are held fixed.
pub fn granulated_kendall(
    hyperparams: &[HyperparamConfig],
    measure: &[f64],
    gaps: &[f64],
    axes: &[&str],
) -> Result<Granulated> {
    let n = hyperparams.len();
    if measure.len() != n || gaps.len() != n {
        return Err(Error::Shape("hyperparams, measure and gaps must have equal length".into()));
    }
    let mut per_axis = Vec::with_capacity(axes.len());
    for &axis in axes {
        let mut slices: BTreeMap<Vec<(String, u64)>, Vec<usize>> = BTreeMap::new();
        for (i, h) in hyperparams.iter().enumerate() {
            if h.get(axis).is_none() {
                return Err(Error::Schema { location: format!("model {i}"), message: format!("missing axis {axis}") });
            }
            slices.entry(h.key_without(axis)).or_default().push(i);
        }
        let mut taus = Vec::new();
        for members in slices.values() {
            let mut distinct: Vec<u64> = members.iter().map(|&i| hyperparams[i].get(axis).unwrap().to_bits()).collect();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() < 2 {
                continue;
            }
            let mu: Vec<f64> = members.iter().map(|&i| measure[i]).collect();
            let g: Vec<f64> = members.iter().map(|&i| gaps[i]).collect();
            taus.push(kendall_tau(&mu, &g)?);
        }
        let psi = (!taus.is_empty()).then(|| taus.iter().sum::<f64>() / taus.len() as f64);
        per_axis.push(AxisPsi { axis: axis.to_string(), psi, slices: taus.len() });
    }
    let defined: Vec<f64> = per_axis.iter().filter_map(|a| a.psi).collect();
    let psi = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(Granulated { per_axis, psi })
}
