use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::kendall::sign;
use super::HyperparamConfig;
use crate::{Error, Result};

/// How the conditioning variable `U_S` is realized for a model pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditioningEncoding {
    /// `(sign(θ¹ᵢ − θ²ᵢ))_{i∈S}`.
    #[default]
    PairSigns,
    /// The raw hyperparameter values of both models.
    RawValues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CmiConfig {
    /// Conditioning cells with fewer pairs are dropped.
    pub min_cell_pairs: usize,
    pub max_subset_size: usize,
    pub encoding: ConditioningEncoding,
}

impl Default for CmiConfig {
    fn default() -> Self {
        Self { min_cell_pairs: 5, max_subset_size: 2, encoding: ConditioningEncoding::PairSigns }
    }
}

/// Normalized conditional mutual information for one conditioning subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetCmi {
    pub subset: Vec<String>,
    pub mutual_information: f64,
    pub conditional_entropy: f64,
    pub ratio: f64,
    pub cells_dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmiResult {
    /// `min_S I(V_μ; V_g | U_S) / H(V_g | U_S)`.
    pub value: f64,
    pub argmin: Vec<String>,
    pub pairs_used: usize,
    pub tie_pairs_dropped: usize,
    pub subsets: Vec<SubsetCmi>,
}

/// A cell's 2×2 table of `(V_μ, V_g)` counts, indexed by `(v + 1) / 2`.
type Cell = [[u64; 2]; 2];

/// Plug-in `I(V_μ; V_g | U)` and `H(V_g | U)` in nats from per-cell counts.
pub fn conditional_information(cells: &[Cell]) -> (f64, f64) {
    let total: u64 = cells.iter().map(|c| c.iter().flatten().sum::<u64>()).sum();
    if total == 0 {
        return (0.0, 0.0);
    }
    let total = total as f64;
    let (mut info, mut entropy) = (0.0, 0.0);
    for cell in cells {
        let n: u64 = cell.iter().flatten().sum();
        if n == 0 {
            continue;
        }
        let nf = n as f64;
        let weight = nf / total;
        let p_mu = [(cell[0][0] + cell[0][1]) as f64 / nf, (cell[1][0] + cell[1][1]) as f64 / nf];
        let p_g = [(cell[0][0] + cell[1][0]) as f64 / nf, (cell[0][1] + cell[1][1]) as f64 / nf];
        let mut i_cell = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let p = cell[a][b] as f64 / nf;
                if p > 0.0 {
                    i_cell += p * (p / (p_mu[a] * p_g[b])).ln();
                }
            }
        }
        let h_cell: f64 = p_g.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
        info += weight * i_cell;
        entropy += weight * h_cell;
    }
    (info, entropy)
}

fn subsets(axes: &[&str], max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    if max >= 1 {
        out.extend((0..axes.len()).map(|i| vec![i]));
    }
    if max >= 2 {
        for i in 0..axes.len() {
            for j in i + 1..axes.len() {
                out.push(vec![i, j]);
            }
        }
    }
    out
}

/// The conditional-mutual-information criterion `𝒦(μ)` over ordered model pairs.
///
/// Pairs where either the measure or the gap ties are excluded. `axes` should not
/// include the seed.
pub fn cmi(
    hyperparams: &[HyperparamConfig],
    measure: &[f64],
    gaps: &[f64],
    axes: &[&str],
    config: &CmiConfig,
) -> Result<CmiResult> {
    let n = hyperparams.len();
    if measure.len() != n || gaps.len() != n {
        return Err(Error::Shape("hyperparams, measure and gaps must have equal length".into()));
    }
    let values: Vec<Vec<f64>> = hyperparams
        .iter()
        .enumerate()
        .map(|(m, h)| {
            axes.iter()
                .map(|a| {
                    h.get(a).ok_or_else(|| Error::Schema {
                        location: format!("model {m}"),
                        message: format!("missing axis {a}"),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut pairs = Vec::new();
    let mut ties = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let vm = sign(measure[i] - measure[j]);
            let vg = sign(gaps[i] - gaps[j]);
            if vm == 0 || vg == 0 {
                ties += 1;
            } else {
                pairs.push((i, j, usize::from(vm > 0), usize::from(vg > 0)));
            }
        }
    }
    let gap_signs = pairs.iter().map(|p| p.3).fold([false; 2], |mut seen, v| {
        seen[v] = true;
        seen
    });
    if !(gap_signs[0] && gap_signs[1]) {
        return Err(Error::Undefined("generalization-gap sign variable takes a single value".into()));
    }

    let mut results = Vec::new();
    for subset in subsets(axes, config.max_subset_size) {
        let mut cells: BTreeMap<Vec<i64>, Cell> = BTreeMap::new();
        for &(i, j, vm, vg) in &pairs {
            let key: Vec<i64> = match config.encoding {
                ConditioningEncoding::PairSigns => {
                    subset.iter().map(|&k| i64::from(sign(values[i][k] - values[j][k]))).collect()
                }
                ConditioningEncoding::RawValues => subset
                    .iter()
                    .flat_map(|&k| [values[i][k].to_bits() as i64, values[j][k].to_bits() as i64])
                    .collect(),
            };
            cells.entry(key).or_default()[vm][vg] += 1;
        }
        let before = cells.len();
        let kept: Vec<Cell> = cells
            .into_values()
            .filter(|c| c.iter().flatten().sum::<u64>() >= config.min_cell_pairs as u64)
            .collect();
        let (info, entropy) = conditional_information(&kept);
        if entropy <= 0.0 {
            continue;
        }
        results.push(SubsetCmi {
            subset: subset.iter().map(|&k| axes[k].to_string()).collect(),
            mutual_information: info,
            conditional_entropy: entropy,
            ratio: info / entropy,
            cells_dropped: before - kept.len(),
        });
    }
    let best = results
        .iter()
        .min_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .ok_or_else(|| Error::Undefined("conditional entropy of the gap is zero for every subset".into()))?;
    Ok(CmiResult {
        value: best.ratio,
        argmin: best.subset.clone(),
        pairs_used: pairs.len(),
        tie_pairs_dropped: ties,
        subsets: results.clone(),
    })
}
