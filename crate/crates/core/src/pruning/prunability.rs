use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mask::{apply_mask, magnitude_prune, random_prune, PruneMask};
use crate::{Dataset, Error, Network, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruningMethod {
    Magnitude,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrunabilitySearchConfig {
    /// Relative train-loss tolerance.
    pub beta: f64,
    /// Candidate kept-fractions, strictly increasing within (0, 1].
    pub grid: Vec<f64>,
    /// Masks averaged per grid point for random pruning.
    pub mc_samples: usize,
    /// Evaluate every grid point (for loss curves) instead of stopping at the first feasible one.
    pub full_curve: bool,
}

impl Default for PrunabilitySearchConfig {
    fn default() -> Self {
        Self { beta: 0.1, grid: uniform_grid(50), mc_samples: 5, full_curve: true }
    }
}

/// `{1/c, 2/c, …, 1}`.
pub fn uniform_grid(c: usize) -> Vec<f64> {
    (1..=c).map(|k| k as f64 / c as f64).collect()
}

impl PrunabilitySearchConfig {
    pub fn with_grid_size(mut self, c: usize) -> Self {
        self.grid = uniform_grid(c);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("prunability grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("prunability grid must be strictly increasing".into()));
        }
        if self.grid[0] <= 0.0 || *self.grid.last().unwrap() > 1.0 {
            return Err(Error::Config("prunability grid must lie in (0,1]".into()));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::Config("beta must be non-negative".into()));
        }
        if self.mc_samples == 0 {
            return Err(Error::Config("mc_samples must be at least 1".into()));
        }
        Ok(())
    }

    pub fn grid_size(&self) -> usize {
        self.grid.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub kept_fraction: f64,
    pub train_ce: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunabilityResult {
    pub method: PruningMethod,
    /// Smallest feasible kept-fraction; the measure value.
    pub kept_fraction: f64,
    pub achieved_train_ce: f64,
    pub baseline_train_ce: f64,
    pub beta: f64,
    /// Evaluated grid points in ascending kept-fraction order.
    pub grid_evaluations: Vec<GridPoint>,
}

impl PrunabilityResult {
    /// Loss bound the pruned model has to respect.
    pub fn bound(&self) -> f64 {
        (1.0 + self.beta) * self.baseline_train_ce
    }

    /// The magnitude mask at the selected kept-fraction.
    pub fn magnitude_mask(&self, network: &Network) -> Result<PruneMask> {
        magnitude_prune(network.params(), self.kept_fraction)
    }
}

/// Scans the grid in ascending kept-fraction order (descending remove-fraction)
/// and returns the first point whose loss respects `(1 + β)·baseline`.
///
/// Falls back to 1.0 (no pruning) when no grid point qualifies.
pub fn search_grid(
    grid: &[f64],
    baseline: f64,
    beta: f64,
    full_curve: bool,
    mut loss_at: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64, Vec<GridPoint>)> {
    let bound = (1.0 + beta) * baseline;
    let mut evaluations = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &alpha in grid {
        let loss = loss_at(alpha)?;
        evaluations.push(GridPoint { kept_fraction: alpha, train_ce: loss });
        if best.is_none() && loss <= bound {
            best = Some((alpha, loss));
            if !full_curve {
                break;
            }
        }
    }
    let (alpha, loss) = best.unwrap_or((1.0, baseline));
    Ok((alpha, loss, evaluations))
}

/// Smallest kept-fraction of `network` whose pruned train loss stays within `(1 + β)` of the original.
///
/// Random pruning uses the mean loss over `mc_samples` independent masks per grid point.
pub fn prunability(
    network: &Network,
    train: &Dataset,
    config: &PrunabilitySearchConfig,
    method: PruningMethod,
    rng: &mut impl Rng,
) -> Result<PrunabilityResult> {
    config.validate()?;
    let baseline = network.loss(train)?;
    if !baseline.is_finite() {
        return Err(Error::NonFiniteBaseline(baseline));
    }
    let w = network.params();
    let (kept_fraction, achieved, grid_evaluations) =
        search_grid(&config.grid, baseline, config.beta, config.full_curve, |alpha| match method {
            PruningMethod::Magnitude => apply_mask(network, &magnitude_prune(w, alpha)?)?.loss(train),
            PruningMethod::Random => {
                let mut total = 0.0;
                for _ in 0..config.mc_samples {
                    total += apply_mask(network, &random_prune(w, alpha, rng)?)?.loss(train)?;
                }
                Ok(total / config.mc_samples as f64)
            }
        })?;
    Ok(PrunabilityResult {
        method,
        kept_fraction,
        achieved_train_ce: achieved,
        baseline_train_ce: baseline,
        beta: config.beta,
        grid_evaluations,
    })
}
