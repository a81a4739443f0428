use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacBayesInputs {
    /// Fraction of weights pruned (the dropout probability of the posterior).
    pub pruned_fraction: f64,
    pub squared_norm: f64,
    pub m: usize,
    pub delta: f64,
    /// Number of candidate fractions searched.
    pub grid_size: usize,
}

impl PacBayesInputs {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pruned_fraction) {
            return Err(Error::Config("pruned fraction must lie in [0,1]".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config("delta must lie in (0,1)".into()));
        }
        if self.m < 2 || self.grid_size < 1 {
            return Err(Error::Config("need m >= 2 and grid size >= 1".into()));
        }
        if !(self.squared_norm >= 0.0) {
            return Err(Error::Config("squared norm must be non-negative".into()));
        }
        Ok(())
    }
}

/// `sqrt( ((1−α)/2·‖w‖² + ln(m/δ) + ln c) / (2(m−1)) )`.
pub fn pac_bayes_bound(inputs: &PacBayesInputs) -> Result<f64> {
    inputs.validate()?;
    let m = inputs.m as f64;
    let kl = 0.5 * (1.0 - inputs.pruned_fraction) * inputs.squared_norm;
    let log_terms = (m / inputs.delta).ln() + (inputs.grid_size as f64).ln();
    Ok(((kl + log_terms) / (2.0 * (m - 1.0))).sqrt())
}
