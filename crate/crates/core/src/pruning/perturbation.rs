use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{seeded_rng, Dataset, Error, Network, Result};

/// How the per-weight noise variance is formed from `σ`, `|wᵢ|` and the floor `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseVariance {
    /// `σ²·|wᵢ| + ε`
    #[default]
    Additive,
    /// `σ²·(|wᵢ| + ε)`
    Scaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationSearchConfig {
    pub beta: f64,
    pub epsilon: f64,
    pub mc_samples: usize,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub variance: NoiseVariance,
    /// Standardize each coordinate's noise draws to zero mean and unit variance across samples.
    pub moment_matching: bool,
}

impl Default for PerturbationSearchConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            epsilon: 1e-3,
            mc_samples: 5,
            sigma_lo: 1e-3,
            sigma_hi: 10.0,
            max_iterations: 25,
            seed: 0,
            variance: NoiseVariance::Additive,
            moment_matching: true,
        }
    }
}

impl PerturbationSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_lo > 0.0 && self.sigma_lo < self.sigma_hi && self.sigma_hi.is_finite()) {
            return Err(Error::Config("need 0 < sigma_lo < sigma_hi".into()));
        }
        if self.mc_samples == 0 {
            return Err(Error::Config("mc_samples must be at least 1".into()));
        }
        if !(self.beta >= 0.0) || !(self.epsilon >= 0.0) {
            return Err(Error::Config("beta and epsilon must be non-negative".into()));
        }
        Ok(())
    }
}

/// Set when the search hit an end of the σ interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryFlag {
    /// The constraint already fails at `sigma_lo`.
    ViolatedAtLower,
    /// The constraint still holds at `sigma_hi`.
    SatisfiedAtUpper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationResult {
    pub sigma: f64,
    /// `1 / σ²`.
    pub measure: f64,
    pub expected_loss: f64,
    pub baseline_loss: f64,
    pub flag: Option<BoundaryFlag>,
    pub iterations: usize,
}

/// Fixed standard-normal draws reused for every σ candidate.
struct NoiseBank {
    samples: Vec<Vec<f64>>,
}

impl NoiseBank {
    fn new(dim: usize, config: &PerturbationSearchConfig) -> Self {
        let mut rng = seeded_rng(config.seed);
        let mut samples: Vec<Vec<f64>> = (0..config.mc_samples)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let s = samples.len();
        if config.moment_matching && s >= 2 {
            for i in 0..dim {
                let mean = samples.iter().map(|z| z[i]).sum::<f64>() / s as f64;
                let var = samples.iter().map(|z| (z[i] - mean).powi(2)).sum::<f64>() / s as f64;
                let sd = var.sqrt();
                for z in &mut samples {
                    z[i] = if sd > 0.0 { (z[i] - mean) / sd } else { 0.0 };
                }
            }
        }
        Self { samples }
    }
}

/// Largest `σ` in `[σ_lo, σ_hi]` with `E_u[L(w + u)] ≤ (1 + β)·L(w)`, `uᵢ ~ N(0, σ²|wᵢ| + ε)`.
///
/// Bisects on `log σ` for `max_iterations` steps with common random numbers across
/// candidates and returns the largest feasible point found.
pub fn perturbation_search(
    w: &[f64],
    mut loss: impl FnMut(&[f64]) -> Result<f64>,
    config: &PerturbationSearchConfig,
) -> Result<PerturbationResult> {
    config.validate()?;
    let baseline = loss(w)?;
    if !baseline.is_finite() {
        return Err(Error::NonFiniteBaseline(baseline));
    }
    let bound = (1.0 + config.beta) * baseline;
    let bank = NoiseBank::new(w.len(), config);
    let mut perturbed = vec![0.0; w.len()];
    let mut expected = |sigma: f64| -> Result<f64> {
        let s2 = sigma * sigma;
        let mut total = 0.0;
        for z in &bank.samples {
            for i in 0..w.len() {
                let var = match config.variance {
                    NoiseVariance::Additive => s2 * w[i].abs() + config.epsilon,
                    NoiseVariance::Scaled => s2 * (w[i].abs() + config.epsilon),
                };
                perturbed[i] = w[i] + var.sqrt() * z[i];
            }
            total += loss(&perturbed)?;
        }
        Ok(total / bank.samples.len() as f64)
    };
    let finish = |sigma: f64, expected_loss: f64, flag, iterations| PerturbationResult {
        sigma,
        measure: 1.0 / (sigma * sigma),
        expected_loss,
        baseline_loss: baseline,
        flag,
        iterations,
    };

    let at_hi = expected(config.sigma_hi)?;
    if at_hi <= bound {
        return Ok(finish(config.sigma_hi, at_hi, Some(BoundaryFlag::SatisfiedAtUpper), 0));
    }
    let at_lo = expected(config.sigma_lo)?;
    if !(at_lo <= bound) {
        return Ok(finish(config.sigma_lo, at_lo, Some(BoundaryFlag::ViolatedAtLower), 0));
    }
    let (mut lo, mut hi) = (config.sigma_lo.ln(), config.sigma_hi.ln());
    let mut lo_loss = at_lo;
    for _ in 0..config.max_iterations {
        let mid = 0.5 * (lo + hi);
        let l = expected(mid.exp())?;
        if l <= bound {
            lo = mid;
            lo_loss = l;
        } else {
            hi = mid;
        }
    }
    Ok(finish(lo.exp(), lo_loss, None, config.max_iterations))
}

/// Magnitude-aware random-perturbation robustness of a network on its training set.
pub fn perturbation_robustness(
    network: &Network,
    train: &Dataset,
    config: &PerturbationSearchConfig,
) -> Result<PerturbationResult> {
    let mut scratch = network.clone();
    perturbation_search(
        network.params(),
        |p| {
            scratch.params_mut().copy_from_slice(p);
            scratch.loss(train)
        },
        config,
    )
}
