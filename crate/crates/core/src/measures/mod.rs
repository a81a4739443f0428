//! Generalization measures computed from a trained model and its data.
//!
//! Everything except the normalized-margins regression is a per-model function;
//! [`compute_model_measures`] evaluates a selection of them, and
//! [`margin_sweep_measures`] runs the sweep-level regression afterwards.

mod basic;
mod effdim;
mod margins;
mod pac_bayes;
mod table;

use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use basic::{frobenius_measure, layer_squared_norms, pruned_parameter_count, sotl, sum_two_norms, sum_two_norms_pruned};
pub use effdim::{
    effective_dim_of, effective_dimensionality, hessian_fd, normalized_effective_dim, EffDimConfig,
    EffectiveDimensionality,
};
pub use margins::{
    five_statistics, margin_features, normalized_margins, output_margin, probe_indices, sample_margins, MarginConfig,
    MarginFeatures, MarginsRegression, ProbeLayers,
};
pub use pac_bayes::{pac_bayes_bound, PacBayesInputs};
pub use table::{MeasureFailure, MeasureTable, MeasureValue, CSV_HEADER};

use crate::pruning::{
    perturbation_robustness, prunability, PerturbationSearchConfig, PrunabilityResult, PrunabilitySearchConfig,
    PruningMethod,
};
use crate::{Dataset, Error, ModelRecord, Result, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Prunability,
    RandomPrunability,
    Fro,
    Sotl,
    Perturbation,
    TrainLoss,
    ParameterCount,
    SumTwoNorms,
    PrunedParameterCount,
    SumTwoNormsPruned,
    PacBayes,
    EffectiveDim,
    NormalizedMargins,
    BestMarginVariable,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 14] = [
        MeasureKind::Prunability,
        MeasureKind::RandomPrunability,
        MeasureKind::Fro,
        MeasureKind::Sotl,
        MeasureKind::Perturbation,
        MeasureKind::TrainLoss,
        MeasureKind::ParameterCount,
        MeasureKind::SumTwoNorms,
        MeasureKind::PrunedParameterCount,
        MeasureKind::SumTwoNormsPruned,
        MeasureKind::PacBayes,
        MeasureKind::EffectiveDim,
        MeasureKind::NormalizedMargins,
        MeasureKind::BestMarginVariable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Prunability => "prunability",
            MeasureKind::RandomPrunability => "random_prunability",
            MeasureKind::Fro => "fro",
            MeasureKind::Sotl => "sotl",
            MeasureKind::Perturbation => "perturbation",
            MeasureKind::TrainLoss => "train_loss",
            MeasureKind::ParameterCount => "parameter_count",
            MeasureKind::SumTwoNorms => "sum_two_norms",
            MeasureKind::PrunedParameterCount => "pruned_parameter_count",
            MeasureKind::SumTwoNormsPruned => "sum_two_norms_pruned",
            MeasureKind::PacBayes => "pac_bayes",
            MeasureKind::EffectiveDim => "effective_dim",
            MeasureKind::NormalizedMargins => "normalized_margins",
            MeasureKind::BestMarginVariable => "best_margin_variable",
        }
    }

    /// Computed once over the whole sweep rather than per model.
    pub fn is_sweep_level(self) -> bool {
        matches!(self, MeasureKind::NormalizedMargins | MeasureKind::BestMarginVariable)
    }

    /// Everything except the effective dimensionality, whose dense Hessian only fits small models.
    pub fn sweep_defaults() -> Vec<MeasureKind> {
        Self::ALL.into_iter().filter(|k| *k != MeasureKind::EffectiveDim).collect()
    }

    /// Parses a comma-separated list; `all` expands to every measure.
    pub fn parse_list(list: &str) -> Result<Vec<MeasureKind>> {
        let mut out = Vec::new();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if item == "all" {
                out.extend(Self::ALL);
            } else {
                out.push(item.parse()?);
            }
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::Config("empty measure list".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown measure {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasureConfig {
    pub prunability: PrunabilitySearchConfig,
    pub perturbation: PerturbationSearchConfig,
    /// Confidence parameter of the PAC-Bayes bound.
    pub pac_delta: f64,
    pub effective_dim: EffDimConfig,
    pub margins: MarginConfig,
    pub folds: usize,
    pub seed: u64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            prunability: PrunabilitySearchConfig::default(),
            perturbation: PerturbationSearchConfig::default(),
            pac_delta: 0.05,
            effective_dim: EffDimConfig::default(),
            margins: MarginConfig::default(),
            folds: crate::evalstats::regression::DEFAULT_FOLDS,
            seed: 0,
        }
    }
}

/// Per-model output of [`compute_model_measures`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeasures {
    pub values: Vec<MeasureValue>,
    pub failures: Vec<MeasureFailure>,
    /// Present when a margin measure was requested.
    pub margin_features: Option<MarginFeatures>,
}

// Keeps measure randomness independent of the training streams.
const MEASURE_STREAM: u64 = 7;

fn measure_rng(config_seed: u64, model_seed: u64) -> SeededRng {
    let mut rng = SeededRng::seed_from_u64(config_seed ^ model_seed.rotate_left(32));
    rng.set_stream(MEASURE_STREAM);
    rng
}

fn curve_aux(r: &PrunabilityResult) -> serde_json::Value {
    json!({
        "kept_fraction": r.kept_fraction,
        "achieved_train_ce": r.achieved_train_ce,
        "baseline_train_ce": r.baseline_train_ce,
        "curve": r.grid_evaluations.iter().map(|p| [p.kept_fraction, p.train_ce]).collect::<Vec<_>>(),
    })
}

/// Evaluates the requested per-model measures on one trained model.
///
/// Each measure fails independently: an error becomes a [`MeasureFailure`] and the
/// others still run. Sweep-level kinds only trigger margin-feature extraction here.
pub fn compute_model_measures(
    record: &ModelRecord,
    train: &Dataset,
    kinds: &[MeasureKind],
    config: &MeasureConfig,
) -> ModelMeasures {
    let net = &record.network;
    let id = record.id.as_str();
    let wants = |k: MeasureKind| kinds.contains(&k);
    let mut values = Vec::new();
    let mut failures = Vec::new();
    let mut fail = |kind: MeasureKind, reason: String| {
        failures.push(MeasureFailure { model_id: id.to_string(), measure: kind.name().to_string(), reason });
    };

    let needs_magnitude =
        wants(MeasureKind::Prunability) || wants(MeasureKind::PrunedParameterCount) || wants(MeasureKind::SumTwoNormsPruned);
    let mut rng = measure_rng(config.seed, record.seed);
    let magnitude = needs_magnitude
        .then(|| prunability(net, train, &config.prunability, PruningMethod::Magnitude, &mut rng).map_err(|e| e.to_string()));
    let random = (wants(MeasureKind::RandomPrunability) || wants(MeasureKind::PacBayes))
        .then(|| prunability(net, train, &config.prunability, PruningMethod::Random, &mut rng).map_err(|e| e.to_string()));

    for &kind in kinds {
        let value: std::result::Result<MeasureValue, String> = match kind {
            MeasureKind::Prunability | MeasureKind::RandomPrunability => {
                let r = if kind == MeasureKind::Prunability { &magnitude } else { &random };
                match r.as_ref().expect("computed above") {
                    Ok(r) => Ok(MeasureValue::new(id, kind.name(), r.kept_fraction).with_aux(curve_aux(r))),
                    Err(e) => Err(e.clone()),
                }
            }
            MeasureKind::Fro => Ok(match frobenius_measure(net) {
                Some(v) => MeasureValue::new(id, kind.name(), v),
                None => MeasureValue::new(id, kind.name(), 0.0).flagged("zero-norm layer"),
            }),
            MeasureKind::Sotl => Ok(MeasureValue::new(id, kind.name(), sotl(record))),
            MeasureKind::Perturbation => {
                let mut cfg = config.perturbation.clone();
                cfg.seed = config.perturbation.seed ^ config.seed ^ record.seed.rotate_left(32);
                perturbation_robustness(net, train, &cfg).map_err(|e| e.to_string()).map(|r| {
                    let v = MeasureValue::new(id, kind.name(), r.measure).with_aux(json!({
                        "sigma": r.sigma,
                        "expected_loss": r.expected_loss,
                        "baseline_loss": r.baseline_loss,
                    }));
                    match r.flag {
                        Some(flag) => v.flagged(serde_json::to_value(flag).unwrap().as_str().unwrap_or_default()),
                        None => v,
                    }
                })
            }
            MeasureKind::TrainLoss => Ok(MeasureValue::new(id, kind.name(), record.final_train_ce)),
            MeasureKind::ParameterCount => Ok(MeasureValue::new(id, kind.name(), net.param_count() as f64)),
            MeasureKind::SumTwoNorms => Ok(MeasureValue::new(id, kind.name(), sum_two_norms(net.params()))),
            MeasureKind::PrunedParameterCount | MeasureKind::SumTwoNormsPruned => {
                match magnitude.as_ref().expect("computed above") {
                    Ok(r) => r.magnitude_mask(net).and_then(|mask| {
                        let v = if kind == MeasureKind::PrunedParameterCount {
                            pruned_parameter_count(net.params(), &mask)? as f64
                        } else {
                            sum_two_norms_pruned(net.params(), &mask)?
                        };
                        Ok(MeasureValue::new(id, kind.name(), v))
                    })
                    .map_err(|e| e.to_string()),
                    Err(e) => Err(e.clone()),
                }
            }
            MeasureKind::PacBayes => match random.as_ref().expect("computed above") {
                Ok(r) => {
                    let inputs = PacBayesInputs {
                        pruned_fraction: 1.0 - r.kept_fraction,
                        squared_norm: sum_two_norms(net.params()),
                        m: train.len(),
                        delta: config.pac_delta,
                        grid_size: config.prunability.grid_size(),
                    };
                    pac_bayes_bound(&inputs)
                        .map(|b| {
                            MeasureValue::new(id, kind.name(), b)
                                .with_aux(json!({ "pruned_fraction": inputs.pruned_fraction }))
                        })
                        .map_err(|e| e.to_string())
                }
                Err(e) => Err(e.clone()),
            },
            MeasureKind::EffectiveDim => effective_dimensionality(net, train, &config.effective_dim).map(|r| {
                let lo = r.eigenvalues.first().copied().unwrap_or(0.0);
                let hi = r.eigenvalues.last().copied().unwrap_or(0.0);
                MeasureValue::new(id, kind.name(), r.value).with_aux(json!({ "min_eigenvalue": lo, "max_eigenvalue": hi }))
            })
            .map_err(|e| e.to_string()),
            MeasureKind::NormalizedMargins | MeasureKind::BestMarginVariable => continue,
        };
        match value {
            Ok(v) if v.value.is_finite() => values.push(v),
            Ok(v) => fail(kind, format!("non-finite value {}", v.value)),
            Err(e) => fail(kind, e),
        }
    }

    let margin_features = if kinds.iter().any(|k| k.is_sweep_level()) {
        match margin_features(net, train, &config.margins) {
            Ok(f) if f.vector().iter().all(|v| v.is_finite()) => Some(f),
            Ok(_) => {
                fail(MeasureKind::NormalizedMargins, "non-finite margin statistics".into());
                None
            }
            Err(e) => {
                fail(MeasureKind::NormalizedMargins, e.to_string());
                None
            }
        }
    } else {
        None
    };
    ModelMeasures { values, failures, margin_features }
}

/// Sweep-level margin measures: the cross-fitted prediction of each model's gap and
/// the single strongest margin statistic.
pub fn margin_sweep_measures(
    model_ids: &[String],
    features: &[Vec<f64>],
    gaps: &[f64],
    kinds: &[MeasureKind],
    folds: usize,
) -> Result<Vec<MeasureValue>> {
    let reg = normalized_margins(features, gaps, folds)?;
    let mut out = Vec::new();
    for (i, id) in model_ids.iter().enumerate() {
        if kinds.contains(&MeasureKind::NormalizedMargins) {
            let mut v = MeasureValue::new(id.as_str(), MeasureKind::NormalizedMargins.name(), reg.predictions[i])
                .with_aux(json!({ "fold": reg.fold_of[i], "folds": reg.folds, "features": features[i] }));
            if reg.degenerate {
                v = v.flagged("degenerate regression");
            }
            out.push(v);
        }
        if kinds.contains(&MeasureKind::BestMarginVariable) {
            out.push(
                MeasureValue::new(id.as_str(), MeasureKind::BestMarginVariable.name(), reg.best_values[i])
                    .with_aux(json!({ "feature": reg.best_variable })),
            );
        }
    }
    Ok(out)
}
