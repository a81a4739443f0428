use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{DatasetSpec, SyntheticSpec};
use super::manifest::{SweepAxes, SweepManifest, TrainTemplate, MANIFEST_SCHEMA_VERSION};
use super::sweep::{run_sweep, SweepOutcome};
use crate::evalstats::kendall_tau;
use crate::measures::{MeasureConfig, MeasureKind};
use crate::nncore::checkpoint::write_atomic;
use crate::nncore::LrSchedule;
use crate::{Error, Result};

pub const MODELS_FILE: &str = "dd_models.csv";
pub const SUMMARY_FILE: &str = "dd_summary.csv";
pub const TAU_FILE: &str = "dd_tau.csv";
pub const TAU_HEADER: &str = "measure,tau_test_loss,tau_test_error";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DoubleDescentConfig {
    pub manifest_id: String,
    pub widths: Vec<usize>,
    pub seeds: Vec<u64>,
    pub depth: usize,
    pub dataset: SyntheticSpec,
    pub train: TrainTemplate,
    pub measures: Vec<MeasureKind>,
    pub measure_config: MeasureConfig,
    pub workers: usize,
}

impl Default for DoubleDescentConfig {
    fn default() -> Self {
        Self {
            manifest_id: "double-descent".into(),
            widths: (1..=16).collect(),
            seeds: vec![0, 1, 2],
            depth: 1,
            dataset: SyntheticSpec {
                classes: 4,
                dim: 16,
                m_train: 200,
                m_test: 1000,
                separation: 0.6,
                noise: 1.0,
                label_noise: 0.2,
                seed: 0,
            },
            train: TrainTemplate {
                epochs: 100,
                batch_size: 25,
                learning_rate: LrSchedule::constant(0.05),
                momentum: 0.9,
            },
            measures: vec![
                MeasureKind::Prunability,
                MeasureKind::EffectiveDim,
                MeasureKind::Perturbation,
                MeasureKind::Fro,
                MeasureKind::Sotl,
                MeasureKind::NormalizedMargins,
            ],
            measure_config: MeasureConfig::default(),
            workers: 0,
        }
    }
}

impl DoubleDescentConfig {
    pub fn manifest(&self) -> SweepManifest {
        SweepManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            manifest_id: self.manifest_id.clone(),
            dataset: DatasetSpec::SyntheticGaussianMixture(self.dataset.clone()),
            axes: SweepAxes {
                widths: self.widths.clone(),
                depths: vec![self.depth],
                dropouts: vec![0.0],
                weight_decays: vec![0.0],
                augmentations: vec![false],
                seeds: self.seeds.clone(),
            },
            train: self.train.clone(),
            measures: self.measures.clone(),
            measure_config: self.measure_config.clone(),
            workers: self.workers,
            failure_cap: 0.2,
        }
    }
}

/// Seed-averaged metrics and measures of one width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthSummary {
    pub width: usize,
    pub test_ce: f64,
    pub test_err01: f64,
    /// Measure name to mean value over the seeds where it was defined.
    pub measures: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauRow {
    pub measure: String,
    pub tau_test_loss: Option<f64>,
    pub tau_test_error: Option<f64>,
}

#[derive(Debug)]
pub struct DoubleDescentOutcome {
    pub sweep: SweepOutcome,
    pub summary: Vec<WidthSummary>,
    pub tau: Vec<TauRow>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn summarize(sweep: &SweepOutcome) -> Vec<WidthSummary> {
    let measures = sweep.table.measures();
    let mut by_width: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, r) in sweep.records.iter().enumerate() {
        let w = r.hyperparams.get("width").unwrap_or(0.0) as usize;
        by_width.entry(w).or_default().push(i);
    }
    by_width
        .into_iter()
        .map(|(width, idx)| {
            let recs: Vec<_> = idx.iter().map(|&i| &sweep.records[i]).collect();
            let mut m = BTreeMap::new();
            for name in &measures {
                let vals: Vec<f64> = recs.iter().filter_map(|r| sweep.table.value(&r.id, name)).collect();
                if !vals.is_empty() {
                    m.insert(name.clone(), mean(&vals));
                }
            }
            WidthSummary {
                width,
                test_ce: mean(&recs.iter().map(|r| r.final_test_ce).collect::<Vec<_>>()),
                test_err01: mean(&recs.iter().map(|r| r.final_test_err01).collect::<Vec<_>>()),
                measures: m,
            }
        })
        .collect()
}

/// Kendall τ of every measure's per-width mean against test loss and test error.
///
/// Widths where a measure is missing are left out of that measure's τ; fewer than
/// two widths leaves both cells undefined.
pub fn tau_table(summary: &[WidthSummary]) -> Vec<TauRow> {
    let names: std::collections::BTreeSet<&String> = summary.iter().flat_map(|s| s.measures.keys()).collect();
    names
        .into_iter()
        .map(|name| {
            let rows: Vec<&WidthSummary> = summary.iter().filter(|s| s.measures.contains_key(name)).collect();
            let mu: Vec<f64> = rows.iter().map(|s| s.measures[name]).collect();
            let loss: Vec<f64> = rows.iter().map(|s| s.test_ce).collect();
            let err: Vec<f64> = rows.iter().map(|s| s.test_err01).collect();
            TauRow {
                measure: name.clone(),
                tau_test_loss: kendall_tau(&mu, &loss).ok(),
                tau_test_error: kendall_tau(&mu, &err).ok(),
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_csv(summary: &[WidthSummary]) -> String {
    let names: std::collections::BTreeSet<&String> = summary.iter().flat_map(|s| s.measures.keys()).collect();
    let mut out = String::from("width,test_ce,test_err01");
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for s in summary {
        out.push_str(&format!("{},{},{}", s.width, s.test_ce, s.test_err01));
        for n in &names {
            out.push(',');
            out.push_str(&opt(s.measures.get(*n).copied()));
        }
        out.push('\n');
    }
    out
}

pub fn tau_csv(rows: &[TauRow]) -> String {
    let mut out = format!("{TAU_HEADER}\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.measure, opt(r.tau_test_loss), opt(r.tau_test_error)));
    }
    out
}

fn models_csv(sweep: &SweepOutcome) -> String {
    let names = sweep.table.measures();
    let mut out = String::from("model_id,width,seed,test_ce,test_err01");
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for r in &sweep.records {
        out.push_str(&format!(
            "{},{},{},{},{}",
            r.id,
            r.hyperparams.get("width").unwrap_or(0.0),
            r.seed,
            r.final_test_ce,
            r.final_test_err01
        ));
        for n in &names {
            out.push(',');
            out.push_str(&opt(sweep.table.value(&r.id, n)));
        }
        out.push('\n');
    }
    out
}

/// Width sweep at fixed depth; writes the per-model, per-width and τ tables next to
/// the regular sweep outputs.
pub fn run_double_descent(config: &DoubleDescentConfig, dir: &Path) -> Result<DoubleDescentOutcome> {
    if config.widths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("widths must be strictly ascending".into()));
    }
    let sweep = run_sweep(&config.manifest(), dir)?;
    let summary = summarize(&sweep);
    let tau = tau_table(&summary);
    write_atomic(&dir.join(MODELS_FILE), models_csv(&sweep).as_bytes())?;
    write_atomic(&dir.join(SUMMARY_FILE), summary_csv(&summary).as_bytes())?;
    write_atomic(&dir.join(TAU_FILE), tau_csv(&tau).as_bytes())?;
    Ok(DoubleDescentOutcome { sweep, summary, tau })
}
