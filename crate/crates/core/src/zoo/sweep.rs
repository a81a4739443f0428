use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::ledger::{LedgerEntry, RunLedger, RunStatus};
use super::manifest::{checkpoint_name, GridPoint, SweepManifest};
use crate::evalstats::ModelGaps;
use crate::measures::{compute_model_measures, margin_sweep_measures, MeasureKind, MeasureTable, ModelMeasures};
use crate::nncore::checkpoint::{self, write_atomic};
use crate::nncore::train as train_model;
use crate::{seeded_rng, Dataset, Error, ModelRecord, Network, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const MEASURES_FILE: &str = "measures.csv";
pub const AUX_FILE: &str = "measures_aux.json";
pub const MODELS_FILE: &str = "models.csv";
pub const CURVES_FILE: &str = "prunability_curves.csv";

pub const MODELS_HEADER: &str = "model_id,gap,train_err01,test_err01,train_ce,test_ce";

/// Everything a finished sweep produced, in grid order.
#[derive(Debug)]
pub struct SweepOutcome {
    pub records: Vec<ModelRecord>,
    /// `(model_id, reason)` of every failed training.
    pub failures: Vec<(String, String)>,
    /// Models trained during this call (as opposed to reloaded).
    pub trained: usize,
    pub reused: usize,
    pub table: MeasureTable,
    pub models: ModelGaps,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// He-initialized network and training run for one grid point.
pub fn train_point(point: &GridPoint, manifest: &SweepManifest, train_data: &Dataset, test_data: &Dataset) -> Result<ModelRecord> {
    let shape = train_data.sample_shape().to_vec();
    let layers = point.layers(shape.iter().product(), train_data.classes());
    let net = Network::new(shape, layers, &mut seeded_rng(point.seed))?;
    train_model(point.model_id(), net, train_data, test_data, &point.train_config(&manifest.train), point.hyperparams())
}

enum Job {
    Reused(ModelRecord),
    Trained(ModelRecord, LedgerEntry),
    Failed(String, LedgerEntry),
}

fn reusable(dir: &Path, entry: Option<&LedgerEntry>, id: &str) -> Option<ModelRecord> {
    let e = entry.filter(|e| e.status == RunStatus::Trained)?;
    let path = dir.join(e.checkpoint.as_ref()?);
    match checkpoint::load(&path, e.digest.as_deref()) {
        Ok(r) if r.id == id => Some(r),
        Ok(_) => None,
        Err(err) => {
            log::warn!("retraining {id}: {err}");
            None
        }
    }
}

fn run_job(point: &GridPoint, manifest: &SweepManifest, dir: &Path, ledger: &RunLedger, data: &(Dataset, Dataset)) -> Result<Job> {
    let id = point.model_id();
    if let Some(r) = reusable(dir, ledger.latest(&id), &id) {
        return Ok(Job::Reused(r));
    }
    let start = Instant::now();
    let rel = format!("{CHECKPOINT_DIR}/{}", checkpoint_name(&manifest.manifest_id, &id));
    let job = match train_point(point, manifest, &data.0, &data.1) {
        Ok(record) => {
            let digest = checkpoint::save(&dir.join(&rel), &record)?;
            let entry = LedgerEntry {
                model_id: id,
                status: RunStatus::Trained,
                checkpoint: Some(rel),
                digest: Some(digest),
                wall_time_s: start.elapsed().as_secs_f64(),
                error: None,
            };
            Job::Trained(record, entry)
        }
        Err(e) => {
            log::warn!("training {id} failed: {e}");
            let entry = LedgerEntry {
                model_id: id,
                status: RunStatus::Failed,
                checkpoint: None,
                digest: None,
                wall_time_s: start.elapsed().as_secs_f64(),
                error: Some(e.to_string()),
            };
            Job::Failed(e.to_string(), entry)
        }
    };
    let entry = match &job {
        Job::Trained(_, e) | Job::Failed(_, e) => e,
        Job::Reused(_) => unreachable!(),
    };
    ledger.append(entry)?;
    Ok(job)
}

/// Trains (or reloads) every grid point, computes the configured measures and
/// writes the measure table, its sidecar, the model table and the ledger to `dir`.
pub fn run_sweep(manifest: &SweepManifest, dir: &Path) -> Result<SweepOutcome> {
    manifest.validate()?;
    let data = manifest.dataset.load()?;
    fs::create_dir_all(dir.join(CHECKPOINT_DIR))?;
    write_atomic(&dir.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
    let mut ledger = RunLedger::open(&dir.join(LEDGER_FILE))?;
    let points = manifest.axes.points();
    let pool = pool(manifest.workers)?;

    let jobs: Vec<Result<Job>> =
        pool.install(|| points.par_iter().map(|p| run_job(p, manifest, dir, &ledger, &data)).collect());
    let (mut records, mut failures) = (Vec::new(), Vec::new());
    let (mut trained, mut reused) = (0, 0);
    for (point, job) in points.iter().zip(jobs) {
        match job? {
            Job::Reused(r) => {
                reused += 1;
                records.push(r);
            }
            Job::Trained(r, e) => {
                trained += 1;
                ledger.record(e);
                records.push(r);
            }
            Job::Failed(reason, e) => {
                ledger.record(e);
                failures.push((point.model_id(), reason));
            }
        }
    }
    log::info!("sweep {}: trained {trained}, reused {reused}, failed {}", manifest.manifest_id, failures.len());
    if failures.len() as f64 > manifest.failure_cap * points.len() as f64 {
        return Err(Error::FailureCap { failed: failures.len(), total: points.len(), cap: manifest.failure_cap });
    }

    let table = measure_records(&records, &data.0, &manifest.measures, manifest, &pool)?;
    let mut models = ModelGaps::default();
    for r in &records {
        models.push(r.id.clone(), r.gap, r.hyperparams.clone());
    }
    write_outputs(dir, &records, &table)?;
    Ok(SweepOutcome { records, failures, trained, reused, table, models })
}

/// Per-model measures in parallel, then the sweep-level margin regression.
fn measure_records(
    records: &[ModelRecord],
    train_data: &Dataset,
    kinds: &[MeasureKind],
    manifest: &SweepManifest,
    pool: &rayon::ThreadPool,
) -> Result<MeasureTable> {
    let config = &manifest.measure_config;
    let per_model: Vec<ModelMeasures> =
        pool.install(|| records.par_iter().map(|r| compute_model_measures(r, train_data, kinds, config)).collect());
    let mut table = MeasureTable::new();
    let (mut ids, mut feats, mut gaps) = (Vec::new(), Vec::new(), Vec::new());
    for (r, m) in records.iter().zip(per_model) {
        for v in m.values {
            table.insert(v)?;
        }
        for f in m.failures {
            table.record_failure(&f.model_id, &f.measure, f.reason);
        }
        if let Some(f) = m.margin_features {
            ids.push(r.id.clone());
            feats.push(f.vector());
            gaps.push(r.gap);
        }
    }
    if kinds.iter().any(|k| k.is_sweep_level()) {
        match margin_sweep_measures(&ids, &feats, &gaps, kinds, config.folds) {
            Ok(values) => {
                for v in values {
                    table.insert(v)?;
                }
            }
            Err(e) => table.record_failure("sweep", MeasureKind::NormalizedMargins.name(), e.to_string()),
        }
    }
    Ok(table)
}

pub fn models_csv(records: &[ModelRecord]) -> String {
    let axes: Vec<String> = records.first().map(|r| r.hyperparams.names().map(String::from).collect()).unwrap_or_default();
    let mut out = String::from(MODELS_HEADER);
    for a in &axes {
        out.push(',');
        out.push_str(a);
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            r.id, r.gap, r.final_train_err01, r.final_test_err01, r.final_train_ce, r.final_test_ce
        ));
        for a in &axes {
            out.push_str(&format!(",{}", r.hyperparams.get(a).unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    out
}

/// `model_id,kept_fraction,train_ce` rows from the prunability grid curves.
pub fn curves_csv(table: &MeasureTable) -> String {
    let mut out = String::from("model_id,kept_fraction,train_ce\n");
    for row in table.rows().iter().filter(|r| r.measure == MeasureKind::Prunability.name()) {
        let curve = row.aux.as_ref().and_then(|a| a.get("curve")).and_then(|c| c.as_array());
        for point in curve.into_iter().flatten() {
            if let (Some(a), Some(l)) = (point[0].as_f64(), point[1].as_f64()) {
                out.push_str(&format!("{},{a},{l}\n", row.model_id));
            }
        }
    }
    out
}

fn write_outputs(dir: &Path, records: &[ModelRecord], table: &MeasureTable) -> Result<()> {
    write_atomic(&dir.join(MEASURES_FILE), table.to_csv().as_bytes())?;
    write_atomic(&dir.join(AUX_FILE), table.aux_json().as_bytes())?;
    write_atomic(&dir.join(MODELS_FILE), models_csv(records).as_bytes())?;
    write_atomic(&dir.join(CURVES_FILE), curves_csv(table).as_bytes())
}

/// Recomputes the measures of an already trained sweep under `manifest` (which may
/// change the measure list or settings but not the grid) without training.
pub fn measure_existing(dir: &Path, manifest: &SweepManifest) -> Result<SweepOutcome> {
    manifest.validate()?;
    let (stored, records) = load_sweep(dir)?;
    if stored.axes != manifest.axes || stored.manifest_id != manifest.manifest_id {
        return Err(Error::Config("manifest grid differs from the trained sweep".into()));
    }
    if records.is_empty() {
        return Err(Error::Config(format!("no trained models in {}", dir.display())));
    }
    let (train_data, _) = manifest.dataset.load()?;
    let pool = pool(manifest.workers)?;
    let table = measure_records(&records, &train_data, &manifest.measures, manifest, &pool)?;
    let mut models = ModelGaps::default();
    for r in &records {
        models.push(r.id.clone(), r.gap, r.hyperparams.clone());
    }
    write_atomic(&dir.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
    write_outputs(dir, &records, &table)?;
    let reused = records.len();
    Ok(SweepOutcome { records, failures: Vec::new(), trained: 0, reused, table, models })
}

/// Reloads every trained model of a finished sweep directory in grid order.
pub fn load_sweep(dir: &Path) -> Result<(SweepManifest, Vec<ModelRecord>)> {
    let manifest = SweepManifest::load(&dir.join(MANIFEST_FILE))?;
    let ledger = RunLedger::open(&dir.join(LEDGER_FILE))?;
    let mut records = Vec::new();
    for p in manifest.axes.points() {
        let id = p.model_id();
        if let Some(e) = ledger.latest(&id).filter(|e| e.status == RunStatus::Trained) {
            let rel: PathBuf = e.checkpoint.clone().unwrap_or_default().into();
            records.push(checkpoint::load(&dir.join(rel), e.digest.as_deref())?);
        }
    }
    Ok((manifest, records))
}
