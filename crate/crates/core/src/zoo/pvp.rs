use std::path::Path;

use super::sweep::load_sweep;
use crate::nncore::checkpoint::write_atomic;
use crate::pruning::{prune_vs_perturb, PerturbMatching, PruneVsPerturbRow};
use crate::{seeded_rng, Error, Result};

pub const PVP_FILE: &str = "pvp.csv";

/// Default removed fractions, `0.0, 0.1, …, 0.9`.
pub fn default_fractions() -> Vec<f64> {
    (0..10).map(|i| i as f64 / 10.0).collect()
}

/// Prune-vs-perturb rows for trained models of a sweep directory, written to `pvp.csv`
/// with a leading `model_id` column. An empty `model_ids` selects every model.
pub fn run_prune_vs_perturb(
    sweep_dir: &Path,
    model_ids: &[String],
    fractions: &[f64],
    matching: PerturbMatching,
    seed: u64,
) -> Result<Vec<(String, PruneVsPerturbRow)>> {
    let (manifest, records) = load_sweep(sweep_dir)?;
    for id in model_ids {
        if !records.iter().any(|r| &r.id == id) {
            return Err(Error::Config(format!("model {id:?} is not a trained model of this sweep")));
        }
    }
    let (train, test) = manifest.dataset.load()?;
    let mut out = Vec::new();
    let mut csv = format!("model_id,{}\n", PruneVsPerturbRow::CSV_HEADER);
    for r in records.iter().filter(|r| model_ids.is_empty() || model_ids.contains(&r.id)) {
        let mut rng = seeded_rng(seed ^ r.seed.rotate_left(32));
        for row in prune_vs_perturb(&r.network, &train, &test, fractions, matching, &mut rng)? {
            csv.push_str(&format!("{},{}\n", r.id, row.csv_line()));
            out.push((r.id.clone(), row));
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no trained models to evaluate".into()));
    }
    write_atomic(&sweep_dir.join(PVP_FILE), csv.as_bytes())?;
    Ok(out)
}
