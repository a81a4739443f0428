//! Datasets, sweep orchestration and persistence.

mod cifar;
mod dataset;
mod double_descent;
mod idx;
mod ledger;
mod manifest;
mod pvp;
mod sweep;

pub use cifar::{load_cifar, parse_cifar, RECORD_BYTES};
pub use dataset::{gen_synthetic, DatasetSpec, SyntheticSpec};
pub use double_descent::{
    run_double_descent, summarize, summary_csv, tau_csv, tau_table, DoubleDescentConfig, DoubleDescentOutcome, TauRow,
    WidthSummary,
};
pub use idx::{dataset_from_idx, encode_images, encode_labels, load_idx, parse_images, parse_labels, write_idx};
pub use ledger::{LedgerEntry, RunLedger, RunStatus};
pub use manifest::{checkpoint_name, GridPoint, SweepAxes, SweepManifest, TrainTemplate, MANIFEST_SCHEMA_VERSION};
pub use pvp::{default_fractions, run_prune_vs_perturb, PVP_FILE};
pub use sweep::{
    curves_csv, load_sweep, measure_existing, models_csv, run_sweep, train_point, SweepOutcome, AUX_FILE, CHECKPOINT_DIR, CURVES_FILE, LEDGER_FILE,
    MANIFEST_FILE, MEASURES_FILE, MODELS_FILE, MODELS_HEADER,
};

/// File names written by [`run_double_descent`].
pub mod dd_files {
    pub use super::double_descent::{MODELS_FILE, SUMMARY_FILE, TAU_FILE, TAU_HEADER};
}
