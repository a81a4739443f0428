//! Prunability as a generalization measure for small feedforward networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`nncore`]: a dense/convolutional network engine with exact gradients,
//!   an SGD-with-momentum training loop and a binary checkpoint format.
//! - [`pruning`]: magnitude and random pruning masks, the prunability search,
//!   magnitude-aware perturbation robustness and the prune-vs-perturb probe.
//! - [`measures`]: every generalization measure computed from a trained model,
//!   plus the sweep-level normalized-margins regression.
//! - [`evalstats`]: Kendall's τ, the granulated coefficient, the conditional
//!   mutual information criterion and cross-validated R².
//! - [`zoo`]: datasets, manifests, resumable sweeps and the double-descent and
//!   prune-vs-perturb experiments.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evalstats;
pub mod linalg;
pub mod measures;
pub mod nncore;
pub mod pruning;
pub mod zoo;

pub use error::{Error, Result};
pub use evalstats::{EvalReport, HyperparamConfig};
pub use measures::{MeasureTable, MeasureValue};
pub use nncore::{Dataset, LayerSpec, ModelRecord, Network, Tensor, TrainConfig};
pub use pruning::{PruneMask, PrunabilityResult, PrunabilitySearchConfig};

/// Deterministic generator used for every random stream in the crate.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the crate's RNG from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
