//! Pruning primitives and the searches built on them.

mod mask;
mod perturbation;
mod prunability;
mod prune_vs_perturb;

pub use mask::{apply_mask, kept_count, magnitude_prune, random_prune, PruneMask};
pub use perturbation::{
    perturbation_robustness, perturbation_search, BoundaryFlag, NoiseVariance, PerturbationResult,
    PerturbationSearchConfig,
};
pub use prunability::{
    prunability, search_grid, uniform_grid, GridPoint, PrunabilityResult, PrunabilitySearchConfig, PruningMethod,
};
pub use prune_vs_perturb::{matched_perturbation, prune_vs_perturb, PerturbMatching, PruneVsPerturbRow};
