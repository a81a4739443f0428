//! Shared fixtures for the benchmarks.

use prunability::evalstats::HyperparamConfig;
use prunability::nncore::mlp_layers;
use prunability::zoo::{gen_synthetic, SyntheticSpec};
use prunability::{seeded_rng, Dataset, Network};

pub fn mlp(width: usize, depth: usize) -> (Network, Dataset) {
    let spec = SyntheticSpec { m_train: 256, m_test: 16, ..SyntheticSpec::default() };
    let (train, _) = gen_synthetic(&spec).expect("valid spec");
    let net = Network::new(vec![spec.dim], mlp_layers(spec.dim, width, depth, 0.0, spec.classes), &mut seeded_rng(1))
        .expect("valid layers");
    (net, train)
}

/// A full factorial grid over three axes with `per_axis` values each.
pub fn grid(per_axis: usize) -> Vec<HyperparamConfig> {
    let mut out = Vec::new();
    for a in 0..per_axis {
        for b in 0..per_axis {
            for c in 0..per_axis {
                out.push(HyperparamConfig::default().with("a", a as f64).with("b", b as f64).with("c", c as f64));
            }
        }
    }
    out
}
