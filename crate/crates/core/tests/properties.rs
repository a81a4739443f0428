mod common;

use proptest::prelude::*;
use prunability::evalstats::{cmi, granulated_kendall, kendall_tau, CmiConfig};
use prunability::measures::{five_statistics, normalized_effective_dim, pac_bayes_bound, PacBayesInputs};
use prunability::nncore::checkpoint;
use prunability::pruning::{
    kept_count, magnitude_prune, matched_perturbation, prunability, random_prune, search_grid, uniform_grid,
    PerturbMatching, PrunabilitySearchConfig, PruningMethod,
};
use prunability::{seeded_rng, HyperparamConfig};

fn vecs(n: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    n.prop_flat_map(|n| (prop::collection::vec(-5i32..5, n), prop::collection::vec(-1e3f64..1e3, n)))
        .prop_map(|(a, b)| (a.into_iter().map(f64::from).collect(), b))
}

proptest! {
    #[test]
    fn kendall_matches_brute_force_and_is_bounded((a, b) in vecs(2..30)) {
        let t = kendall_tau(&a, &b).unwrap();
        prop_assert_eq!(t, common::brute_kendall(&a, &b));
        prop_assert!((-1.0..=1.0).contains(&t));
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        prop_assert_eq!(kendall_tau(&neg, &b).unwrap(), -t);
        prop_assert_eq!(kendall_tau(&b, &a).unwrap(), t);
    }

    #[test]
    fn kendall_is_invariant_to_monotone_maps((a, b) in vecs(2..30)) {
        let mapped: Vec<f64> = a.iter().map(|v| (v * 0.3).exp() + 2.0).collect();
        prop_assert_eq!(kendall_tau(&mapped, &b).unwrap(), kendall_tau(&a, &b).unwrap());
    }

    #[test]
    fn magnitude_mask_keeps_largest(w in prop::collection::vec(-10f64..10.0, 1..60), keep in 0.0f64..=1.0) {
        let mask = magnitude_prune(&w, keep).unwrap();
        prop_assert_eq!(mask.kept_count(), kept_count(w.len(), keep));
        let kept_min = w.iter().zip(mask.kept()).filter(|(_, &k)| k).map(|(v, _)| v.abs()).fold(f64::INFINITY, f64::min);
        let removed_max = w.iter().zip(mask.kept()).filter(|(_, &k)| !k).map(|(v, _)| v.abs()).fold(0.0, f64::max);
        prop_assert!(kept_min >= removed_max);
        prop_assert_eq!(mask.removed_indices(), common::oracle_removed(&w, keep));
        let applied = mask.apply(&w).unwrap();
        for ((&a, &v), &k) in applied.iter().zip(&w).zip(mask.kept()) {
            prop_assert_eq!(a, if k { v } else { 0.0 });
        }
    }

    #[test]
    fn random_mask_has_exact_size(n in 1usize..200, keep in 0.0f64..=1.0, seed in any::<u64>()) {
        let w = vec![1.0; n];
        let mask = random_prune(&w, keep, &mut seeded_rng(seed)).unwrap();
        prop_assert_eq!(mask.kept_count(), kept_count(n, keep));
    }

    #[test]
    fn grid_search_picks_first_feasible(losses in prop::collection::vec(0.0f64..3.0, 1..50), beta in 0.0f64..1.0) {
        let c = losses.len();
        let grid = uniform_grid(c);
        let baseline = 1.0;
        let (alpha, loss, evals) = search_grid(&grid, baseline, beta, true, |a| Ok(losses[(a * c as f64).round() as usize - 1])).unwrap();
        let first = losses.iter().position(|&l| l <= (1.0 + beta) * baseline);
        match first {
            Some(k) => {
                prop_assert_eq!(alpha, grid[k]);
                prop_assert_eq!(loss, losses[k]);
            }
            None => prop_assert_eq!((alpha, loss), (1.0, baseline)),
        }
        prop_assert_eq!(evals.len(), c);
    }

    #[test]
    fn pac_bound_decreases_with_pruning(norm in 0.1f64..1e4, m in 2usize..100_000, delta in 0.001f64..0.5, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let at = |alpha| pac_bayes_bound(&PacBayesInputs { pruned_fraction: alpha, squared_norm: norm, m, delta, grid_size: 50 }).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(at(hi) <= at(lo));
        prop_assert!(at(lo).is_finite() && at(hi) > 0.0);
    }

    #[test]
    fn euclidean_perturbation_matches_norm(w in prop::collection::vec(-3f64..3.0, 1..80), keep in 0.0f64..1.0, seed in any::<u64>()) {
        let removed = common::oracle_removed(&w, keep);
        let d = matched_perturbation(&w, &removed, PerturbMatching::EuclideanNorm, &mut seeded_rng(seed));
        let target = removed.iter().map(|&i| w[i] * w[i]).sum::<f64>().sqrt();
        let got = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((got - target).abs() <= 1e-12 * target.max(1.0));
        let coord = matched_perturbation(&w, &removed, PerturbMatching::PerCoordinate, &mut seeded_rng(seed));
        for (&i, v) in removed.iter().zip(&coord) {
            prop_assert_eq!(v.abs(), w[i].abs());
        }
    }

    #[test]
    fn effective_dim_lies_in_unit_interval(eigs in prop::collection::vec(0.0f64..1e3, 1..30), z in 1e-3f64..1e3) {
        let v = normalized_effective_dim(&eigs, z).unwrap();
        prop_assert!((0.0..1.0).contains(&v));
    }

    #[test]
    fn five_statistics_are_ordered(v in prop::collection::vec(-1e6f64..1e6, 1..100)) {
        let s = five_statistics(&v).unwrap();
        prop_assert!(s.windows(2).all(|p| p[0] <= p[1]));
        prop_assert_eq!(s[0], v.iter().copied().fold(f64::INFINITY, f64::min));
        prop_assert_eq!(s[4], v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }

    #[test]
    fn cmi_lies_in_unit_interval(seed in any::<u64>(), n in 6usize..25) {
        use rand::Rng;
        let mut rng = seeded_rng(seed);
        let h: Vec<HyperparamConfig> = (0..n)
            .map(|_| HyperparamConfig::default().with("a", rng.random_range(0..3) as f64).with("b", rng.random_range(0..2) as f64))
            .collect();
        let g: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mu: Vec<f64> = g.iter().map(|x| x + 0.3 * rng.random::<f64>()).collect();
        if let Ok(r) = cmi(&h, &mu, &g, &["a", "b"], &CmiConfig::default()) {
            prop_assert!(r.value >= -1e-12 && r.value <= 1.0 + 1e-12);
            prop_assert_eq!(r.pairs_used + r.tie_pairs_dropped, n * (n - 1));
            for s in &r.subsets {
                prop_assert!(s.ratio >= r.value);
            }
        }
    }

    #[test]
    fn granulated_psi_is_bounded(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = seeded_rng(seed);
        let mut h = Vec::new();
        for a in 0..3 {
            for b in 0..2 {
                h.push(HyperparamConfig::default().with("a", a as f64).with("b", b as f64));
            }
        }
        let g: Vec<f64> = (0..h.len()).map(|_| rng.random::<f64>()).collect();
        let mu: Vec<f64> = (0..h.len()).map(|_| rng.random::<f64>()).collect();
        let r = granulated_kendall(&h, &mu, &g, &["a", "b"]).unwrap();
        for axis in &r.per_axis {
            let psi = axis.psi.unwrap();
            prop_assert!((-1.0..=1.0).contains(&psi));
        }
        let same = granulated_kendall(&h, &g, &g, &["a", "b"]).unwrap();
        prop_assert_eq!(same.psi, Some(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn checkpoint_round_trips(seed in 0u64..1000, scale in -3.0f64..3.0) {
        let (record, _, _) = common::trained_toy(seed % 4);
        let params: Vec<f64> = record.network.params().iter().enumerate().map(|(i, v)| v * scale + i as f64 * 1e-3).collect();
        let mut r = record.clone();
        r.network = r.network.with_params(params).unwrap();
        r.seed = seed;
        let bytes = checkpoint::encode(&r).unwrap();
        prop_assert_eq!(checkpoint::decode(&bytes).unwrap(), r);
    }

    #[test]
    fn prunability_respects_bound(seed in 0u64..6, beta in 0.0f64..0.5) {
        let (record, train, _) = common::trained_toy(seed);
        let config = PrunabilitySearchConfig { beta, ..Default::default() };
        for method in [PruningMethod::Magnitude, PruningMethod::Random] {
            let r = prunability(&record.network, &train, &config, method, &mut seeded_rng(seed)).unwrap();
            prop_assert!(r.achieved_train_ce <= r.bound() || r.kept_fraction == 1.0);
            prop_assert!(config.grid.contains(&r.kept_fraction));
            let first = r.grid_evaluations.iter().find(|p| p.train_ce <= r.bound()).map(|p| p.kept_fraction);
            prop_assert_eq!(first.unwrap_or(1.0), r.kept_fraction);
        }
    }
}
