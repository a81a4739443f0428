#![allow(dead_code)]

use prunability::nncore::{mlp_layers, train, LrSchedule};
use prunability::zoo::{gen_synthetic, SyntheticSpec};
use prunability::{seeded_rng, Dataset, HyperparamConfig, LayerSpec, ModelRecord, Network, TrainConfig};

/// A small MLP trained for a few epochs on its own synthetic data.
pub fn trained_toy(seed: u64) -> (ModelRecord, Dataset, Dataset) {
    let width = 4 + (seed as usize % 4) * 2;
    trained_mlp(seed, width, 1 + seed as usize % 2, 3)
}

pub fn trained_mlp(seed: u64, width: usize, depth: usize, classes: usize) -> (ModelRecord, Dataset, Dataset) {
    let (tr, te) = gen_synthetic(&SyntheticSpec {
        classes,
        dim: 6,
        m_train: 60,
        m_test: 60,
        separation: 1.5,
        seed,
        ..Default::default()
    })
    .unwrap();
    let net = Network::new(vec![6], mlp_layers(6, width, depth, 0.0, classes), &mut seeded_rng(seed)).unwrap();
    let config = TrainConfig {
        epochs: 15,
        batch_size: 10,
        learning_rate: LrSchedule::constant(0.1),
        momentum: 0.9,
        weight_decay: 0.0,
        augmentation: false,
        seed,
    };
    let record = train(format!("toy{seed}"), net, &tr, &te, &config, HyperparamConfig::default()).unwrap();
    (record, tr, te)
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// Central finite differences of the mean loss with respect to every parameter.
pub fn fd_gradient(net: &Network, data: &Dataset, h: f64) -> Vec<f64> {
    let mut p = net.params().to_vec();
    let mut out = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let w = p[i];
        p[i] = w + h;
        let plus = net.with_params(p.clone()).unwrap().loss(data).unwrap();
        p[i] = w - h;
        let minus = net.with_params(p.clone()).unwrap().loss(data).unwrap();
        p[i] = w;
        out.push((plus - minus) / (2.0 * h));
    }
    out
}

/// Twenty-plus small architectures covering dense, conv, pooling and dropout layers.
pub fn oracle_architectures() -> Vec<(Vec<usize>, Vec<LayerSpec>)> {
    let mut out = Vec::new();
    for (inputs, width, depth) in [(3, 4, 1), (5, 3, 2), (2, 6, 1), (4, 4, 3), (6, 2, 2), (3, 7, 1), (1, 5, 2), (4, 8, 1)] {
        out.push((vec![inputs], mlp_layers(inputs, width, depth, 0.0, 3)));
        out.push((vec![inputs], mlp_layers(inputs, width, depth, 0.3, 2)));
    }
    out.push((vec![4], vec![LayerSpec::Dense { inputs: 4, outputs: 3, bias: false }]));
    out.push((vec![4], vec![LayerSpec::Dense { inputs: 4, outputs: 5, bias: false }, LayerSpec::Relu, LayerSpec::dense(5, 2)]));
    for (c, hw, k, stride, pad) in [(1, 5, 3, 1, 0), (2, 6, 3, 2, 1), (3, 4, 2, 1, 1), (1, 7, 3, 2, 0)] {
        let out_c = 3;
        out.push((
            vec![c, hw, hw],
            vec![
                LayerSpec::Conv2d { in_channels: c, out_channels: out_c, kernel: k, stride, padding: pad, bias: true },
                LayerSpec::Relu,
                LayerSpec::GlobalAvgPool,
                LayerSpec::dense(out_c, 3),
            ],
        ));
    }
    let (c, hw) = (2, 5);
    let conv = LayerSpec::Conv2d { in_channels: c, out_channels: 2, kernel: 3, stride: 1, padding: 0, bias: false };
    let flat = conv.output_shape(&[c, hw, hw]).unwrap().iter().product();
    out.push((vec![c, hw, hw], vec![conv, LayerSpec::Relu, LayerSpec::dense(flat, 4)]));
    out
}

/// A network whose parameters, biases included, are all drawn from `N(0, 0.5²)`, so
/// no pre-activation sits exactly on a ReLU kink.
pub fn random_network(shape: &[usize], layers: &[LayerSpec], seed: u64) -> Network {
    use rand_distr::{Distribution, Normal};
    let mut rng = seeded_rng(seed);
    let net = Network::new(shape.to_vec(), layers.to_vec(), &mut rng).unwrap();
    let normal = Normal::new(0.0, 0.5).unwrap();
    let params = (0..net.param_count()).map(|_| normal.sample(&mut rng)).collect();
    net.with_params(params).unwrap()
}

/// Normal-distributed inputs of the given per-sample shape.
pub fn random_data(shape: &[usize], n: usize, classes: usize, seed: u64) -> Dataset {
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = seeded_rng(seed);
    let per: usize = shape.iter().product();
    let data: Vec<f64> = (0..n * per).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut full = vec![n];
    full.extend_from_slice(shape);
    let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
    Dataset::new(prunability::Tensor::new(full, data).unwrap(), labels, classes).unwrap()
}

/// Brute-force ordered-pair Kendall coefficient.
pub fn brute_kendall(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let sgn = |x: f64| (x > 0.0) as i64 - (x < 0.0) as i64;
    let mut s = 0i64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += sgn(a[i] - a[j]) * sgn(b[i] - b[j]);
            }
        }
    }
    s as f64 / (n * (n - 1)) as f64
}

/// Indices removed by keeping the `round(keep·n)` largest magnitudes; among equal
/// magnitudes the lower index survives.
pub fn oracle_removed(w: &[f64], keep: f64) -> Vec<usize> {
    let n = w.len();
    let kept = ((keep * n as f64).round() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()).then(b.cmp(&a)));
    let mut removed = order[..n - kept].to_vec();
    removed.sort_unstable();
    removed
}
