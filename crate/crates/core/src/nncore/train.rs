use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Mode, Network, Tensor};
use crate::evalstats::HyperparamConfig;
use crate::{seeded_rng, Error, Result, SeededRng};

/// Piecewise-constant learning rate: multiplied by `decay_factor` at each listed epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub initial: f64,
    #[serde(default)]
    pub decay_epochs: Vec<usize>,
    #[serde(default = "default_decay")]
    pub decay_factor: f64,
}

fn default_decay() -> f64 {
    0.1
}

impl LrSchedule {
    pub fn constant(rate: f64) -> Self {
        Self { initial: rate, decay_epochs: Vec::new(), decay_factor: default_decay() }
    }

    /// Rate used during zero-based `epoch`.
    pub fn rate_at(&self, epoch: usize) -> f64 {
        let decays = self.decay_epochs.iter().filter(|&&e| e <= epoch).count();
        self.initial * self.decay_factor.powi(decays as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: LrSchedule,
    #[serde(default)]
    pub momentum: f64,
    #[serde(default)]
    pub weight_decay: f64,
    #[serde(default)]
    pub augmentation: bool,
    #[serde(default)]
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        // zero is allowed so that a no-op run can be expressed
        if !(self.learning_rate.initial >= 0.0) || !self.learning_rate.initial.is_finite() {
            return Err(Error::Config("learning rate must be finite and non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0,1)".into()));
        }
        Ok(())
    }
}

/// Input augmentation applied to training batches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Augmentation {
    None,
    /// Mirror `(c, h, w)` images along the width axis with probability 1/2.
    HorizontalFlip,
    /// Add `N(0, sigma^2)` to every input coordinate.
    GaussianNoise { sigma: f64 },
}

impl Augmentation {
    pub const NOISE_SIGMA: f64 = 0.1;

    /// Flip for image-shaped data, Gaussian noise otherwise.
    pub fn for_shape(enabled: bool, sample_shape: &[usize]) -> Self {
        match (enabled, sample_shape.len()) {
            (false, _) => Augmentation::None,
            (true, 3) => Augmentation::HorizontalFlip,
            (true, _) => Augmentation::GaussianNoise { sigma: Self::NOISE_SIGMA },
        }
    }

    fn apply(&self, batch: &mut Tensor, rng: &mut SeededRng) {
        match *self {
            Augmentation::None => {}
            Augmentation::GaussianNoise { sigma } => {
                for v in batch.data_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *v += sigma * z;
                }
            }
            Augmentation::HorizontalFlip => {
                let shape = batch.shape().to_vec();
                let (c, h, w) = (shape[1], shape[2], shape[3]);
                let per = c * h * w;
                let n = shape[0];
                let data = batch.data_mut();
                for s in 0..n {
                    if !rand::Rng::random_bool(rng, 0.5) {
                        continue;
                    }
                    for row in data[s * per..(s + 1) * per].chunks_mut(w) {
                        row.reverse();
                    }
                }
            }
        }
    }
}

/// A trained network together with its training trace and final metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRecord {
    pub id: String,
    pub network: Network,
    pub hyperparams: HyperparamConfig,
    pub train_config: TrainConfig,
    /// Train cross-entropy evaluated after every epoch.
    pub epoch_losses: Vec<f64>,
    pub final_train_ce: f64,
    pub final_test_ce: f64,
    pub final_train_err01: f64,
    pub final_test_err01: f64,
    /// `final_test_err01 - final_train_err01`.
    pub gap: f64,
    pub seed: u64,
}

impl ModelRecord {
    /// Assembles a record from a network and its trace, evaluating the final metrics.
    pub fn evaluate(
        id: impl Into<String>,
        network: Network,
        hyperparams: HyperparamConfig,
        train_config: TrainConfig,
        epoch_losses: Vec<f64>,
        train: &Dataset,
        test: &Dataset,
    ) -> Result<Self> {
        let tr = network.evaluate(train)?;
        let te = network.evaluate(test)?;
        let seed = train_config.seed;
        Ok(Self {
            id: id.into(),
            network,
            hyperparams,
            train_config,
            epoch_losses,
            final_train_ce: tr.cross_entropy,
            final_test_ce: te.cross_entropy,
            final_train_err01: tr.error01,
            final_test_err01: te.error01,
            gap: te.error01 - tr.error01,
            seed,
        })
    }
}

// Independent ChaCha streams derived from the one training seed.
const SHUFFLE_STREAM: u64 = 1;
const DROPOUT_STREAM: u64 = 2;
const AUGMENT_STREAM: u64 = 3;

fn stream(seed: u64, id: u64) -> SeededRng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(id);
    rng
}

/// SGD with momentum and L2 weight decay on mean cross-entropy.
///
/// Updates are `v ← momentum·v + (∇L + λw)`, `w ← w − η_t·v`. The train loss is
/// evaluated in eval mode after every epoch; a non-finite value aborts the run.
pub fn train(
    id: impl Into<String>,
    mut network: Network,
    train_data: &Dataset,
    test_data: &Dataset,
    config: &TrainConfig,
    hyperparams: HyperparamConfig,
) -> Result<ModelRecord> {
    config.validate()?;
    if train_data.is_empty() || test_data.is_empty() {
        return Err(Error::Config("training and test sets must be nonempty".into()));
    }
    let augmentation = Augmentation::for_shape(config.augmentation, train_data.sample_shape());
    let mut shuffle_rng = stream(config.seed, SHUFFLE_STREAM);
    let mut dropout_rng = stream(config.seed, DROPOUT_STREAM);
    let mut augment_rng = stream(config.seed, AUGMENT_STREAM);

    let omega = network.param_count();
    let mut velocity = vec![0.0; omega];
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let rate = config.learning_rate.rate_at(epoch);
        order.shuffle(&mut shuffle_rng);
        for batch_idx in order.chunks(config.batch_size) {
            let mut inputs = train_data.inputs().select_rows(batch_idx);
            let labels: Vec<usize> = batch_idx.iter().map(|&i| train_data.labels()[i]).collect();
            augmentation.apply(&mut inputs, &mut augment_rng);
            let (_, grad) = network.loss_and_gradient(&inputs, &labels, Mode::Train(&mut dropout_rng))?;
            let params = network.params_mut();
            for i in 0..omega {
                let g = grad[i] + config.weight_decay * params[i];
                velocity[i] = config.momentum * velocity[i] + g;
                params[i] -= rate * velocity[i];
            }
        }
        let loss = network.loss(train_data)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        log::trace!("epoch {epoch}: train ce {loss:.6}");
        epoch_losses.push(loss);
    }

    ModelRecord::evaluate(id, network, hyperparams, config.clone(), epoch_losses, train_data, test_data)
}
