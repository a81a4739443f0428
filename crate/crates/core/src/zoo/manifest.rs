use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dataset::{DatasetSpec, SyntheticSpec};
use crate::evalstats::HyperparamConfig;
use crate::measures::{MeasureConfig, MeasureKind};
use crate::nncore::{mlp_layers, LayerSpec, LrSchedule};
use crate::{Error, Result, TrainConfig};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Named value lists whose Cartesian product is the model grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub widths: Vec<usize>,
    pub depths: Vec<usize>,
    pub dropouts: Vec<f64>,
    pub weight_decays: Vec<f64>,
    pub augmentations: Vec<bool>,
    pub seeds: Vec<u64>,
}

impl SweepAxes {
    pub fn model_count(&self) -> usize {
        self.widths.len()
            * self.depths.len()
            * self.dropouts.len()
            * self.weight_decays.len()
            * self.augmentations.len()
            * self.seeds.len()
    }

    /// Grid points in row-major order, seed varying fastest.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.model_count());
        for &width in &self.widths {
            for &depth in &self.depths {
                for &dropout in &self.dropouts {
                    for &weight_decay in &self.weight_decays {
                        for &augmentation in &self.augmentations {
                            for &seed in &self.seeds {
                                out.push(GridPoint { width, depth, dropout, weight_decay, augmentation, seed });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Training settings shared by every model of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTemplate {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: LrSchedule,
    #[serde(default)]
    pub momentum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub width: usize,
    pub depth: usize,
    pub dropout: f64,
    pub weight_decay: f64,
    pub augmentation: bool,
    pub seed: u64,
}

impl GridPoint {
    pub fn model_id(&self) -> String {
        format!(
            "w{}-d{}-p{}-wd{}-aug{}-s{}",
            self.width,
            self.depth,
            self.dropout,
            self.weight_decay,
            u8::from(self.augmentation),
            self.seed
        )
    }

    pub fn hyperparams(&self) -> HyperparamConfig {
        HyperparamConfig::default()
            .with("width", self.width as f64)
            .with("depth", self.depth as f64)
            .with("dropout", self.dropout)
            .with("weight_decay", self.weight_decay)
            .with("augmentation", f64::from(u8::from(self.augmentation)))
            .with("seed", self.seed as f64)
    }

    pub fn train_config(&self, template: &TrainTemplate) -> TrainConfig {
        TrainConfig {
            epochs: template.epochs,
            batch_size: template.batch_size,
            learning_rate: template.learning_rate.clone(),
            momentum: template.momentum,
            weight_decay: self.weight_decay,
            augmentation: self.augmentation,
            seed: self.seed,
        }
    }

    pub fn layers(&self, inputs: usize, classes: usize) -> Vec<LayerSpec> {
        mlp_layers(inputs, self.width, self.depth, self.dropout, classes)
    }
}

/// Content-addressed checkpoint file name for a model of a manifest.
pub fn checkpoint_name(manifest_id: &str, model_id: &str) -> String {
    let digest = Sha256::digest(format!("{manifest_id}\n{model_id}").as_bytes());
    format!("{}.ckpt", &hex::encode(digest)[..24])
}

fn default_failure_cap() -> f64 {
    0.2
}

/// A versioned sweep description, stored as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub schema_version: u32,
    pub manifest_id: String,
    pub dataset: DatasetSpec,
    pub axes: SweepAxes,
    pub train: TrainTemplate,
    pub measures: Vec<MeasureKind>,
    #[serde(default)]
    pub measure_config: MeasureConfig,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub workers: usize,
    /// Largest tolerated fraction of failed trainings.
    #[serde(default = "default_failure_cap")]
    pub failure_cap: f64,
}

impl SweepManifest {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Schema {
                location: "schema_version".into(),
                message: format!("expected {MANIFEST_SCHEMA_VERSION}, found {}", self.schema_version),
            });
        }
        if self.manifest_id.is_empty() || self.manifest_id.contains([',', '\n', '/']) {
            return Err(Error::Config("manifest_id must be nonempty without ',', '/' or newlines".into()));
        }
        if self.axes.model_count() == 0 {
            return Err(Error::Config("the model grid is empty".into()));
        }
        if self.axes.dropouts.iter().any(|p| !(0.0..1.0).contains(p)) {
            return Err(Error::Config("dropout rates must lie in [0,1)".into()));
        }
        if self.axes.widths.contains(&0) {
            return Err(Error::Config("widths must be positive".into()));
        }
        if self.measures.is_empty() {
            return Err(Error::Config("no measures configured".into()));
        }
        if !(0.0..=1.0).contains(&self.failure_cap) {
            return Err(Error::Config("failure cap must lie in [0,1]".into()));
        }
        self.dataset.validate()?;
        self.measure_config.prunability.validate()?;
        self.measure_config.perturbation.validate()?;
        let probe = self.axes.points()[0];
        probe.train_config(&self.train).validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)
            .map_err(|e| Error::Schema { location: format!("line {} column {}", e.line(), e.column()), message: e.to_string() })?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    fn synthetic_data() -> SyntheticSpec {
        SyntheticSpec {
            classes: 4,
            dim: 16,
            m_train: 256,
            m_test: 1024,
            separation: 0.6,
            noise: 1.0,
            label_noise: 0.1,
            seed: 0,
        }
    }

    fn template() -> TrainTemplate {
        TrainTemplate {
            epochs: 40,
            batch_size: 32,
            learning_rate: LrSchedule { initial: 0.05, decay_epochs: vec![30], decay_factor: 0.1 },
            momentum: 0.9,
        }
    }

    /// The 216-model default sweep.
    pub fn miniature() -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            manifest_id: "miniature-216".into(),
            dataset: DatasetSpec::SyntheticGaussianMixture(Self::synthetic_data()),
            axes: SweepAxes {
                widths: vec![16, 32, 64],
                depths: vec![1, 2, 3],
                dropouts: vec![0.0, 0.2, 0.5],
                weight_decays: vec![0.0, 1e-3],
                augmentations: vec![false, true],
                seeds: vec![0, 1],
            },
            train: Self::template(),
            measures: MeasureKind::sweep_defaults(),
            measure_config: MeasureConfig::default(),
            workers: 0,
            failure_cap: default_failure_cap(),
        }
    }

    /// A 36-model grid for quick runs.
    pub fn fast() -> Self {
        let mut m = Self::miniature();
        m.manifest_id = "fast-36".into();
        m.axes = SweepAxes {
            widths: vec![16, 32, 64],
            depths: vec![1],
            dropouts: vec![0.0, 0.2, 0.5],
            weight_decays: vec![0.0, 1e-3],
            augmentations: vec![false, true],
            seeds: vec![0],
        };
        m.train.epochs = 20;
        m.train.learning_rate.decay_epochs = vec![15];
        m
    }
}
