//! Feedforward network engine: tensors, layers, exact backprop and training.

pub mod checkpoint;
mod data;
mod layer;
pub mod loss;
mod network;
mod tensor;
mod train;

pub use data::Dataset;
pub use layer::LayerSpec;
pub use loss::{cross_entropy, error01, softmax};
pub use network::{Backward, Evaluation, ForwardCache, LayerParams, Mode, Network};
pub use tensor::Tensor;
pub use train::{train, Augmentation, LrSchedule, ModelRecord, TrainConfig};

/// Multilayer perceptron: `depth` hidden blocks of `dense -> relu [-> dropout]`, then a dense head.
pub fn mlp_layers(inputs: usize, width: usize, depth: usize, dropout: f64, classes: usize) -> Vec<LayerSpec> {
    let mut layers = Vec::with_capacity(3 * depth + 1);
    let mut fan_in = inputs;
    for _ in 0..depth {
        layers.push(LayerSpec::dense(fan_in, width));
        layers.push(LayerSpec::Relu);
        if dropout > 0.0 {
            layers.push(LayerSpec::Dropout { rate: dropout });
        }
        fan_in = width;
    }
    layers.push(LayerSpec::dense(fan_in, classes));
    layers
}
