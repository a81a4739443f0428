use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One layer of a feedforward network. Shapes are per sample (no batch axis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    /// Fully connected layer; flattens any input of `inputs` elements.
    Dense {
        inputs: usize,
        outputs: usize,
        #[serde(default = "default_true")]
        bias: bool,
    },
    /// 2-D convolution over `(channels, height, width)` inputs.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        #[serde(default)]
        padding: usize,
        #[serde(default = "default_true")]
        bias: bool,
    },
    Relu,
    /// Mean over the spatial axes: `(c, h, w) -> (c)`.
    GlobalAvgPool,
    /// Inverted dropout; the identity in eval mode.
    Dropout { rate: f64 },
}

fn default_true() -> bool {
    true
}

impl LayerSpec {
    pub fn dense(inputs: usize, outputs: usize) -> Self {
        LayerSpec::Dense { inputs, outputs, bias: true }
    }

    pub fn is_parameterized(&self) -> bool {
        matches!(self, LayerSpec::Dense { .. } | LayerSpec::Conv2d { .. })
    }

    /// `(weight count, bias count)`.
    pub fn param_split(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Dense { inputs, outputs, bias } => {
                (inputs * outputs, if bias { outputs } else { 0 })
            }
            LayerSpec::Conv2d { in_channels, out_channels, kernel, bias, .. } => (
                out_channels * in_channels * kernel * kernel,
                if bias { out_channels } else { 0 },
            ),
            _ => (0, 0),
        }
    }

    pub fn param_count(&self) -> usize {
        let (w, b) = self.param_split();
        w + b
    }

    /// Fan-in used by the weight initializer.
    pub fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Dense { inputs, .. } => inputs,
            LayerSpec::Conv2d { in_channels, kernel, .. } => in_channels * kernel * kernel,
            _ => 0,
        }
    }

    /// Output shape for a given input shape, or a configuration error.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let numel: usize = input.iter().product();
        match *self {
            LayerSpec::Dense { inputs, outputs, .. } => {
                if numel != inputs {
                    return Err(Error::Shape(format!(
                        "dense layer expects {inputs} inputs, got shape {input:?}"
                    )));
                }
                Ok(vec![outputs])
            }
            LayerSpec::Conv2d { in_channels, out_channels, kernel, stride, padding, .. } => {
                let [c, h, w] = input else {
                    return Err(Error::Shape(format!("conv2d expects (c,h,w), got {input:?}")));
                };
                if *c != in_channels {
                    return Err(Error::Shape(format!(
                        "conv2d expects {in_channels} channels, got {c}"
                    )));
                }
                if stride == 0 || kernel == 0 {
                    return Err(Error::Config("conv2d kernel and stride must be positive".into()));
                }
                if h + 2 * padding < kernel || w + 2 * padding < kernel {
                    return Err(Error::Shape(format!(
                        "conv2d kernel {kernel} larger than padded input {input:?}"
                    )));
                }
                let oh = (h + 2 * padding - kernel) / stride + 1;
                let ow = (w + 2 * padding - kernel) / stride + 1;
                Ok(vec![out_channels, oh, ow])
            }
            LayerSpec::Relu => Ok(input.to_vec()),
            LayerSpec::GlobalAvgPool => match input {
                [c, h, w] if h * w > 0 => Ok(vec![*c]),
                _ => Err(Error::Shape(format!("global-avg-pool expects (c,h,w), got {input:?}"))),
            },
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(&rate) {
                    return Err(Error::Config(format!("dropout rate {rate} outside [0,1)")));
                }
                Ok(input.to_vec())
            }
        }
    }
}
