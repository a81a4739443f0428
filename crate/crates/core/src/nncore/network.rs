use std::ops::Range;

use rand::{Rng, RngCore};

use super::loss;
use super::{Dataset, LayerSpec, Tensor};
use crate::{Error, Result};

/// Forward-pass mode. Dropout draws its masks from the carried RNG in train mode.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
}

/// Weight and optional bias of one parameterized layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weight: Tensor,
    pub bias: Option<Tensor>,
}

/// Loss and 0-1 error over a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub cross_entropy: f64,
    pub error01: f64,
}

/// Activations recorded during a forward pass, consumed by [`Network::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    /// `activations[i]` is the input of layer `i`; the last entry holds the logits.
    activations: Vec<Vec<f64>>,
    dropout_masks: Vec<Option<Vec<f64>>>,
}

impl ForwardCache {
    pub fn logits(&self) -> &[f64] {
        self.activations.last().expect("cache holds at least the input")
    }

    pub fn activation(&self, layer: usize) -> &[f64] {
        &self.activations[layer]
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// Output of a backward pass.
#[derive(Debug, Clone)]
pub struct Backward {
    /// Gradient with respect to the flat parameter vector.
    pub params: Vec<f64>,
    /// `inputs[i]` is the gradient with respect to the input of layer `i`,
    /// present for `i ≥ 1` always and for `i = 0` only when requested.
    pub inputs: Vec<Option<Vec<f64>>>,
}

/// Feedforward network whose parameters live in one flat vector.
///
/// Layer `i` owns `params[offsets[i]..offsets[i + 1]]`, weights first (row-major,
/// output-major) followed by the bias. This layout is the flat view used by the
/// pruning code and by the checkpoint payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    shapes: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

impl Network {
    /// Builds a network and draws He-uniform weights (`±sqrt(6 / fan_in)`); biases start at 0.
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>, rng: &mut impl Rng) -> Result<Self> {
        let mut net = Self::zeroed(input_shape, layers)?;
        for i in 0..net.layers.len() {
            let (w, _) = net.layers[i].param_split();
            if w == 0 {
                continue;
            }
            let bound = (6.0 / net.layers[i].fan_in() as f64).sqrt();
            let start = net.offsets[i];
            for p in &mut net.params[start..start + w] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    /// Builds a network from an existing flat parameter vector.
    pub fn from_params(input_shape: Vec<usize>, layers: Vec<LayerSpec>, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeroed(input_shape, layers)?;
        if params.len() != net.params.len() {
            return Err(Error::Shape(format!(
                "architecture has {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    fn zeroed(input_shape: Vec<usize>, layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        let mut shapes = vec![input_shape.clone()];
        let mut offsets = vec![0];
        for layer in &layers {
            let next = layer.output_shape(shapes.last().unwrap())?;
            shapes.push(next);
            offsets.push(offsets.last().unwrap() + layer.param_count());
        }
        if shapes.last().unwrap().len() != 1 {
            return Err(Error::Shape(format!(
                "final layer must produce a vector of logits, got {:?}",
                shapes.last().unwrap()
            )));
        }
        let omega = *offsets.last().unwrap();
        if omega == 0 {
            return Err(Error::Config("network has no parameters".into()));
        }
        Ok(Self { input_shape, layers, shapes, offsets, params: vec![0.0; omega] })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn classes(&self) -> usize {
        self.shapes.last().unwrap()[0]
    }

    /// Number of parameterized layers `d`.
    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| l.is_parameterized()).count()
    }

    /// Total scalar parameter count `ω`.
    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Fresh copy of this architecture carrying `params`.
    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        if params.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        Ok(Self { params, ..self.clone() })
    }

    /// Flat-vector range owned by layer `layer` (empty for unparameterized layers).
    pub fn layer_range(&self, layer: usize) -> Range<usize> {
        self.offsets[layer]..self.offsets[layer + 1]
    }

    /// Indices of the parameterized layers, in order.
    pub fn parameterized_layers(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.layers.len()).filter(|&i| self.layers[i].is_parameterized())
    }

    /// Input shape of layer `layer`; `layer == layers().len()` gives the output shape.
    pub fn shape_at(&self, layer: usize) -> &[usize] {
        &self.shapes[layer]
    }

    /// Position in the flat vector of local parameter `local` of layer `layer`.
    pub fn flat_index(&self, layer: usize, local: usize) -> Option<usize> {
        let r = self.layer_range(layer);
        (local < r.len()).then(|| r.start + local)
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn locate(&self, flat: usize) -> Option<(usize, usize)> {
        if flat >= self.params.len() {
            return None;
        }
        // offsets is nondecreasing; the owning layer is the last one starting at or before `flat`
        // with a nonempty range.
        let layer = (0..self.layers.len())
            .rev()
            .find(|&i| self.offsets[i] <= flat && flat < self.offsets[i + 1])?;
        Some((layer, flat - self.offsets[layer]))
    }

    /// Per-layer weight and bias tensors of the parameterized layers.
    pub fn layer_params(&self) -> Vec<LayerParams> {
        self.parameterized_layers()
            .map(|i| {
                let start = self.offsets[i];
                let (w, b) = self.layers[i].param_split();
                let weight_shape = match self.layers[i] {
                    LayerSpec::Dense { inputs, outputs, .. } => vec![outputs, inputs],
                    LayerSpec::Conv2d { in_channels, out_channels, kernel, .. } => {
                        vec![out_channels, in_channels, kernel, kernel]
                    }
                    _ => unreachable!(),
                };
                let weight = Tensor::new(weight_shape, self.params[start..start + w].to_vec())
                    .expect("layer shape matches its parameter count");
                let bias = (b > 0).then(|| {
                    Tensor::new(vec![b], self.params[start + w..start + w + b].to_vec())
                        .expect("bias length")
                });
                LayerParams { weight, bias }
            })
            .collect()
    }

    /// Replaces all parameters from per-layer tensors (inverse of [`layer_params`](Self::layer_params)).
    pub fn set_layer_params(&mut self, tensors: &[LayerParams]) -> Result<()> {
        let layers: Vec<usize> = self.parameterized_layers().collect();
        if layers.len() != tensors.len() {
            return Err(Error::Shape(format!(
                "expected {} layer tensors, got {}",
                layers.len(),
                tensors.len()
            )));
        }
        for (&i, t) in layers.iter().zip(tensors) {
            let (w, b) = self.layers[i].param_split();
            let bias_len = t.bias.as_ref().map_or(0, Tensor::len);
            if t.weight.len() != w || bias_len != b {
                return Err(Error::Shape(format!("layer {i} tensor sizes do not match")));
            }
            let start = self.offsets[i];
            self.params[start..start + w].copy_from_slice(t.weight.data());
            if let Some(bias) = &t.bias {
                self.params[start + w..start + w + b].copy_from_slice(bias.data());
            }
        }
        Ok(())
    }

    fn check_batch(&self, batch: &Tensor) -> Result<usize> {
        if batch.shape().len() != self.input_shape.len() + 1 || batch.shape()[1..] != self.input_shape[..] {
            return Err(Error::Shape(format!(
                "batch shape {:?} does not match network input {:?}",
                batch.shape(),
                self.input_shape
            )));
        }
        Ok(batch.rows())
    }

    /// Forward pass that keeps every intermediate activation.
    pub fn forward_cached(&self, batch: &Tensor, mut mode: Mode<'_>) -> Result<ForwardCache> {
        let n = self.check_batch(batch)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut dropout_masks = Vec::with_capacity(self.layers.len());
        activations.push(batch.data().to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let input = activations.last().unwrap();
            let params = &self.params[self.layer_range(i)];
            let in_shape = &self.shapes[i];
            let out_shape = &self.shapes[i + 1];
            let mut mask = None;
            let out = match *layer {
                LayerSpec::Dense { inputs, outputs, bias } => {
                    dense_forward(input, params, n, inputs, outputs, bias)
                }
                LayerSpec::Conv2d { stride, padding, kernel, bias, .. } => {
                    let geom = ConvGeom::new(in_shape, out_shape, kernel, stride, padding);
                    conv_forward(input, params, n, &geom, bias)
                }
                LayerSpec::Relu => input.iter().map(|&v| v.max(0.0)).collect(),
                LayerSpec::GlobalAvgPool => gap_forward(input, n, in_shape),
                LayerSpec::Dropout { rate } => match &mut mode {
                    Mode::Eval => input.clone(),
                    Mode::Train(rng) => {
                        let keep = 1.0 - rate;
                        let m: Vec<f64> = (0..input.len())
                            .map(|_| if rng.random::<f64>() >= rate { 1.0 / keep } else { 0.0 })
                            .collect();
                        let out = input.iter().zip(&m).map(|(x, k)| x * k).collect();
                        mask = Some(m);
                        out
                    }
                },
            };
            dropout_masks.push(mask);
            activations.push(out);
        }
        Ok(ForwardCache { batch: n, activations, dropout_masks })
    }

    /// Logits of shape `(batch, classes)`.
    pub fn forward(&self, batch: &Tensor, mode: Mode<'_>) -> Result<Tensor> {
        let cache = self.forward_cached(batch, mode)?;
        let n = cache.batch;
        let logits = cache.activations.into_iter().last().unwrap();
        Tensor::new(vec![n, self.classes()], logits)
    }

    /// Eval-mode logits.
    pub fn logits(&self, batch: &Tensor) -> Result<Tensor> {
        self.forward(batch, Mode::Eval)
    }

    /// Backpropagates `upstream` (the gradient with respect to the logits) through a cached pass.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64], want_input_grad: bool) -> Backward {
        let n = cache.batch;
        let mut grad = vec![0.0; self.params.len()];
        let mut inputs: Vec<Option<Vec<f64>>> = vec![None; self.layers.len()];
        let mut delta = upstream.to_vec();
        for i in (0..self.layers.len()).rev() {
            let x = &cache.activations[i];
            let range = self.layer_range(i);
            let params = &self.params[range.clone()];
            let g = &mut grad[range];
            let need_dx = i > 0 || want_input_grad;
            let in_shape = &self.shapes[i];
            let dx = match self.layers[i] {
                LayerSpec::Dense { inputs, outputs, bias } => {
                    dense_backward(x, params, &delta, g, n, inputs, outputs, bias, need_dx)
                }
                LayerSpec::Conv2d { stride, padding, kernel, bias, .. } => {
                    let geom = ConvGeom::new(in_shape, &self.shapes[i + 1], kernel, stride, padding);
                    conv_backward(x, params, &delta, g, n, &geom, bias, need_dx)
                }
                LayerSpec::Relu => x
                    .iter()
                    .zip(&delta)
                    .map(|(&xi, &d)| if xi > 0.0 { d } else { 0.0 })
                    .collect(),
                LayerSpec::GlobalAvgPool => gap_backward(&delta, n, in_shape),
                LayerSpec::Dropout { .. } => match &cache.dropout_masks[i] {
                    Some(m) => delta.iter().zip(m).map(|(d, k)| d * k).collect(),
                    None => delta.clone(),
                },
            };
            if need_dx {
                inputs[i] = Some(dx.clone());
            }
            delta = dx;
        }
        Backward { params: grad, inputs }
    }

    /// Mean cross-entropy and its gradient with respect to the flat parameters.
    pub fn loss_and_gradient(&self, batch: &Tensor, labels: &[usize], mode: Mode<'_>) -> Result<(f64, Vec<f64>)> {
        let cache = self.forward_cached(batch, mode)?;
        let logits = Tensor::new(vec![cache.batch, self.classes()], cache.logits().to_vec())?;
        let loss = loss::cross_entropy(&logits, labels)?;
        let upstream = loss::cross_entropy_grad(&logits, labels)?;
        Ok((loss, self.backward(&cache, &upstream, false).params))
    }

    /// Eval-mode gradient of the mean cross-entropy.
    pub fn gradient(&self, batch: &Tensor, labels: &[usize]) -> Result<Vec<f64>> {
        Ok(self.loss_and_gradient(batch, labels, Mode::Eval)?.1)
    }

    /// Eval-mode gradient of the mean cross-entropy over a whole dataset, chunked.
    pub fn dataset_gradient(&self, data: &Dataset) -> Result<Vec<f64>> {
        let m = data.len() as f64;
        let mut total = vec![0.0; self.params.len()];
        for (batch, labels) in data.chunks(EVAL_CHUNK) {
            let (_, g) = self.loss_and_gradient(&batch, labels, Mode::Eval)?;
            let w = labels.len() as f64 / m;
            total.iter_mut().zip(&g).for_each(|(t, gi)| *t += w * gi);
        }
        Ok(total)
    }

    /// Eval-mode cross-entropy and 0-1 error over a dataset.
    pub fn evaluate(&self, data: &Dataset) -> Result<Evaluation> {
        if data.is_empty() {
            return Err(Error::Config("cannot evaluate on an empty dataset".into()));
        }
        let mut ce = 0.0;
        let mut errors = 0;
        for (batch, labels) in data.chunks(EVAL_CHUNK) {
            let logits = self.logits(&batch)?;
            ce += loss::cross_entropy_sum(&logits, labels)?;
            errors += loss::error_count(&logits, labels)?;
        }
        let m = data.len() as f64;
        Ok(Evaluation { cross_entropy: ce / m, error01: errors as f64 / m })
    }

    /// Eval-mode mean cross-entropy over a dataset.
    pub fn loss(&self, data: &Dataset) -> Result<f64> {
        Ok(self.evaluate(data)?.cross_entropy)
    }
}

pub(crate) const EVAL_CHUNK: usize = 512;

fn dense_forward(x: &[f64], p: &[f64], n: usize, inputs: usize, outputs: usize, bias: bool) -> Vec<f64> {
    let (w, b) = p.split_at(inputs * outputs);
    let mut out = vec![0.0; n * outputs];
    for s in 0..n {
        let xs = &x[s * inputs..(s + 1) * inputs];
        for o in 0..outputs {
            let row = &w[o * inputs..(o + 1) * inputs];
            let dot: f64 = row.iter().zip(xs).map(|(a, b)| a * b).sum();
            out[s * outputs + o] = if bias { dot + b[o] } else { dot };
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn dense_backward(
    x: &[f64],
    p: &[f64],
    delta: &[f64],
    g: &mut [f64],
    n: usize,
    inputs: usize,
    outputs: usize,
    bias: bool,
    need_dx: bool,
) -> Vec<f64> {
    let (w, _) = p.split_at(inputs * outputs);
    let (gw, gb) = g.split_at_mut(inputs * outputs);
    for s in 0..n {
        let xs = &x[s * inputs..(s + 1) * inputs];
        for o in 0..outputs {
            let d = delta[s * outputs + o];
            if d == 0.0 {
                continue;
            }
            let row = &mut gw[o * inputs..(o + 1) * inputs];
            row.iter_mut().zip(xs).for_each(|(gi, xi)| *gi += d * xi);
            if bias {
                gb[o] += d;
            }
        }
    }
    if !need_dx {
        return Vec::new();
    }
    let mut dx = vec![0.0; n * inputs];
    for s in 0..n {
        let dxs = &mut dx[s * inputs..(s + 1) * inputs];
        for o in 0..outputs {
            let d = delta[s * outputs + o];
            if d == 0.0 {
                continue;
            }
            let row = &w[o * inputs..(o + 1) * inputs];
            dxs.iter_mut().zip(row).for_each(|(a, wi)| *a += d * wi);
        }
    }
    dx
}

struct ConvGeom {
    c: usize,
    h: usize,
    w: usize,
    o: usize,
    oh: usize,
    ow: usize,
    k: usize,
    stride: usize,
    pad: usize,
}

impl ConvGeom {
    fn new(input: &[usize], output: &[usize], k: usize, stride: usize, pad: usize) -> Self {
        Self {
            c: input[0],
            h: input[1],
            w: input[2],
            o: output[0],
            oh: output[1],
            ow: output[2],
            k,
            stride,
            pad,
        }
    }

    /// Input coordinate for an output position and kernel offset, if inside the image.
    #[inline]
    fn source(&self, out: usize, offset: usize, limit: usize) -> Option<usize> {
        (out * self.stride + offset).checked_sub(self.pad).filter(|&v| v < limit)
    }
}

fn conv_forward(x: &[f64], p: &[f64], n: usize, g: &ConvGeom, bias: bool) -> Vec<f64> {
    let wlen = g.o * g.c * g.k * g.k;
    let (w, b) = p.split_at(wlen);
    let in_len = g.c * g.h * g.w;
    let out_len = g.o * g.oh * g.ow;
    let mut out = vec![0.0; n * out_len];
    for s in 0..n {
        let xs = &x[s * in_len..(s + 1) * in_len];
        for o in 0..g.o {
            for oy in 0..g.oh {
                for ox in 0..g.ow {
                    let mut acc = if bias { b[o] } else { 0.0 };
                    for c in 0..g.c {
                        for ky in 0..g.k {
                            let Some(iy) = g.source(oy, ky, g.h) else { continue };
                            for kx in 0..g.k {
                                let Some(ix) = g.source(ox, kx, g.w) else { continue };
                                acc += w[((o * g.c + c) * g.k + ky) * g.k + kx] * xs[(c * g.h + iy) * g.w + ix];
                            }
                        }
                    }
                    out[s * out_len + (o * g.oh + oy) * g.ow + ox] = acc;
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    x: &[f64],
    p: &[f64],
    delta: &[f64],
    grad: &mut [f64],
    n: usize,
    g: &ConvGeom,
    bias: bool,
    need_dx: bool,
) -> Vec<f64> {
    let wlen = g.o * g.c * g.k * g.k;
    let w = &p[..wlen];
    let (gw, gb) = grad.split_at_mut(wlen);
    let in_len = g.c * g.h * g.w;
    let out_len = g.o * g.oh * g.ow;
    let mut dx = if need_dx { vec![0.0; n * in_len] } else { Vec::new() };
    for s in 0..n {
        let xs = &x[s * in_len..(s + 1) * in_len];
        for o in 0..g.o {
            for oy in 0..g.oh {
                for ox in 0..g.ow {
                    let d = delta[s * out_len + (o * g.oh + oy) * g.ow + ox];
                    if bias {
                        gb[o] += d;
                    }
                    for c in 0..g.c {
                        for ky in 0..g.k {
                            let Some(iy) = g.source(oy, ky, g.h) else { continue };
                            for kx in 0..g.k {
                                let Some(ix) = g.source(ox, kx, g.w) else { continue };
                                let wi = ((o * g.c + c) * g.k + ky) * g.k + kx;
                                let xi = (c * g.h + iy) * g.w + ix;
                                gw[wi] += d * xs[xi];
                                if need_dx {
                                    dx[s * in_len + xi] += d * w[wi];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    dx
}

fn gap_forward(x: &[f64], n: usize, shape: &[usize]) -> Vec<f64> {
    let (c, area) = (shape[0], shape[1] * shape[2]);
    let mut out = vec![0.0; n * c];
    for s in 0..n {
        for ch in 0..c {
            let start = (s * c + ch) * area;
            out[s * c + ch] = x[start..start + area].iter().sum::<f64>() / area as f64;
        }
    }
    out
}

fn gap_backward(delta: &[f64], n: usize, shape: &[usize]) -> Vec<f64> {
    let (c, area) = (shape[0], shape[1] * shape[2]);
    let mut dx = vec![0.0; n * c * area];
    for s in 0..n {
        for ch in 0..c {
            let d = delta[s * c + ch] / area as f64;
            let start = (s * c + ch) * area;
            dx[start..start + area].iter_mut().for_each(|v| *v = d);
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    fn identity_dense(k: usize) -> Network {
        let mut params = vec![0.0; k * k + k];
        for i in 0..k {
            params[i * k + i] = 1.0;
        }
        Network::from_params(vec![k], vec![LayerSpec::dense(k, k)], params).unwrap()
    }

    #[test]
    fn identity_layer_returns_input() {
        let net = identity_dense(3);
        let x = Tensor::from_rows(&[vec![0.5, -1.0, 2.0]]).unwrap();
        assert_eq!(net.logits(&x).unwrap().data(), x.data());
    }

    #[test]
    fn two_layer_hand_trace() {
        // W1 = [[1, 2], [-1, 0.5]], b1 = [0.5, -1]; relu; W2 = [[2, -1]], b2 = [0.25] then a zero class.
        let layers = vec![
            LayerSpec::dense(2, 2),
            LayerSpec::Relu,
            LayerSpec::Dense { inputs: 2, outputs: 2, bias: true },
        ];
        let params = vec![1.0, 2.0, -1.0, 0.5, 0.5, -1.0, 2.0, -1.0, 0.0, 3.0, 0.25, 0.0];
        let net = Network::from_params(vec![2], layers, params).unwrap();
        let x = Tensor::from_rows(&[vec![1.0, 3.0]]).unwrap();
        // h = relu([1 + 6 + 0.5, -1 + 1.5 - 1]) = [7.5, 0]
        // out = [2*7.5 - 0 + 0.25, 0 + 0 + 0] = [15.25, 0]
        let out = net.logits(&x).unwrap();
        assert_eq!(out.data(), &[15.25, 0.0]);
    }

    #[test]
    fn dropout_zero_matches_eval() {
        let mut rng = seeded_rng(3);
        let layers = vec![LayerSpec::dense(4, 6), LayerSpec::Relu, LayerSpec::Dropout { rate: 0.0 }, LayerSpec::dense(6, 3)];
        let net = Network::new(vec![4], layers, &mut rng).unwrap();
        let x = Tensor::from_rows(&[vec![0.1, 0.2, -0.3, 0.4], vec![1.0, -1.0, 0.0, 2.0]]).unwrap();
        let eval = net.logits(&x).unwrap();
        let train = net.forward(&x, Mode::Train(&mut rng)).unwrap();
        assert_eq!(eval, train);
    }

    #[test]
    fn dropout_is_active_only_in_train_mode() {
        let mut rng = seeded_rng(4);
        let layers = vec![LayerSpec::dense(4, 32), LayerSpec::Dropout { rate: 0.5 }, LayerSpec::dense(32, 2)];
        let net = Network::new(vec![4], layers, &mut rng).unwrap();
        let x = Tensor::from_rows(&[vec![1.0, 1.0, 1.0, 1.0]]).unwrap();
        assert_eq!(net.logits(&x).unwrap(), net.logits(&x).unwrap());
        assert_ne!(net.logits(&x).unwrap(), net.forward(&x, Mode::Train(&mut rng)).unwrap());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let net = identity_dense(3);
        let x = Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(net.logits(&x), Err(Error::Shape(_))));
        assert!(Network::from_params(vec![3], vec![LayerSpec::dense(4, 2)], vec![0.0; 10]).is_err());
    }

    #[test]
    fn flat_view_is_a_bijection() {
        let mut rng = seeded_rng(5);
        let layers = vec![
            LayerSpec::Conv2d { in_channels: 1, out_channels: 2, kernel: 3, stride: 1, padding: 1, bias: true },
            LayerSpec::Relu,
            LayerSpec::GlobalAvgPool,
            LayerSpec::dense(2, 3),
        ];
        let net = Network::new(vec![1, 4, 4], layers, &mut rng).unwrap();
        assert_eq!(net.depth(), 2);
        for flat in 0..net.param_count() {
            let (layer, local) = net.locate(flat).unwrap();
            assert_eq!(net.flat_index(layer, local), Some(flat));
        }
        assert!(net.locate(net.param_count()).is_none());
    }

    #[test]
    fn layer_tensor_round_trip() {
        let mut rng = seeded_rng(6);
        let layers = vec![LayerSpec::dense(3, 4), LayerSpec::Relu, LayerSpec::Dense { inputs: 4, outputs: 2, bias: false }];
        let net = Network::new(vec![3], layers, &mut rng).unwrap();
        let tensors = net.layer_params();
        assert_eq!(tensors[0].weight.shape(), &[4, 3]);
        assert!(tensors[1].bias.is_none());
        let mut other = net.with_params(vec![0.0; net.param_count()]).unwrap();
        other.set_layer_params(&tensors).unwrap();
        assert_eq!(other, net);
    }

    #[test]
    fn masked_out_weight_has_zero_gradient() {
        // Input feature 1 is always zero so its weights receive no gradient.
        let mut rng = seeded_rng(7);
        let net = Network::new(vec![2], vec![LayerSpec::dense(2, 3)], &mut rng).unwrap();
        let x = Tensor::from_rows(&[vec![0.7, 0.0], vec![-1.2, 0.0]]).unwrap();
        let g = net.gradient(&x, &[0, 2]).unwrap();
        for o in 0..3 {
            assert_eq!(g[o * 2 + 1], 0.0);
        }
    }
}
