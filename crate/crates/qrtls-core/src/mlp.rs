//! Dense softmax classifiers built from scratch: ReLU/Swish/Tanh
//! activations, inverted dropout on hidden layers, softmax cross-entropy,
//! and mini-batch SGD with momentum. Covers the NN / DNN / DNN-Shallow
//! baselines and the classical branch of the hybrid detector.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use core::fmt::Write as _;

// Inherent std float methods shadow this under cfg(test).
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlpError {
    #[error("input width {found} does not match layer width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("network needs at least input and output layers")]
    TooFewLayers,
    #[error("dropout rate {rate} must lie in [0, 1)")]
    BadDropout { rate: f64 },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("model text is malformed at line {line}: {reason}")]
    ParseError { line: usize, reason: String },
}

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Swish,
    Tanh,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Swish => "swish",
            Activation::Tanh => "tanh",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "swish" => Some(Activation::Swish),
            "tanh" => Some(Activation::Tanh),
            _ => None,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Value and exact derivative of the activation at `x`.
/// Swish is `x * sigmoid(x)`; its derivative at 0 is 1/2.
pub fn activation_eval(kind: Activation, x: f64) -> (f64, f64) {
    match kind {
        Activation::Relu => {
            if x > 0.0 {
                (x, 1.0)
            } else {
                (0.0, 0.0)
            }
        }
        Activation::Swish => {
            let s = sigmoid(x);
            (x * s, s + x * s * (1.0 - s))
        }
        Activation::Tanh => {
            let t = x.tanh();
            (t, 1.0 - t * t)
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Softmax cross-entropy loss and its gradient w.r.t. the raw scores
/// (`softmax - onehot`).
pub fn loss_softmax_ce(scores: &[f64], label: usize) -> Result<(f64, Vec<f64>), MlpError> {
    if label >= scores.len() {
        return Err(MlpError::LabelOutOfRange { label, classes: scores.len() });
    }
    let probs = softmax(scores);
    let loss = -(probs[label].max(1e-300)).ln();
    let mut grad = probs;
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Argmax with ties broken toward the lowest class index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A dense network: `layer_sizes` runs input -> hidden... -> class count.
/// Weights are row-major `[out][in]` per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub dropout_rate: f64,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Per-sample forward results cached for backpropagation.
pub struct ForwardCache {
    /// Layer inputs: activations[0] is the input row, one entry per layer
    /// after that (post-activation, post-dropout for hidden layers).
    activations: Vec<Vec<f64>>,
    /// Pre-activation sums per layer.
    pre_activations: Vec<Vec<f64>>,
    /// Inverted-dropout masks per hidden layer (empty in inference mode);
    /// kept units carry 1/(1-p), dropped units 0.
    masks: Vec<Vec<f64>>,
    pub scores: Vec<f64>,
}

/// Weight and bias gradients, same shapes as the model parameters.
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// SGD hyperparameters; `seed` drives the shuffle and dropout streams.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 40, batch_size: 32, learning_rate: 0.05, momentum: 0.9, seed: 0 }
    }
}

/// Momentum buffers carried across epochs.
pub struct SgdState {
    vel_w: Vec<Vec<f64>>,
    vel_b: Vec<Vec<f64>>,
    shuffle_rng: ChaCha20Rng,
    dropout_rng: ChaCha20Rng,
}

impl MlpModel {
    /// Seeded initialization: He-scaled Gaussians for ReLU/Swish, Xavier for
    /// Tanh; biases start at zero.
    pub fn new(
        layer_sizes: Vec<usize>,
        activation: Activation,
        dropout_rate: f64,
        seed: u64,
    ) -> Result<Self, MlpError> {
        if layer_sizes.len() < 2 {
            return Err(MlpError::TooFewLayers);
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(MlpError::BadDropout { rate: dropout_rate });
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let scale = match activation {
                Activation::Tanh => (1.0 / fan_in as f64).sqrt(),
                _ => (2.0 / fan_in as f64).sqrt(),
            };
            let w: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
                .collect();
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self { layer_sizes, activation, dropout_rate, weights, biases })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    fn layer_count(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Forward pass. `dropout_rng` enables training mode: hidden activations
    /// are masked with inverted dropout (kept units scaled by 1/(1-p)).
    /// Inference (`None`) is mask-free and deterministic.
    pub fn forward(
        &self,
        features: &[f64],
        dropout_rng: Option<&mut ChaCha20Rng>,
    ) -> Result<ForwardCache, MlpError> {
        if features.len() != self.input_width() {
            return Err(MlpError::WidthMismatch {
                expected: self.input_width(),
                found: features.len(),
            });
        }
        let mut rng = dropout_rng;
        let n_layers = self.layer_count();
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
        let mut pre_activations: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
        let mut masks: Vec<Vec<f64>> = Vec::new();
        activations.push(features.to_vec());
        for l in 0..n_layers {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let input = &activations[l];
            let mut z = self.biases[l].clone();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                *zo += row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
            }
            let is_output = l == n_layers - 1;
            if is_output {
                pre_activations.push(z.clone());
                activations.push(z);
            } else {
                let mut a: Vec<f64> =
                    z.iter().map(|&v| activation_eval(self.activation, v).0).collect();
                if self.dropout_rate > 0.0 {
                    if let Some(r) = rng.as_deref_mut() {
                        let keep = 1.0 - self.dropout_rate;
                        let mask: Vec<f64> = (0..n_out)
                            .map(|_| if r.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                            .collect();
                        for (av, m) in a.iter_mut().zip(&mask) {
                            *av *= m;
                        }
                        masks.push(mask);
                    }
                }
                pre_activations.push(z);
                activations.push(a);
            }
        }
        let scores = activations.last().expect("nonempty").clone();
        Ok(ForwardCache { activations, pre_activations, masks, scores })
    }

    /// Class scores in inference mode.
    pub fn scores(&self, features: &[f64]) -> Result<Vec<f64>, MlpError> {
        Ok(self.forward(features, None)?.scores)
    }

    /// Predicted label (lowest index wins ties) and softmax probabilities.
    pub fn predict(&self, features: &[f64]) -> Result<(usize, Vec<f64>), MlpError> {
        let scores = self.scores(features)?;
        let probs = softmax(&scores);
        Ok((argmax_lowest(&probs), probs))
    }

    /// Backpropagate a gradient w.r.t. the output scores through the cache.
    pub fn backward(&self, cache: &ForwardCache, score_grad: &[f64]) -> Gradients {
        let n_layers = self.layer_count();
        let mut grads = Gradients {
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        };
        let mut delta = score_grad.to_vec();
        for l in (0..n_layers).rev() {
            let n_in = self.layer_sizes[l];
            let input = &cache.activations[l];
            for (o, d) in delta.iter().enumerate() {
                grads.biases[l][o] += d;
                let row = &mut grads.weights[l][o * n_in..(o + 1) * n_in];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            if l == 0 {
                break;
            }
            // delta for the previous (hidden) layer: W^T delta, then the
            // dropout mask and the activation derivative.
            let mut prev = vec![0.0f64; n_in];
            for (o, d) in delta.iter().enumerate() {
                let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            let z = &cache.pre_activations[l - 1];
            for (i, p) in prev.iter_mut().enumerate() {
                let (_, dact) = activation_eval(self.activation, z[i]);
                *p *= dact;
                if let Some(mask) = cache.masks.get(l - 1) {
                    *p *= mask[i];
                }
            }
            delta = prev;
        }
        grads
    }

    /// Plain SGD step with externally accumulated gradients; used when the
    /// loss gradient flows in from a downstream head (hybrid fine-tune).
    pub fn apply_gradients(&mut self, grad_w: &[Vec<f64>], grad_b: &[Vec<f64>], scale: f64) {
        for (w, g) in self.weights.iter_mut().zip(grad_w) {
            for (wv, gv) in w.iter_mut().zip(g) {
                *wv -= scale * gv;
            }
        }
        for (b, g) in self.biases.iter_mut().zip(grad_b) {
            for (bv, gv) in b.iter_mut().zip(g) {
                *bv -= scale * gv;
            }
        }
    }

    /// Start momentum/shuffle/dropout state for a training run.
    pub fn start_training(&self, config: &TrainConfig) -> SgdState {
        SgdState {
            vel_w: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            vel_b: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            shuffle_rng: seeds::stream_rng(config.seed, "mlp-shuffle"),
            dropout_rng: seeds::stream_rng(config.seed, "mlp-dropout"),
        }
    }

    /// One epoch of mini-batch SGD with momentum over a seeded shuffle;
    /// returns the mean per-sample loss.
    pub fn train_epoch(
        &mut self,
        data: &Dataset,
        config: &TrainConfig,
        state: &mut SgdState,
    ) -> Result<f64, MlpError> {
        if data.is_empty() {
            return Err(MlpError::EmptyDataset);
        }
        let n = data.len();
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = state.shuffle_rng.random_range(0..=i);
            order.swap(i, j);
        }
        let batch_size = config.batch_size.max(1);
        let mut total_loss = 0.0;
        for batch in order.chunks(batch_size) {
            let mut acc_w: Vec<Vec<f64>> =
                self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
            let mut acc_b: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
            for &idx in batch {
                let (features, label) = data.sample(idx);
                let cache = self.forward(features, Some(&mut state.dropout_rng))?;
                let (loss, score_grad) = loss_softmax_ce(&cache.scores, label)?;
                total_loss += loss;
                let grads = self.backward(&cache, &score_grad);
                for (acc, g) in acc_w.iter_mut().zip(&grads.weights) {
                    for (a, v) in acc.iter_mut().zip(g) {
                        *a += v;
                    }
                }
                for (acc, g) in acc_b.iter_mut().zip(&grads.biases) {
                    for (a, v) in acc.iter_mut().zip(g) {
                        *a += v;
                    }
                }
            }
            let inv = 1.0 / batch.len() as f64;
            for l in 0..self.weights.len() {
                for k in 0..self.weights[l].len() {
                    let v = config.momentum * state.vel_w[l][k]
                        - config.learning_rate * acc_w[l][k] * inv;
                    state.vel_w[l][k] = v;
                    self.weights[l][k] += v;
                }
                for k in 0..self.biases[l].len() {
                    let v = config.momentum * state.vel_b[l][k]
                        - config.learning_rate * acc_b[l][k] * inv;
                    state.vel_b[l][k] = v;
                    self.biases[l][k] += v;
                }
            }
        }
        Ok(total_loss / n as f64)
    }

    /// Full training run; returns the per-epoch loss curve.
    pub fn train(&mut self, data: &Dataset, config: &TrainConfig) -> Result<Vec<f64>, MlpError> {
        let mut state = self.start_training(config);
        let mut losses = Vec::with_capacity(config.epochs);
        for _ in 0..config.epochs {
            losses.push(self.train_epoch(data, config, &mut state)?);
        }
        Ok(losses)
    }

    /// Versioned plain-text parameter dump: a header with layer sizes,
    /// activation and dropout, then per layer a `W r c` block of row-major
    /// weight rows and a `b n` line. Floats print in shortest round-trip
    /// form, so save/load is exact.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("mlp v1\n");
        out.push_str("layers");
        for s in &self.layer_sizes {
            let _ = write!(out, " {s}");
        }
        out.push('\n');
        let _ = writeln!(out, "activation {}", self.activation.name());
        let _ = writeln!(out, "dropout {}", self.dropout_rate);
        for l in 0..self.layer_count() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let _ = writeln!(out, "W {n_out} {n_in}");
            for o in 0..n_out {
                let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                let mut first = true;
                for w in row {
                    if !first {
                        out.push(' ');
                    }
                    let _ = write!(out, "{w}");
                    first = false;
                }
                out.push('\n');
            }
            let _ = writeln!(out, "b {n_out}");
            let mut first = true;
            for b in &self.biases[l] {
                if !first {
                    out.push(' ');
                }
                let _ = write!(out, "{b}");
                first = false;
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, MlpError> {
        let err = |line: usize, reason: &str| MlpError::ParseError {
            line,
            reason: String::from(reason),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty input"))?;
        if header.trim() != "mlp v1" {
            return Err(err(1, "expected header 'mlp v1'"));
        }
        let (ln, layers_line) = lines.next().ok_or_else(|| err(2, "missing layers line"))?;
        let mut parts = layers_line.split_whitespace();
        if parts.next() != Some("layers") {
            return Err(err(ln + 1, "expected 'layers ...'"));
        }
        let layer_sizes: Vec<usize> = parts
            .map(|p| p.parse().map_err(|_| err(ln + 1, "bad layer size")))
            .collect::<Result<_, _>>()?;
        if layer_sizes.len() < 2 {
            return Err(err(ln + 1, "need at least two layer sizes"));
        }
        let (ln, act_line) = lines.next().ok_or_else(|| err(3, "missing activation"))?;
        let act_name = act_line
            .strip_prefix("activation ")
            .ok_or_else(|| err(ln + 1, "expected 'activation <name>'"))?;
        let activation =
            Activation::parse(act_name.trim()).ok_or_else(|| err(ln + 1, "unknown activation"))?;
        let (ln, drop_line) = lines.next().ok_or_else(|| err(4, "missing dropout"))?;
        let dropout_rate: f64 = drop_line
            .strip_prefix("dropout ")
            .and_then(|d| d.trim().parse().ok())
            .ok_or_else(|| err(ln + 1, "expected 'dropout <rate>'"))?;

        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..layer_sizes.len() - 1 {
            let (n_in, n_out) = (layer_sizes[l], layer_sizes[l + 1]);
            let (ln, w_head) = lines.next().ok_or_else(|| err(0, "missing W block"))?;
            if w_head.trim() != format!("W {n_out} {n_in}") {
                return Err(err(ln + 1, "bad W block header"));
            }
            let mut w = Vec::with_capacity(n_in * n_out);
            for _ in 0..n_out {
                let (ln, row) = lines.next().ok_or_else(|| err(0, "missing weight row"))?;
                let values: Vec<f64> = row
                    .split_whitespace()
                    .map(|v| v.parse().map_err(|_| err(ln + 1, "bad weight value")))
                    .collect::<Result<_, _>>()?;
                if values.len() != n_in {
                    return Err(err(ln + 1, "wrong weight row width"));
                }
                w.extend(values);
            }
            weights.push(w);
            let (ln, b_head) = lines.next().ok_or_else(|| err(0, "missing b block"))?;
            if b_head.trim() != format!("b {n_out}") {
                return Err(err(ln + 1, "bad b block header"));
            }
            let (ln, b_row) = lines.next().ok_or_else(|| err(0, "missing bias row"))?;
            let b: Vec<f64> = b_row
                .split_whitespace()
                .map(|v| v.parse().map_err(|_| err(ln + 1, "bad bias value")))
                .collect::<Result<_, _>>()?;
            if b.len() != n_out {
                return Err(err(ln + 1, "wrong bias width"));
            }
            biases.push(b);
        }
        Ok(Self { layer_sizes, activation, dropout_rate, weights, biases })
    }
}
