//! Hybrid detector: a VQC branch and an MLP branch joined by a trainable
//! confidence-weighted fusion layer.
//!
//! The fusion input is the concatenation of the MLP's pre-softmax class
//! scores with the VQC's per-qubit Z expectations; an affine map over that
//! concatenation produces the fused class scores. Training runs in phases:
//! both branches independently first, then the fusion layer over frozen
//! branches, then an optional joint fine-tune in which VQC parameters move
//! by parameter shift and the MLP by backpropagation through the fusion.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::mlp::{argmax_lowest, loss_softmax_ce, softmax, MlpError, MlpModel, TrainConfig};
use crate::seeds;
use crate::vqc::{param_shift_grad, vqc_scores, VqcError, VqcModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("fusion expects {expected} inputs, got {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Vqc(#[from] VqcError),
}

/// Everything one fused inference produces; both branch score vectors are
/// kept for interpretability overlays.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutput {
    pub label: usize,
    pub probabilities: Vec<f64>,
    pub mlp_scores: Vec<f64>,
    pub vqc_scores: Vec<f64>,
}

/// Phase schedule and hyperparameters for hybrid training.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridTrainConfig {
    /// Phase 1a: classical branch.
    pub mlp: TrainConfig,
    /// Phase 1b: quantum branch (trained against an auxiliary linear head
    /// that is discarded once the fusion layer takes over).
    pub vqc_epochs: usize,
    pub vqc_learning_rate: f64,
    /// Phase 2: fusion layer over frozen branches.
    pub fusion_epochs: usize,
    pub fusion_learning_rate: f64,
    /// Phase 3 (optional, 0 disables): joint fine-tune of everything.
    pub fine_tune_epochs: usize,
    pub fine_tune_learning_rate: f64,
    pub seed: u64,
}

impl Default for HybridTrainConfig {
    fn default() -> Self {
        Self {
            mlp: TrainConfig::default(),
            vqc_epochs: 10,
            vqc_learning_rate: 0.1,
            fusion_epochs: 60,
            fusion_learning_rate: 0.1,
            fine_tune_epochs: 0,
            fine_tune_learning_rate: 0.01,
            seed: 0,
        }
    }
}

/// Per-phase loss curves from one hybrid training run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HybridTrainLog {
    pub mlp_losses: Vec<f64>,
    pub vqc_losses: Vec<f64>,
    pub fusion_losses: Vec<f64>,
    pub fine_tune_losses: Vec<f64>,
}

/// The hybrid model: both branches plus the fusion affine map
/// (`classes x (classes + n_qubits)` weights, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    pub vqc: VqcModel,
    pub mlp: MlpModel,
    fusion_weights: Vec<f64>,
    fusion_bias: Vec<f64>,
}

impl HybridModel {
    /// Build with the fusion layer wired as an identity passthrough of the
    /// MLP score slice (zeros over the VQC slice). Training moves weight
    /// onto the quantum branch only where it helps, so the classical branch
    /// is the starting prior.
    pub fn new(vqc: VqcModel, mlp: MlpModel) -> Self {
        let k = mlp.n_classes();
        let width = k + vqc.n_qubits();
        let mut fusion_weights = vec![0.0; k * width];
        for c in 0..k {
            fusion_weights[c * width + c] = 1.0;
        }
        Self { vqc, mlp, fusion_weights, fusion_bias: vec![0.0; k] }
    }

    /// Explicit fusion parameters (shape-checked); used by tests and
    /// persistence.
    pub fn with_fusion(
        vqc: VqcModel,
        mlp: MlpModel,
        fusion_weights: Vec<f64>,
        fusion_bias: Vec<f64>,
    ) -> Result<Self, FusionError> {
        let k = mlp.n_classes();
        let width = k + vqc.n_qubits();
        if fusion_weights.len() != k * width {
            return Err(FusionError::WidthMismatch {
                expected: k * width,
                found: fusion_weights.len(),
            });
        }
        if fusion_bias.len() != k {
            return Err(FusionError::WidthMismatch { expected: k, found: fusion_bias.len() });
        }
        Ok(Self { vqc, mlp, fusion_weights, fusion_bias })
    }

    pub fn fusion_weights(&self) -> &[f64] {
        &self.fusion_weights
    }

    pub fn fusion_bias(&self) -> &[f64] {
        &self.fusion_bias
    }

    pub fn n_classes(&self) -> usize {
        self.mlp.n_classes()
    }

    fn fusion_width(&self) -> usize {
        self.n_classes() + self.vqc.n_qubits()
    }

    fn fused_scores(&self, concat: &[f64]) -> Vec<f64> {
        let k = self.n_classes();
        let width = self.fusion_width();
        let mut z = self.fusion_bias.clone();
        for (c, zc) in z.iter_mut().enumerate() {
            let row = &self.fusion_weights[c * width..(c + 1) * width];
            *zc += row.iter().zip(concat).map(|(w, x)| w * x).sum::<f64>();
        }
        debug_assert_eq!(z.len(), k);
        z
    }

    /// Run both branches and the fusion head on one normalized feature row.
    pub fn fuse_forward(&self, features: &[f64]) -> Result<FusionOutput, FusionError> {
        let mlp_scores = self.mlp.scores(features)?;
        let vqc_out = vqc_scores(&self.vqc, features)?;
        let concat: Vec<f64> = mlp_scores.iter().chain(vqc_out.iter()).copied().collect();
        let fused = self.fused_scores(&concat);
        let probabilities = softmax(&fused);
        Ok(FusionOutput {
            label: argmax_lowest(&probabilities),
            probabilities,
            mlp_scores,
            vqc_scores: vqc_out,
        })
    }

    /// Batch inference.
    pub fn predict(&self, data: &Dataset) -> Result<Vec<usize>, FusionError> {
        data.features().iter().map(|row| Ok(self.fuse_forward(row)?.label)).collect()
    }

    /// Full phased training; see [`HybridTrainConfig`].
    pub fn train(
        &mut self,
        data: &Dataset,
        config: &HybridTrainConfig,
    ) -> Result<HybridTrainLog, FusionError> {
        if data.is_empty() {
            return Err(FusionError::EmptyDataset);
        }
        let mut log = HybridTrainLog::default();

        // Phase 1a: classical branch. Independent of phase 1b, so the two
        // could run concurrently; they touch disjoint state.
        log.mlp_losses = self.mlp.train(data, &config.mlp)?;

        // Phase 1b: quantum branch against an auxiliary head.
        log.vqc_losses = self.train_vqc_branch(data, config)?;

        // Phase 2: fusion over frozen branches. Branch outputs are fixed,
        // so they are precomputed once.
        log.fusion_losses = self.train_fusion(data, config)?;

        // Phase 3: optional joint fine-tune.
        if config.fine_tune_epochs > 0 {
            log.fine_tune_losses = self.fine_tune(data, config)?;
        }
        Ok(log)
    }

    fn train_vqc_branch(
        &mut self,
        data: &Dataset,
        config: &HybridTrainConfig,
    ) -> Result<Vec<f64>, FusionError> {
        let k = self.n_classes();
        let nq = self.vqc.n_qubits();
        let mut head_rng = seeds::stream_rng(config.seed, "vqc-head");
        let mut aux_w: Vec<f64> =
            (0..k * nq).map(|_| head_rng.sample::<f64, _>(StandardNormal) * 0.1).collect();
        let mut aux_b = vec![0.0f64; k];
        let mut shuffle_rng = seeds::stream_rng(config.seed, "vqc-shuffle");
        let lr = config.vqc_learning_rate;
        let batch_size = config.mlp.batch_size.max(1);
        let mut losses = Vec::with_capacity(config.vqc_epochs);
        for _ in 0..config.vqc_epochs {
            let mut order: Vec<usize> = (0..data.len()).collect();
            for i in (1..order.len()).rev() {
                let j = shuffle_rng.random_range(0..=i);
                order.swap(i, j);
            }
            let mut epoch_loss = 0.0;
            for batch in order.chunks(batch_size) {
                let mut acc_params = vec![0.0f64; self.vqc.params().len()];
                let mut acc_w = vec![0.0f64; aux_w.len()];
                let mut acc_b = vec![0.0f64; k];
                for &idx in batch {
                    let (features, label) = data.sample(idx);
                    let e = vqc_scores(&self.vqc, features)?;
                    let mut scores = aux_b.clone();
                    for (c, sc) in scores.iter_mut().enumerate() {
                        *sc += aux_w[c * nq..(c + 1) * nq]
                            .iter()
                            .zip(&e)
                            .map(|(w, x)| w * x)
                            .sum::<f64>();
                    }
                    let (loss, dz) = loss_softmax_ce(&scores, label)?;
                    epoch_loss += loss;
                    let mut downstream = vec![0.0f64; nq];
                    for (c, d) in dz.iter().enumerate() {
                        for q in 0..nq {
                            acc_w[c * nq + q] += d * e[q];
                            downstream[q] += d * aux_w[c * nq + q];
                        }
                        acc_b[c] += d;
                    }
                    let pgrad = param_shift_grad(&self.vqc, features, &downstream)?;
                    for (a, g) in acc_params.iter_mut().zip(&pgrad) {
                        *a += g;
                    }
                }
                let inv = 1.0 / batch.len() as f64;
                for (p, g) in self.vqc.params_mut().iter_mut().zip(&acc_params) {
                    *p -= lr * g * inv;
                }
                for (w, g) in aux_w.iter_mut().zip(&acc_w) {
                    *w -= lr * g * inv;
                }
                for (b, g) in aux_b.iter_mut().zip(&acc_b) {
                    *b -= lr * g * inv;
                }
            }
            losses.push(epoch_loss / data.len() as f64);
        }
        Ok(losses)
    }

    fn train_fusion(
        &mut self,
        data: &Dataset,
        config: &HybridTrainConfig,
    ) -> Result<Vec<f64>, FusionError> {
        let width = self.fusion_width();
        let k = self.n_classes();
        let concats: Vec<Vec<f64>> = data
            .features()
            .iter()
            .map(|row| {
                let m = self.mlp.scores(row)?;
                let v = vqc_scores(&self.vqc, row)?;
                Ok(m.into_iter().chain(v).collect())
            })
            .collect::<Result<_, FusionError>>()?;
        let mut shuffle_rng = seeds::stream_rng(config.seed, "fusion-shuffle");
        let lr = config.fusion_learning_rate;
        let batch_size = config.mlp.batch_size.max(1);
        let mut losses = Vec::with_capacity(config.fusion_epochs);
        for _ in 0..config.fusion_epochs {
            let mut order: Vec<usize> = (0..data.len()).collect();
            for i in (1..order.len()).rev() {
                let j = shuffle_rng.random_range(0..=i);
                order.swap(i, j);
            }
            let mut epoch_loss = 0.0;
            for batch in order.chunks(batch_size) {
                let mut acc_w = vec![0.0f64; self.fusion_weights.len()];
                let mut acc_b = vec![0.0f64; k];
                for &idx in batch {
                    let concat = &concats[idx];
                    let label = data.labels()[idx];
                    let scores = self.fused_scores(concat);
                    let (loss, dz) = loss_softmax_ce(&scores, label)?;
                    epoch_loss += loss;
                    for (c, d) in dz.iter().enumerate() {
                        for (x, a) in
                            concat.iter().zip(&mut acc_w[c * width..(c + 1) * width])
                        {
                            *a += d * x;
                        }
                        acc_b[c] += d;
                    }
                }
                let inv = 1.0 / batch.len() as f64;
                for (w, g) in self.fusion_weights.iter_mut().zip(&acc_w) {
                    *w -= lr * g * inv;
                }
                for (b, g) in self.fusion_bias.iter_mut().zip(&acc_b) {
                    *b -= lr * g * inv;
                }
            }
            losses.push(epoch_loss / data.len() as f64);
        }
        Ok(losses)
    }

    fn fine_tune(
        &mut self,
        data: &Dataset,
        config: &HybridTrainConfig,
    ) -> Result<Vec<f64>, FusionError> {
        let width = self.fusion_width();
        let k = self.n_classes();
        let nq = self.vqc.n_qubits();
        let lr = config.fine_tune_learning_rate;
        let batch_size = config.mlp.batch_size.max(1);
        let mut shuffle_rng = seeds::stream_rng(config.seed, "fine-tune-shuffle");
        let mut losses = Vec::with_capacity(config.fine_tune_epochs);
        for _ in 0..config.fine_tune_epochs {
            let mut order: Vec<usize> = (0..data.len()).collect();
            for i in (1..order.len()).rev() {
                let j = shuffle_rng.random_range(0..=i);
                order.swap(i, j);
            }
            let mut epoch_loss = 0.0;
            for batch in order.chunks(batch_size) {
                let mut acc_fw = vec![0.0f64; self.fusion_weights.len()];
                let mut acc_fb = vec![0.0f64; k];
                let mut acc_params = vec![0.0f64; self.vqc.params().len()];
                let mut acc_mlp_w: Vec<Vec<f64>> =
                    self.mlp.weights().iter().map(|w| vec![0.0; w.len()]).collect();
                let mut acc_mlp_b: Vec<Vec<f64>> =
                    self.mlp.biases().iter().map(|b| vec![0.0; b.len()]).collect();
                for &idx in batch {
                    let (features, label) = data.sample(idx);
                    let cache = self.mlp.forward(features, None)?;
                    let vqc_out = vqc_scores(&self.vqc, features)?;
                    let concat: Vec<f64> =
                        cache.scores.iter().chain(vqc_out.iter()).copied().collect();
                    let fused = self.fused_scores(&concat);
                    let (loss, dz) = loss_softmax_ce(&fused, label)?;
                    epoch_loss += loss;
                    // Fusion gradients plus the downstream split into the
                    // two branch slices.
                    let mut d_concat = vec![0.0f64; width];
                    for (c, d) in dz.iter().enumerate() {
                        for (j, x) in concat.iter().enumerate() {
                            acc_fw[c * width + j] += d * x;
                            d_concat[j] += d * self.fusion_weights[c * width + j];
                        }
                        acc_fb[c] += d;
                    }
                    let grads = self.mlp.backward(&cache, &d_concat[..k]);
                    for (acc, g) in acc_mlp_w.iter_mut().zip(&grads.weights) {
                        for (a, v) in acc.iter_mut().zip(g) {
                            *a += v;
                        }
                    }
                    for (acc, g) in acc_mlp_b.iter_mut().zip(&grads.biases) {
                        for (a, v) in acc.iter_mut().zip(g) {
                            *a += v;
                        }
                    }
                    let pgrad = param_shift_grad(&self.vqc, features, &d_concat[k..k + nq])?;
                    for (a, g) in acc_params.iter_mut().zip(&pgrad) {
                        *a += g;
                    }
                }
                let inv = 1.0 / batch.len() as f64;
                for (w, g) in self.fusion_weights.iter_mut().zip(&acc_fw) {
                    *w -= lr * g * inv;
                }
                for (b, g) in self.fusion_bias.iter_mut().zip(&acc_fb) {
                    *b -= lr * g * inv;
                }
                for (p, g) in self.vqc.params_mut().iter_mut().zip(&acc_params) {
                    *p -= lr * g * inv;
                }
                self.mlp.apply_gradients(&acc_mlp_w, &acc_mlp_b, lr * inv);
            }
            losses.push(epoch_loss / data.len() as f64);
        }
        Ok(losses)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vqc::{Encoding, Entanglement};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy_dataset(seed: u64, n_per_class: usize) -> Dataset {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let centers = [(0.2, 0.2, 0.8), (0.8, 0.2, 0.2), (0.5, 0.9, 0.5)];
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (class, &(a, b, c)) in centers.iter().enumerate() {
            for _ in 0..n_per_class {
                let jitter = |r: &mut ChaCha20Rng| (r.random::<f64>() - 0.5) * 0.1;
                features.push(vec![
                    (a + jitter(&mut rng)).clamp(0.0, 1.0),
                    (b + jitter(&mut rng)).clamp(0.0, 1.0),
                    (c + jitter(&mut rng)).clamp(0.0, 1.0),
                ]);
                labels.push(class);
            }
        }
        Dataset::new(features, labels, 3).unwrap()
    }

    fn small_hybrid(seed: u64) -> HybridModel {
        let vqc = VqcModel::new(2, 2, Encoding::Angle, Entanglement::Linear, seed).unwrap();
        let mlp = MlpModel::new(vec![3, 8, 3], crate::mlp::Activation::Swish, 0.0, seed).unwrap();
        HybridModel::new(vqc, mlp)
    }

    #[test]
    fn zero_fusion_weights_give_uniform_probabilities() {
        let base = small_hybrid(1);
        let k = base.n_classes();
        let width = k + base.vqc.n_qubits();
        let hybrid = HybridModel::with_fusion(
            base.vqc.clone(),
            base.mlp.clone(),
            vec![0.0; k * width],
            vec![0.0; k],
        )
        .unwrap();
        let out = hybrid.fuse_forward(&[0.1, 0.5, 0.9]).unwrap();
        for p in &out.probabilities {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((out.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn passthrough_fusion_reduces_to_mlp() {
        let hybrid = small_hybrid(2);
        let data = toy_dataset(5, 20);
        let fused = hybrid.predict(&data).unwrap();
        for (row, fused_label) in data.features().iter().zip(&fused) {
            let (mlp_label, _) = hybrid.mlp.predict(row).unwrap();
            assert_eq!(*fused_label, mlp_label);
        }
    }

    #[test]
    fn branch_isolation_under_passthrough() {
        let hybrid = small_hybrid(3);
        let mut corrupted = hybrid.clone();
        for p in corrupted.vqc.params_mut() {
            *p += 1.234;
        }
        let data = toy_dataset(6, 15);
        assert_eq!(hybrid.predict(&data).unwrap(), corrupted.predict(&data).unwrap());
    }

    #[test]
    fn singleton_prediction_matches_fuse_forward() {
        let hybrid = small_hybrid(4);
        let data = toy_dataset(7, 2);
        let labels = hybrid.predict(&data).unwrap();
        assert_eq!(labels.len(), data.len());
        for (i, row) in data.features().iter().enumerate() {
            assert_eq!(labels[i], hybrid.fuse_forward(row).unwrap().label);
        }
    }

    #[test]
    fn prediction_is_permutation_equivariant() {
        let hybrid = small_hybrid(5);
        let data = toy_dataset(8, 6);
        let forward = hybrid.predict(&data).unwrap();
        let reversed = Dataset::new(
            data.features().iter().rev().cloned().collect(),
            data.labels().iter().rev().copied().collect(),
            data.n_classes(),
        )
        .unwrap();
        let backward = hybrid.predict(&reversed).unwrap();
        assert_eq!(forward.iter().rev().copied().collect::<Vec<_>>(), backward);
    }

    #[test]
    fn fusion_gradient_matches_finite_differences() {
        let hybrid = small_hybrid(8);
        let features = [0.3, 0.6, 0.9];
        let label = 1usize;
        let width = hybrid.fusion_width();

        // Analytic gradient of the CE loss for frozen branches.
        let mlp_scores = hybrid.mlp.scores(&features).unwrap();
        let v = vqc_scores(&hybrid.vqc, &features).unwrap();
        let concat: Vec<f64> = mlp_scores.into_iter().chain(v).collect();
        let fused = hybrid.fused_scores(&concat);
        let (_, dz) = loss_softmax_ce(&fused, label).unwrap();

        let loss_of = |h: &HybridModel| {
            let out = h.fuse_forward(&features).unwrap();
            -out.probabilities[label].ln()
        };
        let h = 1e-6;
        for c in 0..hybrid.n_classes() {
            for j in 0..width {
                let analytic = dz[c] * concat[j];
                let mut plus = hybrid.clone();
                plus.fusion_weights[c * width + j] += h;
                let mut minus = hybrid.clone();
                minus.fusion_weights[c * width + j] -= h;
                let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
                let denom = analytic.abs().max(fd.abs()).max(1e-3);
                assert!((analytic - fd).abs() / denom < 1e-5, "w[{c},{j}]: {analytic} vs {fd}");
            }
            let analytic = dz[c];
            let mut plus = hybrid.clone();
            plus.fusion_bias[c] += h;
            let mut minus = hybrid.clone();
            minus.fusion_bias[c] -= h;
            let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
            let denom = analytic.abs().max(fd.abs()).max(1e-3);
            assert!((analytic - fd).abs() / denom < 1e-5, "b[{c}]: {analytic} vs {fd}");
        }
    }

    #[test]
    fn phase_two_only_reduces_fusion_loss() {
        let mut hybrid = small_hybrid(9);
        let data = toy_dataset(10, 20);
        let config = HybridTrainConfig {
            mlp: TrainConfig { epochs: 0, ..TrainConfig::default() },
            vqc_epochs: 0,
            fusion_epochs: 50,
            fusion_learning_rate: 0.2,
            ..HybridTrainConfig::default()
        };
        let log = hybrid.train(&data, &config).unwrap();
        assert!(log.mlp_losses.is_empty());
        assert!(log.vqc_losses.is_empty());
        assert!(
            log.fusion_losses.last().unwrap() < &log.fusion_losses[0],
            "fusion loss did not fall: {:?}",
            log.fusion_losses
        );
    }

    #[test]
    fn training_is_deterministic() {
        let data = toy_dataset(11, 10);
        let run = || {
            let mut h = small_hybrid(12);
            let config = HybridTrainConfig {
                mlp: TrainConfig { epochs: 3, seed: 5, ..TrainConfig::default() },
                vqc_epochs: 2,
                fusion_epochs: 5,
                fine_tune_epochs: 1,
                seed: 5,
                ..HybridTrainConfig::default()
            };
            h.train(&data, &config).unwrap();
            h
        };
        let a = run();
        let b = run();
        assert_eq!(a.fusion_weights, b.fusion_weights);
        assert_eq!(a.vqc.params(), b.vqc.params());
        assert_eq!(a.mlp, b.mlp);
    }

    #[test]
    fn full_training_learns_toy_problem() {
        let mut hybrid = small_hybrid(13);
        let data = toy_dataset(14, 30);
        let config = HybridTrainConfig {
            mlp: TrainConfig { epochs: 30, learning_rate: 0.1, seed: 3, ..TrainConfig::default() },
            vqc_epochs: 5,
            fusion_epochs: 40,
            seed: 3,
            ..HybridTrainConfig::default()
        };
        hybrid.train(&data, &config).unwrap();
        let predictions = hybrid.predict(&data).unwrap();
        let correct = predictions
            .iter()
            .zip(data.labels())
            .filter(|(p, l)| p == l)
            .count();
        assert!(correct as f64 / data.len() as f64 > 0.9);
    }
}
