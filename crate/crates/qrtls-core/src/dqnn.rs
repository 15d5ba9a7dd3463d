//! Deep quantum neural networks built from layered perceptron unitaries.
//!
//! A network on widths `[m_0, m_1, ..., m_L]` carries one perceptron per
//! (layer, node) pair; the perceptron for node `j` of layer `l` is an
//! arbitrary unitary on all `m_{l-1}` qubits of the previous layer plus that
//! node's own qubit. Each layer acts as the completely positive map
//!
//! ```text
//! xi(X) = Tr_prev( U_m ... U_1 (X (x) |0...0><0...0|) U_1† ... U_m† )
//! ```
//!
//! and the whole network is the composition of those maps. Training ascends
//! the mean fidelity between produced outputs and pure targets: each
//! perceptron is rotated by `e^{i eps K}`, where `K` is the fidelity gradient
//! assembled over the (non-identity) Pauli-string basis of the perceptron's
//! qubits from the forward states and the adjoint-propagated target
//! observables. The layered feedforward is cross-checked against a
//! single-global-unitary construction (`feedforward_full_circuit`), which
//! serves as the brute-force oracle.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::qlinalg::{
    embed_unitary, fidelity, haar_unitary, hermitian_exp, partial_trace_matrix, polar_unitary,
    random_pure_state, ComplexMatrix, DensityMatrix, LinalgError, PureState,
};

/// Hard cap on any single workspace (layer transition or full circuit).
pub const MAX_WORKSPACE_QUBITS: usize = 10;

/// Re-unitarize a perceptron once `|U†U - I|` drifts past this.
const UNITARITY_DRIFT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DqnnError {
    #[error("architecture needs at least two layer widths")]
    TooFewLayers,
    #[error("layer widths must be at least 1")]
    ZeroWidth,
    #[error("workspace of {qubits} qubits exceeds the {MAX_WORKSPACE_QUBITS}-qubit cap")]
    WorkspaceCapExceeded { qubits: usize },
    #[error("perceptron acts on {found} qubits, expected {expected}")]
    PerceptronArity { expected: usize, found: usize },
    #[error("input state has {found} qubits, expected {expected}")]
    InputWidth { expected: usize, found: usize },
    #[error("training data is empty")]
    EmptyTrainingData,
    #[error("cannot corrupt {n_corrupt} of {n_data} pairs")]
    CorruptCount { n_corrupt: usize, n_data: usize },
    #[error("{branches} branch unitaries for input dimension {dim}")]
    BranchCount { branches: usize, dim: usize },
    #[error("layer index {layer} or node {node} out of range")]
    NodeOutOfRange { layer: usize, node: usize },
    #[error("unitary learning needs equal input and output widths, got {input} and {output}")]
    TargetWidthMismatch { input: usize, output: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Qubits per layer, `[m_0, ..., m_L]`; the first entry is the input
/// register, the last the output register.
#[derive(Debug, Clone, PartialEq)]
pub struct DqnnArchitecture {
    widths: Vec<usize>,
}

impl DqnnArchitecture {
    pub fn new(widths: Vec<usize>) -> Result<Self, DqnnError> {
        if widths.len() < 2 {
            return Err(DqnnError::TooFewLayers);
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(DqnnError::ZeroWidth);
        }
        for pair in widths.windows(2) {
            let ws = pair[0] + pair[1];
            if ws > MAX_WORKSPACE_QUBITS {
                return Err(DqnnError::WorkspaceCapExceeded { qubits: ws });
            }
        }
        Ok(Self { widths })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_qubits(&self) -> usize {
        self.widths[0]
    }

    pub fn output_qubits(&self) -> usize {
        *self.widths.last().expect("at least two entries")
    }

    /// Number of layer transitions (perceptron layers).
    pub fn transitions(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn total_qubits(&self) -> usize {
        self.widths.iter().sum()
    }

    pub fn perceptron_count(&self) -> usize {
        self.widths[1..].iter().sum()
    }
}

/// One quantum perceptron: a unitary on `m_in + 1` qubits (all of the
/// previous layer plus this node's qubit, in that order).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumPerceptron {
    unitary: ComplexMatrix,
}

impl QuantumPerceptron {
    pub fn new(unitary: ComplexMatrix) -> Result<Self, DqnnError> {
        if !unitary.is_square() || !unitary.rows().is_power_of_two() {
            return Err(LinalgError::NotPowerOfTwo { dim: unitary.rows() }.into());
        }
        let dev = unitary.unitarity_deviation();
        if dev > 1e-9 {
            return Err(LinalgError::NotUnitary { deviation: dev }.into());
        }
        Ok(Self { unitary })
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn qubit_count(&self) -> usize {
        self.unitary.rows().trailing_zeros() as usize
    }
}

/// One training example for unitary learning.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub input: PureState,
    pub target: PureState,
}

/// Cost trajectory entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostPoint {
    pub step: usize,
    pub cost: f64,
}

/// A trained (or training) deep quantum neural network.
#[derive(Debug, Clone, PartialEq)]
pub struct DqnnNetwork {
    arch: DqnnArchitecture,
    /// `layers[t][j]`: perceptron for node `j` of transition `t`.
    layers: Vec<Vec<QuantumPerceptron>>,
}

impl DqnnNetwork {
    /// Fresh network with every perceptron sampled Haar-randomly from the
    /// seeded generator; deterministic for a fixed seed.
    pub fn init(arch: DqnnArchitecture, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(arch.transitions());
        for t in 0..arch.transitions() {
            let m_in = arch.widths[t];
            let m_out = arch.widths[t + 1];
            let dim = 1usize << (m_in + 1);
            let layer: Vec<QuantumPerceptron> = (0..m_out)
                .map(|_| QuantumPerceptron { unitary: haar_unitary(dim, &mut rng) })
                .collect();
            layers.push(layer);
        }
        Self { arch, layers }
    }

    /// Network with every perceptron the identity; useful as a fixture.
    pub fn identity(arch: DqnnArchitecture) -> Self {
        let layers = (0..arch.transitions())
            .map(|t| {
                let dim = 1usize << (arch.widths[t] + 1);
                (0..arch.widths[t + 1])
                    .map(|_| QuantumPerceptron { unitary: ComplexMatrix::identity(dim) })
                    .collect()
            })
            .collect();
        Self { arch, layers }
    }

    /// Assemble a network from explicit perceptrons (shape-checked).
    pub fn from_layers(
        arch: DqnnArchitecture,
        layers: Vec<Vec<QuantumPerceptron>>,
    ) -> Result<Self, DqnnError> {
        if layers.len() != arch.transitions() {
            return Err(DqnnError::TooFewLayers);
        }
        for (t, layer) in layers.iter().enumerate() {
            if layer.len() != arch.widths[t + 1] {
                return Err(DqnnError::NodeOutOfRange { layer: t, node: layer.len() });
            }
            for p in layer {
                if p.qubit_count() != arch.widths[t] + 1 {
                    return Err(DqnnError::PerceptronArity {
                        expected: arch.widths[t] + 1,
                        found: p.qubit_count(),
                    });
                }
            }
        }
        Ok(Self { arch, layers })
    }

    pub fn arch(&self) -> &DqnnArchitecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Vec<QuantumPerceptron>] {
        &self.layers
    }

    pub fn perceptron(&self, layer: usize, node: usize) -> Option<&QuantumPerceptron> {
        self.layers.get(layer).and_then(|l| l.get(node))
    }

    /// Replace one perceptron's unitary (shape- and unitarity-checked);
    /// used by gradient probes and tests.
    pub fn set_perceptron_unitary(
        &mut self,
        layer: usize,
        node: usize,
        unitary: ComplexMatrix,
    ) -> Result<(), DqnnError> {
        if layer >= self.layers.len() || node >= self.layers[layer].len() {
            return Err(DqnnError::NodeOutOfRange { layer, node });
        }
        let expected = self.arch.widths[layer] + 1;
        let replacement = QuantumPerceptron::new(unitary)?;
        if replacement.qubit_count() != expected {
            return Err(DqnnError::PerceptronArity {
                expected,
                found: replacement.qubit_count(),
            });
        }
        self.layers[layer][node] = replacement;
        Ok(())
    }

    /// Propagate through every layer, returning the output state and all
    /// intermediate states `rho^0 .. rho^L` (needed by backpropagation).
    pub fn feedforward(
        &self,
        rho_in: &DensityMatrix,
    ) -> Result<(DensityMatrix, Vec<DensityMatrix>), DqnnError> {
        if rho_in.n_qubits() != self.arch.input_qubits() {
            return Err(DqnnError::InputWidth {
                expected: self.arch.input_qubits(),
                found: rho_in.n_qubits(),
            });
        }
        let mut states = Vec::with_capacity(self.arch.transitions() + 1);
        states.push(rho_in.clone());
        for layer in &self.layers {
            let next = layer_channel(states.last().expect("nonempty"), layer)?;
            states.push(next);
        }
        Ok((states.last().expect("nonempty").clone(), states))
    }

    /// Brute-force oracle: build the single global unitary over all
    /// input+hidden+output qubits, conjugate once, and trace down to the
    /// output register. Identical to [`Self::feedforward`] within 1e-10.
    pub fn feedforward_full_circuit(
        &self,
        rho_in: &DensityMatrix,
    ) -> Result<DensityMatrix, DqnnError> {
        let total = self.arch.total_qubits();
        if total > MAX_WORKSPACE_QUBITS {
            return Err(DqnnError::WorkspaceCapExceeded { qubits: total });
        }
        if rho_in.n_qubits() != self.arch.input_qubits() {
            return Err(DqnnError::InputWidth {
                expected: self.arch.input_qubits(),
                found: rho_in.n_qubits(),
            });
        }
        let widths = &self.arch.widths;
        let mut offsets = Vec::with_capacity(widths.len());
        let mut acc = 0usize;
        for w in widths {
            offsets.push(acc);
            acc += w;
        }

        let mut global = ComplexMatrix::identity(1 << total);
        for (t, layer) in self.layers.iter().enumerate() {
            let m_in = widths[t];
            for (j, p) in layer.iter().enumerate() {
                let mut targets: Vec<usize> = (offsets[t]..offsets[t] + m_in).collect();
                targets.push(offsets[t + 1] + j);
                let full = embed_unitary(&p.unitary, total, &targets)?;
                global = full.matmul(&global)?;
            }
        }

        let ancilla = DensityMatrix::from_pure(&PureState::zero(total - widths[0]));
        let work = rho_in.tensor(&ancilla);
        let evolved = work.conjugated_by(&global)?;
        let out_offset = offsets[widths.len() - 1];
        let keep: Vec<usize> = (out_offset..out_offset + self.arch.output_qubits()).collect();
        Ok(evolved.partial_trace(&keep)?)
    }

    /// Mean fidelity of produced outputs against the pure targets; a cost
    /// in [0, 1], larger is better.
    pub fn cost(&self, data: &[TrainingPair]) -> Result<f64, DqnnError> {
        if data.is_empty() {
            return Err(DqnnError::EmptyTrainingData);
        }
        let mut total = 0.0;
        for pair in data {
            let rho_in = DensityMatrix::from_pure(&pair.input);
            let (rho_out, _) = self.feedforward(&rho_in)?;
            total += fidelity(&pair.target, &rho_out)?;
        }
        Ok(total / data.len() as f64)
    }

    /// The Hermitian update generator for one perceptron, scaled by `eta`.
    ///
    /// Assembled as the fidelity gradient over the non-identity Pauli-string
    /// basis of the perceptron's qubits: for each basis direction `P`, the
    /// first-order change of the cost under `U -> e^{i eps P} U` is
    /// `Tr(P . D)` with `D` the pair-averaged `Tr_rest(i[M, N])` of the
    /// forward state `M` and the adjoint-propagated target observable `N`;
    /// re-expanding those coefficients in the same basis yields
    /// `K = eta . 2^(m_in + 1) . D` directly.
    pub fn update_direction(
        &self,
        data: &[TrainingPair],
        layer: usize,
        node: usize,
        eta: f64,
    ) -> Result<ComplexMatrix, DqnnError> {
        if layer >= self.layers.len() || node >= self.layers[layer].len() {
            return Err(DqnnError::NodeOutOfRange { layer, node });
        }
        let all = self.update_directions(data, eta)?;
        Ok(all.into_iter().nth(layer).expect("checked").into_iter().nth(node).expect("checked"))
    }

    /// Update generators for every perceptron, computed from one shared
    /// forward/backward pass over the data (fixed pair order, so the
    /// accumulation is bit-reproducible).
    pub fn update_directions(
        &self,
        data: &[TrainingPair],
        eta: f64,
    ) -> Result<Vec<Vec<ComplexMatrix>>, DqnnError> {
        if data.is_empty() {
            return Err(DqnnError::EmptyTrainingData);
        }
        let transitions: Vec<TransitionOps> = self
            .layers
            .iter()
            .enumerate()
            .map(|(t, layer)| TransitionOps::build(layer, self.arch.widths[t]))
            .collect::<Result<_, _>>()?;

        // acc[t][j] accumulates Tr_rest(i[M, N]) over pairs.
        let mut acc: Vec<Vec<ComplexMatrix>> = transitions
            .iter()
            .map(|ops| {
                let d = 1usize << (ops.m_in + 1);
                vec![ComplexMatrix::zeros(d, d); ops.m_out]
            })
            .collect();

        for pair in data {
            let rho_in = DensityMatrix::from_pure(&pair.input);
            // Forward states rho^0 .. rho^L.
            let mut states = vec![rho_in];
            for ops in &transitions {
                let next = ops.apply(states.last().expect("nonempty"))?;
                states.push(next);
            }
            // Adjoint observables chi^1 .. chi^L (chi[s] lives on space s+1).
            let n_t = transitions.len();
            let mut chis: Vec<ComplexMatrix> = vec![ComplexMatrix::zeros(1, 1); n_t];
            chis[n_t - 1] = pair.target.outer();
            for s in (0..n_t - 1).rev() {
                chis[s] = transitions[s + 1].adjoint_apply(&chis[s + 1])?;
            }

            for (t, ops) in transitions.iter().enumerate() {
                let work_in = states[t].matrix().tensor(&zero_projector(ops.m_out));
                let big_chi = ComplexMatrix::identity(1 << ops.m_in).tensor(&chis[t]);
                for j in 0..ops.m_out {
                    // M = (U_j ... U_1) (rho (x) |0><0|) (U_j ... U_1)†
                    let m = ops.prefixes[j + 1]
                        .matmul(&work_in)?
                        .matmul(&ops.prefixes[j + 1].adjoint())?;
                    // N = (U_m ... U_{j+1})† (I (x) chi) (U_m ... U_{j+1})
                    let n = ops.suffixes[j + 1]
                        .adjoint()
                        .matmul(&big_chi)?
                        .matmul(&ops.suffixes[j + 1])?;
                    let comm = m.commutator_i(&n)?;
                    let reduced =
                        partial_trace_matrix(&comm, ops.m_in + ops.m_out, &ops.targets[j])?;
                    acc[t][j] = &acc[t][j] + &reduced;
                }
            }
        }

        let n_pairs = data.len() as f64;
        Ok(acc
            .into_iter()
            .enumerate()
            .map(|(t, layer_acc)| {
                let basis_dim = (1usize << (transitions[t].m_in + 1)) as f64;
                layer_acc
                    .into_iter()
                    .map(|a| a.scale(Complex64::new(eta * basis_dim / n_pairs, 0.0)).hermitized())
                    .collect()
            })
            .collect())
    }

    /// One ascent step: rotate every perceptron by its own `e^{i eps K}`,
    /// re-unitarizing on drift, and return the new cost.
    pub fn train_step(
        &mut self,
        data: &[TrainingPair],
        eps: f64,
        eta: f64,
    ) -> Result<f64, DqnnError> {
        let directions = self.update_directions(data, eta)?;
        for (layer, ks) in self.layers.iter_mut().zip(directions) {
            for (p, k) in layer.iter_mut().zip(ks) {
                let rot = hermitian_exp(&k, eps)?;
                let updated = rot.matmul(&p.unitary)?;
                p.unitary = if updated.unitarity_deviation() > UNITARITY_DRIFT_TOL {
                    polar_unitary(&updated)?
                } else {
                    updated
                };
            }
        }
        self.cost(data)
    }

    /// Run `steps` ascent steps, logging the cost every `log_every` steps
    /// (step 0 and the final step are always logged).
    pub fn train(
        &mut self,
        data: &[TrainingPair],
        steps: usize,
        eps: f64,
        eta: f64,
        log_every: usize,
    ) -> Result<Vec<CostPoint>, DqnnError> {
        let log_every = log_every.max(1);
        let mut trajectory = vec![CostPoint { step: 0, cost: self.cost(data)? }];
        for step in 1..=steps {
            let cost = self.train_step(data, eps, eta)?;
            if step % log_every == 0 || step == steps {
                trajectory.push(CostPoint { step, cost });
            }
        }
        Ok(trajectory)
    }
}

/// |0...0><0...0| on `n` qubits, as a matrix.
fn zero_projector(n: usize) -> ComplexMatrix {
    let d = 1usize << n;
    let mut m = ComplexMatrix::zeros(d, d);
    m.set(0, 0, Complex64::ONE);
    m
}

/// Apply one perceptron layer as a channel: append the layer's fiducial
/// ancilla, apply the perceptrons in order `U_1 .. U_m`, trace out the
/// previous layer.
pub fn layer_channel(
    state: &DensityMatrix,
    layer: &[QuantumPerceptron],
) -> Result<DensityMatrix, DqnnError> {
    let ops = TransitionOps::build(layer, state.n_qubits())?;
    ops.apply(state)
}

/// Heisenberg-picture adjoint of one layer channel, mapping an observable on
/// the layer's output space to one on its input space. The adjoint of a
/// trace-preserving map is unital (identity maps to identity), not
/// trace-preserving, so the result is a Hermitian operator rather than a
/// density matrix. Duality: `Tr[chi . xi(rho)] = Tr[adjoint(chi) . rho]`.
pub fn adjoint_channel(
    chi: &ComplexMatrix,
    layer: &[QuantumPerceptron],
    input_qubits: usize,
) -> Result<ComplexMatrix, DqnnError> {
    let ops = TransitionOps::build(layer, input_qubits)?;
    if chi.rows() != (1 << ops.m_out) || !chi.is_square() {
        return Err(LinalgError::DimMismatch { left: chi.rows(), right: 1 << ops.m_out }.into());
    }
    ops.adjoint_apply(chi)
}

/// Per-transition operator set shared by the forward pass, the adjoint
/// pass, and gradient assembly within one training step.
struct TransitionOps {
    m_in: usize,
    m_out: usize,
    /// prefixes[j] = embedded `U_j ... U_1` (prefixes[0] = I).
    prefixes: Vec<ComplexMatrix>,
    /// suffixes[j] = embedded `U_m ... U_{j+1}` (suffixes[m] = I).
    suffixes: Vec<ComplexMatrix>,
    /// Workspace qubits of perceptron `j`: all inputs plus output qubit `j`.
    targets: Vec<Vec<usize>>,
}

impl TransitionOps {
    fn build(layer: &[QuantumPerceptron], m_in: usize) -> Result<Self, DqnnError> {
        if layer.is_empty() {
            return Err(DqnnError::ZeroWidth);
        }
        let m_out = layer.len();
        let ws = m_in + m_out;
        if ws > MAX_WORKSPACE_QUBITS {
            return Err(DqnnError::WorkspaceCapExceeded { qubits: ws });
        }
        let dim = 1usize << ws;
        let mut targets = Vec::with_capacity(m_out);
        let mut prefixes = Vec::with_capacity(m_out + 1);
        prefixes.push(ComplexMatrix::identity(dim));
        for (j, p) in layer.iter().enumerate() {
            if p.qubit_count() != m_in + 1 {
                return Err(DqnnError::PerceptronArity {
                    expected: m_in + 1,
                    found: p.qubit_count(),
                });
            }
            let mut t: Vec<usize> = (0..m_in).collect();
            t.push(m_in + j);
            let embedded = embed_unitary(&p.unitary, ws, &t)?;
            let prev = prefixes.last().expect("nonempty");
            prefixes.push(embedded.matmul(prev)?);
            targets.push(t);
        }
        let full = prefixes[m_out].clone();
        // suffixes[j] = full . prefixes[j]†  (all factors unitary).
        let suffixes: Vec<ComplexMatrix> = (0..=m_out)
            .map(|j| full.matmul(&prefixes[j].adjoint()))
            .collect::<Result<_, _>>()?;
        Ok(Self { m_in, m_out, prefixes, suffixes, targets })
    }

    fn layer_unitary(&self) -> &ComplexMatrix {
        &self.prefixes[self.m_out]
    }

    fn apply(&self, state: &DensityMatrix) -> Result<DensityMatrix, DqnnError> {
        if state.n_qubits() != self.m_in {
            return Err(DqnnError::InputWidth { expected: self.m_in, found: state.n_qubits() });
        }
        let ancilla = DensityMatrix::from_pure(&PureState::zero(self.m_out));
        let work = state.tensor(&ancilla);
        let evolved = work.conjugated_by(self.layer_unitary())?;
        let keep: Vec<usize> = (self.m_in..self.m_in + self.m_out).collect();
        Ok(evolved.partial_trace(&keep)?)
    }

    fn adjoint_apply(&self, chi: &ComplexMatrix) -> Result<ComplexMatrix, DqnnError> {
        let big = ComplexMatrix::identity(1 << self.m_in).tensor(chi);
        let w = self.layer_unitary();
        let t = w.adjoint().matmul(&big)?.matmul(w)?;
        let d_in = 1usize << self.m_in;
        let shift = self.m_out;
        Ok(ComplexMatrix::from_fn(d_in, d_in, |i, j| t.get(i << shift, j << shift)).hermitized())
    }
}

/// Non-identity Pauli strings on `n_qubits`, in lexicographic (I,X,Y,Z)
/// order; the Hermitian operator basis used for gradient verification.
pub fn pauli_basis(n_qubits: usize) -> Vec<ComplexMatrix> {
    let i = Complex64::new(0.0, 1.0);
    let singles = [
        ComplexMatrix::identity(2),
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).expect("2x2"),
        ComplexMatrix::new(
            2,
            2,
            vec![Complex64::ZERO, -i, i, Complex64::ZERO],
        )
        .expect("2x2"),
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).expect("2x2"),
    ];
    let count = 4usize.pow(n_qubits as u32);
    let mut basis = Vec::with_capacity(count - 1);
    for code in 1..count {
        let mut m = ComplexMatrix::identity(1);
        let mut c = code;
        let mut digits = vec![0usize; n_qubits];
        for d in (0..n_qubits).rev() {
            digits[d] = c % 4;
            c /= 4;
        }
        for &d in &digits {
            m = m.tensor(&singles[d]);
        }
        basis.push(m);
    }
    basis
}

/// Training pairs `(|phi_in>, V|phi_in>)` with Haar-random inputs;
/// deterministic per seed.
pub fn gen_unitary_dataset(
    v: &ComplexMatrix,
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<TrainingPair>, DqnnError> {
    if !v.is_square() || !v.rows().is_power_of_two() {
        return Err(LinalgError::NotPowerOfTwo { dim: v.rows() }.into());
    }
    let dev = v.unitarity_deviation();
    if dev > 1e-9 {
        return Err(LinalgError::NotUnitary { deviation: dev }.into());
    }
    let n_qubits = v.rows().trailing_zeros() as usize;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let input = random_pure_state(n_qubits, &mut rng);
        let target = input.apply_unitary(v)?;
        pairs.push(TrainingPair { input, target });
    }
    Ok(pairs)
}

/// Replace `n_corrupt` randomly chosen pairs with pairs of independent
/// Haar-random states; the mask records which entries were replaced.
pub fn corrupt_pairs(
    data: &[TrainingPair],
    n_corrupt: usize,
    seed: u64,
) -> Result<(Vec<TrainingPair>, Vec<bool>), DqnnError> {
    let n = data.len();
    if n_corrupt > n {
        return Err(DqnnError::CorruptCount { n_corrupt, n_data: n });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    // Partial Fisher-Yates: the first n_corrupt entries are the chosen set.
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..n_corrupt {
        let j = i + rng.random_range(0..n - i);
        indices.swap(i, j);
    }
    let mut corrupted = data.to_vec();
    let mut mask = vec![false; n];
    let mut chosen: Vec<usize> = indices[..n_corrupt].to_vec();
    chosen.sort_unstable();
    for &idx in &chosen {
        let in_qubits = data[idx].input.n_qubits();
        let out_qubits = data[idx].target.n_qubits();
        corrupted[idx] = TrainingPair {
            input: random_pure_state(in_qubits, &mut rng),
            target: random_pure_state(out_qubits, &mut rng),
        };
        mask[idx] = true;
    }
    Ok((corrupted, mask))
}

/// The classical-quantum controlled-unitary channel
/// `rho -> sum_a <a|rho|a> U_a |0><0| U_a†`. The output depends only on the
/// diagonal of the input, so coherences in the control register are erased.
pub fn controlled_unitary_channel(
    rho_in: &DensityMatrix,
    branches: &[ComplexMatrix],
) -> Result<DensityMatrix, DqnnError> {
    if branches.len() != rho_in.dim() {
        return Err(DqnnError::BranchCount { branches: branches.len(), dim: rho_in.dim() });
    }
    let out_dim = branches[0].rows();
    if !out_dim.is_power_of_two() {
        return Err(LinalgError::NotPowerOfTwo { dim: out_dim }.into());
    }
    for b in branches {
        if b.rows() != out_dim || !b.is_square() {
            return Err(LinalgError::DimMismatch { left: b.rows(), right: out_dim }.into());
        }
        let dev = b.unitarity_deviation();
        if dev > 1e-9 {
            return Err(LinalgError::NotUnitary { deviation: dev }.into());
        }
    }
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for (alpha, u) in branches.iter().enumerate() {
        let weight = rho_in.matrix().get(alpha, alpha).re;
        if weight == 0.0 {
            continue;
        }
        // U|0> is the first column.
        for r in 0..out_dim {
            let ur = u.get(r, 0);
            for c in 0..out_dim {
                let add = ur * u.get(c, 0).conj() * weight;
                out.set(r, c, out.get(r, c) + add);
            }
        }
    }
    Ok(DensityMatrix::new_unchecked(out.hermitized()))
}

/// Hyperparameters of the fidelity-ascent update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DqnnHyper {
    pub eps: f64,
    pub eta: f64,
}

impl Default for DqnnHyper {
    fn default() -> Self {
        Self { eps: 0.01, eta: 1.0 }
    }
}

/// One row of the generalization curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizationPoint {
    pub n_pairs: usize,
    pub train_cost: f64,
    pub heldout_cost: f64,
}

/// Train against a Haar-random target unitary for each training-set size in
/// `n_pairs_grid` and evaluate on `eval_pairs` fresh pairs from the same
/// target. The target is fixed by `target_seed`; per-grid-point training
/// data and network initialization derive from `seed`.
pub fn generalization_experiment(
    arch: &DqnnArchitecture,
    target_seed: u64,
    n_pairs_grid: &[usize],
    eval_pairs: usize,
    steps: usize,
    hyper: DqnnHyper,
    seed: u64,
) -> Result<Vec<GeneralizationPoint>, DqnnError> {
    if n_pairs_grid.is_empty() || eval_pairs == 0 {
        return Err(DqnnError::EmptyTrainingData);
    }
    if n_pairs_grid.contains(&0) {
        return Err(DqnnError::EmptyTrainingData);
    }
    if arch.input_qubits() != arch.output_qubits() {
        return Err(DqnnError::TargetWidthMismatch {
            input: arch.input_qubits(),
            output: arch.output_qubits(),
        });
    }
    let v = haar_unitary(
        1 << arch.input_qubits(),
        &mut ChaCha20Rng::seed_from_u64(target_seed),
    );
    let eval_seed = crate::seeds::derive_seed(seed, "dqnn-eval", 0);
    let eval_set = gen_unitary_dataset(&v, eval_pairs, u64_from_seed(&eval_seed))?;

    let mut curve = Vec::with_capacity(n_pairs_grid.len());
    for (idx, &n) in n_pairs_grid.iter().enumerate() {
        let train_seed = crate::seeds::derive_seed(seed, "dqnn-train", idx as u64);
        let init_seed = crate::seeds::derive_seed(seed, "dqnn-init", idx as u64);
        let data = gen_unitary_dataset(&v, n, u64_from_seed(&train_seed))?;
        let mut network = DqnnNetwork::init(arch.clone(), u64_from_seed(&init_seed));
        let traj = network.train(&data, steps, hyper.eps, hyper.eta, steps.max(1))?;
        let train_cost = traj.last().expect("nonempty trajectory").cost;
        let heldout_cost = network.cost(&eval_set)?;
        curve.push(GeneralizationPoint { n_pairs: n, train_cost, heldout_cost });
    }
    Ok(curve)
}

/// One row of the corruption-robustness curve; `clean_cost` is `None` for
/// the degenerate 100%-corruption point (explicit skip, not NaN).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessPoint {
    pub n_corrupt: usize,
    pub clean_cost: Option<f64>,
}

/// For each corruption count, train on the corrupted set and report the
/// cost restricted to the surviving clean pairs.
pub fn robustness_experiment(
    arch: &DqnnArchitecture,
    target_seed: u64,
    n_total: usize,
    corrupt_grid: &[usize],
    steps: usize,
    hyper: DqnnHyper,
    seed: u64,
) -> Result<Vec<RobustnessPoint>, DqnnError> {
    if n_total == 0 || corrupt_grid.is_empty() {
        return Err(DqnnError::EmptyTrainingData);
    }
    if arch.input_qubits() != arch.output_qubits() {
        return Err(DqnnError::TargetWidthMismatch {
            input: arch.input_qubits(),
            output: arch.output_qubits(),
        });
    }
    let v = haar_unitary(
        1 << arch.input_qubits(),
        &mut ChaCha20Rng::seed_from_u64(target_seed),
    );
    let data_seed = crate::seeds::derive_seed(seed, "dqnn-data", 0);
    let data = gen_unitary_dataset(&v, n_total, u64_from_seed(&data_seed))?;

    let mut curve = Vec::with_capacity(corrupt_grid.len());
    for (idx, &n_corrupt) in corrupt_grid.iter().enumerate() {
        let corrupt_seed = crate::seeds::derive_seed(seed, "dqnn-corrupt", idx as u64);
        let init_seed = crate::seeds::derive_seed(seed, "dqnn-init", idx as u64);
        let (corrupted, mask) = corrupt_pairs(&data, n_corrupt, u64_from_seed(&corrupt_seed))?;
        let clean: Vec<TrainingPair> = data
            .iter()
            .zip(&mask)
            .filter(|(_, &m)| !m)
            .map(|(p, _)| p.clone())
            .collect();
        let mut network = DqnnNetwork::init(arch.clone(), u64_from_seed(&init_seed));
        network.train(&corrupted, steps, hyper.eps, hyper.eta, steps.max(1))?;
        let clean_cost = if clean.is_empty() { None } else { Some(network.cost(&clean)?) };
        curve.push(RobustnessPoint { n_corrupt, clean_cost });
    }
    Ok(curve)
}

fn u64_from_seed(seed: &[u8; 32]) -> u64 {
    u64::from_le_bytes(seed[..8].try_into().expect("8 bytes"))
}
