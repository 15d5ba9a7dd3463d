//! Core algorithms for hybrid quantum-classical attack detection on
//! indoor-robot RTLS telemetry.
//!
//! The crate is `no_std` (alloc required) and holds everything that does not
//! touch the filesystem or the clock:
//!
//! - [`qlinalg`]: exact complex linear algebra for few-qubit systems
//!   (states, density matrices, partial trace, Hermitian exponentials).
//! - [`dqnn`]: deep quantum neural networks built from perceptron unitaries,
//!   trained by fidelity ascent with adjoint-channel backpropagation.
//! - [`vqc`]: shallow variational circuits with angle/amplitude feature
//!   encoding and parameter-shift gradients.
//! - [`mlp`]: dense softmax classifiers with ReLU/Swish/Tanh activations and
//!   inverted dropout, trained by SGD with momentum.
//! - [`fusion`]: the hybrid detector joining the VQC and MLP branches with a
//!   trainable confidence-weighted fusion layer.
//! - [`telemetry`]: synthetic RTLS trace generation with DoS/spoof injection
//!   and the ten-feature window extractor.
//! - [`privacy`]: feature deletion, zoning, beacon-id hashing, velocity
//!   discretization, and timestamp bucketization profiles.
//! - [`metrics`]: confusion matrices and per-class / macro / weighted /
//!   attack F1 scores.
//!
//! File formats, configuration, experiment sweeps, and the CLI live in the
//! companion `qrtls` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dataset;
pub mod dqnn;
pub mod fusion;
pub mod metrics;
pub mod mlp;
pub mod privacy;
pub mod qlinalg;
pub mod seeds;
pub mod telemetry;
pub mod vqc;
