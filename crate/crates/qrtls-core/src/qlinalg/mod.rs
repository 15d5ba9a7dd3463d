//! Exact complex linear algebra for few-qubit systems.
//!
//! Dense row-major storage with `f64` components throughout; the largest
//! workspace handled here is 10 qubits (1024 x 1024), comfortably dense.
//!
//! Qubit ordering convention: **qubit 0 is the most significant bit** of the
//! computational-basis index. All tensor, embedding, and partial-trace index
//! math in this module and its consumers follows that convention.

mod density;
mod eigen;
mod embed;
mod haar;
mod matrix;
mod state;

pub use density::{fidelity, validate_density, DensityMatrix, DensityTolerances};
pub use eigen::{eigh, hermitian_exp, polar_unitary, Eigh};
pub use embed::{embed_unitary, partial_trace_matrix};
pub use haar::{haar_unitary, random_density, random_hermitian, random_pure_state};
pub use matrix::ComplexMatrix;
pub use state::PureState;

pub use num_complex::Complex64;

use thiserror::Error;

/// Errors raised by matrix/state constructors and operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("entry count {found} does not match {rows}x{cols}")]
    EntryCount { rows: usize, cols: usize, found: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension {dim} is not a power of two")]
    NotPowerOfTwo { dim: usize },
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not unitary (max |U\u{2020}U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("state norm\u{b2} {norm_sqr} is not 1 within tolerance")]
    NotNormalized { norm_sqr: f64 },
    #[error("qubit index {index} out of range for {qubit_count} qubits")]
    QubitOutOfRange { index: usize, qubit_count: usize },
    #[error("duplicate qubit index {index}")]
    DuplicateQubit { index: usize },
    #[error("empty qubit selection")]
    EmptyQubitSet,
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    EighNotConverged { sweeps: usize },
}
