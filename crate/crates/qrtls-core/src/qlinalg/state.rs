//! Pure states as dense amplitude vectors.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// Inherent std float methods shadow this under cfg(test).
#[allow(unused_imports)]
use num_traits::Float;

use super::matrix::ComplexMatrix;
use super::LinalgError;

const NORM_TOL: f64 = 1e-10;

/// Pure quantum state over `n` qubits: 2^n amplitudes with unit norm
/// (within 1e-10). Qubit 0 is the most significant index bit.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<Complex64>,
}

impl PureState {
    /// |0...0> on `n_qubits`.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    /// Computational basis state |index> on `n_qubits`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        assert!(index < dim, "basis index {index} out of range for {n_qubits} qubits");
        let mut amps = vec![Complex64::ZERO; dim];
        amps[index] = Complex64::ONE;
        Self { amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, LinalgError> {
        if !amps.len().is_power_of_two() {
            return Err(LinalgError::NotPowerOfTwo { dim: amps.len() });
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(LinalgError::NotNormalized { norm_sqr });
        }
        Ok(Self { amps })
    }

    /// Normalize an arbitrary nonzero vector into a state.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self, LinalgError> {
        if !amps.len().is_power_of_two() {
            return Err(LinalgError::NotPowerOfTwo { dim: amps.len() });
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr <= 0.0 {
            return Err(LinalgError::NotNormalized { norm_sqr });
        }
        let inv = 1.0 / norm_sqr.sqrt();
        Ok(Self { amps: amps.into_iter().map(|a| a * inv).collect() })
    }

    pub(crate) fn from_amplitudes_unchecked(amps: Vec<Complex64>) -> Self {
        debug_assert!(amps.len().is_power_of_two());
        Self { amps }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// <self|other>
    pub fn inner(&self, other: &Self) -> Result<Complex64, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// |self> (x) |other>
    pub fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self { amps }
    }

    /// U|self>
    pub fn apply_unitary(&self, u: &ComplexMatrix) -> Result<Self, LinalgError> {
        if u.cols() != self.dim() {
            return Err(LinalgError::DimMismatch { left: u.cols(), right: self.dim() });
        }
        let dev = u.unitarity_deviation();
        if dev > 1e-9 {
            return Err(LinalgError::NotUnitary { deviation: dev });
        }
        Ok(Self { amps: u.mat_vec(&self.amps)? })
    }

    /// |self><self| as a matrix.
    pub fn outer(&self) -> ComplexMatrix {
        let d = self.dim();
        ComplexMatrix::from_fn(d, d, |i, j| self.amps[i] * self.amps[j].conj())
    }
}
