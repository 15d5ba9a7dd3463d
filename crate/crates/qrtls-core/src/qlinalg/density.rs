//! Density matrices: trace-1 Hermitian PSD operators, with the validation,
//! partial trace, unitary conjugation, and fidelity operations the channel
//! code builds on.

use num_complex::Complex64;
use thiserror::Error;

use super::eigen::eigh;
use super::embed::partial_trace_matrix;
use super::matrix::ComplexMatrix;
use super::state::PureState;
use super::LinalgError;

/// Invariant tolerances for density-matrix validation.
///
/// The defaults allow the rounding that repeated channel composition
/// accumulates: trace within 1e-9, Hermiticity within 1e-10, and smallest
/// eigenvalue no lower than -1e-9.
#[derive(Debug, Clone, Copy)]
pub struct DensityTolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

impl Default for DensityTolerances {
    fn default() -> Self {
        Self { hermiticity: 1e-10, trace: 1e-9, min_eigenvalue: -1e-9 }
    }
}

/// Why a matrix failed density validation, with the measured violation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension {dim} is not a power of two")]
    NotPowerOfTwo { dim: usize },
    #[error("not Hermitian: max |m - m\u{2020}| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("trace is {trace_re}{trace_im:+}i, expected 1")]
    TraceNotOne { trace_re: f64, trace_im: f64 },
    #[error("negative eigenvalue {min_eigenvalue:.3e}")]
    NegativeEigenvalue { min_eigenvalue: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Mixed quantum state: Hermitian, trace 1, positive semidefinite, with
/// power-of-two dimension. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validate all three invariants against `tol` and wrap the matrix.
    pub fn try_from_matrix(
        mat: ComplexMatrix,
        tol: &DensityTolerances,
    ) -> Result<Self, DensityError> {
        if !mat.is_square() {
            return Err(DensityError::NotSquare { rows: mat.rows(), cols: mat.cols() });
        }
        if !mat.rows().is_power_of_two() {
            return Err(DensityError::NotPowerOfTwo { dim: mat.rows() });
        }
        let dev = mat.hermitian_deviation();
        if dev > tol.hermiticity {
            return Err(DensityError::NotHermitian { deviation: dev });
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(DensityError::TraceNotOne { trace_re: tr.re, trace_im: tr.im });
        }
        let spectrum = eigh(&mat)?;
        let min = spectrum.values.first().copied().unwrap_or(0.0);
        if min < tol.min_eigenvalue {
            return Err(DensityError::NegativeEigenvalue { min_eigenvalue: min });
        }
        Ok(Self { mat })
    }

    /// Wrap a matrix that is a valid state by construction (channel outputs,
    /// pure-state projectors). Debug builds still check the cheap invariants.
    pub(crate) fn new_unchecked(mat: ComplexMatrix) -> Self {
        debug_assert!(mat.is_square() && mat.rows().is_power_of_two());
        debug_assert!(mat.hermitian_deviation() < 1e-8);
        debug_assert!((mat.trace().re - 1.0).abs() < 1e-8);
        Self { mat }
    }

    /// |psi><psi|
    pub fn from_pure(state: &PureState) -> Self {
        Self { mat: state.outer() }
    }

    /// I/d on `n_qubits`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self { mat: ComplexMatrix::identity(d).scale(Complex64::new(1.0 / d as f64, 0.0)) }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    /// rho_A (x) rho_B
    pub fn tensor(&self, other: &Self) -> Self {
        Self { mat: self.mat.tensor(&other.mat) }
    }

    /// Reduced state over `keep` (ascending original qubit order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self, LinalgError> {
        let reduced = partial_trace_matrix(&self.mat, self.n_qubits(), keep)?;
        // Partial trace of a state is a state; hermitize away rounding.
        Ok(Self::new_unchecked(reduced.hermitized()))
    }

    /// U rho U†; trace and spectrum preserved.
    pub fn conjugated_by(&self, u: &ComplexMatrix) -> Result<Self, LinalgError> {
        if u.rows() != self.dim() || u.cols() != self.dim() {
            return Err(LinalgError::DimMismatch { left: u.rows(), right: self.dim() });
        }
        let dev = u.unitarity_deviation();
        if dev > 1e-9 {
            return Err(LinalgError::NotUnitary { deviation: dev });
        }
        let out = u.matmul(&self.mat)?.matmul(&u.adjoint())?;
        Ok(Self::new_unchecked(out.hermitized()))
    }
}

/// Validate a matrix as a density operator with default tolerances,
/// reporting which invariant failed and by how much.
pub fn validate_density(mat: &ComplexMatrix) -> Result<DensityMatrix, DensityError> {
    DensityMatrix::try_from_matrix(mat.clone(), &DensityTolerances::default())
}

/// <phi| rho |phi>, the fidelity of a pure target with a produced state.
/// Real within rounding for valid inputs; the tiny imaginary residue is
/// discarded after a debug check.
pub fn fidelity(target: &PureState, rho: &DensityMatrix) -> Result<f64, LinalgError> {
    if target.dim() != rho.dim() {
        return Err(LinalgError::DimMismatch { left: target.dim(), right: rho.dim() });
    }
    let applied = rho.matrix().mat_vec(target.amplitudes())?;
    let value: Complex64 = target
        .amplitudes()
        .iter()
        .zip(&applied)
        .map(|(a, b)| a.conj() * b)
        .sum();
    debug_assert!(value.im.abs() < 1e-10, "fidelity imaginary residue {}", value.im);
    Ok(value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::haar::{haar_unitary, random_density};
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn bell_state() -> PureState {
        let r = 1.0 / 2.0f64.sqrt();
        PureState::from_amplitudes(vec![
            Complex64::new(r, 0.0),
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::new(r, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn validate_accepts_maximally_mixed() {
        let m = ComplexMatrix::identity(2).scale(Complex64::new(0.5, 0.0));
        assert!(validate_density(&m).is_ok());
    }

    #[test]
    fn validate_rejects_traceless() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(validate_density(&m), Err(DensityError::TraceNotOne { .. })));
    }

    #[test]
    fn validate_rejects_negative_eigenvalue() {
        let m = ComplexMatrix::from_real(2, 2, &[1.5, 0.0, 0.0, -0.5]).unwrap();
        match validate_density(&m) {
            Err(DensityError::NegativeEigenvalue { min_eigenvalue }) => {
                assert!((min_eigenvalue + 0.5).abs() < 1e-12);
            }
            other => panic!("expected negative-eigenvalue error, got {other:?}"),
        }
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let a = random_density(1, &mut rng);
        let b = random_density(1, &mut rng);
        let joint = a.tensor(&b);
        let back_a = joint.partial_trace(&[0]).unwrap();
        let back_b = joint.partial_trace(&[1]).unwrap();
        assert!(back_a.matrix().max_abs_diff(a.matrix()) < 1e-12);
        assert!(back_b.matrix().max_abs_diff(b.matrix()) < 1e-12);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let rho = DensityMatrix::from_pure(&bell_state());
        let marginal = rho.partial_trace(&[0]).unwrap();
        assert!(marginal.matrix().max_abs_diff(DensityMatrix::maximally_mixed(1).matrix()) < 1e-12);
    }

    #[test]
    fn partial_trace_keep_all_is_input() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let rho = random_density(2, &mut rng);
        let kept = rho.partial_trace(&[0, 1]).unwrap();
        assert!(kept.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let rho = random_density(3, &mut rng);
        for keep in [&[0usize][..], &[1, 2], &[0, 2]] {
            let reduced = rho.partial_trace(keep).unwrap();
            assert!((reduced.matrix().trace().re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn conjugation_identity_and_flip() {
        let rho = DensityMatrix::from_pure(&PureState::basis(1, 0));
        let id = ComplexMatrix::identity(2);
        assert!(rho.conjugated_by(&id).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-15);

        let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let flipped = rho.conjugated_by(&x).unwrap();
        let one = DensityMatrix::from_pure(&PureState::basis(1, 1));
        assert!(flipped.matrix().max_abs_diff(one.matrix()) < 1e-15);
    }

    #[test]
    fn conjugation_preserves_spectrum() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let rho = random_density(2, &mut rng);
        let u = haar_unitary(4, &mut rng);
        let rotated = rho.conjugated_by(&u).unwrap();
        let ev_before = eigh(rho.matrix()).unwrap().values;
        let ev_after = eigh(rotated.matrix()).unwrap().values;
        for (a, b) in ev_before.iter().zip(&ev_after) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn conjugation_rejects_non_unitary() {
        let rho = DensityMatrix::maximally_mixed(1);
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(rho.conjugated_by(&m), Err(LinalgError::NotUnitary { .. })));
    }

    #[test]
    fn fidelity_basics() {
        let zero = PureState::basis(1, 0);
        let one = PureState::basis(1, 1);
        let plus = PureState::normalized(vec![Complex64::ONE, Complex64::ONE]).unwrap();
        let rho0 = DensityMatrix::from_pure(&zero);
        let rho1 = DensityMatrix::from_pure(&one);
        assert!((fidelity(&zero, &rho0).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&zero, &rho1).unwrap().abs() < 1e-12);
        assert!((fidelity(&plus, &rho0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fidelity_linear_in_rho() {
        let mut rng = ChaCha20Rng::seed_from_u64(33);
        let phi = crate::qlinalg::haar::random_pure_state(2, &mut rng);
        let r1 = random_density(2, &mut rng);
        let r2 = random_density(2, &mut rng);
        for &a in &[0.0, 0.25, 0.5, 0.9, 1.0] {
            let mixed = &r1.matrix().scale(Complex64::new(a, 0.0))
                + &r2.matrix().scale(Complex64::new(1.0 - a, 0.0));
            let rho = DensityMatrix::new_unchecked(mixed);
            let lhs = fidelity(&phi, &rho).unwrap();
            let rhs = a * fidelity(&phi, &r1).unwrap() + (1.0 - a) * fidelity(&phi, &r2).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn fidelity_dim_mismatch() {
        let phi = PureState::basis(1, 0);
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(fidelity(&phi, &rho).is_err());
    }
}
