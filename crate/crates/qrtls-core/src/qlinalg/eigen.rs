//! Hermitian eigendecomposition (cyclic Jacobi) and the operator routines
//! built on it: Hermitian exponentials and polar re-unitarization.

use alloc::vec::Vec;

use num_complex::Complex64;
// Inherent std float methods shadow this under cfg(test).
#[allow(unused_imports)]
use num_traits::Float;

use super::matrix::ComplexMatrix;
use super::LinalgError;

const MAX_SWEEPS: usize = 100;

/// Result of [`eigh`]: `matrix = vectors * diag(values) * vectors†`,
/// eigenvalues ascending, eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. The input is symmetrized first, so rounding-level Hermiticity
/// drift is tolerated; genuinely non-Hermitian input is the caller's bug.
pub fn eigh(matrix: &ComplexMatrix) -> Result<Eigh, LinalgError> {
    if !matrix.is_square() {
        return Err(LinalgError::NotSquare { rows: matrix.rows(), cols: matrix.cols() });
    }
    let n = matrix.rows();
    let mut a = matrix.hermitized();
    let mut v = ComplexMatrix::identity(n);
    if n <= 1 {
        return Ok(Eigh { values: (0..n).map(|i| a.get(i, i).re).collect(), vectors: v });
    }

    let scale: f64 = a
        .entries()
        .iter()
        .map(|e| e.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    let tol = 1e-14 * scale;

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).norm());
            }
        }
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r <= tol * 1e-2 {
                    continue;
                }
                let phase = apq / r;
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                let sign = if tau >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A <- J† A J with J_pp = c, J_pq = s*phase,
                // J_qp = -s*conj(phase), J_qq = c.
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, akp * c - akq * s * phase.conj());
                    a.set(k, q, akp * s * phase + akq * c);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, apk * c - aqk * s * phase);
                    a.set(q, k, apk * s * phase.conj() + aqk * c);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * c - vkq * s * phase.conj());
                    v.set(k, q, vkp * s * phase + vkq * c);
                }
            }
        }
    }
    if !converged {
        return Err(LinalgError::EighNotConverged { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(i, i).re.partial_cmp(&a.get(j, j).re).expect("eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |row, col| v.get(row, order[col]));
    Ok(Eigh { values, vectors })
}

/// e^{i eps K} for Hermitian K, computed by eigendecomposition; exact for the
/// few-qubit sizes used here and unitary to machine precision.
pub fn hermitian_exp(k: &ComplexMatrix, eps: f64) -> Result<ComplexMatrix, LinalgError> {
    let dev = if k.is_square() { k.hermitian_deviation() } else { f64::INFINITY };
    if !k.is_square() {
        return Err(LinalgError::NotSquare { rows: k.rows(), cols: k.cols() });
    }
    if dev > 1e-10 {
        return Err(LinalgError::NotHermitian { deviation: dev });
    }
    let Eigh { values, vectors } = eigh(k)?;
    let n = k.rows();
    let mut exp_diag = ComplexMatrix::zeros(n, n);
    for (i, lambda) in values.iter().enumerate() {
        exp_diag.set(i, i, Complex64::from_polar(1.0, eps * lambda));
    }
    let vd = vectors.adjoint();
    vectors.matmul(&exp_diag)?.matmul(&vd)
}

/// Closest unitary to `a` in Frobenius norm: `a (a†a)^(-1/2)`.
///
/// Used to project perceptron unitaries back onto the unitary group when
/// repeated `e^{i eps K}` composition accumulates rounding drift.
pub fn polar_unitary(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let gram = a.adjoint().matmul(a)?;
    let Eigh { values, vectors } = eigh(&gram)?;
    let n = a.rows();
    let mut inv_sqrt = ComplexMatrix::zeros(n, n);
    for (i, lambda) in values.iter().enumerate() {
        // The Gram matrix of a near-unitary is near-identity; eigenvalues
        // are strictly positive.
        inv_sqrt.set(i, i, Complex64::new(1.0 / lambda.max(f64::MIN_POSITIVE).sqrt(), 0.0));
    }
    let h_inv_sqrt = vectors.matmul(&inv_sqrt)?.matmul(&vectors.adjoint())?;
    a.matmul(&h_inv_sqrt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::haar::{haar_unitary, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn eigh_pauli_x() {
        let Eigh { values, vectors } = eigh(&sigma_x()).unwrap();
        assert!((values[0] + 1.0).abs() < 1e-12);
        assert!((values[1] - 1.0).abs() < 1e-12);
        assert!(vectors.unitarity_deviation() < 1e-12);
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for dim in [2usize, 3, 5, 8, 16] {
            let h = random_hermitian(dim, &mut rng);
            let Eigh { values, vectors } = eigh(&h).unwrap();
            let mut diag = ComplexMatrix::zeros(dim, dim);
            for (i, l) in values.iter().enumerate() {
                diag.set(i, i, Complex64::new(*l, 0.0));
            }
            let recon = vectors.matmul(&diag).unwrap().matmul(&vectors.adjoint()).unwrap();
            assert!(h.max_abs_diff(&recon) < 1e-10, "dim {dim}");
            assert!(vectors.unitarity_deviation() < 1e-11, "dim {dim}");
            for w in values.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn hermitian_exp_of_zero_is_identity() {
        let z = ComplexMatrix::zeros(4, 4);
        let u = hermitian_exp(&z, 0.3).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-14);
    }

    #[test]
    fn hermitian_exp_sigma_x_half_pi() {
        // e^{i (pi/2) sigma_x} = i sigma_x, exactly (not just up to phase).
        let u = hermitian_exp(&sigma_x(), core::f64::consts::FRAC_PI_2).unwrap();
        let expect = sigma_x().scale(Complex64::new(0.0, 1.0));
        assert!(u.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn hermitian_exp_unitary_and_inverse() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..5 {
            let k = random_hermitian(8, &mut rng);
            let eps = 0.37;
            let u = hermitian_exp(&k, eps).unwrap();
            assert!(u.unitarity_deviation() < 1e-9);
            let u_inv = hermitian_exp(&k, -eps).unwrap();
            let prod = u.matmul(&u_inv).unwrap();
            assert!(prod.max_abs_diff(&ComplexMatrix::identity(8)) < 1e-9);
        }
    }

    #[test]
    fn hermitian_exp_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_exp(&m, 0.1), Err(LinalgError::NotHermitian { .. })));
    }

    #[test]
    fn polar_projects_back_to_unitary() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let u = haar_unitary(8, &mut rng);
        // Nudge off the unitary group.
        let mut drifted = u.clone();
        drifted.set(0, 0, drifted.get(0, 0) * 1.000001);
        let fixed = polar_unitary(&drifted).unwrap();
        assert!(fixed.unitarity_deviation() < 1e-12);
        assert!(fixed.max_abs_diff(&u) < 1e-5);
    }
}
