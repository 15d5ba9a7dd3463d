//! Seeded random quantum objects: Haar-distributed unitaries via QR of
//! complex Gaussian matrices (with the R diagonal phase-fixed positive),
//! Gaussian pure states, and mixtures for tests.

use alloc::vec::Vec;

use num_complex::Complex64;
// Inherent std float methods shadow this under cfg(test).
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use super::density::DensityMatrix;
use super::matrix::ComplexMatrix;
use super::state::PureState;

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Haar-random unitary of dimension `dim`.
///
/// QR of a complex Ginibre matrix via modified Gram-Schmidt with a second
/// orthogonalization pass; forcing the R diagonal real-positive makes the
/// factorization unique and the Q factor Haar-distributed.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    assert!(dim >= 1);
    // Columns of the Ginibre sample.
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| (0..dim).map(|_| gaussian_complex(rng)).collect())
        .collect();

    for j in 0..dim {
        for _pass in 0..2 {
            for i in 0..j {
                let proj: Complex64 = cols[i]
                    .iter()
                    .zip(&cols[j])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                for k in 0..dim {
                    let correction = proj * cols[i][k];
                    cols[j][k] -= correction;
                }
            }
        }
        let norm: f64 = cols[j].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm > 1e-12, "degenerate Ginibre column");
        for c in &mut cols[j] {
            *c /= norm;
        }
    }

    ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Haar-random pure state on `n_qubits` (normalized complex Gaussian vector).
pub fn random_pure_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> PureState {
    let dim = 1usize << n_qubits;
    let amps: Vec<Complex64> = (0..dim).map(|_| gaussian_complex(rng)).collect();
    PureState::normalized(amps).expect("Gaussian vector is nonzero")
}

/// Random full-rank mixed state: a Dirichlet-ish mixture of `dim` Haar pure
/// states. Intended for tests and duality checks.
pub fn random_density<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> DensityMatrix {
    let dim = 1usize << n_qubits;
    let mut weights: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for w in weights {
        let psi = random_pure_state(n_qubits, rng);
        acc = &acc + &psi.outer().scale(Complex64::new(w, 0.0));
    }
    DensityMatrix::new_unchecked(acc.hermitized())
}

/// Random Hermitian matrix (Gaussian entries, symmetrized); for tests.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let raw = ComplexMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng));
    raw.hermitized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::validate_density;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for dim in [2usize, 4, 8, 16] {
            let u = haar_unitary(dim, &mut rng);
            assert!(u.unitarity_deviation() < 1e-12, "dim {dim}");
        }
    }

    #[test]
    fn haar_unitary_deterministic_per_seed() {
        let a = haar_unitary(4, &mut ChaCha20Rng::seed_from_u64(99));
        let b = haar_unitary(4, &mut ChaCha20Rng::seed_from_u64(99));
        assert_eq!(a, b);
    }

    #[test]
    fn random_states_normalized() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..10 {
            let s = random_pure_state(3, &mut rng);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_density_is_valid() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..5 {
            let rho = random_density(2, &mut rng);
            assert!(validate_density(rho.matrix()).is_ok());
        }
    }
}
