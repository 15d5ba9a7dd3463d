//! Shallow variational quantum circuits for the NISQ-style branch:
//! classical-feature encoding, an R_y/R_z + CZ ansatz with linear or ring
//! entanglement, exact per-qubit Z expectations, and parameter-shift
//! gradients.
//!
//! Expectations are exact statevector values (no shot noise), which keeps
//! gradient checks deterministic.

use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
// Inherent std float methods shadow this under cfg(test).
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::qlinalg::PureState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VqcError {
    #[error("feature {index} = {value} is outside [0, 1]")]
    FeatureOutOfRange { index: usize, value: f64 },
    #[error("{count} features exceed the 2^{n_qubits} amplitudes available")]
    TooManyFeatures { count: usize, n_qubits: usize },
    #[error("all-zero feature vector cannot be amplitude-encoded")]
    ZeroFeatureVector,
    #[error("state has {found} qubits, expected {expected}")]
    QubitMismatch { expected: usize, found: usize },
    #[error("parameter vector has {found} entries, expected {expected}")]
    ParamCount { expected: usize, found: usize },
    #[error("non-finite parameter at index {index}")]
    NonFiniteParam { index: usize },
    #[error("downstream gradient has {found} entries, expected {expected}")]
    DownstreamWidth { expected: usize, found: usize },
    #[error("circuit needs at least one qubit")]
    NoQubits,
}

/// How classical features become amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// R_y(pi * x_i) on qubit (i mod n), in feature order; features must be
    /// normalized to [0, 1].
    Angle,
    /// Zero-pad to 2^n, L2-normalize, use directly as amplitudes.
    Amplitude,
}

/// CZ entangler layout per ansatz layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entanglement {
    /// CZ along the chain (0,1), (1,2), ...
    Linear,
    /// Linear plus the closing (n-1, 0) edge when n > 2 (on two qubits the
    /// closing edge would cancel the chain edge).
    Ring,
}

/// A variational circuit: per layer, R_y and R_z on every qubit followed by
/// the entangler block. Parameters are rotation angles, length
/// `depth * n_qubits * 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct VqcModel {
    n_qubits: usize,
    depth: usize,
    params: Vec<f64>,
    pub encoding: Encoding,
    pub entanglement: Entanglement,
}

impl VqcModel {
    /// Fresh model with angles drawn uniformly from (-pi, pi); deterministic
    /// per seed.
    pub fn new(
        n_qubits: usize,
        depth: usize,
        encoding: Encoding,
        entanglement: Entanglement,
        seed: u64,
    ) -> Result<Self, VqcError> {
        if n_qubits == 0 {
            return Err(VqcError::NoQubits);
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let params = (0..depth * n_qubits * 2)
            .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * PI)
            .collect();
        Ok(Self { n_qubits, depth, params, encoding, entanglement })
    }

    pub fn with_params(
        n_qubits: usize,
        depth: usize,
        params: Vec<f64>,
        encoding: Encoding,
        entanglement: Entanglement,
    ) -> Result<Self, VqcError> {
        if n_qubits == 0 {
            return Err(VqcError::NoQubits);
        }
        if params.len() != depth * n_qubits * 2 {
            return Err(VqcError::ParamCount {
                expected: depth * n_qubits * 2,
                found: params.len(),
            });
        }
        if let Some(index) = params.iter().position(|p| !p.is_finite()) {
            return Err(VqcError::NonFiniteParam { index });
        }
        Ok(Self { n_qubits, depth, params, encoding, entanglement })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Parameter index of the (layer, qubit, rotation) triple; rotation 0 is
    /// the R_y angle, 1 the R_z angle.
    pub fn param_index(&self, layer: usize, qubit: usize, rotation: usize) -> usize {
        (layer * self.n_qubits + qubit) * 2 + rotation
    }
}

#[inline]
fn pair_indices(dim: usize, qubit: usize, n_qubits: usize) -> impl Iterator<Item = (usize, usize)> {
    let stride = 1usize << (n_qubits - 1 - qubit);
    (0..dim).filter(move |i| i & stride == 0).map(move |i| (i, i | stride))
}

fn apply_ry(amps: &mut [Complex64], qubit: usize, n_qubits: usize, theta: f64) {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    for (i0, i1) in pair_indices(amps.len(), qubit, n_qubits) {
        let (a0, a1) = (amps[i0], amps[i1]);
        amps[i0] = a0 * c - a1 * s;
        amps[i1] = a0 * s + a1 * c;
    }
}

fn apply_rz(amps: &mut [Complex64], qubit: usize, n_qubits: usize, theta: f64) {
    let phase0 = Complex64::from_polar(1.0, -theta / 2.0);
    let phase1 = Complex64::from_polar(1.0, theta / 2.0);
    for (i0, i1) in pair_indices(amps.len(), qubit, n_qubits) {
        amps[i0] *= phase0;
        amps[i1] *= phase1;
    }
}

fn apply_cz(amps: &mut [Complex64], q1: usize, q2: usize, n_qubits: usize) {
    let b1 = 1usize << (n_qubits - 1 - q1);
    let b2 = 1usize << (n_qubits - 1 - q2);
    for (i, amp) in amps.iter_mut().enumerate() {
        if i & b1 != 0 && i & b2 != 0 {
            *amp = -*amp;
        }
    }
}

/// Angle-encode normalized features: starting from |0...0>, apply
/// R_y(pi * x_i) on qubit (i mod n_qubits) in feature order. Features wrap
/// round-robin, so rotations on a shared qubit compose.
pub fn angle_encode(features: &[f64], n_qubits: usize) -> Result<PureState, VqcError> {
    if n_qubits == 0 {
        return Err(VqcError::NoQubits);
    }
    for (index, &value) in features.iter().enumerate() {
        if !(-1e-9..=1.0 + 1e-9).contains(&value) {
            return Err(VqcError::FeatureOutOfRange { index, value });
        }
    }
    let dim = 1usize << n_qubits;
    let mut amps = vec![Complex64::ZERO; dim];
    amps[0] = Complex64::ONE;
    for (i, &x) in features.iter().enumerate() {
        apply_ry(&mut amps, i % n_qubits, n_qubits, PI * x);
    }
    Ok(PureState::from_amplitudes_unchecked(amps))
}

/// Amplitude-encode features: zero-pad to 2^n_qubits and L2-normalize.
pub fn amplitude_encode(features: &[f64], n_qubits: usize) -> Result<PureState, VqcError> {
    if n_qubits == 0 {
        return Err(VqcError::NoQubits);
    }
    let dim = 1usize << n_qubits;
    if features.len() > dim {
        return Err(VqcError::TooManyFeatures { count: features.len(), n_qubits });
    }
    let norm_sqr: f64 = features.iter().map(|x| x * x).sum();
    if norm_sqr <= 0.0 {
        return Err(VqcError::ZeroFeatureVector);
    }
    let inv = 1.0 / norm_sqr.sqrt();
    let mut amps = vec![Complex64::ZERO; dim];
    for (a, &x) in amps.iter_mut().zip(features) {
        *a = Complex64::new(x * inv, 0.0);
    }
    Ok(PureState::from_amplitudes_unchecked(amps))
}

/// Run the parameterized ansatz over an encoded state.
pub fn apply_ansatz(state: &PureState, model: &VqcModel) -> Result<PureState, VqcError> {
    if state.n_qubits() != model.n_qubits {
        return Err(VqcError::QubitMismatch {
            expected: model.n_qubits,
            found: state.n_qubits(),
        });
    }
    let n = model.n_qubits;
    let mut amps = state.amplitudes().to_vec();
    for layer in 0..model.depth {
        for q in 0..n {
            apply_ry(&mut amps, q, n, model.params[model.param_index(layer, q, 0)]);
            apply_rz(&mut amps, q, n, model.params[model.param_index(layer, q, 1)]);
        }
        for q in 0..n.saturating_sub(1) {
            apply_cz(&mut amps, q, q + 1, n);
        }
        if model.entanglement == Entanglement::Ring && n > 2 {
            apply_cz(&mut amps, n - 1, 0, n);
        }
    }
    Ok(PureState::from_amplitudes_unchecked(amps))
}

/// Exact <Z_q> for every qubit, each in [-1, 1].
pub fn expectations(state: &PureState) -> Vec<f64> {
    let n = state.n_qubits();
    let mut out = vec![0.0f64; n];
    for (i, amp) in state.amplitudes().iter().enumerate() {
        let p = amp.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (q, o) in out.iter_mut().enumerate() {
            if i & (1usize << (n - 1 - q)) == 0 {
                *o += p;
            } else {
                *o -= p;
            }
        }
    }
    out
}

/// Full branch evaluation: encode, run the ansatz, read out <Z_q>.
pub fn vqc_scores(model: &VqcModel, features: &[f64]) -> Result<Vec<f64>, VqcError> {
    let encoded = match model.encoding {
        Encoding::Angle => angle_encode(features, model.n_qubits)?,
        Encoding::Amplitude => amplitude_encode(features, model.n_qubits)?,
    };
    let evolved = apply_ansatz(&encoded, model)?;
    Ok(expectations(&evolved))
}

/// Parameter-shift gradient of `sum_q downstream[q] * <Z_q>` with respect to
/// every rotation angle: each R_y/R_z parameter satisfies
/// `d<Z>/d theta = [f(theta + pi/2) - f(theta - pi/2)] / 2` exactly.
pub fn param_shift_grad(
    model: &VqcModel,
    features: &[f64],
    downstream: &[f64],
) -> Result<Vec<f64>, VqcError> {
    if downstream.len() != model.n_qubits {
        return Err(VqcError::DownstreamWidth {
            expected: model.n_qubits,
            found: downstream.len(),
        });
    }
    let mut grad = vec![0.0f64; model.params.len()];
    if downstream.iter().all(|&d| d == 0.0) {
        return Ok(grad);
    }
    let mut shifted = model.clone();
    for k in 0..model.params.len() {
        shifted.params[k] = model.params[k] + FRAC_PI_2;
        let plus = vqc_scores(&shifted, features)?;
        shifted.params[k] = model.params[k] - FRAC_PI_2;
        let minus = vqc_scores(&shifted, features)?;
        shifted.params[k] = model.params[k];
        grad[k] = downstream
            .iter()
            .zip(plus.iter().zip(&minus))
            .map(|(d, (p, m))| d * (p - m) / 2.0)
            .sum();
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::fidelity;
    use crate::qlinalg::DensityMatrix;

    #[test]
    fn angle_encode_zero_features() {
        let s = angle_encode(&[0.0; 10], 4).unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::ONE);
    }

    #[test]
    fn angle_encode_full_flip() {
        let s = angle_encode(&[1.0], 1).unwrap();
        assert!(s.amplitudes()[0].norm() < 1e-12);
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn angle_encode_norm_and_range() {
        let s = angle_encode(&[0.3, 0.9, 0.1, 0.5, 0.7], 2).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        assert!(matches!(
            angle_encode(&[1.2], 1),
            Err(VqcError::FeatureOutOfRange { index: 0, .. })
        ));
    }

    #[test]
    fn angle_encoding_distinguishes_inputs() {
        let a = angle_encode(&[0.2], 1).unwrap();
        let b = angle_encode(&[0.7], 1).unwrap();
        let f = fidelity(&a, &DensityMatrix::from_pure(&b)).unwrap();
        assert!(f < 1.0 - 1e-6);
    }

    #[test]
    fn amplitude_encode_examples() {
        let s = amplitude_encode(&[1.0, 0.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::ONE);

        let u = amplitude_encode(&[1.0, 1.0, 1.0, 1.0], 2).unwrap();
        for a in u.amplitudes() {
            assert!((a.re - 0.5).abs() < 1e-12);
        }

        let tf = amplitude_encode(&[3.0, 4.0], 1).unwrap();
        assert!((tf.amplitudes()[0].re - 0.6).abs() < 1e-12);
        assert!((tf.amplitudes()[1].re - 0.8).abs() < 1e-12);

        assert!(matches!(
            amplitude_encode(&[0.0, 0.0], 1),
            Err(VqcError::ZeroFeatureVector)
        ));
        assert!(matches!(
            amplitude_encode(&[1.0; 5], 2),
            Err(VqcError::TooManyFeatures { .. })
        ));
    }

    #[test]
    fn depth_zero_ansatz_is_identity() {
        let model = VqcModel::with_params(2, 0, vec![], Encoding::Angle, Entanglement::Ring).unwrap();
        let s = angle_encode(&[0.3, 0.8], 2).unwrap();
        let out = apply_ansatz(&s, &model).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn zero_params_fix_ground_state() {
        // With all angles zero only CZ gates act, and CZ fixes |0...0>.
        let model =
            VqcModel::with_params(3, 2, vec![0.0; 12], Encoding::Angle, Entanglement::Ring)
                .unwrap();
        let out = apply_ansatz(&PureState::zero(3), &model).unwrap();
        assert!((out.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ansatz_preserves_norm() {
        let model = VqcModel::new(4, 3, Encoding::Angle, Entanglement::Ring, 9).unwrap();
        let s = angle_encode(&[0.1, 0.9, 0.4, 0.6, 0.2, 0.8, 0.3, 0.7, 0.5, 0.0], 4).unwrap();
        let out = apply_ansatz(&s, &model).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn expectation_values() {
        assert_eq!(expectations(&PureState::zero(3)), vec![1.0, 1.0, 1.0]);
        assert_eq!(expectations(&PureState::basis(1, 1)), vec![-1.0]);
        let plus = PureState::normalized(vec![Complex64::ONE, Complex64::ONE]).unwrap();
        assert!(expectations(&plus)[0].abs() < 1e-10);
    }

    #[test]
    fn scores_deterministic_and_bounded() {
        let model = VqcModel::new(4, 3, Encoding::Angle, Entanglement::Ring, 3).unwrap();
        let features = [0.2, 0.4, 0.6, 0.8, 0.1, 0.3, 0.5, 0.7, 0.9, 0.0];
        let a = vqc_scores(&model, &features).unwrap();
        let b = vqc_scores(&model, &features).unwrap();
        assert_eq!(a, b);
        for v in &a {
            assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(v));
        }

        let flat = VqcModel::with_params(2, 0, vec![], Encoding::Angle, Entanglement::Linear)
            .unwrap();
        assert_eq!(vqc_scores(&flat, &[0.0, 0.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn single_qubit_gradient_is_minus_sine() {
        // <Z> after R_y(theta)|0> is cos(theta); the parameter-shift gradient
        // must equal -sin(theta).
        for &theta in &[0.0, 0.4, 1.1, 2.9, -0.7] {
            let model = VqcModel::with_params(
                1,
                1,
                vec![theta, 0.0],
                Encoding::Angle,
                Entanglement::Linear,
            )
            .unwrap();
            let grad = param_shift_grad(&model, &[0.0], &[1.0]).unwrap();
            assert!((grad[0] + theta.sin()).abs() < 1e-10, "theta {theta}");
        }
    }

    #[test]
    fn zero_downstream_gives_zero_gradient() {
        let model = VqcModel::new(2, 2, Encoding::Angle, Entanglement::Linear, 4).unwrap();
        let grad = param_shift_grad(&model, &[0.5, 0.5], &[0.0, 0.0]).unwrap();
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn parameter_shift_matches_finite_differences() {
        let mut rng = ChaCha20Rng::seed_from_u64(55);
        for trial in 0..20 {
            let n_qubits = [1usize, 2, 4][trial % 3];
            let model = VqcModel::new(n_qubits, 2, Encoding::Angle, Entanglement::Ring, trial as u64)
                .unwrap();
            let features: Vec<f64> = (0..7).map(|_| rng.random::<f64>()).collect();
            let downstream: Vec<f64> =
                (0..n_qubits).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let analytic = param_shift_grad(&model, &features, &downstream).unwrap();
            let h = 1e-5;
            for k in 0..model.params().len() {
                let mut plus = model.clone();
                plus.params_mut()[k] += h;
                let mut minus = model.clone();
                minus.params_mut()[k] -= h;
                let f = |m: &VqcModel| -> f64 {
                    vqc_scores(m, &features)
                        .unwrap()
                        .iter()
                        .zip(&downstream)
                        .map(|(s, d)| s * d)
                        .sum()
                };
                let fd = (f(&plus) - f(&minus)) / (2.0 * h);
                let denom = analytic[k].abs().max(fd.abs()).max(1e-3);
                assert!(
                    (analytic[k] - fd).abs() / denom < 1e-6,
                    "trial {trial} param {k}: {} vs {fd}",
                    analytic[k]
                );
            }
        }
    }
}
