//! Labeled feature datasets shared by every classifier branch: stratified
//! splitting and the min-max normalization contract.

use alloc::vec;
use alloc::vec::Vec;

// Inherent std float methods shadow this under cfg(test).
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("sample {index} has width {found}, expected {expected}")]
    RaggedRow { index: usize, expected: usize, found: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("feature and label counts differ: {features} vs {labels}")]
    LengthMismatch { features: usize, labels: usize },
    #[error("dataset is empty")]
    Empty,
    #[error("normalizer has width {expected}, input has {found}")]
    WidthMismatch { expected: usize, found: usize },
}

/// Feature rows plus integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self, DatasetError> {
        if features.len() != labels.len() {
            return Err(DatasetError::LengthMismatch {
                features: features.len(),
                labels: labels.len(),
            });
        }
        if features.is_empty() {
            return Err(DatasetError::Empty);
        }
        let width = features[0].len();
        for (index, row) in features.iter().enumerate() {
            if row.len() != width {
                return Err(DatasetError::RaggedRow { index, expected: width, found: row.len() });
            }
        }
        for &label in &labels {
            if label >= n_classes {
                return Err(DatasetError::LabelOutOfRange { label, n_classes });
            }
        }
        Ok(Self { features, labels, n_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.features[0].len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> (&[f64], usize) {
        (&self.features[i], self.labels[i])
    }

    /// Class-stratified split: within each class the indices are shuffled by
    /// the seeded generator and the first `test_fraction` share goes to the
    /// test side. Deterministic per seed.
    pub fn stratified_split(&self, test_fraction: f64, seed: u64) -> (Dataset, Dataset) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut train_idx = Vec::new();
        let mut test_idx = Vec::new();
        for class in 0..self.n_classes {
            let mut members: Vec<usize> =
                (0..self.len()).filter(|&i| self.labels[i] == class).collect();
            for i in (1..members.len()).rev() {
                let j = rng.random_range(0..=i);
                members.swap(i, j);
            }
            let n_test = ((members.len() as f64) * test_fraction).round() as usize;
            test_idx.extend_from_slice(&members[..n_test]);
            train_idx.extend_from_slice(&members[n_test..]);
        }
        train_idx.sort_unstable();
        test_idx.sort_unstable();
        (self.subset(&train_idx), self.subset(&test_idx))
    }

    fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// Collapse to binary: 0 stays normal, anything in `attack_classes`
    /// becomes 1.
    pub fn binarized(&self, attack_classes: &[usize]) -> Dataset {
        Dataset {
            features: self.features.clone(),
            labels: self
                .labels
                .iter()
                .map(|l| usize::from(attack_classes.contains(l)))
                .collect(),
            n_classes: 2,
        }
    }
}

/// Per-column min-max scaler fitted on the training split only.
///
/// Outputs are clamped to [0, 1] so that test-split values falling outside
/// the training range still satisfy the encoding contract; the same
/// transform feeds every branch (quantum and classical alike). Constant
/// columns map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxNormalizer {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl MinMaxNormalizer {
    pub fn fit(data: &Dataset) -> Self {
        let width = data.width();
        let mut mins = vec![f64::INFINITY; width];
        let mut maxs = vec![f64::NEG_INFINITY; width];
        for row in data.features() {
            for (c, &v) in row.iter().enumerate() {
                mins[c] = mins[c].min(v);
                maxs[c] = maxs[c].max(v);
            }
        }
        Self { mins, maxs }
    }

    pub fn from_bounds(mins: Vec<f64>, maxs: Vec<f64>) -> Result<Self, DatasetError> {
        if mins.len() != maxs.len() {
            return Err(DatasetError::WidthMismatch { expected: mins.len(), found: maxs.len() });
        }
        Ok(Self { mins, maxs })
    }

    pub fn mins(&self) -> &[f64] {
        &self.mins
    }

    pub fn maxs(&self) -> &[f64] {
        &self.maxs
    }

    pub fn apply(&self, features: &[f64]) -> Result<Vec<f64>, DatasetError> {
        if features.len() != self.mins.len() {
            return Err(DatasetError::WidthMismatch {
                expected: self.mins.len(),
                found: features.len(),
            });
        }
        Ok(features
            .iter()
            .enumerate()
            .map(|(c, &v)| {
                let span = self.maxs[c] - self.mins[c];
                if span <= 0.0 {
                    0.0
                } else {
                    ((v - self.mins[c]) / span).clamp(0.0, 1.0)
                }
            })
            .collect())
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset, DatasetError> {
        let features = data
            .features()
            .iter()
            .map(|row| self.apply(row))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Dataset { features, labels: data.labels().to_vec(), n_classes: data.n_classes() })
    }
}
