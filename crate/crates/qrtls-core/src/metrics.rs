//! Confusion matrices and classification metrics: accuracy, one-vs-rest
//! precision/recall/F1 per class, and the macro / weighted / attack-class
//! F1 aggregates.
//!
//! Zero-denominator cases return 0 with an explicit `undefined` flag rather
//! than NaN, so reports stay machine-readable.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("label sequences differ in length: {truth} vs {predicted}")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label {label} out of range for {k} classes")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("attack class set is empty")]
    EmptyAttackSet,
}

/// K x K counts, rows = true label, columns = predicted label.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        Self { k, counts: vec![0; k * k] }
    }

    pub fn from_labels(
        truth: &[usize],
        predicted: &[usize],
        k: usize,
    ) -> Result<Self, MetricsError> {
        if truth.len() != predicted.len() {
            return Err(MetricsError::LengthMismatch {
                truth: truth.len(),
                predicted: predicted.len(),
            });
        }
        let mut cm = Self::zeros(k);
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= k {
                return Err(MetricsError::LabelOutOfRange { label: t, k });
            }
            if p >= k {
                return Err(MetricsError::LabelOutOfRange { label: p, k });
            }
            cm.counts[t * k + p] += 1;
        }
        Ok(cm)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn count(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Row sum: how many samples truly belong to `class`.
    pub fn support(&self, class: usize) -> u64 {
        (0..self.k).map(|p| self.count(class, p)).sum()
    }

    /// Column sum: how many samples were predicted as `class`.
    pub fn predicted_count(&self, class: usize) -> u64 {
        (0..self.k).map(|t| self.count(t, class)).sum()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks(self.k)
    }
}

/// One-vs-rest metrics for a single class; `undefined` marks a
/// zero-denominator convention result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

/// Per-class metrics plus overall accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
}

/// Precision, recall, F1 per class (one-vs-rest) and accuracy
/// (`trace / total`).
pub fn class_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    let diag: u64 = (0..cm.k()).map(|c| cm.count(c, c)).sum();
    let accuracy = diag as f64 / total as f64;
    let per_class = (0..cm.k())
        .map(|c| {
            let tp = cm.count(c, c);
            let support = cm.support(c);
            let predicted = cm.predicted_count(c);
            let precision_undefined = predicted == 0;
            let recall_undefined = support == 0;
            let precision = if precision_undefined { 0.0 } else { tp as f64 / predicted as f64 };
            let recall = if recall_undefined { 0.0 } else { tp as f64 / support as f64 };
            let f1_undefined = precision + recall == 0.0;
            let f1 = if f1_undefined {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                precision_undefined,
                recall_undefined,
                f1_undefined,
            }
        })
        .collect();
    Ok(MetricsReport { accuracy, per_class })
}

/// Macro / weighted / attack-restricted F1 aggregates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Aggregates {
    /// Unweighted mean of per-class F1.
    pub macro_f1: f64,
    /// Support-weighted mean of per-class F1.
    pub weighted_f1: f64,
    /// Support-weighted mean over the attack classes only.
    pub attack_f1: f64,
    /// Set when no attack-class sample exists.
    pub attack_undefined: bool,
}

pub fn aggregate_f1(
    cm: &ConfusionMatrix,
    attack_classes: &[usize],
) -> Result<F1Aggregates, MetricsError> {
    if attack_classes.is_empty() {
        return Err(MetricsError::EmptyAttackSet);
    }
    for &c in attack_classes {
        if c >= cm.k() {
            return Err(MetricsError::LabelOutOfRange { label: c, k: cm.k() });
        }
    }
    let report = class_metrics(cm)?;
    let k = cm.k() as f64;
    let total = cm.total() as f64;
    let macro_f1 = report.per_class.iter().map(|m| m.f1).sum::<f64>() / k;
    let weighted_f1 = report
        .per_class
        .iter()
        .enumerate()
        .map(|(c, m)| cm.support(c) as f64 * m.f1)
        .sum::<f64>()
        / total;
    let attack_support: u64 = attack_classes.iter().map(|&c| cm.support(c)).sum();
    let attack_undefined = attack_support == 0;
    let attack_f1 = if attack_undefined {
        0.0
    } else {
        attack_classes
            .iter()
            .map(|&c| cm.support(c) as f64 * report.per_class[c].f1)
            .sum::<f64>()
            / attack_support as f64
    };
    Ok(F1Aggregates { macro_f1, weighted_f1, attack_f1, attack_undefined })
}
