//! Evaluation reports: one row per (condition, model) with accuracy,
//! per-class precision/recall/F1, the three F1 aggregates, wall-clock
//! training time, and provenance (seed + config digest).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use qrtls_core::metrics::{aggregate_f1, class_metrics, ConfusionMatrix, MetricsError};
use qrtls_core::privacy::PrivacyProfile;

use crate::io::IoFormatError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassSummary {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Any zero-denominator convention hit for this class.
    pub undefined: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub condition: String,
    pub model: String,
    pub qubits: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassSummary>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub attack_f1: f64,
    pub train_time_s: f64,
    pub seed: u64,
    pub config_digest: String,
    pub confusion: Vec<Vec<u64>>,
}

impl EvaluationReport {
    #[allow(clippy::too_many_arguments)]
    pub fn from_confusion(
        condition: &str,
        model: &str,
        qubits: usize,
        cm: &ConfusionMatrix,
        attack_classes: &[usize],
        train_time_s: f64,
        seed: u64,
        config_digest: &str,
    ) -> Result<Self, MetricsError> {
        let report = class_metrics(cm)?;
        let agg = aggregate_f1(cm, attack_classes)?;
        Ok(Self {
            condition: condition.to_string(),
            model: model.to_string(),
            qubits,
            accuracy: report.accuracy,
            per_class: report
                .per_class
                .iter()
                .map(|m| ClassSummary {
                    precision: m.precision,
                    recall: m.recall,
                    f1: m.f1,
                    undefined: m.precision_undefined || m.recall_undefined || m.f1_undefined,
                })
                .collect(),
            macro_f1: agg.macro_f1,
            weighted_f1: agg.weighted_f1,
            attack_f1: agg.attack_f1,
            train_time_s,
            seed,
            config_digest: config_digest.to_string(),
            confusion: cm.rows().map(|r| r.to_vec()).collect(),
        })
    }

    pub fn csv_header(n_classes: usize) -> String {
        let mut header = String::from("condition,model,qubits,accuracy");
        for c in 0..n_classes {
            let _ = write!(header, ",precision_{c},recall_{c},f1_{c}");
        }
        header.push_str(",macro_f1,weighted_f1,attack_f1,train_time_s,seed,config_digest");
        header
    }

    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{},{},{}",
            self.condition, self.model, self.qubits, self.accuracy
        );
        for c in &self.per_class {
            let _ = write!(row, ",{},{},{}", c.precision, c.recall, c.f1);
        }
        let _ = write!(
            row,
            ",{},{},{},{},{},{}",
            self.macro_f1,
            self.weighted_f1,
            self.attack_f1,
            self.train_time_s,
            self.seed,
            self.config_digest
        );
        row
    }
}

pub fn write_reports_csv(path: &Path, reports: &[EvaluationReport]) -> Result<(), IoFormatError> {
    let n_classes = reports.first().map_or(0, |r| r.per_class.len());
    let mut out = EvaluationReport::csv_header(n_classes);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| IoFormatError::Io { path: path.to_path_buf(), source })
}

/// Privacy profile as embedded in reports: everything except the hash key.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub deleted: Vec<usize>,
    pub zone_cell_m: f64,
    pub hash_epoch_s: f64,
    pub velocity_thresholds: [f64; 2],
    pub time_bucket_s: f64,
    pub encode_x9: bool,
    pub encode_x10: bool,
    pub bucketize_x3: bool,
    pub zone_x4: bool,
    pub zone_x5: bool,
}

impl From<&PrivacyProfile> for ProfileSummary {
    fn from(p: &PrivacyProfile) -> Self {
        Self {
            deleted: p.deleted.iter().copied().collect(),
            zone_cell_m: p.zone_cell_m,
            hash_epoch_s: p.hash_epoch_s,
            velocity_thresholds: [p.velocity_thresholds.0, p.velocity_thresholds.1],
            time_bucket_s: p.time_bucket_s,
            encode_x9: p.encode_x9,
            encode_x10: p.encode_x10,
            bucketize_x3: p.bucketize_x3,
            zone_x4: p.zone_x4,
            zone_x5: p.zone_x5,
        }
    }
}

/// Full JSON report document: provenance, the (redacted) privacy profile,
/// and every evaluation row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDocument {
    pub seed: u64,
    pub config_digest: String,
    pub privacy_profile: ProfileSummary,
    pub reports: Vec<EvaluationReport>,
}

pub fn write_report_json(path: &Path, document: &ReportDocument) -> Result<(), IoFormatError> {
    let text = serde_json::to_string_pretty(document)?;
    fs::write(path, text).map_err(|source| IoFormatError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_from_confusion_has_expected_fields() {
        let cm = ConfusionMatrix::from_labels(&[0, 1, 2, 1], &[0, 1, 2, 2], 3).unwrap();
        let report = EvaluationReport::from_confusion(
            "test",
            "nn",
            0,
            &cm,
            &[1, 2],
            1.25,
            42,
            "cafebabecafebabe",
        )
        .unwrap();
        assert_eq!(report.per_class.len(), 3);
        assert!((report.accuracy - 0.75).abs() < 1e-12);
        assert_eq!(report.confusion[1][2], 1);

        let header = EvaluationReport::csv_header(3);
        let row = report.csv_row();
        assert_eq!(header.split(',').count(), row.split(',').count());
    }

    #[test]
    fn profile_summary_redacts_key() {
        let mut profile = PrivacyProfile::table2();
        profile.hash_key = b"secret".to_vec();
        let summary = ProfileSummary::from(&profile);
        let json = serde_json::to_string(&summary).unwrap();
        assert!(!json.contains("secret"));
        assert!(!json.contains("hash_key"));
        assert_eq!(summary.deleted, vec![4, 5, 6]);
    }
}
