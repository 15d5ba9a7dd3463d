//! Privacy-preserving transforms over telemetry features: feature deletion,
//! zone-level encoding, rotating keyed beacon-id hashing, velocity
//! discretization, and timestamp bucketization.
//!
//! The attack-relevant features x1, x2, x7, x8 always pass through
//! untouched: a profile can neither delete nor transform them. The standard
//! benchmark condition deletes x4, x5, x6 and encodes x9.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use core::fmt::Write as _;

// Inherent std float methods shadow this under cfg(test).
#[allow(unused_imports)]
use num_traits::Float;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::telemetry::{FeatureVector, Label, FEATURE_COUNT};

/// Feature indices (1-based) that carry the attack signal and must survive
/// every profile bit-identically.
pub const ATTACK_RELEVANT: [usize; 4] = [1, 2, 7, 8];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrivacyError {
    #[error("profile deletes every feature")]
    DeletesAll,
    #[error("feature index {index} outside 1..=10")]
    IndexOutOfRange { index: usize },
    #[error("profile may not delete attack-relevant feature x{index}")]
    DeletesAttackRelevant { index: usize },
    #[error("velocity thresholds must be strictly increasing")]
    BadThresholds,
    #[error("bucket and epoch lengths must be positive")]
    BadInterval,
    #[error("zone cell must be positive")]
    BadCell,
    #[error("velocity must be nonnegative, got {v}")]
    NegativeVelocity { v: f64 },
}

/// Declarative privacy profile; serialized into experiment configs (the
/// hash key never leaves the config).
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyProfile {
    /// 1-based feature indices removed entirely (width shrinks).
    pub deleted: BTreeSet<usize>,
    /// Zone edge length for positional encodings (m).
    pub zone_cell_m: f64,
    /// Beacon-id hash rotation period (s).
    pub hash_epoch_s: f64,
    /// Keyed-hash secret; config-only, redacted from every report.
    pub hash_key: Vec<u8>,
    /// (stationary_max, slow_max) in m/s; boundaries go to the lower band.
    pub velocity_thresholds: (f64, f64),
    /// Timestamp aggregation interval (s).
    pub time_bucket_s: f64,
    /// Replace x9 with its movement category.
    pub encode_x9: bool,
    /// Replace x10 with its movement category.
    pub encode_x10: bool,
    /// Replace x3 with its within-bucket jitter scale.
    pub bucketize_x3: bool,
    /// Replace x4 with its zone band index.
    pub zone_x4: bool,
    /// Replace x5 with its zone band index.
    pub zone_x5: bool,
}

impl Default for PrivacyProfile {
    fn default() -> Self {
        Self {
            deleted: BTreeSet::new(),
            zone_cell_m: 1.0,
            hash_epoch_s: 300.0,
            hash_key: Vec::new(),
            velocity_thresholds: (0.05, 0.5),
            time_bucket_s: 60.0,
            encode_x9: false,
            encode_x10: false,
            bucketize_x3: false,
            zone_x4: false,
            zone_x5: false,
        }
    }
}

impl PrivacyProfile {
    /// The identity transform.
    pub fn identity() -> Self {
        Self::default()
    }

    /// The benchmark privacy condition: delete x4, x5, x6; encode x9.
    pub fn table2() -> Self {
        Self {
            deleted: [4usize, 5, 6].into_iter().collect(),
            encode_x9: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PrivacyError> {
        if self.deleted.len() >= FEATURE_COUNT {
            return Err(PrivacyError::DeletesAll);
        }
        for &index in &self.deleted {
            if !(1..=FEATURE_COUNT).contains(&index) {
                return Err(PrivacyError::IndexOutOfRange { index });
            }
            if ATTACK_RELEVANT.contains(&index) {
                return Err(PrivacyError::DeletesAttackRelevant { index });
            }
        }
        if self.velocity_thresholds.0 >= self.velocity_thresholds.1 {
            return Err(PrivacyError::BadThresholds);
        }
        if self.time_bucket_s <= 0.0 || self.hash_epoch_s <= 0.0 {
            return Err(PrivacyError::BadInterval);
        }
        if self.zone_cell_m <= 0.0 {
            return Err(PrivacyError::BadCell);
        }
        Ok(())
    }

    /// Output width after deletion.
    pub fn output_width(&self) -> usize {
        FEATURE_COUNT - self.deleted.len()
    }
}

/// Floor-quantize a position to its zone cell.
pub fn zone_encode(pos: (f64, f64), cell_m: f64) -> (i64, i64) {
    ((pos.0 / cell_m).floor() as i64, (pos.1 / cell_m).floor() as i64)
}

/// Floor-quantize a scalar (distance, jitter radius) to its zone band.
pub fn zone_band(value: f64, cell_m: f64) -> i64 {
    (value / cell_m).floor() as i64
}

/// Keyed rotating beacon-id hash: stable within one epoch, fresh across
/// epochs, never revealing the raw id. SHA-256 over the length-framed
/// (key, id, epoch index) triple, truncated to 128 bits of hex.
pub fn hash_beacon_rotating(id: &str, epoch_time: f64, profile: &PrivacyProfile) -> String {
    let epoch_index = (epoch_time / profile.hash_epoch_s).floor() as i64;
    let mut hasher = Sha256::new();
    hasher.update((profile.hash_key.len() as u64).to_le_bytes());
    hasher.update(&profile.hash_key);
    hasher.update((id.len() as u64).to_le_bytes());
    hasher.update(id.as_bytes());
    hasher.update(epoch_index.to_le_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(32);
    for byte in &digest[..16] {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Map a speed to {stationary, slow, fast} encoded as {0, 0.5, 1};
/// boundaries go to the lower band.
pub fn discretize_velocity(v: f64, thresholds: (f64, f64)) -> Result<f64, PrivacyError> {
    if v < 0.0 {
        return Err(PrivacyError::NegativeVelocity { v });
    }
    Ok(if v <= thresholds.0 {
        0.0
    } else if v <= thresholds.1 {
        0.5
    } else {
        1.0
    })
}

/// Coarse timestamp bucket index: `floor(t / bucket_s)`.
pub fn bucketize_timestamp(t: f64, bucket_s: f64) -> i64 {
    (t / bucket_s).floor() as i64
}

/// A privacy-transformed feature row. `retained` maps each output column to
/// its original 1-based feature index, for reporting and provenance checks.
#[derive(Debug, Clone, PartialEq)]
pub struct SanitizedVector {
    pub values: Vec<f64>,
    pub retained: Vec<usize>,
    pub label: Label,
}

/// Apply a profile to one feature vector: per-feature encodings first, then
/// deletion (width shrinks; no zero-imputation). Pure in (features,
/// profile).
pub fn apply_profile(
    features: &FeatureVector,
    profile: &PrivacyProfile,
) -> Result<SanitizedVector, PrivacyError> {
    profile.validate()?;
    let mut transformed = features.values;
    if profile.bucketize_x3 {
        // Within-bucket jitter: the jitter radius (std, seconds) as a share
        // of the bucket, saturating at one bucket. Sub-bucket timing
        // anomalies stay visible; anything coarser is hidden.
        transformed[2] = (transformed[2].sqrt() / profile.time_bucket_s).min(1.0);
    }
    if profile.zone_x4 {
        transformed[3] = zone_band(transformed[3], profile.zone_cell_m) as f64;
    }
    if profile.zone_x5 {
        transformed[4] = zone_band(transformed[4], profile.zone_cell_m) as f64;
    }
    if profile.encode_x9 {
        transformed[8] = discretize_velocity(transformed[8], profile.velocity_thresholds)?;
    }
    if profile.encode_x10 {
        transformed[9] = discretize_velocity(transformed[9], profile.velocity_thresholds)?;
    }
    let mut values = Vec::with_capacity(profile.output_width());
    let mut retained = Vec::with_capacity(profile.output_width());
    for (col, &value) in transformed.iter().enumerate() {
        let index = col + 1;
        if profile.deleted.contains(&index) {
            continue;
        }
        values.push(value);
        retained.push(index);
    }
    Ok(SanitizedVector { values, retained, label: features.label })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;
    use rand::SeedableRng as _;

    fn sample_features() -> FeatureVector {
        FeatureVector {
            values: [-55.2, 3.1, 4.0e-7, 6.3, 0.4, 2.2, 0.05, 1.7, 0.31, 0.08],
            label: Label::Dos,
        }
    }

    #[test]
    fn zone_encoding_examples() {
        assert_eq!(zone_encode((2.3, 4.7), 1.0), (2, 4));
        assert_eq!(zone_encode((0.0, 0.0), 1.0), (0, 0));
        // All points in one cell map together.
        assert_eq!(zone_encode((3.2, 3.9), 2.0), zone_encode((2.1, 2.05), 2.0));
    }

    #[test]
    fn velocity_bands() {
        let th = (0.05, 0.5);
        assert_eq!(discretize_velocity(0.0, th).unwrap(), 0.0);
        assert_eq!(discretize_velocity(0.05, th).unwrap(), 0.0, "boundary goes low");
        assert_eq!(discretize_velocity(0.3, th).unwrap(), 0.5);
        assert_eq!(discretize_velocity(1.2, th).unwrap(), 1.0);
        assert!(discretize_velocity(-0.1, th).is_err());
    }

    #[test]
    fn velocity_bands_are_non_injective() {
        let th = (0.05, 0.5);
        assert_eq!(
            discretize_velocity(0.1, th).unwrap(),
            discretize_velocity(0.4, th).unwrap()
        );
    }

    #[test]
    fn timestamp_buckets() {
        assert_eq!(bucketize_timestamp(125.4, 60.0), 2);
        assert_eq!(bucketize_timestamp(0.0, 60.0), 0);
        assert_eq!(bucketize_timestamp(59.999, 60.0), 0);
    }

    #[test]
    fn beacon_hash_stability_and_rotation() {
        let profile = PrivacyProfile {
            hash_key: b"test-key".to_vec(),
            hash_epoch_s: 300.0,
            ..PrivacyProfile::default()
        };
        let a = hash_beacon_rotating("anchor-1", 10.0, &profile);
        let b = hash_beacon_rotating("anchor-1", 299.0, &profile);
        assert_eq!(a, b, "stable within an epoch");
        assert_eq!(a.len(), 32);
        assert!(!a.contains("anchor"));

        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let epoch: i64 = rng.random_range(0..1_000_000);
            let t = epoch as f64 * 300.0 + 1.0;
            assert_ne!(
                hash_beacon_rotating("anchor-1", t, &profile),
                hash_beacon_rotating("anchor-1", t + 300.0, &profile),
                "tokens must rotate across epochs"
            );
            assert_ne!(
                hash_beacon_rotating("anchor-1", t, &profile),
                hash_beacon_rotating("anchor-2", t, &profile),
                "distinct ids must stay distinct"
            );
        }
    }

    #[test]
    fn table2_profile_shape() {
        let fv = sample_features();
        let out = apply_profile(&fv, &PrivacyProfile::table2()).unwrap();
        assert_eq!(out.values.len(), 7);
        assert_eq!(out.retained, vec![1, 2, 3, 7, 8, 9, 10]);
        // x9 encoded into a movement category.
        let x9 = out.values[5];
        assert!(x9 == 0.0 || x9 == 0.5 || x9 == 1.0);
        // No raw x4/x5/x6 value survives.
        for &orig in &[4usize, 5, 6] {
            assert!(!out.retained.contains(&orig));
        }
        assert_eq!(out.label, fv.label);
    }

    #[test]
    fn identity_profile_is_identity() {
        let fv = sample_features();
        let out = apply_profile(&fv, &PrivacyProfile::identity()).unwrap();
        assert_eq!(out.values, fv.values.to_vec());
        assert_eq!(out.retained, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn attack_relevant_features_pass_bit_identically() {
        let fv = sample_features();
        let profiles = [
            PrivacyProfile::table2(),
            PrivacyProfile {
                deleted: [3usize, 10].into_iter().collect(),
                bucketize_x3: true,
                encode_x10: true,
                zone_x4: true,
                zone_x5: true,
                ..PrivacyProfile::default()
            },
        ];
        for profile in profiles {
            let out = apply_profile(&fv, &profile).unwrap();
            for &orig in &ATTACK_RELEVANT {
                if let Some(col) = out.retained.iter().position(|&r| r == orig) {
                    assert!(
                        out.values[col].to_bits() == fv.values[orig - 1].to_bits(),
                        "x{orig} changed"
                    );
                }
            }
        }
    }

    #[test]
    fn profile_validation() {
        let deletes_all = PrivacyProfile {
            deleted: (1..=10).collect(),
            ..PrivacyProfile::default()
        };
        assert!(matches!(deletes_all.validate(), Err(PrivacyError::DeletesAll)));

        let deletes_attack = PrivacyProfile {
            deleted: [1usize].into_iter().collect(),
            ..PrivacyProfile::default()
        };
        assert!(matches!(
            deletes_attack.validate(),
            Err(PrivacyError::DeletesAttackRelevant { index: 1 })
        ));

        let out_of_range = PrivacyProfile {
            deleted: [11usize].into_iter().collect(),
            ..PrivacyProfile::default()
        };
        assert!(matches!(
            out_of_range.validate(),
            Err(PrivacyError::IndexOutOfRange { index: 11 })
        ));

        let bad_bands = PrivacyProfile {
            velocity_thresholds: (0.5, 0.5),
            ..PrivacyProfile::default()
        };
        assert!(matches!(bad_bands.validate(), Err(PrivacyError::BadThresholds)));
    }

    #[test]
    fn apply_profile_is_pure() {
        let fv = sample_features();
        let profile = PrivacyProfile::table2();
        assert_eq!(
            apply_profile(&fv, &profile).unwrap(),
            apply_profile(&fv, &profile).unwrap()
        );
    }

    #[test]
    fn bucketized_x3_is_bounded_and_reduced() {
        let mut fv = sample_features();
        fv.values[2] = 9000.0; // absurd jitter variance
        let profile = PrivacyProfile { bucketize_x3: true, ..PrivacyProfile::default() };
        let out = apply_profile(&fv, &profile).unwrap();
        let x3 = out.values[2];
        assert!(x3 <= 1.0, "saturates at one bucket");

        // Two very different coarse jitters map to the same saturated value.
        let mut other = sample_features();
        other.values[2] = 1.0e9;
        let out2 = apply_profile(&other, &profile).unwrap();
        assert_eq!(x3, out2.values[2]);
    }
}
