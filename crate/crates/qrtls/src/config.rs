//! Run configuration: one versioned TOML document drives every subcommand.
//! CLI flags override config keys before the digest is taken, so overrides
//! are part of the recorded provenance.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use qrtls_core::fusion::HybridTrainConfig;
use qrtls_core::mlp::{Activation, TrainConfig};
use qrtls_core::privacy::PrivacyProfile;
use qrtls_core::telemetry::{
    Anchor, AttackKind, AttackScenario, DistanceMode, FeatureConfig, NoiseParams, RadioParams,
    RoomLayout, Trajectory,
};
use qrtls_core::vqc::{Encoding, Entanglement};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config section [{section}]: {reason}")]
    Invalid { section: &'static str, reason: String },
}

fn invalid(section: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { section, reason: reason.into() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub telemetry: TelemetrySection,
    pub privacy: PrivacySection,
    pub models: ModelsSection,
    pub train: TrainSection,
    pub hybrid: HybridSection,
    pub dqnn: DqnnSection,
    pub experiments: ExperimentsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: 1,
            seed: 42,
            out_dir: PathBuf::from("out"),
            telemetry: TelemetrySection::default(),
            privacy: PrivacySection::default(),
            models: ModelsSection::default(),
            train: TrainSection::default(),
            hybrid: HybridSection::default(),
            dqnn: DqnnSection::default(),
            experiments: ExperimentsSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let config: RunConfig = toml::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.telemetry.validate()?;
        self.privacy
            .to_profile()
            .map_err(|e| invalid("privacy", e.to_string()))?;
        self.models.validate()?;
        if self.train.test_fraction <= 0.0 || self.train.test_fraction >= 1.0 {
            return Err(invalid("train", "test_fraction must lie in (0, 1)"));
        }
        if self.dqnn.arch.len() < 2 {
            return Err(invalid("dqnn", "arch needs at least two widths"));
        }
        Ok(())
    }

    /// Stable digest of the effective configuration (after CLI overrides);
    /// embedded in every output.
    pub fn digest(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        let mut out = String::with_capacity(16);
        for byte in &hash[..8] {
            let _ = write!(out, "{byte:02x}");
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnchorSpec {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

impl Default for AnchorSpec {
    fn default() -> Self {
        Self { id: String::from("A"), x: 0.0, y: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySpec {
    pub name: String,
    pub waypoints: Vec<[f64; 2]>,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self { name: String::from("perimeter"), waypoints: vec![[1.0, 1.0]] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub rssi_db: f64,
    pub pos_m: f64,
    pub odom_m: f64,
    pub t_jitter_s: f64,
    pub drop_prob: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { rssi_db: 3.5, pos_m: 0.1, odom_m: 0.005, t_jitter_s: 0.0002, drop_prob: 0.05 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TelemetrySection {
    pub anchors: Vec<AnchorSpec>,
    pub trajectories: Vec<TrajectorySpec>,
    pub speed_mps: f64,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub path_loss_exp: f64,
    pub calib_dbm: f64,
    pub noise: NoiseSection,
    /// Runs per (trajectory, scenario) combination.
    pub repetitions: usize,
    pub scenario_kinds: Vec<String>,
    pub intensity: f64,
    pub attack_span: [f64; 2],
    pub dos_affected: Vec<String>,
    pub window_len: usize,
    pub stride: usize,
    /// "rssi" (path-loss inversion) or "tof".
    pub distance_mode: String,
}

impl Default for TelemetrySection {
    fn default() -> Self {
        Self {
            anchors: [
                ("A", 0.0, 0.0),
                ("B", 10.0, 0.0),
                ("C", 10.0, 10.0),
                ("D", 0.0, 10.0),
                ("E", 5.0, 0.0),
                ("F", 0.0, 5.0),
            ]
            .iter()
            .map(|&(id, x, y)| AnchorSpec { id: String::from(id), x, y })
            .collect(),
            trajectories: vec![
                TrajectorySpec {
                    name: String::from("perimeter"),
                    waypoints: vec![[1.0, 1.0], [9.0, 1.0], [9.0, 9.0], [1.0, 9.0], [1.0, 1.0]],
                },
                TrajectorySpec {
                    name: String::from("diagonal"),
                    waypoints: vec![[1.0, 1.0], [9.0, 9.0], [1.0, 9.0], [9.0, 1.0]],
                },
            ],
            speed_mps: 0.3,
            sample_rate_hz: 10.0,
            duration_s: 30.0,
            path_loss_exp: 2.0,
            calib_dbm: -40.0,
            noise: NoiseSection::default(),
            repetitions: 5,
            scenario_kinds: vec![String::from("none"), String::from("dos"), String::from("spoof")],
            intensity: 0.4,
            attack_span: [6.0, 24.0],
            dos_affected: vec![String::from("A"), String::from("B")],
            window_len: 50,
            stride: 25,
            distance_mode: String::from("rssi"),
        }
    }
}

impl TelemetrySection {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.anchors.len() < 3 {
            return Err(invalid("telemetry", "need at least 3 anchors"));
        }
        if self.trajectories.is_empty() {
            return Err(invalid("telemetry", "need at least one trajectory"));
        }
        if self.window_len < 2 {
            return Err(invalid("telemetry", "window_len must be at least 2"));
        }
        if self.attack_span[0] >= self.attack_span[1] {
            return Err(invalid("telemetry", "attack_span start must precede end"));
        }
        for kind in &self.scenario_kinds {
            if AttackKind::parse(kind).is_none() {
                return Err(invalid("telemetry", format!("unknown scenario kind '{kind}'")));
            }
        }
        if self.distance_mode != "rssi" && self.distance_mode != "tof" {
            return Err(invalid("telemetry", "distance_mode must be 'rssi' or 'tof'"));
        }
        Ok(())
    }

    pub fn layout(&self) -> RoomLayout {
        RoomLayout {
            anchors: self
                .anchors
                .iter()
                .map(|a| Anchor { id: a.id.clone(), pos: (a.x, a.y) })
                .collect(),
        }
    }

    pub fn trajectory(&self, spec: &TrajectorySpec) -> Trajectory {
        Trajectory {
            waypoints: spec.waypoints.iter().map(|w| (w[0], w[1])).collect(),
            speed_mps: self.speed_mps,
        }
    }

    pub fn radio(&self) -> RadioParams {
        RadioParams {
            path_loss_exp: self.path_loss_exp,
            calib_dbm: self.calib_dbm,
            sample_rate_hz: self.sample_rate_hz,
            duration_s: self.duration_s,
        }
    }

    pub fn noise_params(&self) -> NoiseParams {
        NoiseParams {
            rssi_db: self.noise.rssi_db,
            pos_m: self.noise.pos_m,
            odom_m: self.noise.odom_m,
            t_jitter_s: self.noise.t_jitter_s,
            drop_prob: self.noise.drop_prob,
        }
    }

    pub fn scenario(&self, kind: AttackKind) -> AttackScenario {
        match kind {
            AttackKind::None => AttackScenario::none(),
            _ => AttackScenario {
                kind,
                intensity: self.intensity,
                affected_beacons: if kind == AttackKind::Dos {
                    self.dos_affected.iter().cloned().collect()
                } else {
                    BTreeSet::new()
                },
                time_span: (self.attack_span[0], self.attack_span[1]),
            },
        }
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            path_loss_exp: self.path_loss_exp,
            calib_dbm: self.calib_dbm,
            distance_mode: if self.distance_mode == "tof" {
                DistanceMode::TimeOfFlight
            } else {
                DistanceMode::RssiInversion
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacySection {
    pub deleted: Vec<usize>,
    pub zone_cell_m: f64,
    pub hash_epoch_s: f64,
    /// Keyed-hash secret; stays in the config, redacted from reports.
    pub hash_key: String,
    pub velocity_thresholds: [f64; 2],
    pub time_bucket_s: f64,
    pub encode_x9: bool,
    pub encode_x10: bool,
    pub bucketize_x3: bool,
    pub zone_x4: bool,
    pub zone_x5: bool,
}

impl Default for PrivacySection {
    fn default() -> Self {
        // The benchmark privacy condition.
        Self {
            deleted: vec![4, 5, 6],
            zone_cell_m: 1.0,
            hash_epoch_s: 300.0,
            hash_key: String::from("rotate-me"),
            velocity_thresholds: [0.05, 0.5],
            time_bucket_s: 60.0,
            encode_x9: true,
            encode_x10: false,
            bucketize_x3: false,
            zone_x4: false,
            zone_x5: false,
        }
    }
}

impl PrivacySection {
    pub fn to_profile(&self) -> Result<PrivacyProfile, qrtls_core::privacy::PrivacyError> {
        let profile = PrivacyProfile {
            deleted: self.deleted.iter().copied().collect(),
            zone_cell_m: self.zone_cell_m,
            hash_epoch_s: self.hash_epoch_s,
            hash_key: self.hash_key.as_bytes().to_vec(),
            velocity_thresholds: (self.velocity_thresholds[0], self.velocity_thresholds[1]),
            time_bucket_s: self.time_bucket_s,
            encode_x9: self.encode_x9,
            encode_x10: self.encode_x10,
            bucketize_x3: self.bucketize_x3,
            zone_x4: self.zone_x4,
            zone_x5: self.zone_x5,
        };
        profile.validate()?;
        Ok(profile)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpSpec {
    pub hidden: Vec<usize>,
    pub activation: String,
    pub dropout: f64,
    /// Overrides [train].epochs when set (DNN-Shallow trains shorter).
    pub epochs: Option<usize>,
}

impl MlpSpec {
    pub fn activation_kind(&self) -> Result<Activation, ConfigError> {
        Activation::parse(&self.activation)
            .ok_or_else(|| invalid("models", format!("unknown activation '{}'", self.activation)))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VqcSpec {
    pub qubits: usize,
    pub depth: usize,
    pub encoding: String,
    pub entanglement: String,
}

impl Default for VqcSpec {
    fn default() -> Self {
        Self {
            qubits: 4,
            depth: 3,
            encoding: String::from("angle"),
            entanglement: String::from("ring"),
        }
    }
}

impl VqcSpec {
    pub fn encoding_kind(&self) -> Result<Encoding, ConfigError> {
        match self.encoding.as_str() {
            "angle" => Ok(Encoding::Angle),
            "amplitude" => Ok(Encoding::Amplitude),
            other => Err(invalid("models", format!("unknown encoding '{other}'"))),
        }
    }

    pub fn entanglement_kind(&self) -> Result<Entanglement, ConfigError> {
        match self.entanglement.as_str() {
            "linear" => Ok(Entanglement::Linear),
            "ring" => Ok(Entanglement::Ring),
            other => Err(invalid("models", format!("unknown entanglement '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsSection {
    pub nn: MlpSpec,
    pub dnn: MlpSpec,
    pub dnn_shallow: MlpSpec,
    pub vqc: VqcSpec,
}

impl Default for ModelsSection {
    fn default() -> Self {
        Self {
            nn: MlpSpec {
                hidden: vec![16],
                activation: String::from("relu"),
                dropout: 0.3,
                epochs: None,
            },
            dnn: MlpSpec {
                hidden: vec![64, 32, 16],
                activation: String::from("swish"),
                dropout: 0.3,
                epochs: None,
            },
            dnn_shallow: MlpSpec {
                hidden: vec![16],
                activation: String::from("relu"),
                dropout: 0.3,
                epochs: Some(15),
            },
            vqc: VqcSpec::default(),
        }
    }
}

impl Default for MlpSpec {
    fn default() -> Self {
        Self { hidden: vec![16], activation: String::from("relu"), dropout: 0.3, epochs: None }
    }
}

impl ModelsSection {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for spec in [&self.nn, &self.dnn, &self.dnn_shallow] {
            spec.activation_kind()?;
            if !(0.0..1.0).contains(&spec.dropout) {
                return Err(invalid("models", "dropout must lie in [0, 1)"));
            }
            if spec.hidden.is_empty() {
                return Err(invalid("models", "need at least one hidden layer"));
            }
        }
        self.vqc.encoding_kind()?;
        self.vqc.entanglement_kind()?;
        if self.vqc.qubits == 0 {
            return Err(invalid("models", "vqc needs at least one qubit"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub test_fraction: f64,
    /// "multiclass" (normal/dos/spoof) or "binary" (normal vs attack).
    pub label_mode: String,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 32,
            learning_rate: 0.05,
            momentum: 0.9,
            test_fraction: 0.3,
            label_mode: String::from("multiclass"),
        }
    }
}

impl TrainSection {
    pub fn train_config(&self, seed: u64, epochs_override: Option<usize>) -> TrainConfig {
        TrainConfig {
            epochs: epochs_override.unwrap_or(self.epochs),
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            seed,
        }
    }

    pub fn binary(&self) -> bool {
        self.label_mode == "binary"
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridSection {
    pub vqc_epochs: usize,
    pub vqc_learning_rate: f64,
    pub fusion_epochs: usize,
    pub fusion_learning_rate: f64,
    pub fine_tune_epochs: usize,
    pub fine_tune_learning_rate: f64,
}

impl Default for HybridSection {
    fn default() -> Self {
        Self {
            vqc_epochs: 8,
            vqc_learning_rate: 0.1,
            fusion_epochs: 60,
            fusion_learning_rate: 0.1,
            fine_tune_epochs: 0,
            fine_tune_learning_rate: 0.01,
        }
    }
}

impl HybridSection {
    pub fn hybrid_config(&self, mlp: TrainConfig, seed: u64) -> HybridTrainConfig {
        HybridTrainConfig {
            mlp,
            vqc_epochs: self.vqc_epochs,
            vqc_learning_rate: self.vqc_learning_rate,
            fusion_epochs: self.fusion_epochs,
            fusion_learning_rate: self.fusion_learning_rate,
            fine_tune_epochs: self.fine_tune_epochs,
            fine_tune_learning_rate: self.fine_tune_learning_rate,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnnSection {
    pub arch: Vec<usize>,
    pub pairs: usize,
    pub steps: usize,
    pub eps: f64,
    pub eta: f64,
    pub log_every: usize,
    pub target_seed: u64,
    pub eval_pairs: usize,
    pub pairs_grid: Vec<usize>,
    pub corrupt_total: usize,
    pub corrupt_grid: Vec<usize>,
}

impl Default for DqnnSection {
    fn default() -> Self {
        Self {
            arch: vec![1, 2, 1],
            pairs: 10,
            steps: 1000,
            eps: 0.01,
            eta: 1.0,
            log_every: 10,
            target_seed: 7,
            eval_pairs: 20,
            pairs_grid: vec![1, 2, 4, 6, 8, 10],
            corrupt_total: 20,
            corrupt_grid: vec![0, 4, 10, 16],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentsSection {
    pub dropout_rates: Vec<f64>,
    pub activations: Vec<String>,
    pub qubit_grid: Vec<usize>,
    /// Model kind swept by `sweep --kind dropout`.
    pub sweep_model: String,
}

impl Default for ExperimentsSection {
    fn default() -> Self {
        Self {
            dropout_rates: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            activations: vec![String::from("relu"), String::from("swish"), String::from("tanh")],
            qubit_grid: vec![2, 4, 6],
            sweep_model: String::from("nn"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_and_validates() {
        let config = RunConfig::default();
        config.validate().unwrap();
        let text = toml::to_string(&config).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.digest(), config.digest());
    }

    #[test]
    fn digest_changes_with_overrides() {
        let base = RunConfig::default();
        let mut tweaked = RunConfig::default();
        tweaked.seed = 43;
        assert_ne!(base.digest(), tweaked.digest());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let result: Result<RunConfig, _> = toml::from_str("nonsense_key = 1\n");
        assert!(result.is_err());
    }

    #[test]
    fn bad_sections_are_reported() {
        let mut config = RunConfig::default();
        config.telemetry.window_len = 1;
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("telemetry"));

        let mut config = RunConfig::default();
        config.privacy.deleted = vec![1];
        assert!(config.validate().is_err(), "deleting attack-relevant x1 must fail");
    }

    #[test]
    fn table2_default_profile() {
        let profile = PrivacySection::default().to_profile().unwrap();
        assert_eq!(profile.output_width(), 7);
        assert!(profile.encode_x9);
    }
}
