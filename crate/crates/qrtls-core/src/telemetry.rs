//! Synthetic RTLS traces and the ten-feature window extractor.
//!
//! The generator walks a robot along waypoints in a room of fixed anchors,
//! emitting one RSSI packet per anchor per tick from the log-distance
//! path-loss model plus Gaussian noise. DoS scenarios drive affected-anchor
//! packets to the noise floor and mark them dropped; spoof scenarios inject
//! a phantom beacon with a consistent strong signal and wander the position
//! estimate away from odometry. Every run is a pure function of its
//! configuration and seed.
//!
//! Features per window (population-variance convention throughout):
//!
//! | #   | name                  | definition                                          |
//! |-----|-----------------------|-----------------------------------------------------|
//! | x1  | rssi_mean             | mean RSSI over all packets (dBm)                    |
//! | x2  | rssi_std              | pooled within-beacon RSSI standard deviation (dB)   |
//! | x3  | timestamp_jitter_var  | variance of successive packet time deltas (s^2)     |
//! | x4  | distance_estimate     | mean path-loss-inverted distance, received packets  |
//! | x5  | positional_jitter     | sqrt(Var(est_x) + Var(est_y)) (m)                   |
//! | x6  | beacon_entropy        | Shannon entropy of beacon-id counts (bits)          |
//! | x7  | packet_drop_rate      | dropped / total                                     |
//! | x8  | anchor_signal_variance| variance across beacons of per-beacon mean RSSI     |
//! | x9  | est_velocity          | end-to-start displacement speed of est_pos (m/s)    |
//! | x10 | velocity_residual     | |x9 - odometry speed| (m/s)                         |

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use alloc::collections::BTreeSet;

// Inherent std float methods shadow this under cfg(test).
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub const FEATURE_COUNT: usize = 10;

/// Column names for the feature CSV schema, in order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] =
    ["x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x9", "x10"];

/// Beacon id used for spoof-injected phantom packets.
pub const PHANTOM_BEACON_ID: &str = "phantom";

/// RSSI reported for packets lost to jamming (noise floor, dBm).
const NOISE_FLOOR_DBM: f64 = -95.0;

/// Consistent phantom-beacon signal strength (dBm).
const PHANTOM_RSSI_DBM: f64 = -45.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TelemetryError {
    #[error("distance must be positive, got {d}")]
    NonPositiveDistance { d: f64 },
    #[error("layout needs at least 3 anchors, got {count}")]
    TooFewAnchors { count: usize },
    #[error("duplicate anchor id {id}")]
    DuplicateAnchor { id: String },
    #[error("trajectory needs at least one waypoint")]
    EmptyTrajectory,
    #[error("speed must be positive, got {speed}")]
    BadSpeed { speed: f64 },
    #[error("scenario time span must satisfy start < end")]
    BadTimeSpan,
    #[error("intensity {intensity} outside [0, 1]")]
    BadIntensity { intensity: f64 },
    #[error("sample rate and duration must be positive")]
    BadRate,
    #[error("window needs at least 2 samples, got {count}")]
    WindowTooShort { count: usize },
    #[error("empty beacon count map")]
    EmptyCounts,
    #[error("time-of-flight distance mode needs tof values in the data")]
    MissingTof,
}

/// One RTLS packet observation.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetrySample {
    pub t: f64,
    pub beacon_id: String,
    pub rssi: f64,
    pub est_pos: (f64, f64),
    pub odom_pos: (f64, f64),
    pub dropped: bool,
    /// Time-of-flight in seconds, when the source provides it (external
    /// datasets); the synthetic generator leaves it unset.
    pub tof_s: Option<f64>,
}

/// Ground-truth class of a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Normal,
    Dos,
    Spoof,
}

impl Label {
    pub fn index(self) -> usize {
        match self {
            Label::Normal => 0,
            Label::Dos => 1,
            Label::Spoof => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(Label::Normal),
            1 => Some(Label::Dos),
            2 => Some(Label::Spoof),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Dos => "dos",
            Label::Spoof => "spoof",
        }
    }
}

/// What kind of interference a run carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    None,
    Dos,
    Spoof,
}

impl AttackKind {
    pub fn label(self) -> Label {
        match self {
            AttackKind::None => Label::Normal,
            AttackKind::Dos => Label::Dos,
            AttackKind::Spoof => Label::Spoof,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::Dos => "dos",
            AttackKind::Spoof => "spoof",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "none" => Some(AttackKind::None),
            "dos" => Some(AttackKind::Dos),
            "spoof" => Some(AttackKind::Spoof),
            _ => None,
        }
    }
}

/// Attack description for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackScenario {
    pub kind: AttackKind,
    /// Severity in [0, 1]: scales DoS drop probability and spoof bias.
    pub intensity: f64,
    /// DoS: which anchors are jammed.
    pub affected_beacons: BTreeSet<String>,
    /// Active interval (seconds).
    pub time_span: (f64, f64),
}

impl AttackScenario {
    pub fn none() -> Self {
        Self {
            kind: AttackKind::None,
            intensity: 0.0,
            affected_beacons: BTreeSet::new(),
            time_span: (0.0, f64::MAX),
        }
    }

    pub fn validate(&self) -> Result<(), TelemetryError> {
        if self.time_span.0 >= self.time_span.1 {
            return Err(TelemetryError::BadTimeSpan);
        }
        if !(0.0..=1.0).contains(&self.intensity) {
            return Err(TelemetryError::BadIntensity { intensity: self.intensity });
        }
        Ok(())
    }

    fn active(&self, t: f64) -> bool {
        self.kind != AttackKind::None && t >= self.time_span.0 && t < self.time_span.1
    }
}

/// A fixed anchor (beacon).
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub id: String,
    pub pos: (f64, f64),
}

/// Room layout: at least three anchors with distinct ids.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomLayout {
    pub anchors: Vec<Anchor>,
}

impl RoomLayout {
    pub fn validate(&self) -> Result<(), TelemetryError> {
        if self.anchors.len() < 3 {
            return Err(TelemetryError::TooFewAnchors { count: self.anchors.len() });
        }
        let mut seen = BTreeSet::new();
        for a in &self.anchors {
            if !seen.insert(&a.id) {
                return Err(TelemetryError::DuplicateAnchor { id: a.id.clone() });
            }
        }
        Ok(())
    }
}

/// Piecewise-linear waypoint path walked at constant speed; the robot holds
/// the final waypoint once the path is exhausted.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub waypoints: Vec<(f64, f64)>,
    pub speed_mps: f64,
}

impl Trajectory {
    pub fn validate(&self) -> Result<(), TelemetryError> {
        if self.waypoints.is_empty() {
            return Err(TelemetryError::EmptyTrajectory);
        }
        if self.speed_mps <= 0.0 {
            return Err(TelemetryError::BadSpeed { speed: self.speed_mps });
        }
        Ok(())
    }

    /// True position at time `t`.
    pub fn position(&self, t: f64) -> (f64, f64) {
        let mut remaining = self.speed_mps * t.max(0.0);
        let mut current = self.waypoints[0];
        for &next in &self.waypoints[1..] {
            let seg = ((next.0 - current.0).powi(2) + (next.1 - current.1).powi(2)).sqrt();
            if seg <= 0.0 {
                current = next;
                continue;
            }
            if remaining < seg {
                let f = remaining / seg;
                return (current.0 + f * (next.0 - current.0), current.1 + f * (next.1 - current.1));
            }
            remaining -= seg;
            current = next;
        }
        current
    }
}

/// Radio and sampling parameters of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    pub path_loss_exp: f64,
    pub calib_dbm: f64,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self { path_loss_exp: 2.0, calib_dbm: -40.0, sample_rate_hz: 10.0, duration_s: 30.0 }
    }
}

/// Noise magnitudes; zero everything for analytic fixtures.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseParams {
    /// RSSI measurement noise (dB, 1 sigma).
    pub rssi_db: f64,
    /// Position-estimate noise (m, 1 sigma per axis).
    pub pos_m: f64,
    /// Odometry random-walk step (m, 1 sigma per packet per axis).
    pub odom_m: f64,
    /// Packet timestamp jitter (s, 1 sigma).
    pub t_jitter_s: f64,
    /// Baseline packet-loss probability.
    pub drop_prob: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { rssi_db: 2.0, pos_m: 0.05, odom_m: 0.005, t_jitter_s: 0.0002, drop_prob: 0.01 }
    }
}

/// Log-distance path loss: `RSSI(d) = -10 n log10(d) + C`.
pub fn rssi_model(d: f64, n_exp: f64, c: f64) -> Result<f64, TelemetryError> {
    if d <= 0.0 {
        return Err(TelemetryError::NonPositiveDistance { d });
    }
    Ok(-10.0 * n_exp * d.log10() + c)
}

/// Invert the path-loss model back to a distance estimate.
fn rssi_invert(rssi: f64, n_exp: f64, c: f64) -> f64 {
    10.0f64.powf((c - rssi) / (10.0 * n_exp))
}

/// Spoof position bias at `dt` seconds after onset: a slow Lissajous wander
/// that starts at zero, so the estimate drifts against odometry at up to
/// ~1 m/s per unit intensity.
fn spoof_bias(dt: f64, intensity: f64) -> (f64, f64) {
    let a = 1.2 * intensity;
    (a * (0.9 * dt).sin(), a * ((0.6 * dt).cos() - 1.0))
}

/// Generate one run of per-anchor RSSI packets; deterministic per seed.
pub fn simulate_run(
    layout: &RoomLayout,
    trajectory: &Trajectory,
    scenario: &AttackScenario,
    radio: &RadioParams,
    noise: &NoiseParams,
    seed: u64,
) -> Result<Vec<TelemetrySample>, TelemetryError> {
    layout.validate()?;
    trajectory.validate()?;
    scenario.validate()?;
    if radio.sample_rate_hz <= 0.0 || radio.duration_s <= 0.0 {
        return Err(TelemetryError::BadRate);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let gauss = |r: &mut ChaCha20Rng| -> f64 { r.sample(StandardNormal) };

    let n_ticks = (radio.duration_s * radio.sample_rate_hz) as usize;
    let n_anchors = layout.anchors.len();
    let slot = 1.0 / (radio.sample_rate_hz * (n_anchors + 1) as f64);
    let mut odom_drift = (0.0f64, 0.0f64);
    let mut samples = Vec::with_capacity(n_ticks * (n_anchors + 1));

    for tick in 0..n_ticks {
        let t0 = tick as f64 / radio.sample_rate_hz;
        let dos_active = scenario.kind == AttackKind::Dos && scenario.active(t0);
        let spoof_active = scenario.kind == AttackKind::Spoof && scenario.active(t0);

        for (a_idx, anchor) in layout.anchors.iter().enumerate() {
            let t = t0 + a_idx as f64 * slot + gauss(&mut rng) * noise.t_jitter_s;
            let p_true = trajectory.position(t);
            let dx = p_true.0 - anchor.pos.0;
            let dy = p_true.1 - anchor.pos.1;
            let d = (dx * dx + dy * dy).sqrt().max(1e-3);
            let rssi_clean = rssi_model(d, radio.path_loss_exp, radio.calib_dbm)?;
            // Fixed draw order keeps the stream independent of branches.
            let rssi_noise = gauss(&mut rng) * noise.rssi_db;
            let drop_draw: f64 = rng.random();
            let pos_noise = (gauss(&mut rng) * noise.pos_m, gauss(&mut rng) * noise.pos_m);
            let odom_step = (gauss(&mut rng) * noise.odom_m, gauss(&mut rng) * noise.odom_m);

            let jammed = dos_active && scenario.affected_beacons.contains(&anchor.id);
            let p_drop =
                (noise.drop_prob + if jammed { scenario.intensity } else { 0.0 }).min(1.0);
            let dropped = drop_draw < p_drop;
            let rssi = if dropped { NOISE_FLOOR_DBM + rssi_noise } else { rssi_clean + rssi_noise };

            // DoS degrades localization quality; spoofing biases it.
            let est_scale = if dos_active { 1.0 + scenario.intensity } else { 1.0 };
            let bias = if spoof_active {
                spoof_bias(t - scenario.time_span.0, scenario.intensity)
            } else {
                (0.0, 0.0)
            };
            odom_drift.0 += odom_step.0;
            odom_drift.1 += odom_step.1;

            samples.push(TelemetrySample {
                t,
                beacon_id: anchor.id.clone(),
                rssi,
                est_pos: (
                    p_true.0 + pos_noise.0 * est_scale + bias.0,
                    p_true.1 + pos_noise.1 * est_scale + bias.1,
                ),
                odom_pos: (p_true.0 + odom_drift.0, p_true.1 + odom_drift.1),
                dropped,
                tof_s: None,
            });
        }

        if spoof_active {
            let t = t0 + n_anchors as f64 * slot + gauss(&mut rng) * noise.t_jitter_s;
            let p_true = trajectory.position(t);
            let rssi = PHANTOM_RSSI_DBM + gauss(&mut rng) * 0.3;
            let pos_noise = (gauss(&mut rng) * noise.pos_m, gauss(&mut rng) * noise.pos_m);
            let bias = spoof_bias(t - scenario.time_span.0, scenario.intensity);
            samples.push(TelemetrySample {
                t,
                beacon_id: String::from(PHANTOM_BEACON_ID),
                rssi,
                est_pos: (p_true.0 + pos_noise.0 + bias.0, p_true.1 + pos_noise.1 + bias.1),
                odom_pos: (p_true.0 + odom_drift.0, p_true.1 + odom_drift.1),
                dropped: false,
                tof_s: None,
            });
        }
    }
    // Timestamp jitter can reorder adjacent packets; the sample invariant
    // is non-decreasing time.
    samples.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(samples)
}

/// Shannon entropy (bits) of beacon-id counts: `H = -sum p_i log2 p_i`.
pub fn beacon_entropy(id_counts: &BTreeMap<String, u64>) -> Result<f64, TelemetryError> {
    let total: u64 = id_counts.values().sum();
    if total == 0 {
        return Err(TelemetryError::EmptyCounts);
    }
    let mut h = 0.0;
    for &count in id_counts.values() {
        if count == 0 {
            continue;
        }
        let p = count as f64 / total as f64;
        h -= p * p.log2();
    }
    Ok(h)
}

/// A time-ordered slice of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryWindow {
    pub samples: Vec<TelemetrySample>,
    pub window_len: usize,
    pub stride: usize,
}

/// Sliding windows over a sample stream:
/// `floor((N - window_len) / stride) + 1` of them for `N >= window_len`,
/// none otherwise.
pub fn window_stream(
    samples: &[TelemetrySample],
    window_len: usize,
    stride: usize,
) -> Vec<TelemetryWindow> {
    assert!(window_len >= 2, "window_len must be at least 2");
    let stride = stride.max(1);
    if samples.len() < window_len {
        return Vec::new();
    }
    let count = (samples.len() - window_len) / stride + 1;
    (0..count)
        .map(|i| TelemetryWindow {
            samples: samples[i * stride..i * stride + window_len].to_vec(),
            window_len,
            stride,
        })
        .collect()
}

/// Ground-truth label of a window: the scenario's class when at least half
/// the window's samples fall inside the attack span, otherwise normal.
pub fn label_window(window: &TelemetryWindow, scenario: &AttackScenario) -> Label {
    if scenario.kind == AttackKind::None {
        return Label::Normal;
    }
    let inside = window
        .samples
        .iter()
        .filter(|s| s.t >= scenario.time_span.0 && s.t < scenario.time_span.1)
        .count();
    if 2 * inside >= window.samples.len() {
        scenario.kind.label()
    } else {
        Label::Normal
    }
}

/// How x4 (distance estimate) is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMode {
    /// Invert the path-loss model from received RSSI (synthetic default).
    RssiInversion,
    /// `d = c * tof`; requires time-of-flight values in the samples.
    TimeOfFlight,
}

/// Featurizer calibration; must match the radio model that produced the
/// samples for x4 to be meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub path_loss_exp: f64,
    pub calib_dbm: f64,
    pub distance_mode: DistanceMode,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { path_loss_exp: 2.0, calib_dbm: -40.0, distance_mode: DistanceMode::RssiInversion }
    }
}

/// The ten features plus ground-truth label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
    pub label: Label,
}

fn population_variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n == 0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64
}

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Compute x1..x10 for one window (label set to normal; callers attach the
/// scenario ground truth via [`label_window`]).
pub fn extract_features(
    window: &TelemetryWindow,
    config: &FeatureConfig,
) -> Result<FeatureVector, TelemetryError> {
    let samples = &window.samples;
    if samples.len() < 2 {
        return Err(TelemetryError::WindowTooShort { count: samples.len() });
    }
    let n = samples.len() as f64;

    // Per-beacon grouping for x2, x6, x8.
    let mut by_beacon: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for s in samples {
        by_beacon.entry(&s.beacon_id).or_default().push(s.rssi);
    }

    let x1 = samples.iter().map(|s| s.rssi).sum::<f64>() / n;

    // Pooled within-beacon variance: RSSI instability net of the spatial
    // spread between anchors.
    let pooled: f64 = by_beacon
        .values()
        .map(|rssis| {
            let mean = rssis.iter().sum::<f64>() / rssis.len() as f64;
            rssis.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
        })
        .sum::<f64>()
        / n;
    let x2 = pooled.sqrt();

    let deltas: Vec<f64> = samples.windows(2).map(|w| w[1].t - w[0].t).collect();
    let x3 = population_variance(deltas.iter().copied());

    let x4 = match config.distance_mode {
        DistanceMode::RssiInversion => {
            let received: Vec<f64> = samples
                .iter()
                .filter(|s| !s.dropped)
                .map(|s| rssi_invert(s.rssi, config.path_loss_exp, config.calib_dbm))
                .collect();
            if received.is_empty() {
                0.0
            } else {
                received.iter().sum::<f64>() / received.len() as f64
            }
        }
        DistanceMode::TimeOfFlight => {
            let tofs: Vec<f64> = samples.iter().filter_map(|s| s.tof_s).collect();
            if tofs.is_empty() {
                return Err(TelemetryError::MissingTof);
            }
            SPEED_OF_LIGHT * tofs.iter().sum::<f64>() / tofs.len() as f64
        }
    };

    let var_x = population_variance(samples.iter().map(|s| s.est_pos.0));
    let var_y = population_variance(samples.iter().map(|s| s.est_pos.1));
    let x5 = (var_x + var_y).sqrt();

    let counts: BTreeMap<String, u64> = by_beacon
        .iter()
        .map(|(id, rssis)| (String::from(*id), rssis.len() as u64))
        .collect();
    let x6 = beacon_entropy(&counts)?;

    let x7 = samples.iter().filter(|s| s.dropped).count() as f64 / n;

    let beacon_means: Vec<f64> = by_beacon
        .values()
        .map(|rssis| rssis.iter().sum::<f64>() / rssis.len() as f64)
        .collect();
    let x8 = population_variance(beacon_means.iter().copied());

    let first = &samples[0];
    let last = &samples[samples.len() - 1];
    let dt = last.t - first.t;
    let speed = |a: (f64, f64), b: (f64, f64)| {
        if dt <= 0.0 {
            0.0
        } else {
            ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt() / dt
        }
    };
    let x9 = speed(first.est_pos, last.est_pos);
    let odom_speed = speed(first.odom_pos, last.odom_pos);
    let x10 = (x9 - odom_speed).abs();

    Ok(FeatureVector { values: [x1, x2, x3, x4, x5, x6, x7, x8, x9, x10], label: Label::Normal })
}

/// Window a labeled run and extract one labeled feature vector per window.
pub fn featurize_run(
    samples: &[TelemetrySample],
    scenario: &AttackScenario,
    config: &FeatureConfig,
    window_len: usize,
    stride: usize,
) -> Result<Vec<FeatureVector>, TelemetryError> {
    window_stream(samples, window_len, stride)
        .iter()
        .map(|w| {
            let mut fv = extract_features(w, config)?;
            fv.label = label_window(w, scenario);
            Ok(fv)
        })
        .collect()
}
