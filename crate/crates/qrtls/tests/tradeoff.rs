//! Privacy trade-off pairing: raw-width versus transformed-width training
//! under equal seeds, with the attack-F1 delta recorded.

use qrtls::config::RunConfig;
use qrtls::experiments::privacy_tradeoff;
use qrtls::pipeline::{ModelKind, PipelineError};

fn fast_config() -> RunConfig {
    let mut config = RunConfig::default();
    config.telemetry.repetitions = 1;
    config.telemetry.duration_s = 10.0;
    config.telemetry.attack_span = [2.0, 8.0];
    config.train.epochs = 5;
    config
}

#[test]
fn identity_profile_yields_equal_reports() {
    let mut config = fast_config();
    config.privacy.deleted.clear();
    config.privacy.encode_x9 = false;
    let pair = privacy_tradeoff(&config, ModelKind::Nn).unwrap();
    assert_eq!(pair.raw.accuracy, pair.transformed.accuracy);
    assert_eq!(pair.raw.attack_f1, pair.transformed.attack_f1);
    assert_eq!(pair.attack_f1_delta, 0.0);
}

#[test]
fn table2_profile_emits_pair_with_delta() {
    let config = fast_config();
    let pair = privacy_tradeoff(&config, ModelKind::Nn).unwrap();
    assert_eq!(pair.raw.condition, "raw");
    assert_eq!(pair.transformed.condition, "transformed");
    // Raw runs on the full ten features, transformed on seven.
    assert!((0.0..=1.0).contains(&pair.raw.attack_f1));
    assert!((0.0..=1.0).contains(&pair.transformed.attack_f1));
    let delta = pair.transformed.attack_f1 - pair.raw.attack_f1;
    assert!((pair.attack_f1_delta - delta).abs() < 1e-15);
    // Deterministic under the fixed seed.
    let again = privacy_tradeoff(&config, ModelKind::Nn).unwrap();
    assert_eq!(again.attack_f1_delta, pair.attack_f1_delta);
}

#[test]
fn missing_test_split_is_an_error() {
    let mut config = fast_config();
    // A handful of windows per class and a split fraction small enough that
    // every per-class test share rounds to zero leaves no test split.
    config.telemetry.duration_s = 6.0;
    config.telemetry.attack_span = [1.0, 5.5];
    config.telemetry.window_len = 120;
    config.telemetry.stride = 120;
    config.train.test_fraction = 0.02;
    match privacy_tradeoff(&config, ModelKind::Nn) {
        Err(PipelineError::EmptyEvaluation) => {}
        other => panic!("expected empty-evaluation error, got {other:?}"),
    }
}
