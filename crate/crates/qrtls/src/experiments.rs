//! Benchmark experiments: dropout and activation sweeps, the
//! qubit-depth benchmark table, the privacy trade-off pairing, and the
//! quantum unitary-learning curves, each with its CSV emission.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use qrtls_core::dqnn::{
    generalization_experiment, robustness_experiment, DqnnArchitecture, DqnnHyper, DqnnNetwork,
    GeneralizationPoint, RobustnessPoint,
};
use qrtls_core::mlp::Activation;
use qrtls_core::qlinalg::haar_unitary;
use qrtls_core::seeds;

use crate::config::RunConfig;
use crate::io::IoFormatError;
use crate::pipeline::{
    dataset_from_sanitized, prepare, sanitize_rows, train_and_evaluate,
    build_feature_rows, ModelKind, ModelOverrides, PipelineError, Prepared,
};
use crate::report::EvaluationReport;

fn write_text(path: &Path, text: String) -> Result<(), IoFormatError> {
    fs::write(path, text).map_err(|source| IoFormatError::Io { path: path.to_path_buf(), source })
}

/// One sweep row: metrics at a (activation, dropout) grid point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub activation: String,
    pub dropout: f64,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub attack_f1: f64,
}

pub fn sweep_csv(rows: &[SweepRow], seed: u64, digest: &str) -> String {
    let mut out =
        String::from("activation,dropout,accuracy,macro_f1,weighted_f1,attack_f1,seed,config_digest\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.activation, r.dropout, r.accuracy, r.macro_f1, r.weighted_f1, r.attack_f1, seed, digest
        );
    }
    out
}

/// Train/evaluate the sweep model at every dropout rate. Rows are keyed by
/// the rate value (not the grid position), so duplicated rates reproduce
/// identical rows.
pub fn dropout_sweep(
    config: &RunConfig,
    kind: ModelKind,
    prepared: &Prepared,
) -> Result<Vec<SweepRow>, PipelineError> {
    let mut rows = Vec::new();
    for &rate in &config.experiments.dropout_rates {
        let overrides = ModelOverrides { dropout: Some(rate), activation: None };
        let condition = format!("dropout={rate}");
        let (report, _) = train_and_evaluate(kind, prepared, config, &condition, overrides)?;
        rows.push(SweepRow {
            activation: String::from("config"),
            dropout: rate,
            accuracy: report.accuracy,
            macro_f1: report.macro_f1,
            weighted_f1: report.weighted_f1,
            attack_f1: report.attack_f1,
        });
    }
    Ok(rows)
}

/// Full activation x dropout cross product; doubles as the radar-plot data
/// (macro/weighted/attack F1 per activation per rate).
pub fn activation_sweep(
    config: &RunConfig,
    kind: ModelKind,
    prepared: &Prepared,
) -> Result<Vec<SweepRow>, PipelineError> {
    let mut rows = Vec::new();
    for name in &config.experiments.activations {
        let activation = Activation::parse(name).ok_or_else(|| {
            PipelineError::UnknownModel(format!("activation '{name}'"))
        })?;
        for &rate in &config.experiments.dropout_rates {
            let overrides = ModelOverrides { dropout: Some(rate), activation: Some(activation) };
            let condition = format!("activation={name},dropout={rate}");
            let (report, _) = train_and_evaluate(kind, prepared, config, &condition, overrides)?;
            rows.push(SweepRow {
                activation: name.clone(),
                dropout: rate,
                accuracy: report.accuracy,
                macro_f1: report.macro_f1,
                weighted_f1: report.weighted_f1,
                attack_f1: report.attack_f1,
            });
        }
    }
    Ok(rows)
}

/// The qubit-depth benchmark: NN, DNN, DNN-Shallow at zero qubits plus both
/// hybrids at every configured qubit count, all under the configured
/// privacy profile. 3 + 2 x |grid| rows.
pub fn qubit_depth_benchmark(
    config: &RunConfig,
    prepared: &Prepared,
) -> Result<Vec<EvaluationReport>, PipelineError> {
    let condition = "privacy-table2";
    let mut reports = Vec::new();
    for kind in [ModelKind::Dnn, ModelKind::Nn, ModelKind::DnnShallow] {
        let (report, _) =
            train_and_evaluate(kind, prepared, config, condition, ModelOverrides::default())?;
        reports.push(report);
    }
    for &qubits in &config.experiments.qubit_grid {
        let (report, _) = train_and_evaluate(
            ModelKind::HybridNn { qubits },
            prepared,
            config,
            condition,
            ModelOverrides::default(),
        )?;
        reports.push(report);
    }
    for &qubits in &config.experiments.qubit_grid {
        let (report, _) = train_and_evaluate(
            ModelKind::HybridDnn { qubits },
            prepared,
            config,
            condition,
            ModelOverrides::default(),
        )?;
        reports.push(report);
    }
    Ok(reports)
}

/// Raw-versus-transformed pairing: identical seeds, independent instances
/// at the two widths, matched test splits.
#[derive(Debug, Clone)]
pub struct TradeoffPair {
    pub raw: EvaluationReport,
    pub transformed: EvaluationReport,
    pub attack_f1_delta: f64,
}

pub fn privacy_tradeoff(
    config: &RunConfig,
    kind: ModelKind,
) -> Result<TradeoffPair, PipelineError> {
    let rows = build_feature_rows(config)?;
    let profile = config.privacy.to_profile()?;

    let identity = qrtls_core::privacy::PrivacyProfile::identity();
    let raw_rows = sanitize_rows(&rows, &identity)?;
    let (raw_dataset, raw_retained) = dataset_from_sanitized(&raw_rows, config.train.binary())?;
    let raw_prepared = prepare(&raw_dataset, raw_retained, config)?;
    let (raw, _) =
        train_and_evaluate(kind, &raw_prepared, config, "raw", ModelOverrides::default())?;

    let transformed_rows = sanitize_rows(&rows, &profile)?;
    let (dataset, retained) = dataset_from_sanitized(&transformed_rows, config.train.binary())?;
    let prepared = prepare(&dataset, retained, config)?;
    let (transformed, _) =
        train_and_evaluate(kind, &prepared, config, "transformed", ModelOverrides::default())?;

    let attack_f1_delta = transformed.attack_f1 - raw.attack_f1;
    Ok(TradeoffPair { raw, transformed, attack_f1_delta })
}

/// Train one DQNN against a random target unitary and emit the cost
/// trajectory (`step,cost,seed,steps,eps,eta`).
pub fn qnn_single_run(config: &RunConfig) -> Result<String, PipelineError> {
    let section = &config.dqnn;
    let arch = DqnnArchitecture::new(section.arch.clone())?;
    let v = haar_unitary(
        1usize << arch.input_qubits(),
        &mut seeds::stream_rng(section.target_seed, "dqnn-target"),
    );
    let data = qrtls_core::dqnn::gen_unitary_dataset(
        &v,
        section.pairs,
        seeds::derive_u64(config.seed, "dqnn-pairs", 0),
    )?;
    let mut network =
        DqnnNetwork::init(arch, seeds::derive_u64(config.seed, "dqnn-init", 0));
    let trajectory =
        network.train(&data, section.steps, section.eps, section.eta, section.log_every)?;
    let mut out = String::from("step,cost,seed,steps,eps,eta\n");
    for point in trajectory {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            point.step, point.cost, config.seed, section.steps, section.eps, section.eta
        );
    }
    Ok(out)
}

pub fn generalization_csv(points: &[GeneralizationPoint], config: &RunConfig) -> String {
    let section = &config.dqnn;
    let mut out = String::from("n_pairs,cost,seed,steps,eps,eta\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.n_pairs, p.heldout_cost, config.seed, section.steps, section.eps, section.eta
        );
    }
    out
}

pub fn robustness_csv(points: &[RobustnessPoint], config: &RunConfig) -> String {
    let section = &config.dqnn;
    let mut out = String::from("n_corrupt,cost,seed,steps,eps,eta\n");
    for p in points {
        let cost = match p.clean_cost {
            Some(c) => c.to_string(),
            // Degenerate 100%-corruption point: explicit marker, not NaN.
            None => String::from("skipped"),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.n_corrupt, cost, config.seed, section.steps, section.eps, section.eta
        );
    }
    out
}

pub fn run_generalization(config: &RunConfig) -> Result<Vec<GeneralizationPoint>, PipelineError> {
    let section = &config.dqnn;
    let arch = DqnnArchitecture::new(section.arch.clone())?;
    Ok(generalization_experiment(
        &arch,
        section.target_seed,
        &section.pairs_grid,
        section.eval_pairs,
        section.steps,
        DqnnHyper { eps: section.eps, eta: section.eta },
        config.seed,
    )?)
}

pub fn run_robustness(config: &RunConfig) -> Result<Vec<RobustnessPoint>, PipelineError> {
    let section = &config.dqnn;
    let arch = DqnnArchitecture::new(section.arch.clone())?;
    Ok(robustness_experiment(
        &arch,
        section.target_seed,
        section.corrupt_total,
        &section.corrupt_grid,
        section.steps,
        DqnnHyper { eps: section.eps, eta: section.eta },
        config.seed,
    )?)
}

pub fn write_sweep_csv(
    path: &Path,
    rows: &[SweepRow],
    config: &RunConfig,
) -> Result<(), IoFormatError> {
    write_text(path, sweep_csv(rows, config.seed, &config.digest()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::prepare_from_config;

    fn tiny_config() -> RunConfig {
        let mut config = RunConfig::default();
        config.telemetry.repetitions = 1;
        config.telemetry.duration_s = 8.0;
        config.telemetry.attack_span = [2.0, 6.0];
        config.train.epochs = 3;
        config.hybrid.vqc_epochs = 1;
        config.hybrid.fusion_epochs = 3;
        config.experiments.dropout_rates = vec![0.0, 0.3, 0.0];
        config.experiments.qubit_grid = vec![2];
        config.dqnn.steps = 20;
        config.dqnn.pairs = 4;
        config.dqnn.pairs_grid = vec![2, 4];
        config.dqnn.eval_pairs = 4;
        config.dqnn.corrupt_total = 4;
        config.dqnn.corrupt_grid = vec![0, 4];
        config
    }

    #[test]
    fn dropout_sweep_rows_and_determinism() {
        let config = tiny_config();
        let prepared = prepare_from_config(&config).unwrap();
        let rows = dropout_sweep(&config, ModelKind::Nn, &prepared).unwrap();
        assert_eq!(rows.len(), 3);
        // Identical rates produce identical rows.
        assert_eq!(rows[0].attack_f1, rows[2].attack_f1);
        assert_eq!(rows[0].accuracy, rows[2].accuracy);
        for r in &rows {
            for v in [r.accuracy, r.macro_f1, r.weighted_f1, r.attack_f1] {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn activation_sweep_is_cross_product() {
        let mut config = tiny_config();
        config.experiments.dropout_rates = vec![0.0, 0.3];
        let prepared = prepare_from_config(&config).unwrap();
        let rows = activation_sweep(&config, ModelKind::Nn, &prepared).unwrap();
        assert_eq!(rows.len(), 3 * 2);
        assert!(rows.iter().any(|r| r.activation == "tanh"));
    }

    #[test]
    fn table2_benchmark_shape() {
        let mut config = tiny_config();
        config.experiments.qubit_grid = vec![2, 4, 6];
        let prepared = prepare_from_config(&config).unwrap();
        let reports = qubit_depth_benchmark(&config, &prepared).unwrap();
        assert_eq!(reports.len(), 3 + 2 * 3, "three baselines plus two hybrids per qubit count");
        assert!(reports.iter().take(3).all(|r| r.qubits == 0));
        assert_eq!(
            reports.iter().skip(3).map(|r| r.qubits).collect::<Vec<_>>(),
            vec![2, 4, 6, 2, 4, 6]
        );
        assert!(reports.iter().all(|r| r.train_time_s > 0.0));
    }

    #[test]
    fn qnn_csvs_have_expected_headers() {
        let config = tiny_config();
        let single = qnn_single_run(&config).unwrap();
        assert!(single.starts_with("step,cost,seed,steps,eps,eta\n"));
        let last = single.lines().last().unwrap();
        let cost: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
        assert!((0.0..=1.0 + 1e-10).contains(&cost));

        let robustness = run_robustness(&config).unwrap();
        let csv = robustness_csv(&robustness, &config);
        assert!(csv.starts_with("n_corrupt,cost,seed,steps,eps,eta\n"));
        assert!(csv.lines().last().unwrap().contains("skipped"));

        let generalization = run_generalization(&config).unwrap();
        let csv = generalization_csv(&generalization, &config);
        assert_eq!(csv.lines().count(), 1 + 2);
    }
}
