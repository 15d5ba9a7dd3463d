//! The end-to-end pipeline: synthetic runs -> windows -> features ->
//! privacy transform -> split/normalize -> train -> evaluate. Every stage
//! is a pure function of (config, seed), so full runs reproduceify
//! bit-identically.

use std::time::Instant;

use thiserror::Error;

use qrtls_core::dataset::{Dataset, DatasetError, MinMaxNormalizer};
use qrtls_core::dqnn::DqnnError;
use qrtls_core::fusion::{FusionError, HybridModel};
use qrtls_core::metrics::{ConfusionMatrix, MetricsError};
use qrtls_core::mlp::{MlpError, MlpModel};
use qrtls_core::privacy::{apply_profile, PrivacyError, PrivacyProfile, SanitizedVector};
use qrtls_core::seeds;
use qrtls_core::telemetry::{
    featurize_run, simulate_run, AttackKind, FeatureVector, TelemetryError, TelemetrySample,
};
use qrtls_core::vqc::VqcError;

use crate::config::{ConfigError, MlpSpec, RunConfig};
use crate::io::IoFormatError;
use crate::report::EvaluationReport;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoFormatError),
    #[error(transparent)]
    Telemetry(#[from] TelemetryError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Vqc(#[from] VqcError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Dqnn(#[from] DqnnError),
    #[error("model '{0}' is unknown (expected nn, dnn, dnn-shallow, hybrid-nn, hybrid-dnn)")]
    UnknownModel(String),
    #[error("evaluation input is empty")]
    EmptyEvaluation,
}

/// One planned synthetic run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub trajectory: String,
    pub repetition: usize,
    pub kind: AttackKind,
    pub seed: u64,
}

/// Deterministic run plan: trajectories x repetitions x scenario kinds,
/// each with its own telemetry sub-seed.
pub fn plan_runs(config: &RunConfig) -> Vec<RunSpec> {
    let mut specs = Vec::new();
    let mut index = 0u64;
    for trajectory in &config.telemetry.trajectories {
        for repetition in 0..config.telemetry.repetitions {
            for kind_name in &config.telemetry.scenario_kinds {
                let kind = AttackKind::parse(kind_name).expect("validated");
                specs.push(RunSpec {
                    trajectory: trajectory.name.clone(),
                    repetition,
                    kind,
                    seed: seeds::derive_u64(config.seed, "telemetry", index),
                });
                index += 1;
            }
        }
    }
    specs
}

pub fn generate_run(
    config: &RunConfig,
    spec: &RunSpec,
) -> Result<Vec<TelemetrySample>, PipelineError> {
    let telemetry = &config.telemetry;
    let trajectory_spec = telemetry
        .trajectories
        .iter()
        .find(|t| t.name == spec.trajectory)
        .expect("plan built from config");
    Ok(simulate_run(
        &telemetry.layout(),
        &telemetry.trajectory(trajectory_spec),
        &telemetry.scenario(spec.kind),
        &telemetry.radio(),
        &telemetry.noise_params(),
        spec.seed,
    )?)
}

/// Window and label every run in plan order.
pub fn featurize_runs(
    config: &RunConfig,
    runs: &[(RunSpec, Vec<TelemetrySample>)],
) -> Result<Vec<FeatureVector>, PipelineError> {
    let feature_config = config.telemetry.feature_config();
    let mut rows = Vec::new();
    for (spec, samples) in runs {
        let scenario = config.telemetry.scenario(spec.kind);
        rows.extend(featurize_run(
            samples,
            &scenario,
            &feature_config,
            config.telemetry.window_len,
            config.telemetry.stride,
        )?);
    }
    Ok(rows)
}

/// Generate and featurize the whole configured dataset in memory.
pub fn build_feature_rows(config: &RunConfig) -> Result<Vec<FeatureVector>, PipelineError> {
    let mut runs = Vec::new();
    for spec in plan_runs(config) {
        let samples = generate_run(config, &spec)?;
        runs.push((spec, samples));
    }
    featurize_runs(config, &runs)
}

pub fn sanitize_rows(
    rows: &[FeatureVector],
    profile: &PrivacyProfile,
) -> Result<Vec<SanitizedVector>, PipelineError> {
    Ok(rows.iter().map(|r| apply_profile(r, profile)).collect::<Result<_, _>>()?)
}

/// Assemble sanitized rows into a labeled dataset (3 classes, or collapsed
/// to normal-vs-attack in binary mode).
pub fn dataset_from_sanitized(
    rows: &[SanitizedVector],
    binary: bool,
) -> Result<(Dataset, Vec<usize>), PipelineError> {
    let retained = rows.first().map(|r| r.retained.clone()).unwrap_or_default();
    let features: Vec<Vec<f64>> = rows.iter().map(|r| r.values.clone()).collect();
    let labels: Vec<usize> = rows.iter().map(|r| r.label.index()).collect();
    let dataset = Dataset::new(features, labels, 3)?;
    let dataset = if binary { dataset.binarized(&[1, 2]) } else { dataset };
    Ok((dataset, retained))
}

/// Split + normalization products shared by every model kind.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub normalizer: MinMaxNormalizer,
    pub retained: Vec<usize>,
}

/// Stratified split, then min-max normalization fitted on the training
/// split only and applied to both sides.
pub fn prepare(
    dataset: &Dataset,
    retained: Vec<usize>,
    config: &RunConfig,
) -> Result<Prepared, PipelineError> {
    let split_seed = seeds::derive_u64(config.seed, "split", 0);
    let (train_raw, test_raw) = dataset.stratified_split(config.train.test_fraction, split_seed);
    let normalizer = MinMaxNormalizer::fit(&train_raw);
    Ok(Prepared {
        train: normalizer.transform(&train_raw)?,
        test: normalizer.transform(&test_raw)?,
        normalizer,
        retained,
    })
}

/// The five benchmarked detector kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Nn,
    Dnn,
    DnnShallow,
    HybridNn { qubits: usize },
    HybridDnn { qubits: usize },
}

impl ModelKind {
    pub fn parse(token: &str, qubits: usize) -> Result<Self, PipelineError> {
        match token {
            "nn" => Ok(ModelKind::Nn),
            "dnn" => Ok(ModelKind::Dnn),
            "dnn-shallow" => Ok(ModelKind::DnnShallow),
            "hybrid-nn" => Ok(ModelKind::HybridNn { qubits }),
            "hybrid-dnn" => Ok(ModelKind::HybridDnn { qubits }),
            other => Err(PipelineError::UnknownModel(other.to_string())),
        }
    }

    /// Report/table name.
    pub fn name(&self) -> String {
        match self {
            ModelKind::Nn => "NN".into(),
            ModelKind::Dnn => "DNN".into(),
            ModelKind::DnnShallow => "DNN-Shallow".into(),
            ModelKind::HybridNn { .. } => "Hybrid DQNN+NN".into(),
            ModelKind::HybridDnn { .. } => "Hybrid DQNN+DNN".into(),
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            ModelKind::Nn => "nn",
            ModelKind::Dnn => "dnn",
            ModelKind::DnnShallow => "dnn-shallow",
            ModelKind::HybridNn { .. } => "hybrid-nn",
            ModelKind::HybridDnn { .. } => "hybrid-dnn",
        }
    }

    pub fn qubits(&self) -> usize {
        match self {
            ModelKind::HybridNn { qubits } | ModelKind::HybridDnn { qubits } => *qubits,
            _ => 0,
        }
    }

    fn mlp_spec<'c>(&self, config: &'c RunConfig) -> &'c MlpSpec {
        match self {
            ModelKind::Nn | ModelKind::HybridNn { .. } => &config.models.nn,
            ModelKind::Dnn | ModelKind::HybridDnn { .. } => &config.models.dnn,
            ModelKind::DnnShallow => &config.models.dnn_shallow,
        }
    }
}

/// A trained detector of either family.
pub enum TrainedModel {
    Mlp(MlpModel),
    Hybrid(HybridModel),
}

impl TrainedModel {
    pub fn predict_batch(&self, data: &Dataset) -> Result<Vec<usize>, PipelineError> {
        match self {
            TrainedModel::Mlp(m) => data
                .features()
                .iter()
                .map(|row| Ok(m.predict(row)?.0))
                .collect(),
            TrainedModel::Hybrid(h) => Ok(h.predict(data)?),
        }
    }
}

/// Options that sweeps override on top of the config's model spec.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModelOverrides {
    pub dropout: Option<f64>,
    pub activation: Option<qrtls_core::mlp::Activation>,
}

fn mlp_layer_sizes(input_width: usize, hidden: &[usize], n_classes: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(input_width);
    sizes.extend_from_slice(hidden);
    sizes.push(n_classes);
    sizes
}

/// Train one detector on the prepared training split, timing the training
/// call only.
pub fn train_model(
    kind: ModelKind,
    prepared: &Prepared,
    config: &RunConfig,
    overrides: ModelOverrides,
) -> Result<(TrainedModel, f64), PipelineError> {
    let spec = kind.mlp_spec(config);
    let activation = overrides
        .activation
        .map_or_else(|| spec.activation_kind().map_err(PipelineError::from), Ok)?;
    let dropout = overrides.dropout.unwrap_or(spec.dropout);
    let input_width = prepared.train.width();
    let n_classes = prepared.train.n_classes();
    let layer_sizes = mlp_layer_sizes(input_width, &spec.hidden, n_classes);
    let init_seed = seeds::derive_u64(config.seed, "init", kind_tag(kind));
    let train_seed = seeds::derive_u64(config.seed, "train", kind_tag(kind));
    let mut mlp = MlpModel::new(layer_sizes, activation, dropout, init_seed)?;
    let train_config = config.train.train_config(train_seed, spec.epochs);

    match kind {
        ModelKind::Nn | ModelKind::Dnn | ModelKind::DnnShallow => {
            let start = Instant::now();
            mlp.train(&prepared.train, &train_config)?;
            let train_time_s = start.elapsed().as_secs_f64();
            Ok((TrainedModel::Mlp(mlp), train_time_s))
        }
        ModelKind::HybridNn { qubits } | ModelKind::HybridDnn { qubits } => {
            let vqc_seed = seeds::derive_u64(config.seed, "vqc-init", kind_tag(kind));
            let vqc = qrtls_core::vqc::VqcModel::new(
                qubits,
                config.models.vqc.depth,
                config.models.vqc.encoding_kind()?,
                config.models.vqc.entanglement_kind()?,
                vqc_seed,
            )?;
            let mut hybrid = HybridModel::new(vqc, mlp);
            let hybrid_config = config.hybrid.hybrid_config(train_config, train_seed);
            let start = Instant::now();
            hybrid.train(&prepared.train, &hybrid_config)?;
            let train_time_s = start.elapsed().as_secs_f64();
            Ok((TrainedModel::Hybrid(hybrid), train_time_s))
        }
    }
}

fn kind_tag(kind: ModelKind) -> u64 {
    match kind {
        ModelKind::Nn => 0,
        ModelKind::Dnn => 1,
        ModelKind::DnnShallow => 2,
        ModelKind::HybridNn { qubits } => 100 + qubits as u64,
        ModelKind::HybridDnn { qubits } => 200 + qubits as u64,
    }
}

/// Attack-class label set under the configured label mode.
pub fn attack_classes(config: &RunConfig) -> Vec<usize> {
    if config.train.binary() {
        vec![1]
    } else {
        vec![1, 2]
    }
}

pub fn evaluate_on(
    model: &TrainedModel,
    data: &Dataset,
) -> Result<ConfusionMatrix, PipelineError> {
    if data.is_empty() {
        return Err(PipelineError::EmptyEvaluation);
    }
    let predicted = model.predict_batch(data)?;
    Ok(ConfusionMatrix::from_labels(data.labels(), &predicted, data.n_classes())?)
}

/// Train on the prepared split and produce the standard evaluation row.
pub fn train_and_evaluate(
    kind: ModelKind,
    prepared: &Prepared,
    config: &RunConfig,
    condition: &str,
    overrides: ModelOverrides,
) -> Result<(EvaluationReport, TrainedModel), PipelineError> {
    let (model, train_time_s) = train_model(kind, prepared, config, overrides)?;
    let cm = evaluate_on(&model, &prepared.test)?;
    let report = EvaluationReport::from_confusion(
        condition,
        &kind.name(),
        kind.qubits(),
        &cm,
        &attack_classes(config),
        train_time_s,
        config.seed,
        &config.digest(),
    )?;
    Ok((report, model))
}

/// Full in-memory pipeline under the configured privacy profile.
pub fn prepare_from_config(config: &RunConfig) -> Result<Prepared, PipelineError> {
    let rows = build_feature_rows(config)?;
    let profile = config.privacy.to_profile()?;
    let sanitized = sanitize_rows(&rows, &profile)?;
    let (dataset, retained) = dataset_from_sanitized(&sanitized, config.train.binary())?;
    prepare(&dataset, retained, config)
}
