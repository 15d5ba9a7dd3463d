//! `qrtls`: seeded, config-driven pipeline for RTLS attack-detection
//! experiments. Subcommands chain over files in the output directory:
//! generate -> featurize -> sanitize -> train -> evaluate, plus the sweep,
//! bench-table2, and qnn-learn-unitary experiment runners.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qrtls::config::{ConfigError, RunConfig};
use qrtls::experiments;
use qrtls::io::{self, FileMeta, IoFormatError, RunEntry, RunsManifest, ScenarioEntry};
use qrtls::pipeline::{self, ModelKind, ModelOverrides, PipelineError};
use qrtls::report::{self, ReportDocument};
use qrtls_core::dataset::{Dataset, MinMaxNormalizer};
use qrtls_core::privacy::{bucketize_timestamp, hash_beacon_rotating};

#[derive(Parser)]
#[command(name = "qrtls", version, about = "Privacy-aware RTLS attack detection benchmarks")]
struct Cli {
    /// Path to a TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory (QRTLS_OUT_DIR also works).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic telemetry runs into the output directory.
    Generate,
    /// Window and featurize generated runs into features.csv.
    Featurize,
    /// Apply the privacy profile to a feature CSV (or anonymize samples).
    Sanitize(SanitizeArgs),
    /// Train one detector on a feature CSV and save it with its report.
    Train(TrainArgs),
    /// Evaluate a saved model directory against a feature CSV.
    Evaluate(EvaluateArgs),
    /// Dropout or activation sweeps over the configured grids.
    Sweep(SweepArgs),
    /// The qubit-depth benchmark table under the privacy profile.
    BenchTable2,
    /// Quantum unitary-learning experiments (trajectory or curves).
    QnnLearnUnitary(QnnArgs),
}

#[derive(Args)]
struct SanitizeArgs {
    /// Input CSV (defaults to <out_dir>/features.csv).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output CSV (defaults to <out_dir>/sanitized.csv).
    #[arg(long)]
    output: Option<PathBuf>,
    /// What the input holds: "features" or "samples".
    #[arg(long, default_value = "features")]
    kind: String,
}

#[derive(Args)]
struct TrainArgs {
    /// Detector kind: nn | dnn | dnn-shallow | hybrid-nn | hybrid-dnn.
    #[arg(long, default_value = "hybrid-dnn")]
    model: String,
    /// Qubit count for hybrid kinds (defaults to the config's VQC width).
    #[arg(long)]
    qubits: Option<usize>,
    /// Feature CSV to train on (defaults to <out_dir>/sanitized.csv).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Where to save the model (defaults to <out_dir>/model-<kind>).
    #[arg(long)]
    model_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Saved model directory.
    #[arg(long)]
    model_dir: PathBuf,
    /// Feature CSV to evaluate (defaults to <out_dir>/sanitized.csv).
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// "dropout" or "activation".
    #[arg(long, default_value = "dropout")]
    kind: String,
}

#[derive(Args)]
struct QnnArgs {
    /// "single" (cost trajectory), "generalization", or "robustness".
    #[arg(long, default_value = "single")]
    experiment: String,
    /// Architecture widths, e.g. "1,2,1".
    #[arg(long)]
    arch: Option<String>,
    /// Training pairs for the single run.
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
}

/// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric-invariant
/// violation.
enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Data(_) => "data",
            CliError::Numeric(_) => "numeric",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<IoFormatError> for CliError {
    fn from(e: IoFormatError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(inner) => CliError::Config(inner.to_string()),
            PipelineError::Io(inner) => CliError::Data(inner.to_string()),
            PipelineError::Telemetry(_)
            | PipelineError::Privacy(_)
            | PipelineError::Dataset(_)
            | PipelineError::UnknownModel(_)
            | PipelineError::EmptyEvaluation => CliError::Data(e.to_string()),
            PipelineError::Mlp(_)
            | PipelineError::Vqc(_)
            | PipelineError::Fusion(_)
            | PipelineError::Metrics(_)
            | PipelineError::Dqnn(_) => CliError::Numeric(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // One machine-parsable line, however verbose the source error.
            let message: String = e
                .message()
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ");
            eprintln!("error: {}: {}", e.category(), message);
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Ok(dir) = std::env::var("QRTLS_OUT_DIR") {
        config.out_dir = PathBuf::from(dir);
    }
    if let Some(dir) = &cli.out_dir {
        config.out_dir = dir.clone();
    }
    config.validate()?;
    Ok(config)
}

fn ensure_out_dir(config: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", config.out_dir.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_config(&cli)?;
    match &cli.command {
        Command::Generate => generate(&config),
        Command::Featurize => featurize(&config),
        Command::Sanitize(args) => sanitize(&config, args),
        Command::Train(args) => train(&config, args),
        Command::Evaluate(args) => evaluate(&config, args),
        Command::Sweep(args) => sweep(&config, args),
        Command::BenchTable2 => bench_table2(&config),
        Command::QnnLearnUnitary(args) => qnn_learn_unitary(&config, args),
    }
}

fn generate(config: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(config)?;
    let digest = config.digest();
    let mut entries = Vec::new();
    for (index, spec) in pipeline::plan_runs(config).iter().enumerate() {
        let samples = pipeline::generate_run(config, spec)?;
        let file = format!("samples_{index:03}.csv");
        let path = config.out_dir.join(&file);
        io::write_samples_csv(&path, &samples)?;
        io::write_meta(&path, &FileMeta { seed: spec.seed, config_digest: digest.clone() })?;
        let scenario = config.telemetry.scenario(spec.kind);
        entries.push(RunEntry {
            file,
            trajectory: spec.trajectory.clone(),
            repetition: spec.repetition,
            scenario: ScenarioEntry {
                kind: spec.kind.name().to_string(),
                intensity: scenario.intensity,
                span: [scenario.time_span.0, scenario.time_span.1],
                affected: scenario.affected_beacons.iter().cloned().collect(),
            },
            seed: spec.seed,
        });
    }
    let manifest = RunsManifest { seed: config.seed, config_digest: digest, runs: entries };
    io::write_runs_manifest(&config.out_dir.join("runs.json"), &manifest)?;
    println!("generated {} runs into {}", manifest.runs.len(), config.out_dir.display());
    Ok(())
}

fn featurize(config: &RunConfig) -> Result<(), CliError> {
    let manifest = io::read_runs_manifest(&config.out_dir.join("runs.json"))?;
    let feature_config = config.telemetry.feature_config();
    let mut rows = Vec::new();
    for entry in &manifest.runs {
        let samples = io::read_samples_csv(&config.out_dir.join(&entry.file))?;
        let kind = qrtls_core::telemetry::AttackKind::parse(&entry.scenario.kind)
            .ok_or_else(|| CliError::Data(format!("unknown scenario '{}'", entry.scenario.kind)))?;
        let mut scenario = config.telemetry.scenario(kind);
        scenario.intensity = entry.scenario.intensity;
        scenario.time_span = (entry.scenario.span[0], entry.scenario.span[1]);
        scenario.affected_beacons = entry.scenario.affected.iter().cloned().collect();
        rows.extend(
            qrtls_core::telemetry::featurize_run(
                &samples,
                &scenario,
                &feature_config,
                config.telemetry.window_len,
                config.telemetry.stride,
            )
            .map_err(PipelineError::from)?,
        );
    }
    let path = config.out_dir.join("features.csv");
    io::write_features_csv(&path, &rows)?;
    io::write_meta(&path, &FileMeta { seed: config.seed, config_digest: config.digest() })?;
    println!("featurized {} windows into {}", rows.len(), path.display());
    Ok(())
}

fn sanitize(config: &RunConfig, args: &SanitizeArgs) -> Result<(), CliError> {
    ensure_out_dir(config)?;
    let profile = config.privacy.to_profile().map_err(|e| CliError::Config(e.to_string()))?;
    match args.kind.as_str() {
        "features" => {
            let input =
                args.input.clone().unwrap_or_else(|| config.out_dir.join("features.csv"));
            let output =
                args.output.clone().unwrap_or_else(|| config.out_dir.join("sanitized.csv"));
            let rows = io::read_features_csv(&input)?;
            let sanitized = pipeline::sanitize_rows(&rows, &profile)?;
            io::write_sanitized_csv(&output, &sanitized)?;
            io::write_meta(&output, &FileMeta { seed: config.seed, config_digest: config.digest() })?;
            println!(
                "sanitized {} rows ({} columns) into {}",
                sanitized.len(),
                profile.output_width(),
                output.display()
            );
        }
        "samples" => {
            let input =
                args.input.clone().ok_or_else(|| CliError::Config(String::from(
                    "--input is required for --kind samples",
                )))?;
            let output = args
                .output
                .clone()
                .unwrap_or_else(|| config.out_dir.join("samples_anonymized.csv"));
            let mut samples = io::read_samples_csv(&input)?;
            for s in &mut samples {
                s.beacon_id = hash_beacon_rotating(&s.beacon_id, s.t, &profile);
                s.t = bucketize_timestamp(s.t, profile.time_bucket_s) as f64 * profile.time_bucket_s;
            }
            io::write_samples_csv(&output, &samples)?;
            io::write_meta(&output, &FileMeta { seed: config.seed, config_digest: config.digest() })?;
            println!("anonymized {} samples into {}", samples.len(), output.display());
        }
        other => return Err(CliError::Config(format!("unknown sanitize kind '{other}'"))),
    }
    Ok(())
}

fn dataset_from_table(
    table: &io::FeatureTable,
    binary: bool,
) -> Result<(Dataset, Vec<usize>), CliError> {
    let n_classes = if binary { 2 } else { 3 };
    let labels: Vec<usize> = if binary {
        table.labels.iter().map(|&l| usize::from(l > 0)).collect()
    } else {
        table.labels.clone()
    };
    let dataset = Dataset::new(table.rows.clone(), labels, n_classes)
        .map_err(|e| CliError::Data(e.to_string()))?;
    Ok((dataset, table.retained.clone()))
}

fn train(config: &RunConfig, args: &TrainArgs) -> Result<(), CliError> {
    ensure_out_dir(config)?;
    let qubits = args.qubits.unwrap_or(config.models.vqc.qubits);
    let kind = ModelKind::parse(&args.model, qubits)?;
    let input = args.input.clone().unwrap_or_else(|| config.out_dir.join("sanitized.csv"));
    let table = io::read_feature_table(&input)?;
    let (dataset, retained) = dataset_from_table(&table, config.train.binary())?;
    let prepared = pipeline::prepare(&dataset, retained, config)?;
    let (report, model) = pipeline::train_and_evaluate(
        kind,
        &prepared,
        config,
        "train",
        ModelOverrides::default(),
    )?;

    let model_dir = args
        .model_dir
        .clone()
        .unwrap_or_else(|| config.out_dir.join(format!("model-{}", kind.token())));
    std::fs::create_dir_all(&model_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", model_dir.display())))?;
    match &model {
        pipeline::TrainedModel::Mlp(m) => io::save_mlp(&model_dir.join("mlp.txt"), m)?,
        pipeline::TrainedModel::Hybrid(h) => io::save_hybrid(&model_dir, h)?,
    }
    io::write_model_manifest(
        &model_dir,
        &io::ModelManifest {
            model: kind.token().to_string(),
            seed: config.seed,
            config_digest: config.digest(),
            retained: prepared.retained.clone(),
            norm_min: prepared.normalizer.mins().to_vec(),
            norm_max: prepared.normalizer.maxs().to_vec(),
            n_classes: prepared.train.n_classes(),
        },
    )?;

    let document = ReportDocument {
        seed: config.seed,
        config_digest: config.digest(),
        privacy_profile: (&config.privacy.to_profile().expect("validated")).into(),
        reports: vec![report.clone()],
    };
    report::write_reports_csv(&config.out_dir.join("train_report.csv"), &document.reports)?;
    report::write_report_json(&config.out_dir.join("train_report.json"), &document)?;
    println!(
        "trained {} (accuracy {:.3}, attack F1 {:.3}) -> {}",
        kind.name(),
        report.accuracy,
        report.attack_f1,
        model_dir.display()
    );
    Ok(())
}

fn evaluate(config: &RunConfig, args: &EvaluateArgs) -> Result<(), CliError> {
    ensure_out_dir(config)?;
    let manifest = io::read_model_manifest(&args.model_dir)?;
    let input = args.input.clone().unwrap_or_else(|| config.out_dir.join("sanitized.csv"));
    let table = io::read_feature_table(&input)?;
    if table.retained != manifest.retained {
        return Err(CliError::Data(format!(
            "input columns {:?} do not match the model's {:?}",
            table.retained, manifest.retained
        )));
    }
    let binary = manifest.n_classes == 2;
    let (dataset, _) = dataset_from_table(&table, binary)?;
    let normalizer = MinMaxNormalizer::from_bounds(manifest.norm_min.clone(), manifest.norm_max.clone())
        .map_err(|e| CliError::Data(e.to_string()))?;
    let normalized = normalizer.transform(&dataset).map_err(|e| CliError::Data(e.to_string()))?;

    let kind = ModelKind::parse(&manifest.model, config.models.vqc.qubits)?;
    let model = match kind {
        ModelKind::Nn | ModelKind::Dnn | ModelKind::DnnShallow => {
            pipeline::TrainedModel::Mlp(io::load_mlp(&args.model_dir.join("mlp.txt"))?)
        }
        _ => pipeline::TrainedModel::Hybrid(io::load_hybrid(&args.model_dir)?),
    };
    let cm = pipeline::evaluate_on(&model, &normalized)?;
    let attack: Vec<usize> = if binary { vec![1] } else { vec![1, 2] };
    let report = report::EvaluationReport::from_confusion(
        "evaluate",
        &kind.name(),
        kind.qubits(),
        &cm,
        &attack,
        0.0,
        manifest.seed,
        &manifest.config_digest,
    )
    .map_err(|e| CliError::Numeric(e.to_string()))?;
    report::write_reports_csv(&config.out_dir.join("evaluate_report.csv"), &[report.clone()])?;
    println!(
        "evaluated {}: accuracy {:.3}, attack F1 {:.3}",
        kind.name(),
        report.accuracy,
        report.attack_f1
    );
    Ok(())
}

fn sweep(config: &RunConfig, args: &SweepArgs) -> Result<(), CliError> {
    ensure_out_dir(config)?;
    let kind = ModelKind::parse(&config.experiments.sweep_model, config.models.vqc.qubits)?;
    let prepared = pipeline::prepare_from_config(config)?;
    let (rows, file) = match args.kind.as_str() {
        "dropout" => (experiments::dropout_sweep(config, kind, &prepared)?, "sweep_dropout.csv"),
        "activation" => (
            experiments::activation_sweep(config, kind, &prepared)?,
            "sweep_activation.csv",
        ),
        other => return Err(CliError::Config(format!("unknown sweep kind '{other}'"))),
    };
    let path = config.out_dir.join(file);
    experiments::write_sweep_csv(&path, &rows, config)?;
    println!("swept {} grid points into {}", rows.len(), path.display());
    Ok(())
}

fn bench_table2(config: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(config)?;
    let prepared = pipeline::prepare_from_config(config)?;
    let reports = experiments::qubit_depth_benchmark(config, &prepared)?;
    let csv_path = config.out_dir.join("table2.csv");
    report::write_reports_csv(&csv_path, &reports)?;
    let document = ReportDocument {
        seed: config.seed,
        config_digest: config.digest(),
        privacy_profile: (&config.privacy.to_profile().expect("validated")).into(),
        reports,
    };
    report::write_report_json(&config.out_dir.join("table2.json"), &document)?;
    println!("benchmarked {} rows into {}", document.reports.len(), csv_path.display());
    Ok(())
}

fn qnn_learn_unitary(config: &RunConfig, args: &QnnArgs) -> Result<(), CliError> {
    ensure_out_dir(config)?;
    let mut config = config.clone();
    if let Some(arch) = &args.arch {
        config.dqnn.arch = arch
            .split(',')
            .map(|w| w.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Config(format!("bad --arch '{arch}'")))?;
    }
    if let Some(pairs) = args.pairs {
        config.dqnn.pairs = pairs;
    }
    if let Some(steps) = args.steps {
        config.dqnn.steps = steps;
    }
    if let Some(eps) = args.eps {
        config.dqnn.eps = eps;
    }
    if let Some(eta) = args.eta {
        config.dqnn.eta = eta;
    }
    config.validate()?;

    let (csv, file) = match args.experiment.as_str() {
        "single" => (experiments::qnn_single_run(&config)?, "qnn_trajectory.csv"),
        "generalization" => {
            let points = experiments::run_generalization(&config)?;
            (experiments::generalization_csv(&points, &config), "qnn_generalization.csv")
        }
        "robustness" => {
            let points = experiments::run_robustness(&config)?;
            (experiments::robustness_csv(&points, &config), "qnn_robustness.csv")
        }
        other => return Err(CliError::Config(format!("unknown experiment '{other}'"))),
    };
    let path = config.out_dir.join(file);
    std::fs::write(&path, csv)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}
