//! File formats: telemetry/feature CSVs, model parameter files, and run
//! manifests.
//!
//! Sample CSV schema: `t,beacon_id,rssi,est_x,est_y,odom_x,odom_y,dropped`
//! with an optional trailing `tof_s` column; `dropped` is `0`/`1`. Feature
//! CSV schema: `x1..x10,label`; sanitized CSVs carry the retained subset of
//! those columns. UTF-8, `.` decimal, newline rows, no quoting (beacon ids
//! must not contain commas). Floats are written in shortest round-trip
//! form, so write-then-read reproduces values exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use qrtls_core::fusion::HybridModel;
use qrtls_core::mlp::MlpModel;
use qrtls_core::privacy::SanitizedVector;
use qrtls_core::telemetry::{FeatureVector, Label, TelemetrySample, FEATURE_COUNT};
use qrtls_core::vqc::{Encoding, Entanglement, VqcModel};

#[derive(Debug, Error)]
pub enum IoFormatError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{} line {line}: {reason}", path.display())]
    BadRow { path: PathBuf, line: usize, reason: String },
    #[error("{}: missing required column '{name}'", path.display())]
    MissingColumn { path: PathBuf, name: String },
    #[error("{}: unknown column '{name}'", path.display())]
    UnknownColumn { path: PathBuf, name: String },
    #[error("beacon id '{id}' contains a delimiter and cannot be written")]
    UnwritableToken { id: String },
    #[error("sanitized rows disagree on retained columns")]
    MixedRetained,
    #[error("{}: {reason}", path.display())]
    BadModel { path: PathBuf, reason: String },
    #[error("manifest error: {0}")]
    Manifest(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoFormatError + '_ {
    move |source| IoFormatError::Io { path: path.to_path_buf(), source }
}

fn bad_row(path: &Path, line: usize, reason: impl Into<String>) -> IoFormatError {
    IoFormatError::BadRow { path: path.to_path_buf(), line, reason: reason.into() }
}

const SAMPLE_COLUMNS: [&str; 8] =
    ["t", "beacon_id", "rssi", "est_x", "est_y", "odom_x", "odom_y", "dropped"];

pub fn write_samples_csv(path: &Path, samples: &[TelemetrySample]) -> Result<(), IoFormatError> {
    let with_tof = samples.iter().any(|s| s.tof_s.is_some());
    let mut out = String::new();
    out.push_str(&SAMPLE_COLUMNS.join(","));
    if with_tof {
        out.push_str(",tof_s");
    }
    out.push('\n');
    for s in samples {
        if s.beacon_id.contains(',') || s.beacon_id.contains('\n') {
            return Err(IoFormatError::UnwritableToken { id: s.beacon_id.clone() });
        }
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.t,
            s.beacon_id,
            s.rssi,
            s.est_pos.0,
            s.est_pos.1,
            s.odom_pos.0,
            s.odom_pos.1,
            u8::from(s.dropped)
        );
        if with_tof {
            match s.tof_s {
                Some(tof) => {
                    let _ = write!(out, ",{tof}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn read_samples_csv(path: &Path) -> Result<Vec<TelemetrySample>, IoFormatError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| bad_row(path, 1, "empty file (missing header)"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    for required in SAMPLE_COLUMNS {
        if !columns.contains(&required) {
            return Err(IoFormatError::MissingColumn {
                path: path.to_path_buf(),
                name: String::from(required),
            });
        }
    }
    for &col in &columns {
        if !SAMPLE_COLUMNS.contains(&col) && col != "tof_s" {
            return Err(IoFormatError::UnknownColumn {
                path: path.to_path_buf(),
                name: String::from(col),
            });
        }
    }
    let index_of = |name: &str| columns.iter().position(|c| *c == name);
    let idx: Vec<usize> = SAMPLE_COLUMNS
        .iter()
        .map(|name| index_of(name).expect("checked above"))
        .collect();
    let tof_idx = index_of("tof_s");

    let mut samples = Vec::new();
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(bad_row(
                path,
                line_no + 1,
                format!("expected {} fields, found {}", columns.len(), fields.len()),
            ));
        }
        let float = |i: usize, name: &str| -> Result<f64, IoFormatError> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| bad_row(path, line_no + 1, format!("bad {name} value '{}'", fields[i])))
        };
        let dropped = match fields[idx[7]] {
            "0" | "false" => false,
            "1" | "true" => true,
            other => {
                return Err(bad_row(path, line_no + 1, format!("bad dropped flag '{other}'")))
            }
        };
        let tof_s = match tof_idx {
            Some(i) if !fields[i].is_empty() => Some(float(i, "tof_s")?),
            _ => None,
        };
        samples.push(TelemetrySample {
            t: float(idx[0], "t")?,
            beacon_id: String::from(fields[idx[1]]),
            rssi: float(idx[2], "rssi")?,
            est_pos: (float(idx[3], "est_x")?, float(idx[4], "est_y")?),
            odom_pos: (float(idx[5], "odom_x")?, float(idx[6], "odom_y")?),
            dropped,
            tof_s,
        });
    }
    Ok(samples)
}

pub fn write_features_csv(path: &Path, rows: &[FeatureVector]) -> Result<(), IoFormatError> {
    let mut out = String::from("x1,x2,x3,x4,x5,x6,x7,x8,x9,x10,label\n");
    for row in rows {
        for v in &row.values {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", row.label.index());
    }
    fs::write(path, out).map_err(io_err(path))
}

/// A feature table of arbitrary retained width (raw 10-feature files and
/// sanitized subsets share the reader).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    /// Original 1-based feature index of each column.
    pub retained: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

pub fn read_feature_table(path: &Path) -> Result<FeatureTable, IoFormatError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| bad_row(path, 1, "empty file (missing header)"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.last() != Some(&"label") {
        return Err(IoFormatError::MissingColumn {
            path: path.to_path_buf(),
            name: String::from("label"),
        });
    }
    let mut retained = Vec::new();
    for &col in &columns[..columns.len() - 1] {
        let index: usize = col
            .strip_prefix('x')
            .and_then(|n| n.parse().ok())
            .filter(|i| (1..=FEATURE_COUNT).contains(i))
            .ok_or_else(|| IoFormatError::UnknownColumn {
                path: path.to_path_buf(),
                name: String::from(col),
            })?;
        retained.push(index);
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(bad_row(
                path,
                line_no + 1,
                format!("expected {} fields, found {}", columns.len(), fields.len()),
            ));
        }
        let mut row = Vec::with_capacity(retained.len());
        for (i, field) in fields[..fields.len() - 1].iter().enumerate() {
            row.push(field.parse::<f64>().map_err(|_| {
                bad_row(path, line_no + 1, format!("bad {} value '{field}'", columns[i]))
            })?);
        }
        let label: usize = fields[fields.len() - 1]
            .parse()
            .map_err(|_| bad_row(path, line_no + 1, "bad label value"))?;
        rows.push(row);
        labels.push(label);
    }
    Ok(FeatureTable { retained, rows, labels })
}

pub fn read_features_csv(path: &Path) -> Result<Vec<FeatureVector>, IoFormatError> {
    let table = read_feature_table(path)?;
    if table.retained != (1..=FEATURE_COUNT).collect::<Vec<_>>() {
        return Err(IoFormatError::MissingColumn {
            path: path.to_path_buf(),
            name: String::from("x1..x10 (full feature set)"),
        });
    }
    table
        .rows
        .iter()
        .zip(&table.labels)
        .enumerate()
        .map(|(i, (row, &label))| {
            let mut values = [0.0; FEATURE_COUNT];
            values.copy_from_slice(row);
            let label = Label::from_index(label)
                .ok_or_else(|| bad_row(path, i + 2, format!("label {label} out of range")))?;
            Ok(FeatureVector { values, label })
        })
        .collect()
}

pub fn write_sanitized_csv(path: &Path, rows: &[SanitizedVector]) -> Result<(), IoFormatError> {
    let retained = match rows.first() {
        Some(first) => first.retained.clone(),
        None => Vec::new(),
    };
    if rows.iter().any(|r| r.retained != retained) {
        return Err(IoFormatError::MixedRetained);
    }
    let mut out = String::new();
    let mut header: Vec<String> = retained.iter().map(|i| format!("x{i}")).collect();
    header.push(String::from("label"));
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        for v in &row.values {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", row.label.index());
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Scenario description stored in the runs manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub kind: String,
    pub intensity: f64,
    pub span: [f64; 2],
    pub affected: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunEntry {
    pub file: String,
    pub trajectory: String,
    pub repetition: usize,
    pub scenario: ScenarioEntry,
    pub seed: u64,
}

/// Index of one `generate` invocation: which sample files exist and the
/// ground truth needed to label them later.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunsManifest {
    pub seed: u64,
    pub config_digest: String,
    pub runs: Vec<RunEntry>,
}

pub fn write_runs_manifest(path: &Path, manifest: &RunsManifest) -> Result<(), IoFormatError> {
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_runs_manifest(path: &Path) -> Result<RunsManifest, IoFormatError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Sidecar provenance for data files whose schema has no seed column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileMeta {
    pub seed: u64,
    pub config_digest: String,
}

pub fn write_meta(data_path: &Path, meta: &FileMeta) -> Result<(), IoFormatError> {
    let path = meta_path(data_path);
    let text = serde_json::to_string_pretty(meta)?;
    fs::write(&path, text).map_err(io_err(&path))
}

pub fn meta_path(data_path: &Path) -> PathBuf {
    let mut os = data_path.as_os_str().to_os_string();
    os.push(".meta.json");
    PathBuf::from(os)
}

fn parse_kv<'a>(
    line: Option<&'a str>,
    key: &str,
    path: &Path,
) -> Result<&'a str, IoFormatError> {
    line.and_then(|l| l.strip_prefix(key))
        .map(str::trim)
        .ok_or_else(|| IoFormatError::BadModel {
            path: path.to_path_buf(),
            reason: format!("expected '{key} ...'"),
        })
}

pub fn save_mlp(path: &Path, model: &MlpModel) -> Result<(), IoFormatError> {
    fs::write(path, model.to_text()).map_err(io_err(path))
}

pub fn load_mlp(path: &Path) -> Result<MlpModel, IoFormatError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    MlpModel::from_text(&text)
        .map_err(|e| IoFormatError::BadModel { path: path.to_path_buf(), reason: e.to_string() })
}

pub fn save_vqc(path: &Path, model: &VqcModel) -> Result<(), IoFormatError> {
    let mut out = String::from("vqc v1\n");
    let _ = writeln!(out, "qubits {}", model.n_qubits());
    let _ = writeln!(out, "depth {}", model.depth());
    let _ = writeln!(
        out,
        "encoding {}",
        match model.encoding {
            Encoding::Angle => "angle",
            Encoding::Amplitude => "amplitude",
        }
    );
    let _ = writeln!(
        out,
        "entanglement {}",
        match model.entanglement {
            Entanglement::Linear => "linear",
            Entanglement::Ring => "ring",
        }
    );
    out.push_str("params\n");
    let mut first = true;
    for p in model.params() {
        if !first {
            out.push(' ');
        }
        let _ = write!(out, "{p}");
        first = false;
    }
    out.push('\n');
    fs::write(path, out).map_err(io_err(path))
}

pub fn load_vqc(path: &Path) -> Result<VqcModel, IoFormatError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |reason: &str| IoFormatError::BadModel {
        path: path.to_path_buf(),
        reason: String::from(reason),
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("vqc v1") {
        return Err(bad("expected header 'vqc v1'"));
    }
    let qubits: usize =
        parse_kv(lines.next(), "qubits", path)?.parse().map_err(|_| bad("bad qubit count"))?;
    let depth: usize =
        parse_kv(lines.next(), "depth", path)?.parse().map_err(|_| bad("bad depth"))?;
    let encoding = match parse_kv(lines.next(), "encoding", path)? {
        "angle" => Encoding::Angle,
        "amplitude" => Encoding::Amplitude,
        _ => return Err(bad("unknown encoding")),
    };
    let entanglement = match parse_kv(lines.next(), "entanglement", path)? {
        "linear" => Entanglement::Linear,
        "ring" => Entanglement::Ring,
        _ => return Err(bad("unknown entanglement")),
    };
    if lines.next().map(str::trim) != Some("params") {
        return Err(bad("expected 'params'"));
    }
    let params: Vec<f64> = lines
        .next()
        .unwrap_or("")
        .split_whitespace()
        .map(|v| v.parse().map_err(|_| bad("bad parameter value")))
        .collect::<Result<_, _>>()?;
    VqcModel::with_params(qubits, depth, params, encoding, entanglement)
        .map_err(|e| IoFormatError::BadModel { path: path.to_path_buf(), reason: e.to_string() })
}

pub fn save_fusion(path: &Path, model: &HybridModel) -> Result<(), IoFormatError> {
    let k = model.n_classes();
    let width = k + model.vqc.n_qubits();
    let mut out = String::from("fusion v1\n");
    let _ = writeln!(out, "classes {k}");
    let _ = writeln!(out, "inputs {width}");
    out.push_str("W\n");
    for c in 0..k {
        let row = &model.fusion_weights()[c * width..(c + 1) * width];
        let mut first = true;
        for w in row {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{w}");
            first = false;
        }
        out.push('\n');
    }
    out.push_str("b\n");
    let mut first = true;
    for b in model.fusion_bias() {
        if !first {
            out.push(' ');
        }
        let _ = write!(out, "{b}");
        first = false;
    }
    out.push('\n');
    fs::write(path, out).map_err(io_err(path))
}

fn load_fusion_params(path: &Path) -> Result<(Vec<f64>, Vec<f64>), IoFormatError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |reason: &str| IoFormatError::BadModel {
        path: path.to_path_buf(),
        reason: String::from(reason),
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("fusion v1") {
        return Err(bad("expected header 'fusion v1'"));
    }
    let classes: usize =
        parse_kv(lines.next(), "classes", path)?.parse().map_err(|_| bad("bad class count"))?;
    let inputs: usize =
        parse_kv(lines.next(), "inputs", path)?.parse().map_err(|_| bad("bad input count"))?;
    if lines.next().map(str::trim) != Some("W") {
        return Err(bad("expected 'W'"));
    }
    let mut weights = Vec::with_capacity(classes * inputs);
    for _ in 0..classes {
        let row = lines.next().ok_or_else(|| bad("missing weight row"))?;
        let values: Vec<f64> = row
            .split_whitespace()
            .map(|v| v.parse().map_err(|_| bad("bad weight value")))
            .collect::<Result<_, _>>()?;
        if values.len() != inputs {
            return Err(bad("wrong weight row width"));
        }
        weights.extend(values);
    }
    if lines.next().map(str::trim) != Some("b") {
        return Err(bad("expected 'b'"));
    }
    let bias: Vec<f64> = lines
        .next()
        .unwrap_or("")
        .split_whitespace()
        .map(|v| v.parse().map_err(|_| bad("bad bias value")))
        .collect::<Result<_, _>>()?;
    if bias.len() != classes {
        return Err(bad("wrong bias width"));
    }
    Ok((weights, bias))
}

/// Manifest stored inside every saved model directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelManifest {
    pub model: String,
    pub seed: u64,
    pub config_digest: String,
    /// Original 1-based feature indices of the model's input columns.
    pub retained: Vec<usize>,
    /// Min-max normalization bounds fitted on the training split.
    pub norm_min: Vec<f64>,
    pub norm_max: Vec<f64>,
    pub n_classes: usize,
}

pub fn write_model_manifest(dir: &Path, manifest: &ModelManifest) -> Result<(), IoFormatError> {
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(&path, text).map_err(io_err(&path))
}

pub fn read_model_manifest(dir: &Path) -> Result<ModelManifest, IoFormatError> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Persist a hybrid model as its two branch files plus fusion parameters.
pub fn save_hybrid(dir: &Path, model: &HybridModel) -> Result<(), IoFormatError> {
    save_mlp(&dir.join("mlp.txt"), &model.mlp)?;
    save_vqc(&dir.join("vqc.txt"), &model.vqc)?;
    save_fusion(&dir.join("fusion.txt"), model)
}

pub fn load_hybrid(dir: &Path) -> Result<HybridModel, IoFormatError> {
    let mlp = load_mlp(&dir.join("mlp.txt"))?;
    let vqc = load_vqc(&dir.join("vqc.txt"))?;
    let fusion_path = dir.join("fusion.txt");
    let (weights, bias) = load_fusion_params(&fusion_path)?;
    HybridModel::with_fusion(vqc, mlp, weights, bias).map_err(|e| IoFormatError::BadModel {
        path: fusion_path,
        reason: e.to_string(),
    })
}
