//! Deterministic loading of prediction runs, gold labels, and the
//! evaluation manifest.
//!
//! Run and gold files are JSON lines (one `{"id": ..., "output": ...}`
//! object per line, UTF-8, LF or CRLF). A CSV fallback with an `id,output`
//! header is accepted for classification and regression. The manifest is a
//! single strict JSON document: unknown fields are rejected so typos fail
//! loudly instead of being ignored.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use thiserror::Error;

use crate::model::{
    AlignedRunSet, MetricKind, Output, PredictionRecord, Run, ScorerKind, TaskKind,
    ValidationError,
};

/// Scorer names from the extension registry that are recognized but ship no
/// implementation.
pub const EXTENSION_SLOTS: [&str; 8] =
    ["bleu", "rouge", "bertscore", "uas", "las", "ndcg", "mrr", "map"];

/// Parsed, schema-validated evaluation manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationManifest {
    pub task: String,
    pub task_kind: TaskKind,
    pub metric: MetricKind,
    pub scorer: ScorerKind,
    pub gold_path: PathBuf,
    pub runs: Vec<ManifestRun>,
    pub train_size: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRun {
    pub seed: i64,
    pub path: PathBuf,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("manifest field {field:?}: {message}")]
    Schema { field: String, message: String },
    #[error("seed {seed} is listed more than once in the manifest")]
    DuplicateSeed { seed: i64 },
    #[error("{path}:{line}: duplicate example id {id:?}")]
    DuplicateId { path: PathBuf, line: usize, id: String },
    #[error("{path}:{line}: expected {expected} output, found {found}")]
    VariantMismatch { path: PathBuf, line: usize, expected: String, found: String },
    #[error("{path}: file contains no records")]
    EmptyFile { path: PathBuf },
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Io { .. } => "IoError",
            IngestError::Parse { .. } => "ParseError",
            IngestError::Schema { .. } => "SchemaError",
            IngestError::DuplicateSeed { .. } => "DuplicateSeed",
            IngestError::DuplicateId { .. } => "DuplicateId",
            IngestError::VariantMismatch { .. } => "VariantMismatch",
            IngestError::EmptyFile { .. } => "EmptyFile",
            IngestError::Validation(e) => e.code(),
        }
    }
}

fn read_file(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_owned(), source })
}

fn schema_err(field: &str, message: impl Into<String>) -> IngestError {
    IngestError::Schema { field: field.to_owned(), message: message.into() }
}

/// Loads and schema-validates a manifest file.
pub fn load_manifest(path: &Path) -> Result<EvaluationManifest, IngestError> {
    let text = read_file(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| IngestError::Parse {
        path: path.to_owned(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    manifest_from_value(&value)
}

fn manifest_from_value(value: &Value) -> Result<EvaluationManifest, IngestError> {
    let object = value
        .as_object()
        .ok_or_else(|| schema_err("<root>", "manifest must be a JSON object"))?;
    const KNOWN: [&str; 7] =
        ["task", "task_kind", "metric", "scorer", "gold_path", "runs", "train_size"];
    for key in object.keys() {
        if !KNOWN.contains(&key.as_str()) {
            return Err(schema_err(key, "unknown field"));
        }
    }

    let string_field = |field: &str| -> Result<&str, IngestError> {
        object
            .get(field)
            .ok_or_else(|| schema_err(field, "missing required field"))?
            .as_str()
            .ok_or_else(|| schema_err(field, "must be a string"))
    };

    let task = string_field("task")?;
    if task.is_empty() {
        return Err(schema_err("task", "must be non-empty"));
    }
    let task_kind: TaskKind =
        string_field("task_kind")?.parse().map_err(|e: String| schema_err("task_kind", e))?;
    let metric: MetricKind =
        string_field("metric")?.parse().map_err(|e: String| schema_err("metric", e))?;
    let scorer = parse_scorer(object.get("scorer").ok_or_else(|| schema_err("scorer", "missing required field"))?)?;
    let gold_path = string_field("gold_path")?;
    if gold_path.is_empty() {
        return Err(schema_err("gold_path", "must be non-empty"));
    }

    let runs_value = object
        .get("runs")
        .ok_or_else(|| schema_err("runs", "missing required field"))?
        .as_array()
        .ok_or_else(|| schema_err("runs", "must be an array"))?;
    if runs_value.is_empty() {
        return Err(schema_err("runs", "must list at least one run"));
    }
    let mut seeds = std::collections::BTreeSet::new();
    let mut runs = Vec::with_capacity(runs_value.len());
    for entry in runs_value {
        let run = entry
            .as_object()
            .ok_or_else(|| schema_err("runs", "each run must be an object"))?;
        for key in run.keys() {
            if key != "seed" && key != "path" {
                return Err(schema_err(&format!("runs.{key}"), "unknown field"));
            }
        }
        let seed = run
            .get("seed")
            .and_then(Value::as_i64)
            .ok_or_else(|| schema_err("runs.seed", "must be an integer"))?;
        let run_path = run
            .get("path")
            .and_then(Value::as_str)
            .ok_or_else(|| schema_err("runs.path", "must be a string"))?;
        if run_path.is_empty() {
            return Err(schema_err("runs.path", "must be non-empty"));
        }
        if !seeds.insert(seed) {
            return Err(IngestError::DuplicateSeed { seed });
        }
        runs.push(ManifestRun { seed, path: PathBuf::from(run_path) });
    }

    let train_size = match object.get("train_size") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let size = v
                .as_u64()
                .filter(|&n| n > 0)
                .ok_or_else(|| schema_err("train_size", "must be a positive integer"))?;
            Some(size)
        }
    };

    Ok(EvaluationManifest {
        task: task.to_owned(),
        task_kind,
        metric,
        scorer,
        gold_path: PathBuf::from(gold_path),
        runs,
        train_size,
    })
}

/// Accepts `"indicator"`, `"token_mean"`, or `{"metric_based": "<metric>"}`
/// (also the shorthand string `"metric:<metric>"`).
fn parse_scorer(value: &Value) -> Result<ScorerKind, IngestError> {
    let unimplemented_extension = |name: &str| {
        schema_err("scorer", format!("{name:?} is a recognized but unimplemented extension"))
    };
    let metric_scorer = |name: &str| -> Result<ScorerKind, IngestError> {
        if EXTENSION_SLOTS.contains(&name) {
            return Err(unimplemented_extension(name));
        }
        let kind: MetricKind = name.parse().map_err(|e: String| schema_err("scorer", e))?;
        crate::stability::AgreementScorer::metric(kind)
            .map(|s| s.kind())
            .map_err(|_| {
                schema_err("scorer", format!("metric {name:?} cannot score a single example pair"))
            })
    };
    match value {
        Value::String(s) => match s.as_str() {
            "indicator" => Ok(ScorerKind::Indicator),
            "token_mean" => Ok(ScorerKind::TokenMean),
            name if EXTENSION_SLOTS.contains(&name) => Err(unimplemented_extension(name)),
            name => match name.strip_prefix("metric:") {
                Some(metric) => metric_scorer(metric),
                None => Err(schema_err("scorer", format!("unknown scorer {name:?}"))),
            },
        },
        Value::Object(map) if map.len() == 1 => {
            let (key, inner) = map.iter().next().expect("len checked");
            if key != "metric_based" {
                return Err(schema_err("scorer", format!("unknown scorer variant {key:?}")));
            }
            let name = inner
                .as_str()
                .ok_or_else(|| schema_err("scorer", "metric_based must name a metric"))?;
            metric_scorer(name)
        }
        _ => Err(schema_err("scorer", "must be a scorer name or {\"metric_based\": ...}")),
    }
}

/// A parsed `(id, output)` pair plus its source line for error reporting.
struct RawRecord {
    line: usize,
    id: String,
    output: Output,
}

/// One JSONL record as written on disk; anything but the two known fields
/// is rejected.
#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    id: String,
    output: RawOutputValue,
}

/// The legal output payload shapes, deserialized in a single pass without
/// buffering into a generic JSON tree (these files run to 10^5+ lines).
enum RawOutputValue {
    Text(String),
    Int(i64),
    Float(f64),
    Tokens(Vec<String>),
}

impl RawOutputValue {
    fn shape(&self) -> &'static str {
        match self {
            RawOutputValue::Text(_) => "a string",
            RawOutputValue::Int(_) => "an integer",
            RawOutputValue::Float(_) => "a non-integer number",
            RawOutputValue::Tokens(_) => "an array",
        }
    }
}

impl<'de> serde::Deserialize<'de> for RawOutputValue {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        struct OutputVisitor;

        impl<'de> serde::de::Visitor<'de> for OutputVisitor {
            type Value = RawOutputValue;

            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("a string, a number, or an array of strings")
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Self::Value, E> {
                Ok(RawOutputValue::Text(v.to_owned()))
            }

            fn visit_string<E: serde::de::Error>(self, v: String) -> Result<Self::Value, E> {
                Ok(RawOutputValue::Text(v))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Ok(RawOutputValue::Int(v))
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Self::Value, E> {
                match i64::try_from(v) {
                    Ok(int) => Ok(RawOutputValue::Int(int)),
                    Err(_) => Ok(RawOutputValue::Float(v as f64)),
                }
            }

            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Ok(RawOutputValue::Float(v))
            }

            fn visit_seq<A>(self, mut seq: A) -> Result<Self::Value, A::Error>
            where
                A: serde::de::SeqAccess<'de>,
            {
                let mut tokens = Vec::with_capacity(seq.size_hint().unwrap_or(0));
                while let Some(token) = seq.next_element::<String>()? {
                    tokens.push(token);
                }
                Ok(RawOutputValue::Tokens(tokens))
            }
        }

        deserializer.deserialize_any(OutputVisitor)
    }
}

fn convert_output(
    value: RawOutputValue,
    kind: TaskKind,
    path: &Path,
    line: usize,
) -> Result<Output, IngestError> {
    let mismatch = |found: &RawOutputValue| IngestError::VariantMismatch {
        path: path.to_owned(),
        line,
        expected: expected_shape(kind).to_owned(),
        found: found.shape().to_owned(),
    };
    match kind {
        TaskKind::Classification => match value {
            RawOutputValue::Text(s) => Ok(Output::label(s)),
            RawOutputValue::Int(i) => Ok(Output::label(i.to_string())),
            other => Err(mismatch(&other)),
        },
        TaskKind::Regression => match value {
            RawOutputValue::Int(i) => Ok(Output::Scalar(i as f64)),
            RawOutputValue::Float(v) => Output::scalar(v)
                .map_err(|_| parse_err(path, line, &format!("non-finite scalar {v}"))),
            other => Err(mismatch(&other)),
        },
        TaskKind::SequenceLabeling => match value {
            RawOutputValue::Tokens(tokens) => Output::tokens(tokens)
                .map_err(|_| parse_err(path, line, "empty token sequence")),
            other => Err(mismatch(&other)),
        },
        TaskKind::TextGeneration | TaskKind::Qa => match value {
            RawOutputValue::Text(s) => Ok(Output::text(&s)),
            other => Err(mismatch(&other)),
        },
    }
}

fn expected_shape(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::Classification => "a string or integer label",
        TaskKind::Regression => "a finite number",
        TaskKind::SequenceLabeling => "an array of string tokens",
        TaskKind::TextGeneration | TaskKind::Qa => "a text string",
    }
}

fn parse_err(path: &Path, line: usize, message: &str) -> IngestError {
    IngestError::Parse { path: path.to_owned(), line, column: 1, message: message.to_owned() }
}

fn parse_jsonl(path: &Path, text: &str, kind: TaskKind) -> Result<Vec<RawRecord>, IngestError> {
    let mut records = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw_line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            continue;
        }
        let parsed: RawLine = serde_json::from_str(trimmed).map_err(|e| IngestError::Parse {
            path: path.to_owned(),
            line,
            column: e.column(),
            message: e.to_string(),
        })?;
        if parsed.id.is_empty() {
            return Err(parse_err(path, line, "empty example id"));
        }
        let output = convert_output(parsed.output, kind, path, line)?;
        records.push(RawRecord { line, id: parsed.id, output });
    }
    Ok(records)
}

fn parse_csv(path: &Path, text: &str, kind: TaskKind) -> Result<Vec<RawRecord>, IngestError> {
    if !matches!(kind, TaskKind::Classification | TaskKind::Regression) {
        return Err(parse_err(
            path,
            1,
            &format!("the CSV fallback supports classification and regression only, not {kind}"),
        ));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, 1, &e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "id" || &headers[1] != "output" {
        return Err(parse_err(path, 1, "CSV header must be exactly \"id,output\""));
    }
    let mut records = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let line = idx + 2; // header occupies line 1
        let row = row.map_err(|e| parse_err(path, line, &e.to_string()))?;
        if row.len() != 2 {
            return Err(parse_err(path, line, &format!("expected 2 fields, found {}", row.len())));
        }
        let id = row[0].to_owned();
        if id.is_empty() {
            return Err(parse_err(path, line, "empty example id"));
        }
        let output = match kind {
            TaskKind::Classification => Output::label(row[1].to_owned()),
            TaskKind::Regression => {
                let value: f64 = row[1]
                    .parse()
                    .map_err(|_| parse_err(path, line, &format!("invalid scalar {:?}", &row[1])))?;
                Output::scalar(value)
                    .map_err(|_| parse_err(path, line, &format!("non-finite scalar {:?}", &row[1])))?
            }
            _ => unreachable!("checked above"),
        };
        records.push(RawRecord { line, id, output });
    }
    Ok(records)
}

fn load_records(path: &Path, kind: TaskKind) -> Result<Vec<RawRecord>, IngestError> {
    let text = read_file(path)?;
    let records = if path.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("csv")) {
        parse_csv(path, &text, kind)?
    } else {
        parse_jsonl(path, &text, kind)?
    };
    if records.is_empty() {
        return Err(IngestError::EmptyFile { path: path.to_owned() });
    }
    let mut seen = std::collections::BTreeSet::new();
    for record in &records {
        if !seen.insert(record.id.as_str()) {
            return Err(IngestError::DuplicateId {
                path: path.to_owned(),
                line: record.line,
                id: record.id.clone(),
            });
        }
    }
    Ok(records)
}

/// Loads one prediction run. Input order is preserved in the returned run;
/// downstream alignment is by id only.
pub fn load_run(
    path: &Path,
    task_kind: TaskKind,
    seed: i64,
    task: &str,
) -> Result<Run, IngestError> {
    let records = load_records(path, task_kind)?
        .into_iter()
        .map(|r| PredictionRecord { example_id: r.id, output: r.output })
        .collect();
    Ok(Run::new(seed, task, records)?)
}

/// Loads the gold label map.
pub fn load_gold(path: &Path, task_kind: TaskKind) -> Result<BTreeMap<String, Output>, IngestError> {
    Ok(load_records(path, task_kind)?
        .into_iter()
        .map(|r| (r.id, r.output))
        .collect())
}

/// Loads every file a manifest references and assembles the validated run
/// set. Relative paths are resolved against `base_dir` (usually the
/// manifest's directory).
pub fn assemble(
    manifest: &EvaluationManifest,
    base_dir: &Path,
) -> Result<AlignedRunSet, IngestError> {
    let resolve = |p: &Path| -> PathBuf {
        if p.is_absolute() {
            p.to_owned()
        } else {
            base_dir.join(p)
        }
    };
    let gold = load_gold(&resolve(&manifest.gold_path), manifest.task_kind)?;
    let mut runs = Vec::with_capacity(manifest.runs.len());
    for entry in &manifest.runs {
        runs.push(load_run(&resolve(&entry.path), manifest.task_kind, entry.seed, &manifest.task)?);
    }
    Ok(AlignedRunSet::new(manifest.task_kind, runs, gold, manifest.train_size)?)
}

/// Convenience wrapper: manifest load + assembly, resolving paths against
/// the manifest's parent directory.
pub fn assemble_from_manifest_path(path: &Path) -> Result<(EvaluationManifest, AlignedRunSet), IngestError> {
    let manifest = load_manifest(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let set = assemble(&manifest, base)?;
    Ok((manifest, set))
}
