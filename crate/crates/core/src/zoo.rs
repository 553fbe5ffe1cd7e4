//! The reference model collection: loading, batch prediction and reports.
//!
//! The dataset is a CSV file with the header
//!
//! ```text
//! name,kind,layers,hidden,ffn,expert_ffn,tokens_T,size_B,act_B,mmlu,guessed
//! ```
//!
//! `kind` is `dense` or `moe`; `expert_ffn` and `act_B` are empty for dense
//! rows and required for MoE rows. `guessed` marks rows where some of the
//! configuration values are guesses rather than published numbers.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibration::pearson;
use crate::error::{LawError, Result};
use crate::law::{Architecture, DenseArch, MoeArch, RegressionWeights, TrainingSpec};
use crate::par::{self, Execution};

pub const HEADER: [&str; 11] = [
    "name", "kind", "layers", "hidden", "ffn", "expert_ffn", "tokens_T", "size_B", "act_B", "mmlu",
    "guessed",
];

/// The shipped dataset.
pub const BUILTIN_CSV: &str = include_str!("../../../data/table1.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dense,
    Moe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub name: String,
    pub kind: ModelKind,
    pub n_layers: u32,
    pub hidden_size: u32,
    pub ffn_size: u32,
    pub expert_ffn_size: Option<u32>,
    /// Trillions of tokens.
    pub tokens: f64,
    /// Billions of parameters.
    pub total_params: f64,
    pub active_params: Option<f64>,
    pub reported_mmlu: f64,
    pub guessed_config: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subset {
    All,
    /// Everything except first-generation Llama and Chinese-developed model
    /// families.
    EnglishExLlama1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZooRow {
    pub name: String,
    pub kind: ModelKind,
    pub guessed_config: bool,
    pub reported: f64,
    pub predicted: f64,
    pub raw_score: f64,
    /// `reported - predicted`; positive means the model beat the law.
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetStats {
    pub subset: Subset,
    pub count: usize,
    pub mae: f64,
    pub pearson_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZooReport {
    pub rows: Vec<ZooRow>,
    pub mae: f64,
    pub pearson_r: f64,
    pub english_ex_llama1: SubsetStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub predicted: f64,
    pub reported: f64,
    pub name: String,
    pub tags: Vec<String>,
}

impl Subset {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all" => Some(Subset::All),
            "english-ex-llama1" => Some(Subset::EnglishExLlama1),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Subset::All => "all",
            Subset::EnglishExLlama1 => "english-ex-llama1",
        }
    }

    pub fn contains(self, name: &str) -> bool {
        match self {
            Subset::All => true,
            Subset::EnglishExLlama1 => !is_llama1(name) && !is_chinese_family(name),
        }
    }
}

fn is_llama1(name: &str) -> bool {
    name.starts_with("Llama ")
}

fn is_chinese_family(name: &str) -> bool {
    const PREFIXES: [&str; 6] = ["Qwen", "Yi", "GLM", "Deepseek", "DeekSeek", "Skywork"];
    PREFIXES.iter().any(|p| name.starts_with(p))
}

impl ModelRecord {
    pub fn architecture(&self) -> Architecture {
        match self.kind {
            ModelKind::Dense => Architecture::Dense(DenseArch {
                n_layers: self.n_layers,
                hidden_size: self.hidden_size,
                ffn_size: self.ffn_size,
                param_count: self.total_params,
                gamma: 1.0,
            }),
            ModelKind::Moe => Architecture::Moe(MoeArch {
                n_layers: self.n_layers,
                hidden_size: self.hidden_size,
                ffn_size: self.ffn_size,
                expert_ffn_size: self.expert_ffn_size.unwrap_or(self.ffn_size),
                total_params: self.total_params,
                active_params: self.active_params.unwrap_or(self.total_params),
                gamma: 1.0,
            }),
        }
    }

    pub fn training(&self) -> TrainingSpec {
        TrainingSpec {
            tokens: self.tokens,
        }
    }

    pub fn tags(&self) -> Vec<String> {
        let mut tags = vec![Subset::All.as_str().to_string()];
        if Subset::EnglishExLlama1.contains(&self.name) {
            tags.push(Subset::EnglishExLlama1.as_str().to_string());
        }
        tags.push(
            match self.kind {
                ModelKind::Dense => "dense",
                ModelKind::Moe => "moe",
            }
            .to_string(),
        );
        if self.guessed_config {
            tags.push("guessed".to_string());
        }
        tags
    }
}

pub fn load_zoo(path: impl AsRef<Path>) -> Result<Vec<ModelRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| LawError::Io(format!("{}: {e}", path.display())))?;
    parse_zoo(file)
}

pub fn builtin_zoo() -> Vec<ModelRecord> {
    parse_zoo(BUILTIN_CSV.as_bytes()).expect("shipped dataset is valid")
}

pub fn parse_zoo<R: Read>(reader: R) -> Result<Vec<ModelRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| LawError::Schema(format!("unreadable header: {e}")))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(LawError::Schema("empty dataset: missing header".into()));
    }
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != HEADER {
        return Err(LawError::Schema(format!(
            "expected header `{}`, got `{}`",
            HEADER.join(","),
            got.join(",")
        )));
    }

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            LawError::Parse {
                line,
                field: "*".into(),
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        out.push(parse_row(&rec, line)?);
    }
    if out.is_empty() {
        return Err(LawError::Schema("dataset has a header but no rows".into()));
    }
    Ok(out)
}

struct Row<'a> {
    rec: &'a csv::StringRecord,
    line: u64,
}

impl Row<'_> {
    fn raw(&self, idx: usize) -> Option<&str> {
        let v = self.rec.get(idx).unwrap_or("").trim();
        (!v.is_empty()).then_some(v)
    }

    fn parse_err(&self, idx: usize, message: String) -> LawError {
        LawError::Parse {
            line: self.line,
            field: HEADER[idx].into(),
            message,
        }
    }

    fn required(&self, idx: usize) -> Result<&str> {
        self.raw(idx).ok_or_else(|| {
            LawError::Schema(format!(
                "line {}: missing required field `{}`",
                self.line, HEADER[idx]
            ))
        })
    }

    fn count(&self, v: &str, idx: usize) -> Result<u32> {
        match v.parse::<u32>() {
            Ok(n) if n >= 1 => Ok(n),
            Ok(_) => Err(self.parse_err(idx, "must be at least 1".into())),
            Err(e) => Err(self.parse_err(idx, format!("`{v}`: {e}"))),
        }
    }

    fn positive(&self, v: &str, idx: usize) -> Result<f64> {
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
            Ok(x) => Err(self.parse_err(idx, format!("must be positive, got {x}"))),
            Err(e) => Err(self.parse_err(idx, format!("`{v}`: {e}"))),
        }
    }
}

fn parse_row(rec: &csv::StringRecord, line: u64) -> Result<ModelRecord> {
    let row = Row { rec, line };
    let name = row.required(0)?.to_string();
    let kind = match row.required(1)? {
        "dense" => ModelKind::Dense,
        "moe" => ModelKind::Moe,
        other => return Err(row.parse_err(1, format!("expected `dense` or `moe`, got `{other}`"))),
    };
    let n_layers = row.count(row.required(2)?, 2)?;
    let hidden_size = row.count(row.required(3)?, 3)?;
    let ffn_size = row.count(row.required(4)?, 4)?;
    let expert_ffn_size = row.raw(5).map(|v| row.count(v, 5)).transpose()?;
    let tokens = row.positive(row.required(6)?, 6)?;
    let total_params = row.positive(row.required(7)?, 7)?;
    let active_params = row.raw(8).map(|v| row.positive(v, 8)).transpose()?;
    let reported_mmlu = match row.required(9)?.parse::<f64>() {
        Ok(x) if (0.0..=100.0).contains(&x) => x,
        Ok(x) => return Err(row.parse_err(9, format!("must lie in [0, 100], got {x}"))),
        Err(e) => return Err(row.parse_err(9, e.to_string())),
    };
    let guessed_config = match row.required(10)? {
        "true" => true,
        "false" => false,
        other => return Err(row.parse_err(10, format!("expected `true` or `false`, got `{other}`"))),
    };

    match kind {
        ModelKind::Moe => {
            let act = active_params
                .ok_or_else(|| row.parse_err(8, "required for moe rows".into()))?;
            if expert_ffn_size.is_none() {
                return Err(row.parse_err(5, "required for moe rows".into()));
            }
            if act > total_params {
                return Err(row.parse_err(8, format!("exceeds size_B ({total_params})")));
            }
        }
        ModelKind::Dense => {
            if active_params.is_some() {
                return Err(row.parse_err(8, "must be empty for dense rows".into()));
            }
            if expert_ffn_size.is_some() {
                return Err(row.parse_err(5, "must be empty for dense rows".into()));
            }
        }
    }

    Ok(ModelRecord {
        name,
        kind,
        n_layers,
        hidden_size,
        ffn_size,
        expert_ffn_size,
        tokens,
        total_params,
        active_params,
        reported_mmlu,
        guessed_config,
    })
}

pub fn evaluate_zoo(records: &[ModelRecord], weights: &RegressionWeights) -> Result<ZooReport> {
    evaluate_zoo_with(records, weights, Execution::default())
}

pub fn evaluate_zoo_with(
    records: &[ModelRecord],
    weights: &RegressionWeights,
    exec: Execution,
) -> Result<ZooReport> {
    let rows = par::map(exec, records, |rec| {
        let p = rec.architecture().predict(&rec.training(), weights)?;
        Ok(ZooRow {
            name: rec.name.clone(),
            kind: rec.kind,
            guessed_config: rec.guessed_config,
            reported: rec.reported_mmlu,
            predicted: p.adjusted_score,
            raw_score: p.raw_score,
            diff: rec.reported_mmlu - p.adjusted_score,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let all = stats(&rows, Subset::All);
    let english = stats(&rows, Subset::EnglishExLlama1);
    Ok(ZooReport {
        rows,
        mae: all.mae,
        pearson_r: all.pearson_r,
        english_ex_llama1: english,
    })
}

fn stats(rows: &[ZooRow], subset: Subset) -> SubsetStats {
    let picked: Vec<&ZooRow> = rows.iter().filter(|r| subset.contains(&r.name)).collect();
    let count = picked.len();
    let mae = if count == 0 {
        0.0
    } else {
        picked.iter().map(|r| r.diff.abs()).sum::<f64>() / count as f64
    };
    let predicted: Vec<f64> = picked.iter().map(|r| r.predicted).collect();
    let reported: Vec<f64> = picked.iter().map(|r| r.reported).collect();
    SubsetStats {
        subset,
        count,
        mae,
        pearson_r: pearson(&predicted, &reported),
    }
}

/// Scatter points for the given subset, ordered by name.
pub fn export_scatter(report: &ZooReport, subset: Subset) -> Result<Vec<ScatterPoint>> {
    if report.rows.is_empty() {
        return Err(LawError::InvalidInput("cannot export an empty report".into()));
    }
    let mut points: Vec<ScatterPoint> = report
        .rows
        .iter()
        .filter(|r| subset.contains(&r.name))
        .map(|r| {
            let mut tags = vec![Subset::All.as_str().to_string()];
            if Subset::EnglishExLlama1.contains(&r.name) {
                tags.push(Subset::EnglishExLlama1.as_str().to_string());
            }
            tags.push(
                match r.kind {
                    ModelKind::Dense => "dense",
                    ModelKind::Moe => "moe",
                }
                .to_string(),
            );
            if r.guessed_config {
                tags.push("guessed".to_string());
            }
            ScatterPoint {
                predicted: r.predicted,
                reported: r.reported,
                name: r.name.clone(),
                tags,
            }
        })
        .collect();
    points.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(points)
}

pub const REPORT_CSV_HEADER: [&str; 7] =
    ["name", "kind", "guessed", "reported", "predicted", "raw", "diff"];

pub const SCATTER_CSV_HEADER: [&str; 4] = ["predicted", "reported", "name", "tags"];

fn csv_err(e: csv::Error) -> LawError {
    LawError::Io(e.to_string())
}

fn kind_str(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Dense => "dense",
        ModelKind::Moe => "moe",
    }
}

/// One line per model in input order; numbers at full precision.
pub fn write_report_csv<W: Write>(report: &ZooReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_CSV_HEADER).map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            r.name.clone(),
            kind_str(r.kind).to_string(),
            r.guessed_config.to_string(),
            r.reported.to_string(),
            r.predicted.to_string(),
            r.raw_score.to_string(),
            r.diff.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Tags are `;`-separated.
pub fn write_scatter_csv<W: Write>(points: &[ScatterPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCATTER_CSV_HEADER).map_err(csv_err)?;
    for p in points {
        w.write_record([
            p.predicted.to_string(),
            p.reported.to_string(),
            p.name.clone(),
            p.tags.join(";"),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
