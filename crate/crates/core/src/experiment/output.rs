use std::fs;
use std::path::Path;

use serde::Serialize;

use super::ExperimentError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerateRow {
    pub state: usize,
    pub chains: usize,
    pub mean_load_loss_mw: f64,
    pub exceed_fraction: f64,
    pub mean_depth: f64,
}

/// The guarantee table of one solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuaranteeCsvRow {
    #[serde(rename = "F")]
    pub f: f64,
    pub kappa_f1: f64,
    pub pure_guarantee: f64,
    pub error_term: f64,
    pub guarantee: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateRow {
    pub state: usize,
    pub f: f64,
    pub risk: f64,
    pub bpi: f64,
    pub lines: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub strategy: String,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "BPI")]
    pub bpi: f64,
}

/// Per-state one-stage against two-stage outcome; `state` is `mean` on the
/// summary row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRow {
    pub state: String,
    pub one_stage_f: f64,
    pub one_stage_bpi: f64,
    pub two_stage_f: f64,
    pub two_stage_bpi: f64,
    pub two_stage_lines: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaRow {
    pub alpha: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "RiskW")]
    pub risk: f64,
    #[serde(rename = "BPI")]
    pub bpi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionRow {
    pub s_l1: usize,
    #[serde(rename = "F")]
    pub f: f64,
    pub kappa_f1: f64,
    pub pure_guarantee: f64,
    pub error_term: f64,
    pub guarantee: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadRow {
    pub load_ratio: f64,
    pub model: String,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "BPI")]
    pub bpi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceRow {
    pub kappa: f64,
    pub p: f64,
    #[serde(rename = "SCG")]
    pub scg: f64,
    #[serde(rename = "LS")]
    pub ls: f64,
    #[serde(rename = "RG")]
    pub rg: f64,
    #[serde(rename = "GPG")]
    pub gpg: f64,
    #[serde(rename = "GCG")]
    pub gcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceLifeRow {
    pub plan: String,
    pub line: u32,
    pub operating_fraction: f64,
    pub years: f64,
    pub residual: f64,
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| ExperimentError::io(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| ExperimentError::io(path, e))?;
    }
    w.flush().map_err(|e| ExperimentError::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::Numeric(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| ExperimentError::io(path, e))
}

pub(crate) fn join_lines(lines: &[u32]) -> String {
    lines.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
}
