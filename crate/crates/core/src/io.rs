//! Reading and writing spaces and correspondences.
//!
//! Spaces come in two formats:
//!
//! * CSV: `n` rows of `n` comma-separated decimals, optionally preceded by a
//!   header row of labels.
//! * JSON: `{"labels": [..], "dist": [[..], ..]}` with `labels` optional.
//!
//! Numbers are parsed with a dot decimal separator regardless of locale and
//! written in the shortest form that reads back to the same `f64`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correspondence::Correspondence;
use crate::geodesic::InterpolatedSpace;
use crate::metric::{FiniteMetricSpace, MetricError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceFormat {
    Json,
    Csv,
}

impl SpaceFormat {
    /// JSON if the first non-blank character opens an object, CSV otherwise.
    pub fn sniff(text: &str) -> SpaceFormat {
        match text.trim_start().chars().next() {
            Some('{') => SpaceFormat::Json,
            _ => SpaceFormat::Csv,
        }
    }
}

/// On-disk JSON shape of a space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub dist: Vec<Vec<f64>>,
}

impl From<&FiniteMetricSpace> for SpaceFile {
    fn from(s: &FiniteMetricSpace) -> Self {
        SpaceFile { labels: s.labels().map(<[String]>::to_vec), dist: s.to_matrix() }
    }
}

/// Where an interpolant came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(rename = "R")]
    pub correspondence: Correspondence,
    pub t: f64,
    pub left: String,
    pub right: String,
}

/// An interpolant in the space JSON format plus a `provenance` block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterpolantFile {
    #[serde(flatten)]
    pub space: SpaceFile,
    pub provenance: Provenance,
}

impl InterpolantFile {
    pub fn new(g: &InterpolatedSpace<'_>, left: &str, right: &str) -> Self {
        InterpolantFile {
            space: SpaceFile::from(&g.realized),
            provenance: Provenance {
                correspondence: g.correspondence.clone(),
                t: g.t,
                left: left.to_string(),
                right: right.to_string(),
            },
        }
    }
}

/// Parse a matrix without validating it.
pub fn parse_matrix(text: &str, format: SpaceFormat) -> Result<SpaceFile, IoError> {
    match format {
        SpaceFormat::Json => serde_json::from_str(text).map_err(|e| IoError::Parse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        }),
        SpaceFormat::Csv => parse_csv(text),
    }
}

fn parse_csv(text: &str) -> Result<SpaceFile, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut labels = None;
    let mut dist = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            IoError::Parse { line, column: 0, msg: e.to_string() }
        })?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<Result<f64, _>> = rec.iter().map(str::parse::<f64>).collect();
        if dist.is_empty() && labels.is_none() && parsed.iter().any(Result::is_err) {
            labels = Some(rec.iter().map(str::to_string).collect());
            continue;
        }
        let mut row = Vec::with_capacity(parsed.len());
        for (col, v) in parsed.into_iter().enumerate() {
            row.push(v.map_err(|_| IoError::Parse {
                line,
                column: col + 1,
                msg: format!("not a number: {:?}", &rec[col]),
            })?);
        }
        dist.push(row);
    }
    if dist.is_empty() {
        return Err(IoError::Parse { line: 1, column: 1, msg: "no distance rows".into() });
    }
    Ok(SpaceFile { labels, dist })
}

/// Parse and validate a space.
pub fn parse_space(text: &str, format: SpaceFormat, tol: f64) -> Result<FiniteMetricSpace, IoError> {
    let file = parse_matrix(text, format)?;
    Ok(FiniteMetricSpace::with_labels(&file.dist, file.labels, tol)?)
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

/// Read a space file, picking the format from its contents.
pub fn read_space(path: &Path, tol: f64) -> Result<FiniteMetricSpace, IoError> {
    let text = read_text(path)?;
    parse_space(&text, SpaceFormat::sniff(&text), tol)
}

pub fn space_to_json(space: &FiniteMetricSpace) -> String {
    serde_json::to_string_pretty(&SpaceFile::from(space)).expect("finite numbers serialize")
}

pub fn space_to_csv(space: &FiniteMetricSpace) -> String {
    let mut out = String::new();
    if let Some(labels) = space.labels() {
        out.push_str(&labels.join(","));
        out.push('\n');
    }
    for row in space.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_space(space: &FiniteMetricSpace, format: SpaceFormat) -> String {
    match format {
        SpaceFormat::Json => space_to_json(space),
        SpaceFormat::Csv => space_to_csv(space),
    }
}
