//! TSV/JSON matrix emitters and SVG charts.

mod svg;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::AttentionMatrix;
use crate::measures::{BiasMatrix, SimilarityMatrix, UnderstandingMatrix};

pub use svg::{
    render_heatmap, render_line_chart, render_ranked_curves, ColorScale, HeatCell, HeatmapRender,
    LineChart, Ramp, Series,
};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid JSON matrix: {0}")]
    Json(String),
    #[error("matrix is empty")]
    Empty,
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Tsv => "tsv",
            Format::Json => "json",
        }
    }
}

/// A row/column labelled matrix with optional cells, rows and columns in
/// lexicographic label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// Row-major cells, `None` where data is missing.
    pub values: Vec<Vec<Option<f64>>>,
}

fn sorted_order(labels: &[String]) -> Result<Vec<usize>, ReportError> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
    if let Some(w) = order.windows(2).find(|w| labels[w[0]] == labels[w[1]]) {
        return Err(ReportError::DuplicateLabel(labels[w[0]].clone()));
    }
    Ok(order)
}

impl LabeledMatrix {
    /// Reorders rows and columns into canonical order.
    pub fn new(
        rows: Vec<String>,
        cols: Vec<String>,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Self, ReportError> {
        if rows.is_empty() || cols.is_empty() {
            return Err(ReportError::Empty);
        }
        assert_eq!(values.len(), rows.len());
        assert!(values.iter().all(|r| r.len() == cols.len()));
        let ro = sorted_order(&rows)?;
        let co = sorted_order(&cols)?;
        Ok(LabeledMatrix {
            rows: ro.iter().map(|&i| rows[i].clone()).collect(),
            cols: co.iter().map(|&j| cols[j].clone()).collect(),
            values: ro
                .iter()
                .map(|&i| co.iter().map(|&j| values[i][j]).collect())
                .collect(),
        })
    }

    fn from_fn(rows: &[String], cols: &[String], f: impl Fn(usize, usize) -> Option<f64>) -> Self {
        let values = (0..rows.len())
            .map(|i| (0..cols.len()).map(|j| f(i, j)).collect())
            .collect();
        Self::new(rows.to_vec(), cols.to_vec(), values)
            .expect("measure matrices have unique labels")
    }

    pub fn from_similarity(m: &SimilarityMatrix) -> Self {
        Self::from_fn(m.cuisines(), m.cuisines(), |i, j| m.get(i, j))
    }

    pub fn from_understanding(m: &UnderstandingMatrix) -> Self {
        Self::from_fn(m.languages(), m.cuisines(), |i, j| m.get(i, j))
    }

    /// Covered bias values only; uncovered cells are written as missing.
    pub fn from_bias(m: &BiasMatrix) -> Self {
        Self::from_fn(m.languages(), m.cuisines(), |i, j| m.covered_value(i, j))
    }

    pub fn from_attention(m: &AttentionMatrix) -> Self {
        Self::from_fn(m.languages(), m.cuisines(), |i, j| {
            (!m.is_missing(i, j)).then(|| m.get(i, j))
        })
    }

    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let i = self.rows.iter().position(|r| r == row)?;
        let j = self.cols.iter().position(|c| c == col)?;
        self.values[i][j]
    }

    /// Header `label` then column labels; missing cells are empty fields.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("label");
        for c in &self.cols {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for (r, row) in self.rows.iter().zip(&self.values) {
            out.push_str(r);
            for v in row {
                out.push('\t');
                if let Some(v) = v {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, ReportError> {
        let err = |line: usize, message: String| ReportError::Parse { line, message };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| err(1, "missing header".into()))?;
        let mut head = header.split('\t');
        if head.next() != Some("label") {
            return Err(err(1, "header must start with `label`".into()));
        }
        let cols: Vec<String> = head.map(str::to_owned).collect();
        let mut rows = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            let mut fields = line.split('\t');
            rows.push(fields.next().unwrap_or_default().to_owned());
            let row: Vec<Option<f64>> = fields
                .map(|f| {
                    if f.is_empty() {
                        Ok(None)
                    } else {
                        f.parse::<f64>()
                            .map(Some)
                            .map_err(|e| err(i + 1, format!("{f:?}: {e}")))
                    }
                })
                .collect::<Result<_, _>>()?;
            if row.len() != cols.len() {
                return Err(err(
                    i + 1,
                    format!("expected {} values, got {}", cols.len(), row.len()),
                ));
            }
            values.push(row);
        }
        Self::new(rows, cols, values)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let m: LabeledMatrix =
            serde_json::from_str(text).map_err(|e| ReportError::Json(e.to_string()))?;
        if m.values.len() != m.rows.len() || m.values.iter().any(|r| r.len() != m.cols.len()) {
            return Err(ReportError::Json("dimensions do not match labels".into()));
        }
        Self::new(m.rows, m.cols, m.values)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Tsv => self.to_tsv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<(), ReportError> {
    let io = |source| ReportError::Io {
        path: path.to_owned(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}

pub fn emit_matrix(matrix: &LabeledMatrix, format: Format, path: &Path) -> Result<(), ReportError> {
    write_file(path, &matrix.render(format))
}
