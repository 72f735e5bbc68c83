//! CSV ingestion and preprocessing of discretely observed curves.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{smooth_onto_grid, BasisKind, FunctionalSeries, Grid};
use crate::error::{Error, Result};

/// Orientation of the CSV matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// One row per curve, one column per grid point.
    #[default]
    TimeByGrid,
    /// One row per grid point, one column per curve.
    GridByTime,
}

impl std::str::FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "time_by_grid" => Ok(Layout::TimeByGrid),
            "grid_by_time" => Ok(Layout::GridByTime),
            other => Err(format!("unknown layout `{other}` (expected time_by_grid or grid_by_time)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Preprocessing {
    pub log_return: bool,
    pub center: bool,
    pub scale: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub layout: Layout,
    pub lower: f64,
    pub upper: f64,
    pub preprocessing: Preprocessing,
    /// Least-squares smoothing onto `(kind, count)` basis functions.
    pub smoothing: Option<(BasisKind, usize)>,
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            layout: Layout::TimeByGrid,
            lower: 0.0,
            upper: 1.0,
            preprocessing: Preprocessing::default(),
            smoothing: None,
        }
    }
}

/// Numeric matrix from a CSV file with an optional single header row
/// (detected as a first row containing a non-numeric cell).
pub fn read_numeric_csv(path: &Path) -> Result<DMatrix<f64>> {
    if !path.exists() {
        return Err(Error::FileNotFound { path: path.display().to_string() });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(index + 1);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, usize>> = record
            .iter()
            .enumerate()
            .map(|(col, cell)| cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(col))
            .collect();
        if index == 0 && parsed.iter().any(|c| c.is_err()) {
            // header row; its width still fixes the expected field count
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow { line, expected, found: record.len() });
        }
        let mut row = Vec::with_capacity(expected);
        for cell in parsed {
            match cell {
                Ok(v) => row.push(v),
                Err(col) => {
                    return Err(Error::NonNumeric { line, column: col + 1, value: record[col].to_string() })
                }
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    if rows.is_empty() || ncols == 0 {
        return Err(Error::Data(format!("{}: no numeric rows", path.display())));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Read a CSV into curves, oriented time-by-grid, then apply in order:
/// log returns, centring, scaling, smoothing.
pub fn load_fts_csv(spec: &DatasetSpec) -> Result<FunctionalSeries> {
    if !(spec.lower < spec.upper) {
        return Err(Error::InvalidGrid(format!("bounds must satisfy a < b (got [{}, {}])", spec.lower, spec.upper)));
    }
    let raw = read_numeric_csv(&spec.path)?;
    let mut values = match spec.layout {
        Layout::TimeByGrid => raw,
        Layout::GridByTime => raw.transpose(),
    };

    if spec.preprocessing.log_return {
        values = log_returns(&values)?;
    }
    if spec.preprocessing.center {
        let (centred, _) = crate::linalg::center_columns(&values);
        values = centred;
    }
    if spec.preprocessing.scale {
        scale_columns(&mut values)?;
    }

    let g = values.ncols();
    let grid = Grid::uniform(spec.lower, spec.upper, g)?;
    match spec.smoothing {
        None => FunctionalSeries::new(values, grid),
        Some((kind, count)) => smooth_onto_grid(&values, grid.points(), kind, count, &grid),
    }
}

fn log_returns(values: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, g) = values.shape();
    if n < 2 {
        return Err(Error::Data("log returns need at least 2 rows".into()));
    }
    for j in 0..g {
        for i in 0..n {
            if !(values[(i, j)] > 0.0) {
                return Err(Error::Data(format!(
                    "log returns need positive values (row {}, column {} is {})",
                    i + 1,
                    j + 1,
                    values[(i, j)]
                )));
            }
        }
    }
    Ok(DMatrix::from_fn(n - 1, g, |i, j| values[(i + 1, j)].ln() - values[(i, j)].ln()))
}

fn scale_columns(values: &mut DMatrix<f64>) -> Result<()> {
    let n = values.nrows();
    if n < 2 {
        return Err(Error::Data("scaling needs at least 2 rows".into()));
    }
    for (j, mut col) in values.column_iter_mut().enumerate() {
        let mean = col.mean();
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if !(var > 0.0) {
            return Err(Error::ZeroVarianceColumn { column: j + 1 });
        }
        col.scale_mut(1.0 / var.sqrt());
    }
    Ok(())
}

/// Write a matrix as CSV with 12 significant digits and an optional header.
pub fn write_matrix_csv(path: &Path, values: &DMatrix<f64>, header: Option<&[String]>) -> Result<()> {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for row in values.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// 12 significant digits in scientific notation.
pub fn format_number(v: f64) -> String {
    format!("{v:.11e}")
}
