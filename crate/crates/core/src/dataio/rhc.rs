//! Preprocessing recipe for the public right-heart-catheterization study file.
//!
//! The column recipe ships as a versioned JSON manifest so the construction is
//! reproducible byte for byte; see `resources/rhc_manifest.json`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::Dataset;

use super::read_csv;

const DEFAULT_MANIFEST: &str = include_str!("../../resources/rhc_manifest.json");

#[derive(Debug, Clone, Deserialize)]
pub struct BinaryColumn {
    pub column: String,
    pub positive_level: String,
    pub negative_level: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateSpec {
    Numeric { source_column: String },
    Categorical {
        source_column: String,
        /// All levels in order; the first is the dropped reference.
        levels: Vec<String>,
    },
}

#[derive(Debug, Clone, Deserialize)]
pub struct Manifest {
    pub version: u32,
    #[serde(default)]
    pub description: String,
    pub treatment: BinaryColumn,
    pub outcome: BinaryColumn,
    pub covariates: Vec<CovariateSpec>,
}

impl Manifest {
    pub fn parse(json: &str) -> Result<Manifest> {
        serde_json::from_str(json).map_err(|e| Error::SchemaMismatch {
            message: format!("manifest does not parse: {e}"),
        })
    }

    pub fn default_rhc() -> Manifest {
        Manifest::parse(DEFAULT_MANIFEST).expect("embedded manifest parses")
    }

    /// Number of encoded covariate columns this manifest produces.
    pub fn encoded_width(&self) -> usize {
        self.covariates
            .iter()
            .map(|c| match c {
                CovariateSpec::Numeric { .. } => 1,
                CovariateSpec::Categorical { levels, .. } => levels.len().saturating_sub(1),
            })
            .sum()
    }
}

fn parse_binary(cell: &str, spec: &BinaryColumn, row: usize) -> Result<f64> {
    if cell == spec.positive_level {
        return Ok(1.0);
    }
    if cell == spec.negative_level {
        return Ok(0.0);
    }
    match cell.parse::<f64>() {
        Ok(v) if v == 0.0 || v == 1.0 => Ok(v),
        _ => Err(Error::SchemaMismatch {
            message: format!(
                "column {} row {row}: unexpected value {cell:?} (expected {:?} or {:?})",
                spec.column, spec.positive_level, spec.negative_level
            ),
        }),
    }
}

/// Build a dataset from the RHC study file using the shipped manifest.
pub fn rhc_prepare(csv_path: &Path) -> Result<Dataset> {
    prepare_with(csv_path, &Manifest::default_rhc())
}

/// Same, with a caller-supplied manifest file.
pub fn rhc_prepare_with_manifest(csv_path: &Path, manifest_path: &Path) -> Result<Dataset> {
    let json = std::fs::read_to_string(manifest_path).map_err(|e| Error::Io(e.to_string()))?;
    prepare_with(csv_path, &Manifest::parse(&json)?)
}

pub(crate) fn prepare_with(csv_path: &Path, manifest: &Manifest) -> Result<Dataset> {
    let raw = read_csv(csv_path)?;
    let n = raw.rows.len();

    let find = |name: &str| -> Result<usize> {
        raw.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::SchemaMismatch {
                message: format!("column {name:?} not found in data file"),
            })
    };

    let ti = find(&manifest.treatment.column)?;
    let oi = find(&manifest.outcome.column)?;
    let mut w = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for (i, row) in raw.rows.iter().enumerate() {
        w.push(parse_binary(&row[ti], &manifest.treatment, i)? as u8);
        y.push(parse_binary(&row[oi], &manifest.outcome, i)?);
    }

    let mut names = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for spec in &manifest.covariates {
        match spec {
            CovariateSpec::Numeric { source_column } => {
                let j = find(source_column)?;
                let mut col = Vec::with_capacity(n);
                for (i, row) in raw.rows.iter().enumerate() {
                    col.push(row[j].parse::<f64>().map_err(|_| Error::ParseError {
                        row: i,
                        col: source_column.clone(),
                        message: format!("cannot parse {:?} as a number", row[j]),
                    })?);
                }
                names.push(source_column.clone());
                cols.push(col);
            }
            CovariateSpec::Categorical {
                source_column,
                levels,
            } => {
                let j = find(source_column)?;
                for (i, row) in raw.rows.iter().enumerate() {
                    if !levels.iter().any(|l| l == &row[j]) {
                        return Err(Error::SchemaMismatch {
                            message: format!(
                                "column {source_column} row {i}: level {:?} not in manifest",
                                row[j]
                            ),
                        });
                    }
                }
                for level in levels.iter().skip(1) {
                    names.push(format!("{source_column}={level}"));
                    cols.push(
                        raw.rows
                            .iter()
                            .map(|r| f64::from(&r[j] == level))
                            .collect(),
                    );
                }
            }
        }
    }

    let d = cols.len();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        for col in &cols {
            data.push(col[i]);
        }
    }
    Dataset::new(Matrix::from_vec(n, d, data), w, y, names)
}

/// Locate the RHC study file: `ATE_RHC_DATA` env var, then `./data/rhc.csv`
/// relative to the working directory or the workspace root.
pub fn locate_rhc_data() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("ATE_RHC_DATA") {
        let p = PathBuf::from(p);
        if p.exists() {
            return Some(p);
        }
    }
    for candidate in ["data/rhc.csv", "../data/rhc.csv", "../../data/rhc.csv"] {
        let p = PathBuf::from(candidate);
        if p.exists() {
            return Some(p);
        }
    }
    None
}
