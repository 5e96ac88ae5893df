//! Data ingestion: CSV loading with deterministic one-hot encoding, the
//! heart-catheterization preprocessing recipe, and synthetic generators.

pub mod rhc;
pub mod synth;

pub use rhc::{locate_rhc_data, rhc_prepare, rhc_prepare_with_manifest, Manifest};
pub use synth::{generate_synthetic, preset, OracleSample, PropensityLink, SynthSpec, PRESET_NAMES};

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::Dataset;

/// Raw CSV contents: header plus string cells.
pub(crate) struct RawCsv {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub(crate) fn read_csv(path: &Path) -> Result<RawCsv> {
    if !path.exists() {
        return Err(Error::FileNotFound {
            path: path.display().to_string(),
        });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Io(e.to_string()))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Io(e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::ParseError {
            row: i,
            col: "<record>".into(),
            message: e.to_string(),
        })?;
        rows.push(record.iter().map(|s| s.trim().to_string()).collect());
    }
    if rows.is_empty() {
        return Err(Error::TooFewRows { need: 2, got: 0 });
    }
    Ok(RawCsv { headers, rows })
}

fn column_index(headers: &[String], name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn { name: name.into() })
}

/// Parse a treatment cell: must read exactly 0 or 1.
fn parse_treatment(cell: &str, row: usize) -> Result<u8> {
    match cell.parse::<f64>() {
        Ok(v) if v == 0.0 => Ok(0),
        Ok(v) if v == 1.0 => Ok(1),
        _ => Err(Error::NonBinaryTreatment {
            row,
            value: cell.to_string(),
        }),
    }
}

/// Load a dataset from CSV.
///
/// Numeric columns pass through; string-valued columns are one-hot encoded
/// with levels sorted lexicographically and the first level dropped, named
/// `column=level`. A column counts as numeric only when every cell parses.
pub fn load_csv(
    path: &Path,
    outcome_col: &str,
    treatment_col: &str,
    drop_cols: &[String],
) -> Result<Dataset> {
    let raw = read_csv(path)?;
    let n = raw.rows.len();
    let oi = column_index(&raw.headers, outcome_col)?;
    let ti = column_index(&raw.headers, treatment_col)?;

    let mut y = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for (i, row) in raw.rows.iter().enumerate() {
        y.push(row[oi].parse::<f64>().map_err(|_| Error::ParseError {
            row: i,
            col: outcome_col.into(),
            message: format!("cannot parse outcome value {:?}", row[oi]),
        })?);
        w.push(parse_treatment(&row[ti], i)?);
    }

    let mut names = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (j, header) in raw.headers.iter().enumerate() {
        if j == oi || j == ti || drop_cols.iter().any(|d| d == header) || header.is_empty() {
            continue;
        }
        let parsed: Option<Vec<f64>> = raw
            .rows
            .iter()
            .map(|r| r[j].parse::<f64>().ok())
            .collect();
        match parsed {
            Some(values) => {
                names.push(header.clone());
                cols.push(values);
            }
            None => {
                let mut levels: Vec<String> =
                    raw.rows.iter().map(|r| r[j].clone()).collect();
                levels.sort();
                levels.dedup();
                // first level is the reference
                for level in levels.iter().skip(1) {
                    names.push(format!("{header}={level}"));
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
    if cols.is_empty() {
        return Err(Error::InvalidInput(
            "no covariate columns left after encoding".into(),
        ));
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
