//! Dimension normalization of variable-length embeddings by linear interpolation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embeddings::{read_rows, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Embeddings whose rows may differ in length.
#[derive(Clone, Debug, PartialEq)]
pub struct RaggedEmbedding {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl RaggedEmbedding {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::shape("RaggedEmbedding", format!("{} ids, {} rows", ids.len(), rows.len())));
        }
        Ok(RaggedEmbedding { ids, rows })
    }

    pub fn max_len(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }
}

pub fn load_ragged(path: impl AsRef<Path>) -> Result<RaggedEmbedding> {
    let (ids, rows, _) = read_rows(path.as_ref())?;
    RaggedEmbedding::new(ids, rows)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    /// Resample every row to the longest row length.
    #[default]
    Interpolate,
    /// Drop each row's trailing value and resample to `max_len - 1`;
    /// single-value rows are forward-filled.
    DropTrailing,
}

impl std::str::FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interpolate" => Ok(NormalizeMode::Interpolate),
            "drop_trailing" => Ok(NormalizeMode::DropTrailing),
            other => Err(Error::invalid(format!("unknown normalization mode {other:?}"))),
        }
    }
}

/// Linear resampling of `row` onto `width` evenly spaced positions spanning its index range.
///
/// First and last values are kept exactly; a single value is repeated.
pub fn resample(row: &[f64], width: usize) -> Vec<f64> {
    let m = row.len();
    if m == width {
        return row.to_vec();
    }
    if m == 1 || width == 1 {
        return vec![row[0]; width];
    }
    (0..width)
        .map(|t| {
            let pos = (t * (m - 1)) as f64 / (width - 1) as f64;
            let lo = pos.floor() as usize;
            if lo >= m - 1 {
                return row[m - 1];
            }
            let frac = pos - lo as f64;
            if frac == 0.0 {
                row[lo]
            } else {
                row[lo] + frac * (row[lo + 1] - row[lo])
            }
        })
        .collect()
}

pub fn normalize_dims(ragged: &RaggedEmbedding, mode: NormalizeMode) -> Result<EmbeddingMatrix> {
    if ragged.rows.is_empty() {
        return Err(Error::invalid("normalize_dims needs at least one row"));
    }
    if let Some(i) = ragged.rows.iter().position(Vec::is_empty) {
        return Err(Error::invalid(format!("row {i} ({:?}) is empty", ragged.ids[i])));
    }
    let max_len = ragged.max_len();
    let rows: Vec<Vec<f64>> = match mode {
        NormalizeMode::Interpolate => ragged.rows.iter().map(|r| resample(r, max_len)).collect(),
        NormalizeMode::DropTrailing => {
            let width = (max_len - 1).max(1);
            ragged
                .rows
                .iter()
                .map(|r| {
                    let body = if r.len() > 1 { &r[..r.len() - 1] } else { &r[..] };
                    resample(body, width)
                })
                .collect()
        }
    };
    let width = rows[0].len();
    let matrix = Matrix::from_vec(rows.len(), width, rows.concat())?;
    EmbeddingMatrix::new(ragged.ids.clone(), matrix)
}
