//! Pairwise cosine similarity over a subset of items, for heatmap plotting.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::numeric::ops::dot;
use crate::numeric::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityData {
    pub ids: Vec<String>,
    pub matrix: Matrix,
    /// Items with an all-zero vector; their similarities are reported as 0.
    pub zero_vectors: Vec<String>,
}

impl SimilarityData {
    pub fn has_warnings(&self) -> bool {
        !self.zero_vectors.is_empty()
    }

    /// Square CSV with an `id` header row and column.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id");
        for id in &self.ids {
            let _ = write!(s, ",{id}");
        }
        s.push('\n');
        for (i, id) in self.ids.iter().enumerate() {
            s.push_str(id);
            for v in self.matrix.row(i) {
                let _ = write!(s, ",{v:?}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Cosine similarities among the items named in `subset` (all items when empty).
pub fn emit_similarity_data(emb: &EmbeddingMatrix, subset: &[String]) -> Result<SimilarityData> {
    let rows: Vec<usize> = if subset.is_empty() {
        (0..emb.len()).collect()
    } else {
        subset
            .iter()
            .map(|id| {
                emb.ids
                    .iter()
                    .position(|e| e == id)
                    .ok_or_else(|| Error::invalid(format!("unknown item id {id:?}")))
            })
            .collect::<Result<_>>()?
    };
    if rows.is_empty() {
        return Err(Error::invalid("similarity subset is empty"));
    }
    let x = &emb.matrix;
    let norms: Vec<f64> = rows.iter().map(|&i| dot(x.row(i), x.row(i)).sqrt()).collect();
    let matrix = Matrix::from_fn(rows.len(), rows.len(), |a, b| {
        if norms[a] == 0.0 || norms[b] == 0.0 {
            0.0
        } else {
            dot(x.row(rows[a]), x.row(rows[b])) / (norms[a] * norms[b])
        }
    });
    let ids: Vec<String> = rows.iter().map(|&i| emb.ids[i].clone()).collect();
    let zero_vectors = ids.iter().zip(&norms).filter(|(_, &n)| n == 0.0).map(|(id, _)| id.clone()).collect();
    Ok(SimilarityData {
        ids,
        matrix,
        zero_vectors,
    })
}
