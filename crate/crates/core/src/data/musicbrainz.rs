//! Deterministic subsetting of the MusicBrainz entity-resolution benchmark.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::error::{Error, Result};

/// Environment variable holding the path of the full MusicBrainz-20K CSV.
pub const SOURCE_ENV: &str = "MUSICBRAINZ_20K";
pub const CLUSTER_COLUMN: &str = "CID";
pub const ID_COLUMN: &str = "TID";
pub const DEFAULT_SUBSET_SIZE: usize = 2002;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusteredRecord {
    pub id: String,
    pub cluster: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subset {
    pub records: Vec<ClusteredRecord>,
    /// Dense labels in first-appearance order.
    pub labels: Vec<usize>,
}

/// Reads the id and cluster columns from a headed CSV file.
pub fn load_clustered_records(path: impl AsRef<Path>) -> Result<Vec<ClusteredRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let headers = reader.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(path, 1, format!("missing column {name:?}")))
    };
    let (id_col, cid_col) = (col(ID_COLUMN)?, col(CLUSTER_COLUMN)?);
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let field = |c: usize| rec.get(c).ok_or_else(|| Error::parse(path, line, "short row"));
        let cluster = field(cid_col)?
            .parse()
            .map_err(|_| Error::parse(path, line, "cluster id is not an integer"))?;
        out.push(ClusteredRecord {
            id: field(id_col)?.to_string(),
            cluster,
        });
    }
    Ok(out)
}

/// Drops singleton-cluster records, stably sorts by cluster id, keeps the first `target_n`.
pub fn subset_musicbrainz(records: &[ClusteredRecord], target_n: usize) -> Result<Subset> {
    let mut sizes: HashMap<u64, usize> = HashMap::new();
    for r in records {
        *sizes.entry(r.cluster).or_default() += 1;
    }
    let mut kept: Vec<ClusteredRecord> = records.iter().filter(|r| sizes[&r.cluster] > 1).cloned().collect();
    if target_n > kept.len() {
        return Err(Error::invalid(format!(
            "asked for {target_n} records but only {} belong to non-singleton clusters",
            kept.len()
        )));
    }
    kept.sort_by_key(|r| r.cluster);
    kept.truncate(target_n);
    let mut dense: HashMap<u64, usize> = HashMap::new();
    let labels = kept
        .iter()
        .map(|r| {
            let next = dense.len();
            *dense.entry(r.cluster).or_insert(next)
        })
        .collect();
    Ok(Subset { records: kept, labels })
}
