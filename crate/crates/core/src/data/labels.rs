//! Ground-truth label files: two columns `id,label`, optional `id,label` header.
//! Label strings map to dense integers in order of first appearance.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSet {
    pub ids: Vec<String>,
    pub labels: Vec<usize>,
    /// `names[l]` is the original string of dense label `l`.
    pub names: Vec<String>,
}

impl LabelSet {
    pub fn from_pairs<I, S, T>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut seen = std::collections::HashSet::new();
        let mut out = LabelSet {
            ids: Vec::new(),
            labels: Vec::new(),
            names: Vec::new(),
        };
        for (id, name) in pairs {
            let id = id.into();
            if !seen.insert(id.clone()) {
                return Err(Error::invalid(format!("duplicate labeled id {id:?}")));
            }
            let name = name.as_ref();
            let l = match index.get(name) {
                Some(&l) => l,
                None => {
                    index.insert(name.to_string(), out.names.len());
                    out.names.push(name.to_string());
                    out.names.len() - 1
                }
            };
            out.ids.push(id);
            out.labels.push(l);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn clusters(&self) -> usize {
        self.names.len()
    }

    /// Labels reordered to follow `ids`; every id must be labeled.
    pub fn aligned_to(&self, ids: &[String]) -> Result<Vec<usize>> {
        let pos: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        ids.iter()
            .map(|id| {
                pos.get(id.as_str())
                    .map(|&i| self.labels[i])
                    .ok_or_else(|| Error::invalid(format!("item {id:?} has no ground-truth label")))
            })
            .collect()
    }
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut pairs = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::parse(path, line, format!("expected 2 columns, found {}", rec.len())));
        }
        if i == 0 && rec[0].eq_ignore_ascii_case("id") && rec[1].eq_ignore_ascii_case("label") {
            continue;
        }
        pairs.push((rec[0].to_string(), rec[1].to_string()));
    }
    LabelSet::from_pairs(pairs)
}

pub fn save_labels(path: impl AsRef<Path>, ids: &[String], labels: &[usize]) -> Result<()> {
    let path = path.as_ref();
    if ids.len() != labels.len() {
        return Err(Error::shape("save_labels", format!("{} ids, {} labels", ids.len(), labels.len())));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let err = |e: csv::Error| Error::parse(path, 0, e.to_string());
    w.write_record(["id", "label"]).map_err(err)?;
    for (id, l) in ids.iter().zip(labels) {
        w.write_record([id.as_str(), &l.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_first_appearance_mapping() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.csv");
        std::fs::write(&p, "id,label\na,cat\nb,dog\nc,cat\nd,emu\n").unwrap();
        let l = load_labels(&p).unwrap();
        assert_eq!(l.labels, [0, 1, 0, 2]);
        assert_eq!(l.names, ["cat", "dog", "emu"]);
        let ids: Vec<String> = ["d", "a"].iter().map(|s| s.to_string()).collect();
        assert_eq!(l.aligned_to(&ids).unwrap(), [2, 0]);
        assert!(l.aligned_to(&["zz".to_string()]).is_err());
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.csv");
        let ids: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        save_labels(&p, &ids, &[4, 4, 1]).unwrap();
        let l = load_labels(&p).unwrap();
        assert_eq!(l.ids, ids);
        assert_eq!(l.labels, [0, 0, 1]);
    }
}
