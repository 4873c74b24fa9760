//! Embedding files.
//!
//! Text: comma-delimited, first column the item id, remaining columns reals,
//! with an optional header line (detected when any value column of the first
//! line is not a number).
//!
//! Binary (little-endian): magic `DCEM`, `u32` version (1), `u64` N, `u64` d,
//! then per item a `u32` byte length, the UTF-8 id and `d` `f64` values.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::Matrix;

pub const BINARY_MAGIC: &[u8; 4] = b"DCEM";
pub const BINARY_VERSION: u32 = 1;

/// Dense `N x d` embeddings with one string id per row.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    pub ids: Vec<String>,
    pub matrix: Matrix,
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, matrix: Matrix) -> Result<Self> {
        if ids.len() != matrix.rows() {
            return Err(Error::shape(
                "EmbeddingMatrix",
                format!("{} ids for {} rows", ids.len(), matrix.rows()),
            ));
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("duplicate item id {id:?}")));
            }
        }
        Ok(EmbeddingMatrix { ids, matrix })
    }

    /// Ids `0..N` as strings.
    pub fn with_index_ids(matrix: Matrix) -> Self {
        let ids = (0..matrix.rows()).map(|i| i.to_string()).collect();
        EmbeddingMatrix { ids, matrix }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Text,
    Binary,
}

impl EmbeddingFormat {
    /// Binary for `.bin`/`.dcem` extensions, text otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("dcem") => EmbeddingFormat::Binary,
            _ => EmbeddingFormat::Text,
        }
    }
}

/// Loads either format, sniffing the binary magic.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let mut head = [0u8; 4];
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let got = f.read(&mut head).map_err(|e| Error::io(path, e))?;
    if got == 4 && &head == BINARY_MAGIC {
        load_binary(path)
    } else {
        load_text(path)
    }
}

pub fn save_embeddings(path: impl AsRef<Path>, emb: &EmbeddingMatrix, format: EmbeddingFormat) -> Result<()> {
    match format {
        EmbeddingFormat::Text => save_text(path, emb),
        EmbeddingFormat::Binary => save_binary(path, emb),
    }
}

fn parse_value(path: &Path, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, format!("non-finite value {field:?}")));
    }
    Ok(v)
}

/// Reads `id,v1,v2,...` lines; rows may differ in length.
pub(crate) fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>, Vec<usize>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let values: Vec<&str> = rec.iter().skip(1).collect();
        if ids.is_empty() && i == 0 && values.iter().any(|v| v.parse::<f64>().is_err()) {
            // header line
            continue;
        }
        let row = values
            .iter()
            .map(|v| parse_value(path, line, v))
            .collect::<Result<Vec<f64>>>()?;
        ids.push(rec[0].to_string());
        rows.push(row);
        lines.push(line);
    }
    Ok((ids, rows, lines))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, line, format!("{other:?}")),
    }
}

pub fn load_text(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let (ids, rows, lines) = read_rows(path)?;
    let d = rows.first().map_or(0, Vec::len);
    for (r, (row, &line)) in rows.iter().zip(&lines).enumerate() {
        if row.len() != d {
            return Err(Error::parse(
                path,
                line,
                format!("row {r} has {} values, expected {d}", row.len()),
            ));
        }
    }
    let matrix = Matrix::from_vec(rows.len(), d, rows.concat())?;
    EmbeddingMatrix::new(ids, matrix)
}

pub fn save_text(path: impl AsRef<Path>, emb: &EmbeddingMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let mut header = vec!["id".to_string()];
    header.extend((0..emb.dim()).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (id, row) in emb.ids.iter().zip(emb.matrix.row_iter()) {
        let mut rec = vec![id.clone()];
        // `{:?}` prints the shortest representation that parses back exactly
        rec.extend(row.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_binary(path: impl AsRef<Path>, emb: &EmbeddingMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(BINARY_MAGIC).map_err(io)?;
    w.write_all(&BINARY_VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(emb.len() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&(emb.dim() as u64).to_le_bytes()).map_err(io)?;
    for (id, row) in emb.ids.iter().zip(emb.matrix.row_iter()) {
        w.write_all(&(id.len() as u32).to_le_bytes()).map_err(io)?;
        w.write_all(id.as_bytes()).map_err(io)?;
        for v in row {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut read = |buf: &mut [u8]| r.read_exact(buf).map_err(|e| Error::io(path, e));
    let mut magic = [0u8; 4];
    read(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::parse(path, 0, "missing DCEM magic"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    read(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != BINARY_VERSION {
        return Err(Error::parse(path, 0, format!("unsupported version {version}")));
    }
    read(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    read(&mut b8)?;
    let d = u64::from_le_bytes(b8) as usize;
    let mut ids = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n.saturating_mul(d));
    for item in 0..n {
        read(&mut b4)?;
        let mut id = vec![0u8; u32::from_le_bytes(b4) as usize];
        read(&mut id)?;
        let id = String::from_utf8(id).map_err(|_| Error::parse(path, item, "id is not UTF-8"))?;
        ids.push(id);
        for _ in 0..d {
            read(&mut b8)?;
            let v = f64::from_le_bytes(b8);
            if !v.is_finite() {
                return Err(Error::parse(path, item, "non-finite value"));
            }
            data.push(v);
        }
    }
    EmbeddingMatrix::new(ids, Matrix::from_vec(n, d, data)?)
}
