//! Results tables: one column per run, one row per reported metric.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::run::RunRecord;
use crate::error::{Error, Result};
use crate::metrics::TABLE_ROWS;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    /// Space-aligned plain text.
    #[default]
    Text,
    /// Comma-delimited, header row first.
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::invalid(format!("report format must be text or csv, got {other:?}"))),
        }
    }
}

/// Column header for a run: `algorithm/dataset`.
pub fn column_name(r: &RunRecord) -> String {
    format!("{}/{}", r.algorithm, r.dataset)
}

/// Columns sorted by dataset, then algorithm, then seed.
pub fn emit_report(records: &[RunRecord], format: ReportFormat) -> Result<String> {
    if records.is_empty() {
        return Err(Error::invalid("a report needs at least one run record"));
    }
    let mut cols: Vec<&RunRecord> = records.iter().collect();
    cols.sort_by(|a, b| {
        (a.dataset.as_str(), a.algorithm, a.seed).cmp(&(b.dataset.as_str(), b.algorithm, b.seed))
    });
    let header: Vec<String> = cols.iter().map(|r| column_name(r)).collect();
    let values: Vec<Vec<String>> = cols
        .iter()
        .map(|r| r.metrics.table_record().into_iter().map(|(_, v)| v).collect())
        .collect();

    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::invalid(format!("csv encoding failed: {e}"));
            w.write_record(std::iter::once("Metric").chain(header.iter().map(String::as_str)))
                .map_err(io)?;
            for (i, row) in TABLE_ROWS.iter().enumerate() {
                w.write_record(std::iter::once(*row).chain(values.iter().map(|c| c[i].as_str())))
                    .map_err(io)?;
            }
            out = String::from_utf8(w.into_inner().map_err(|e| Error::invalid(e.to_string()))?)
                .expect("csv output is utf-8");
        }
        ReportFormat::Text => {
            let first = TABLE_ROWS.iter().map(|r| r.len()).max().unwrap_or(0).max("Metric".len());
            let widths: Vec<usize> = header
                .iter()
                .zip(&values)
                .map(|(h, c)| c.iter().map(String::len).max().unwrap_or(0).max(h.len()))
                .collect();
            let line = |label: &str, cells: &mut dyn Iterator<Item = &str>, out: &mut String| {
                let _ = write!(out, "{label:<first$}");
                for (cell, w) in cells.zip(&widths) {
                    let _ = write!(out, "  {cell:>w$}");
                }
                out.push('\n');
            };
            line("Metric", &mut header.iter().map(String::as_str), &mut out);
            for (i, row) in TABLE_ROWS.iter().enumerate() {
                line(row, &mut values.iter().map(|c| c[i].as_str()), &mut out);
            }
        }
    }
    Ok(out)
}
