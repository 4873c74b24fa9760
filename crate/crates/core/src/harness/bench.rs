//! Wall-clock scaling of one algorithm over a range of cluster counts.

use std::fmt::Write as _;
use std::time::Instant;

use super::config::ExperimentConfig;
use super::run::cluster_matrix;
use crate::data::TaskKind;
use crate::error::{Error, Result};
use crate::numeric::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct KRuntime {
    pub k: usize,
    pub seconds: f64,
    pub predicted_k: usize,
}

/// Runs `cfg.algorithm` once per value in `k_values` (strictly ascending).
pub fn benchmark_k_scaling(cfg: &ExperimentConfig, x: &Matrix, task: TaskKind, k_values: &[usize]) -> Result<Vec<KRuntime>> {
    cfg.validate()?;
    if k_values.is_empty() {
        return Err(Error::invalid("no K values given"));
    }
    if k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("K values must be strictly ascending"));
    }
    k_values
        .iter()
        .map(|&k| {
            let started = Instant::now();
            let c = cluster_matrix(cfg, x, k, task)?;
            // clocks can read 0 for very fast runs; the table reports positive times
            let seconds = started.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
            Ok(KRuntime {
                k,
                seconds,
                predicted_k: c.result.k_predicted,
            })
        })
        .collect()
}

pub fn runtime_csv(rows: &[KRuntime]) -> String {
    let mut s = String::from("k,seconds,predicted_k\n");
    for r in rows {
        let _ = writeln!(s, "{},{:?},{}", r.k, r.seconds, r.predicted_k);
    }
    s
}

/// Least-squares slope of seconds against K.
pub fn runtime_slope(rows: &[KRuntime]) -> f64 {
    let n = rows.len() as f64;
    let mk = rows.iter().map(|r| r.k as f64).sum::<f64>() / n;
    let ms = rows.iter().map(|r| r.seconds).sum::<f64>() / n;
    let cov: f64 = rows.iter().map(|r| (r.k as f64 - mk) * (r.seconds - ms)).sum();
    let var: f64 = rows.iter().map(|r| (r.k as f64 - mk).powi(2)).sum();
    if var == 0.0 {
        0.0
    } else {
        cov / var
    }
}
