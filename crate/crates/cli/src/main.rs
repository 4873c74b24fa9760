//! `dcbench`: run clustering experiments and emit report tables.
//!
//! Exit codes: 0 success, 1 invalid input or config, 2 training divergence,
//! 3 I/O failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};

use dcbench_core::data::manifest::parse_key_values;
use dcbench_core::data::{
    load_clustered_records, load_dataset, load_embeddings, save_embeddings, save_labels, subset_musicbrainz,
    synth_blobs, DatasetManifest, EmbeddingFormat, EmbeddingMatrix, TaskKind,
};
use dcbench_core::harness::{
    benchmark_k_scaling, emit_report, emit_similarity_data, pretrain_experiment, run_experiment, runtime_csv,
    Algorithm, ExperimentConfig, ReportFormat, RunRecord, RECORD_FILE,
};
use dcbench_core::metrics::cluster_stats;
use dcbench_core::{Error, Result};

const MUSICBRAINZ_ENV: &str = dcbench_core::data::musicbrainz::SOURCE_ENV;

fn config_args(cmd: Command) -> Command {
    let cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .help("key = value config file; flags override it"),
    );
    ExperimentConfig::KEYS.iter().fold(cmd, |c, key| {
        let help = if *key == "algorithm" {
            "sdcn, edesc, ae_birch, kmeans, birch (run also accepts all)".to_string()
        } else {
            format!("config field {key}")
        };
        c.arg(Arg::new(*key).long(*key).value_name("VALUE").help(help))
    })
}

fn cli() -> Command {
    Command::new("dcbench")
        .about("Deep and classic clustering benchmarks over precomputed embeddings")
        .subcommand_required(true)
        .subcommand(config_args(
            Command::new("pretrain")
                .about("Pretrain the autoencoder for a dataset and save a checkpoint")
                .arg(Arg::new("output").long("output").required(true).value_name("FILE")),
        ))
        .subcommand(config_args(
            Command::new("run").about("Cluster one dataset and write record.json, labels.csv and trace.csv"),
        ))
        .subcommand(
            Command::new("report")
                .about("Tabulate run records (files or run directories)")
                .arg(Arg::new("records").required(true).num_args(1..).value_name("PATH"))
                .arg(Arg::new("format").long("format").default_value("text"))
                .arg(Arg::new("output").long("output").value_name("FILE")),
        )
        .subcommand(
            Command::new("synth")
                .about("Write a Gaussian-blob dataset with its manifest")
                .arg(Arg::new("n").long("n").default_value("500"))
                .arg(Arg::new("d").long("d").default_value("10"))
                .arg(Arg::new("k").long("k").default_value("5"))
                .arg(Arg::new("spread").long("spread").default_value("1.0"))
                .arg(Arg::new("seed").long("seed").required(true))
                .arg(Arg::new("name").long("name").default_value("blobs"))
                .arg(Arg::new("out_dir").long("out_dir").required(true).value_name("DIR")),
        )
        .subcommand(
            Command::new("subset-musicbrainz")
                .about("Select the non-singleton MusicBrainz subset")
                .arg(
                    Arg::new("input")
                        .long("input")
                        .value_name("FILE")
                        .help(format!("clustered records CSV; defaults to ${MUSICBRAINZ_ENV}")),
                )
                .arg(Arg::new("target_n").long("target_n").default_value("2002"))
                .arg(Arg::new("output").long("output").required(true).value_name("FILE")),
        )
        .subcommand(
            Command::new("similarity")
                .about("Pairwise cosine similarity over a subset of items")
                .arg(Arg::new("embeddings").long("embeddings").required(true).value_name("FILE"))
                .arg(Arg::new("ids").long("ids").value_delimiter(',').help("comma-separated item ids; all when omitted"))
                .arg(Arg::new("output").long("output").required(true).value_name("FILE")),
        )
        .subcommand(config_args(
            Command::new("bench-k").about("Runtime of one algorithm over ascending K values (k_values = 2,4,8)").arg(
                Arg::new("output")
                    .long("output")
                    .value_name("FILE")
                    .action(ArgAction::Set),
            ),
        ))
}

fn arg<'a>(m: &'a ArgMatches, name: &str) -> Option<&'a String> {
    m.get_one::<String>(name)
}

fn num<T: std::str::FromStr>(m: &ArgMatches, name: &str) -> Result<T> {
    let v = arg(m, name).ok_or_else(|| Error::Invalid(format!("--{name} is required")))?;
    v.parse()
        .map_err(|_| Error::Invalid(format!("--{name}: cannot parse {v:?}")))
}

/// Defaults, then the config file, then flags. `--algorithm all` is left to
/// the caller.
fn experiment_config(m: &ArgMatches) -> Result<ExperimentConfig> {
    let mut cfg = match arg(m, "config") {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    for key in ExperimentConfig::KEYS {
        if key == "algorithm" && run_all(m) {
            continue;
        }
        if let Some(v) = arg(m, key) {
            cfg.set(key, v)?;
        }
    }
    Ok(cfg)
}

fn write_output(output: Option<&String>, text: &str) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.into(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_all(m: &ArgMatches) -> bool {
    arg(m, "algorithm").is_some_and(|a| a == "all")
}

fn cmd_run(m: &ArgMatches) -> Result<()> {
    let base = experiment_config(m)?;
    let algorithms = if run_all(m) { Algorithm::ALL.to_vec() } else { vec![base.algorithm] };
    for algorithm in algorithms {
        let cfg = ExperimentConfig { algorithm, ..base.clone() };
        let rec = run_experiment(&cfg)?;
        println!("run: {}", cfg.out_dir.join(rec.run_name()).display());
        if let Some(choice) = &rec.selected_model {
            println!("selected model: {choice}");
        }
        print!("{}", rec.metrics.to_key_value());
    }
    Ok(())
}

fn cmd_pretrain(m: &ArgMatches) -> Result<()> {
    let cfg = experiment_config(m)?;
    let out = PathBuf::from(arg(m, "output").unwrap());
    let loss = pretrain_experiment(&cfg, &out)?;
    println!("checkpoint: {} (final reconstruction loss {loss:.6})", out.display());
    Ok(())
}

fn collect_records(paths: &[&String]) -> Result<Vec<RunRecord>> {
    let mut files = Vec::new();
    for p in paths {
        let p = Path::new(p.as_str());
        if p.is_dir() {
            if p.join(RECORD_FILE).is_file() {
                files.push(p.join(RECORD_FILE));
                continue;
            }
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::Io {
                    path: p.into(),
                    source: e,
                })?
                .filter_map(|e| e.ok().map(|e| e.path().join(RECORD_FILE)))
                .filter(|f| f.is_file())
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.to_path_buf());
        }
    }
    files.iter().map(RunRecord::load).collect()
}

fn cmd_report(m: &ArgMatches) -> Result<()> {
    let paths: Vec<&String> = m.get_many::<String>("records").unwrap().collect();
    let format: ReportFormat = arg(m, "format").unwrap().parse()?;
    let records = collect_records(&paths)?;
    write_output(arg(m, "output"), &emit_report(&records, format)?)
}

fn cmd_synth(m: &ArgMatches) -> Result<()> {
    let (x, labels) = synth_blobs(num(m, "n")?, num(m, "d")?, num(m, "k")?, num(m, "spread")?, num(m, "seed")?)?;
    let dir = PathBuf::from(arg(m, "out_dir").unwrap());
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let name = arg(m, "name").unwrap();
    let emb = EmbeddingMatrix::with_index_ids(x);
    save_embeddings(dir.join(format!("{name}.csv")), &emb, EmbeddingFormat::Text)?;
    save_labels(dir.join(format!("{name}_labels.csv")), &emb.ids, &labels)?;
    let manifest = DatasetManifest {
        name: name.clone(),
        task: TaskKind::SchemaInference,
        embeddings: format!("{name}.csv").into(),
        labels: format!("{name}_labels.csv").into(),
        k: num(m, "k")?,
        normalize: None,
        notes: Some("synthetic Gaussian blobs".into()),
    };
    let path = dir.join(format!("{name}.manifest"));
    std::fs::write(&path, manifest.to_text()).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    println!("manifest: {}", path.display());
    Ok(())
}

fn cmd_subset(m: &ArgMatches) -> Result<()> {
    let input = match arg(m, "input") {
        Some(p) => PathBuf::from(p),
        None => std::env::var_os(MUSICBRAINZ_ENV)
            .map(PathBuf::from)
            .ok_or_else(|| Error::Invalid(format!("no --input given and ${MUSICBRAINZ_ENV} is unset")))?,
    };
    let records = load_clustered_records(&input)?;
    let subset = subset_musicbrainz(&records, num(m, "target_n")?)?;
    let ids: Vec<String> = subset.records.iter().map(|r| r.id.clone()).collect();
    save_labels(arg(m, "output").unwrap(), &ids, &subset.labels)?;
    let stats = cluster_stats(&subset.labels)?;
    println!(
        "records: {}\nclusters: {}\nmean size: {:.2}\nmedian size: {:.1}\nlargest: {}\nunary: {}",
        subset.labels.len(),
        stats.clusters,
        stats.mean_size,
        stats.median_size,
        stats.largest,
        stats.unary
    );
    Ok(())
}

fn cmd_similarity(m: &ArgMatches) -> Result<()> {
    let emb = load_embeddings(arg(m, "embeddings").unwrap())?;
    let ids: Vec<String> = m
        .get_many::<String>("ids")
        .map(|v| v.cloned().collect())
        .unwrap_or_default();
    let sim = emit_similarity_data(&emb, &ids)?;
    sim.write_csv(arg(m, "output").unwrap())?;
    for id in &sim.zero_vectors {
        eprintln!("warning: item {id} has a zero vector; its similarities are reported as 0");
    }
    Ok(())
}

fn parse_k_values(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("k_values: cannot parse {s:?}")))
        })
        .collect()
}

fn cmd_bench_k(m: &ArgMatches) -> Result<()> {
    let cfg = experiment_config(m)?;
    let from_file = match arg(m, "config") {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.into(),
                source: e,
            })?;
            parse_key_values(&text, Path::new(p))?.remove("k_values")
        }
        None => None,
    };
    let ks = arg(m, "k_values")
        .cloned()
        .or(from_file)
        .ok_or_else(|| Error::Invalid("bench-k needs k_values".into()))?;
    let manifest_path = cfg
        .manifest
        .as_ref()
        .ok_or_else(|| Error::Invalid("bench-k needs a manifest".into()))?;
    let data = load_dataset(&DatasetManifest::load(manifest_path)?)?;
    let rows = benchmark_k_scaling(&cfg, &data.embeddings.matrix, data.task, &parse_k_values(&ks)?)?;
    write_output(arg(m, "output"), &runtime_csv(&rows))
}

fn dispatch(m: &ArgMatches) -> Result<()> {
    match m.subcommand() {
        Some(("run", sub)) => cmd_run(sub),
        Some(("pretrain", sub)) => cmd_pretrain(sub),
        Some(("report", sub)) => cmd_report(sub),
        Some(("synth", sub)) => cmd_synth(sub),
        Some(("subset-musicbrainz", sub)) => cmd_subset(sub),
        Some(("similarity", sub)) => cmd_similarity(sub),
        Some(("bench-k", sub)) => cmd_bench_k(sub),
        _ => unreachable!("subcommand required"),
    }
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_is_well_formed() {
        cli().debug_assert();
    }

    #[test]
    fn algorithm_names_parse() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!(parse_k_values("2, 4,8").unwrap(), vec![2, 4, 8]);
    }
}
