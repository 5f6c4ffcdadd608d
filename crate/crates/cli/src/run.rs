use std::path::{Path, PathBuf};

use serde_json::json;
use tlp_core::bootstrap::{run_msdb_with_stream, BlockLength, BootstrapEnsemble};
use tlp_core::dgp::{simulate, true_irf};
use tlp_core::estimators::{fit_var, lp_moments, var_irf};
use tlp_core::experiment::{compare_centering, run_experiment, with_workers, MetricsTable};
use tlp_core::{Design, Method, Panel, RngStream};

use crate::config::{parse_config, DesignFile};
use crate::output::{write_json, write_panel_csv, write_results};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Estimate,
    Msdb,
    Montecarlo,
    CompareCentering,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Estimate => "estimate",
            Command::Msdb => "msdb",
            Command::Montecarlo => "montecarlo",
            Command::CompareCentering => "compare-centering",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: Command,
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub emit_plots: bool,
}

/// `--workers` wins over `TLP_WORKERS`; neither means the default pool.
pub fn resolve_workers(flag: Option<usize>, env: Option<&str>) -> Result<Option<usize>, CliError> {
    let workers = match (flag, env) {
        (Some(w), _) => Some(w),
        (None, Some(s)) if !s.trim().is_empty() => Some(
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Validation(format!("TLP_WORKERS must be a positive integer, got {s:?}")))?,
        ),
        _ => None,
    };
    if workers == Some(0) {
        return Err(CliError::Validation("worker count must be at least 1".into()));
    }
    Ok(workers)
}

/// Runs one command and returns the files it wrote.
pub fn execute(cfg: &CliConfig) -> Result<Vec<PathBuf>, CliError> {
    let (mut file, mut design) = parse_config(&cfg.config_path)?;
    if let Some(seed) = cfg.seed {
        file.seed = seed;
        design.master_seed = seed;
        design.bootstrap.master_seed = seed;
    }
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
    let meta = run_meta(cfg.command, &file, &design);
    with_workers(cfg.workers, || match cfg.command {
        Command::Simulate => simulate_cmd(&design, &meta, &cfg.out_dir),
        Command::Estimate => estimate_cmd(&file, &design, &meta, &cfg.out_dir),
        Command::Msdb => msdb_cmd(&file, &design, &meta, &cfg.out_dir),
        Command::Montecarlo => {
            let table = run_experiment(&design)?;
            write_results(&table, &with_failures(&meta, &table), &cfg.out_dir, cfg.emit_plots)
        }
        Command::CompareCentering => {
            let cmp = compare_centering(&design)?;
            let mut written = Vec::new();
            for table in [&cmp.bootstrap_mean, &cmp.pseudo_truth] {
                let dir = cfg.out_dir.join(table.centering.as_str());
                let mut m = with_failures(&meta, table);
                m["centering"] = json!(table.centering);
                written.extend(write_results(table, &m, &dir, cfg.emit_plots)?);
            }
            Ok(written)
        }
    })?
}

fn with_failures(meta: &serde_json::Value, table: &MetricsTable) -> serde_json::Value {
    let mut m = meta.clone();
    m["failed_replications"] = json!(table.failed);
    m["nominal_coverage"] = json!(table.nominal);
    m
}

fn run_meta(command: Command, file: &DesignFile, design: &Design) -> serde_json::Value {
    let block = match design.bootstrap.block_length {
        BlockLength::CubeRoot => json!({
            "rule": "smallest integer l with l^3 >= T",
            "value": design.bootstrap.block_length_for(design.t_len),
        }),
        BlockLength::Fixed(l) => json!({"rule": "fixed", "value": l}),
    };
    json!({
        "command": command.as_str(),
        "config": file,
        "master_seed": design.master_seed,
        "streams": {
            "panel": "RngStream(master_seed, replication).fork(\"panel\")",
            "bootstrap": "RngStream(master_seed, replication).fork(\"msdb\")",
        },
        "block_length": block,
        "slp_lambda_grid": "0 plus 50 log-spaced points from 1e-4 to 1e4 times tr(X'X) on the original sample",
        "tlp_weight_variances": if design.bootstrap.per_replication_weights { "per replication" } else { "first-level average" },
        "versions": {
            "tlp-cli": env!("CARGO_PKG_VERSION"),
            "tlp-core": tlp_core::VERSION,
        },
    })
}

/// The data file if configured, else replication 0's simulated panel.
fn load_panel(file: &DesignFile, design: &Design) -> Result<(Panel, bool), CliError> {
    match &file.data {
        Some(path) => Ok((crate::output::read_panel_csv(path)?, false)),
        None => {
            let stream = RngStream::new(design.master_seed, 0).fork("panel");
            Ok((simulate(&design.dgp, design.t_len, &stream)?, true))
        }
    }
}

fn simulate_cmd(design: &Design, meta: &serde_json::Value, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let stream = RngStream::new(design.master_seed, 0).fork("panel");
    let panel = simulate(&design.dgp, design.t_len, &stream)?;
    let panel_path = out.join("panel.csv");
    write_panel_csv(&panel, &panel_path)?;
    let truth = true_irf(&design.dgp, &design.target, design.t_len)?;
    let truth_path = out.join("true_irf.csv");
    write_columns(&truth_path, &["horizon", "true"], &[truth])?;
    let meta_path = out.join("run_meta.json");
    write_json(meta, &meta_path)?;
    Ok(vec![panel_path, truth_path, meta_path])
}

fn estimate_cmd(
    file: &DesignFile,
    design: &Design,
    meta: &serde_json::Value,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let (panel, simulated) = load_panel(file, design)?;
    let lp = lp_moments(&panel, &design.target, design.p())?.beta();
    let var = var_irf(&fit_var(&panel, design.q())?, &design.target)?.beta;
    let mut header = vec!["horizon", "LP", "VAR"];
    let mut cols = vec![lp, var];
    if simulated {
        header.push("true");
        cols.push(true_irf(&design.dgp, &design.target, design.t_len)?);
    }
    let path = out.join("irf.csv");
    write_columns(&path, &header, &cols)?;
    let meta_path = out.join("run_meta.json");
    write_json(meta, &meta_path)?;
    Ok(vec![path, meta_path])
}

fn msdb_cmd(
    file: &DesignFile,
    design: &Design,
    meta: &serde_json::Value,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let (panel, _) = load_panel(file, design)?;
    let stream = RngStream::new(design.master_seed, 0).fork("msdb");
    let ens = run_msdb_with_stream(&panel, &design.target, &design.bootstrap, &stream)?;
    let bands_path = out.join("bands.csv");
    write_bands(&ens, &design.methods, &bands_path)?;
    let weights = &ens.tlp_weights_first[0];
    let weights_path = out.join("tlp_weights.csv");
    write_columns(
        &weights_path,
        &["horizon", "weight_lp", "implied_lambda"],
        &[weights.v.clone(), weights.lambda_implied.clone()],
    )?;
    let mut m = meta.clone();
    m["slp_lambda"] = json!(ens.slp_lambda);
    m["redraws"] = json!(ens.redraws);
    let meta_path = out.join("run_meta.json");
    write_json(&m, &meta_path)?;
    Ok(vec![bands_path, weights_path, meta_path])
}

fn write_bands(ens: &BootstrapEnsemble<f64>, methods: &[Method], path: &Path) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let io = |e: csv::Error| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    w.write_record([
        "method",
        "horizon",
        "estimate",
        "lower",
        "upper",
        "tcrit",
        "bootstrap_mean",
    ])
    .map_err(io)?;
    for &m in methods {
        let point = ens.point(m);
        for (h, band) in ens.bands.bands.get(m).iter().enumerate() {
            w.write_record([
                m.as_str().to_string(),
                h.to_string(),
                point[h].to_string(),
                band.lower.to_string(),
                band.upper.to_string(),
                band.tcrit.to_string(),
                ens.bar_beta.get(m)[h].to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

/// Horizon index followed by one column per series.
fn write_columns(path: &Path, header: &[&str], cols: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let io = |e: csv::Error| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    w.write_record(header).map_err(io)?;
    let n = cols.iter().map(Vec::len).max().unwrap_or(0);
    for h in 0..n {
        let mut rec = vec![h.to_string()];
        rec.extend(cols.iter().map(|c| c[h].to_string()));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
