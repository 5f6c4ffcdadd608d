//! Result files: metrics CSV, run metadata, panels and SVG charts.

use std::fs;
use std::path::{Path, PathBuf};

use tlp_core::experiment::{MetricsRow, MetricsTable};
use tlp_core::{Matrix, Method, Panel};

use crate::plot::{line_chart, Series};
use crate::CliError;

pub const METRICS_HEADER: [&str; 8] = [
    "method",
    "horizon",
    "coverage",
    "length",
    "bias",
    "sd",
    "rmse",
    "n_effective",
];

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Floats use Rust's shortest round-trip formatting, so the file is
/// locale-independent and parses back to identical values.
pub fn write_metrics_csv(table: &MetricsTable, path: &Path) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(METRICS_HEADER).map_err(|e| csv_err(path, e))?;
    for r in &table.rows {
        w.write_record([
            r.method.as_str().to_string(),
            r.horizon.to_string(),
            r.coverage.to_string(),
            r.avg_length.to_string(),
            r.bias.to_string(),
            r.sd.to_string(),
            r.rmse.to_string(),
            r.n_effective.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let bad = |what: &str| CliError::Io {
        path: path.to_path_buf(),
        message: format!("malformed metrics field {what}"),
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let f = |i: usize| {
            rec.get(i)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|_| bad(METRICS_HEADER[i]))
        };
        rows.push(MetricsRow {
            method: rec.get(0).unwrap_or("").parse::<Method>().map_err(|_| bad("method"))?,
            horizon: rec.get(1).unwrap_or("").parse().map_err(|_| bad("horizon"))?,
            coverage: f(2)?,
            avg_length: f(3)?,
            bias: f(4)?,
            sd: f(5)?,
            rmse: f(6)?,
            n_effective: rec.get(7).unwrap_or("").parse().map_err(|_| bad("n_effective"))?,
        });
    }
    Ok(rows)
}

pub fn write_json(value: &serde_json::Value, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// The charted metrics: (file stem, title, accessor).
type Metric = (&'static str, &'static str, fn(&MetricsRow) -> f64);

const METRICS: [Metric; 5] = [
    ("coverage", "Coverage", |r| r.coverage),
    ("length", "Average band length", |r| r.avg_length),
    ("bias", "Bias", |r| r.bias),
    ("sd", "Standard deviation", |r| r.sd),
    ("rmse", "RMSE", |r| r.rmse),
];

/// Writes `metrics.csv`, `run_meta.json` and, with `emit_plots`, one SVG per
/// metric. Returns the paths written.
pub fn write_results(
    table: &MetricsTable,
    meta: &serde_json::Value,
    out_dir: &Path,
    emit_plots: bool,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut written = Vec::new();
    let csv_path = out_dir.join("metrics.csv");
    write_metrics_csv(table, &csv_path)?;
    written.push(csv_path);
    let meta_path = out_dir.join("run_meta.json");
    write_json(meta, &meta_path)?;
    written.push(meta_path);
    if emit_plots {
        for (stem, title, get) in METRICS {
            let series: Vec<Series> = table
                .methods()
                .into_iter()
                .map(|m| Series {
                    label: m.as_str().to_string(),
                    values: table.column(m, get),
                })
                .collect();
            let reference = (stem == "coverage").then_some(table.nominal);
            let svg = line_chart(title, &series, reference);
            let path = out_dir.join(format!("{stem}.svg"));
            fs::write(&path, svg).map_err(|e| CliError::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn write_panel_csv(panel: &Panel, path: &Path) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = (1..=panel.vars()).map(|v| format!("y{v}")).collect();
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for t in 0..panel.len() {
        w.write_record(panel.obs(t).iter().map(|x| x.to_string()))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_panel_csv(path: &Path) -> Result<Panel, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| {
                CliError::Validation(format!(
                    "{}: non-numeric value in data row {}",
                    path.display(),
                    line + 1
                ))
            })?;
        rows.push(row);
    }
    let values = Matrix::from_rows(&rows)
        .map_err(|_| CliError::Validation(format!("{}: rows differ in length", path.display())))?;
    Panel::new(values).map_err(|e| CliError::Validation(e.to_string()))
}
