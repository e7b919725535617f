//! CSV and JSON writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use acc_core::simulator::Sample;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::sweep::SweepReport;

pub const TOOL_NAME: &str = "accsd";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn num(v: f64) -> String {
    format!("{v:.14e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn writer(path: &Path) -> CliResult<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Columns `t_s`, one per state label, `y_V`, `h_V`.
pub fn write_time_series(path: &Path, labels: &[String], samples: &[Sample]) -> CliResult<()> {
    let mut w = writer(path)?;
    let mut header = vec!["t_s".to_string()];
    header.extend(labels.iter().cloned());
    header.push("y_V".into());
    header.push("h_V".into());
    w.write_record(&header)
        .map_err(|e| CliError::csv(path, e))?;
    for s in samples {
        let mut row = vec![num(s.t)];
        row.extend(s.x.iter().map(|&v| num(v)));
        row.push(num(s.y));
        row.push(num(s.h));
        w.write_record(&row).map_err(|e| CliError::csv(path, e))?;
    }
    finish(w, path)
}

/// One row per grid point; gaps keep their `omega_p_rad_s` and leave the rest empty.
pub fn write_sweep(path: &Path, report: &SweepReport) -> CliResult<()> {
    let n_eig = report
        .points
        .iter()
        .map(|p| p.eigs.len())
        .max()
        .unwrap_or(0);
    let mut w = writer(path)?;
    let mut header = vec!["omega_p_rad_s".to_string(), "duty".to_string()];
    for i in 0..n_eig {
        header.push(format!("eig{i}_re"));
        header.push(format!("eig{i}_im"));
    }
    header.extend(["max_mag", "verdict", "avg_max_re"].map(String::from));
    w.write_record(&header)
        .map_err(|e| CliError::csv(path, e))?;
    for p in &report.points {
        let mut row = vec![num(p.omega_p_rad_s), opt(p.duty)];
        for i in 0..n_eig {
            match p.eigs.get(i) {
                Some(z) => {
                    row.push(num(z.re));
                    row.push(num(z.im));
                }
                None => row.extend([String::new(), String::new()]),
            }
        }
        row.push(opt(p.max_mag));
        row.push(
            p.verdict
                .map(|v| v.as_str().to_string())
                .unwrap_or_default(),
        );
        row.push(opt(p.avg_max_re));
        w.write_record(&row).map_err(|e| CliError::csv(path, e))?;
    }
    finish(w, path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyRow {
    pub omega_rad_s: f64,
    pub kind: &'static str,
    pub value: Complex64,
}

pub fn write_frequency_response(path: &Path, rows: &[FrequencyRow]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record([
        "omega_rad_s",
        "f_hz",
        "kind",
        "re",
        "im",
        "mag_db",
        "phase_deg",
    ])
    .map_err(|e| CliError::csv(path, e))?;
    for r in rows {
        let f = r.omega_rad_s / (2.0 * std::f64::consts::PI);
        w.write_record([
            num(r.omega_rad_s),
            num(f),
            r.kind.to_string(),
            num(r.value.re),
            num(r.value.im),
            num(20.0 * r.value.norm().log10()),
            num(r.value.arg().to_degrees()),
        ])
        .map_err(|e| CliError::csv(path, e))?;
    }
    finish(w, path)
}

#[derive(Debug, Serialize)]
struct Report<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    results: &'a T,
}

pub fn report_value<T: Serialize>(
    command: &str,
    config: &RunConfig,
    results: &T,
) -> CliResult<Value> {
    Ok(serde_json::to_value(Report {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        command,
        config,
        results,
    })?)
}

pub fn write_report<T: Serialize>(
    path: &Path,
    command: &str,
    config: &RunConfig,
    results: &T,
) -> CliResult<()> {
    let value = report_value(command, config, results)?;
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, &value)?;
    out.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    out.flush().map_err(|e| CliError::io(path, e))
}

/// Reads back the `config` echo of a report.
pub fn config_from_report(text: &str) -> CliResult<RunConfig> {
    let v: Value = serde_json::from_str(text)?;
    let cfg = v
        .get("config")
        .ok_or_else(|| CliError::Config("report has no config echo".into()))?;
    let cfg: RunConfig = serde_json::from_value(cfg.clone())?;
    cfg.validate()?;
    Ok(cfg)
}
