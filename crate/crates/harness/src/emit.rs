//! CSV and JSON serialisation of benchmark reports.

use std::io::Write;

use crate::bench::{BenchmarkReport, BenchmarkRow};
use crate::config::OutputFormat;
use crate::error::{HarnessError, Result};

pub const CSV_COLUMNS: [&str; 7] = [
    "estimator",
    "n",
    "mse",
    "mse_stderr",
    "samples_used_mean",
    "oracle_bound",
    "uniform_bound",
];

/// Real formatted with 17 significant digits.
fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

pub fn emit(report: &BenchmarkReport, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Csv => emit_csv(&report.rows),
        OutputFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

pub fn emit_csv(rows: &[BenchmarkRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.estimator.as_str().to_string(),
            r.n.to_string(),
            real(r.mse),
            real(r.mse_stderr),
            real(r.samples_used_mean),
            opt_real(r.oracle_bound),
            opt_real(r.uniform_bound),
        ])?;
    }
    w.flush()?;
    w.into_inner()
        .map_err(|e| HarnessError::Io(std::io::Error::other(e.to_string())))
}

/// Rows of a CSV written by [`emit_csv`].
pub fn parse_csv(bytes: &[u8]) -> Result<Vec<BenchmarkRow>> {
    let mut reader = csv::Reader::from_reader(bytes);
    let headers = reader.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(HarnessError::Config(format!(
            "unexpected CSV header {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let bad = |field: &str, v: &str| HarnessError::Config(format!("bad {field} value `{v}`"));
    let num = |field: &str, v: &str| v.parse::<f64>().map_err(|_| bad(field, v));
    let opt = |field: &str, v: &str| -> Result<Option<f64>> {
        if v.is_empty() {
            Ok(None)
        } else {
            num(field, v).map(Some)
        }
    };
    reader
        .records()
        .map(|rec| {
            let rec = rec?;
            Ok(BenchmarkRow {
                estimator: rec[0].parse()?,
                n: rec[1].parse().map_err(|_| bad("n", &rec[1]))?,
                mse: num("mse", &rec[2])?,
                mse_stderr: num("mse_stderr", &rec[3])?,
                samples_used_mean: num("samples_used_mean", &rec[4])?,
                oracle_bound: opt("oracle_bound", &rec[5])?,
                uniform_bound: opt("uniform_bound", &rec[6])?,
            })
        })
        .collect()
}

pub fn write_output(bytes: &[u8], path: Option<&std::path::Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}
