//! CSV and JSON emitters. Numbers use the shortest round-trip decimal form.

use std::fmt::Write as _;

use super::config::OutputFormat;
use super::ensemble::EnsembleSummary;
use crate::error::{Error, Result};

pub fn csv_header(n: usize) -> String {
    let mut h = String::from("t,mean_delta,stderr_delta");
    for i in 0..n {
        let _ = write!(h, ",lambda_{i}");
    }
    h.push_str(",phase");
    h
}

pub fn to_csv(s: &EnsembleSummary) -> String {
    let n = s.mean_lambdas.first().map_or(0, |l| l.len());
    let mut out = csv_header(n);
    out.push('\n');
    for i in 0..s.times.len() {
        let _ = write!(out, "{},{},{}", s.times[i], s.mean_delta[i], s.stderr_delta[i]);
        for l in &s.mean_lambdas[i] {
            let _ = write!(out, ",{l}");
        }
        let _ = writeln!(out, ",{}", s.phases[i]);
    }
    out
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub mean_delta: f64,
    pub stderr_delta: f64,
    pub lambdas: Vec<f64>,
    pub phase: String,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Io("empty csv".into()))?;
    let cols = header.split(',').count();
    if cols < 4 {
        return Err(Error::Io(format!("bad csv header `{header}`")));
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != cols {
                return Err(Error::Io(format!("bad csv row `{line}`")));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Io(format!("bad number `{s}`")))
            };
            Ok(CsvRow {
                t: num(f[0])?,
                mean_delta: num(f[1])?,
                stderr_delta: num(f[2])?,
                lambdas: f[3..cols - 1].iter().map(|s| num(s)).collect::<Result<_>>()?,
                phase: f[cols - 1].to_string(),
            })
        })
        .collect()
}

pub fn to_json(s: &EnsembleSummary) -> Result<String> {
    serde_json::to_string_pretty(s).map_err(|e| Error::Io(e.to_string()))
}

pub fn from_json(text: &str) -> Result<EnsembleSummary> {
    serde_json::from_str(text).map_err(|e| Error::Io(e.to_string()))
}

pub fn render(s: &EnsembleSummary, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => Ok(to_csv(s)),
        OutputFormat::Json => to_json(s),
    }
}
