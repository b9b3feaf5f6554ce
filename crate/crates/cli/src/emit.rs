//! Deterministic CSV / JSON serialization of reports.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde_json::{Map, Value};

use crate::args::{Format, OUT_DIR_ENV};

/// Largest magnitude that survives a round trip through an IEEE double.
pub const JSON_SAFE_INTEGER: u64 = 1 << 53;

/// A tabular view for CSV plus a structured view for JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub json: Value,
    /// Witness of a failed invariant; the report is still emitted.
    pub failure: Option<String>,
}

impl Report {
    pub fn new(header: Vec<&'static str>, json: Value) -> Self {
        Self { header, rows: Vec::new(), json, failure: None }
    }
}

/// Exact integer as a JSON number when it is safe, otherwise as a decimal string.
pub fn int_json(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) if v.unsigned_abs() <= JSON_SAFE_INTEGER => Value::from(v),
        _ => Value::String(x.to_string()),
    }
}

/// Inverse of [`int_json`].
pub fn json_int(v: &Value) -> Result<BigInt> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .or_else(|| n.as_u64().map(BigInt::from))
            .with_context(|| format!("{n} is not an integer")),
        Value::String(s) => s.parse().with_context(|| format!("{s:?} is not a decimal integer")),
        other => anyhow::bail!("expected an integer, found {other}"),
    }
}

/// Builds an object; `serde_json::Map` keeps keys sorted.
pub fn object<const N: usize>(fields: [(&str, Value); N]) -> Value {
    Value::Object(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>())
}

pub fn write_report(report: &Report, format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&report.header)?;
            for row in &report.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &report.json)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Where output goes: `None` is stdout.
pub fn resolve_output(explicit: Option<&Path>, subcommand: &str, format: Format) -> Option<PathBuf> {
    let dir = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()).map(PathBuf::from);
    match (explicit, dir) {
        (Some(p), _) if p == Path::new("-") => None,
        (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(dir)) => Some(dir.join(format!("{subcommand}.{}", format.extension()))),
        (None, None) => None,
    }
}

pub fn emit(report: &Report, format: Format, path: Option<&Path>) -> Result<()> {
    match path {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_report(report, format, &mut lock)
        }
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            write_report(report, format, &mut w).with_context(|| format!("writing {}", path.display()))?;
            w.flush().with_context(|| format!("writing {}", path.display()))
        }
    }
}
