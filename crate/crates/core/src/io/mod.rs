//! File formats: trace CSV, Touchstone v1, power-sweep and fit tables, run
//! configuration, and the report bundle with its SVG plots.

mod config;
mod report;
mod svg;
mod tables;
mod touchstone;
mod trace_csv;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use config::{
    config_hash, parse_design_kv, write_design_kv, PhysicsConfig, RunConfig, Workflow,
};
pub use report::{
    compare_sessions, emit_report, parse_comparison_csv_str, parse_resonators_csv,
    parse_resonators_csv_str, resonators_csv_string, AreaPlot, ComparisonRow, ReportBundle,
    ResonatorRow, SweepPlot, RESONATORS_SCHEMA,
};
pub use svg::{LinePlot, Series, SeriesStyle};
pub use tables::{
    area_csv_string, fits_csv_string, parse_area_csv, parse_area_csv_str, parse_fits_csv,
    parse_fits_csv_str, parse_sweep_csv, parse_sweep_csv_str, parse_tls_csv_str, sweep_csv_string,
    sweeps_from_fits, tls_csv_string, AreaRow, FitRow, TlsRow, FITS_COLUMNS, TLS_COLUMNS,
};
pub use touchstone::{parse_touchstone, parse_touchstone_str, PortPair};
pub use trace_csv::{parse_trace_csv, parse_trace_csv_str, trace_csv_string, write_trace_csv};

use crate::error::{Error, Result};

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Domain(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Shortest representation that parses back to the same bits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub(crate) fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Format {
        line,
        message: format!("not a number: {field:?}"),
    })
}

pub(crate) fn parse_opt(field: &str, line: usize) -> Result<Option<f64>> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(field, line).map(Some)
    }
}

/// Splits `text` into `# key = value` comment entries and the remaining data
/// lines, keeping the 1-based line number of each data line.
pub(crate) fn split_comments(text: &str) -> (Vec<(String, String)>, Vec<(usize, &str)>) {
    let mut meta = Vec::new();
    let mut data = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else if !trimmed.is_empty() {
            data.push((i + 1, line));
        }
    }
    (meta, data)
}

/// Reads comma-separated data lines (header first) with the csv crate.
pub(crate) fn read_records(
    lines: &[(usize, &str)],
) -> Result<(Vec<String>, Vec<(usize, csv::StringRecord)>)> {
    let joined: String = lines.iter().map(|(_, l)| format!("{l}\n")).collect();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(joined.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Format {
            line: lines.first().map_or(1, |l| l.0),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let line = lines.get(k + 1).map_or(0, |l| l.0);
        let rec = rec.map_err(|e| Error::Format {
            line,
            message: e.to_string(),
        })?;
        rows.push((line, rec));
    }
    Ok((header, rows))
}

/// Index of each expected column in `header`, or a schema error listing the
/// columns that were found.
pub(crate) fn column_indices(header: &[String], expected: &[&str]) -> Option<Vec<usize>> {
    if header.len() != expected.len() {
        return None;
    }
    expected
        .iter()
        .map(|name| header.iter().position(|h| h == name))
        .collect()
}

/// One CSV record. A leading field that starts with `#` is quoted so the line
/// is not read back as a comment.
pub(crate) fn csv_line(fields: &[String]) -> String {
    let style = if fields
        .first()
        .is_some_and(|f| f.trim_start().starts_with('#'))
    {
        csv::QuoteStyle::Always
    } else {
        csv::QuoteStyle::Necessary
    };
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .quote_style(style)
        .from_writer(vec![]);
    writer.write_record(fields).expect("in-memory write");
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}
