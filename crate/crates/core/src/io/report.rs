use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::svg::{LinePlot, SeriesStyle};
use super::{
    column_indices, csv_line, fmt_f64, fmt_opt, parse_f64, parse_opt, read_records, read_text,
    split_comments, write_atomic,
};
use crate::error::{Error, Result};
use crate::notch::Trace;

pub const RESONATORS_SCHEMA: &str = "resonators/v1";
const COMPARISON_SCHEMA: &str = "comparison/v1";
const MANIFEST_SCHEMA: &str = "report/v1";

const RESONATOR_COLUMNS: [&str; 8] = [
    "label",
    "freq_hz",
    "area_um2",
    "capacitance_f",
    "q_ext_mean",
    "q_in_low_power",
    "q_in_high_power",
    "tan_delta",
];
const COMPARISON_COLUMNS: [&str; 4] = ["label", "freq_hz_a", "freq_hz_b", "delta_hz"];

/// One resonator in the summary table. Quantities not measured for a
/// resonator are left empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonatorRow {
    pub label: String,
    pub freq_hz: f64,
    pub area_um2: Option<f64>,
    pub capacitance_f: Option<f64>,
    pub q_ext_mean: Option<f64>,
    pub q_in_low_power: Option<f64>,
    pub q_in_high_power: Option<f64>,
    /// Loss tangent at the lowest measured power.
    pub tan_delta: Option<f64>,
}

impl ResonatorRow {
    pub fn new(label: &str, freq_hz: f64) -> Self {
        Self {
            label: label.into(),
            freq_hz,
            area_um2: None,
            capacitance_f: None,
            q_ext_mean: None,
            q_in_low_power: None,
            q_in_high_power: None,
            tan_delta: None,
        }
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.label.clone(),
            fmt_f64(self.freq_hz),
            fmt_opt(self.area_um2),
            fmt_opt(self.capacitance_f),
            fmt_opt(self.q_ext_mean),
            fmt_opt(self.q_in_low_power),
            fmt_opt(self.q_in_high_power),
            fmt_opt(self.tan_delta),
        ]
    }
}

/// Frequency of one resonator in two sessions; `delta_hz = freq_hz_b - freq_hz_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub freq_hz_a: f64,
    pub freq_hz_b: f64,
    pub delta_hz: f64,
}

/// Rows whose labels appear in both sessions, in the order of session `a`.
/// Labels are matched exactly.
pub fn compare_sessions(a: &[ResonatorRow], b: &[ResonatorRow]) -> Vec<ComparisonRow> {
    let later: BTreeMap<&str, f64> = b.iter().map(|r| (r.label.as_str(), r.freq_hz)).collect();
    a.iter()
        .filter_map(|r| {
            later.get(r.label.as_str()).map(|&fb| ComparisonRow {
                label: r.label.clone(),
                freq_hz_a: r.freq_hz,
                freq_hz_b: fb,
                delta_hz: fb - r.freq_hz,
            })
        })
        .collect()
}

/// Measured Q_in against photon number for one resonator, with an optional
/// model curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlot {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub fit_curve: Vec<(f64, f64)>,
}

/// Resonance frequency against capacitor area (µm², GHz), with the fitted curve.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaPlot {
    pub points: Vec<(f64, f64)>,
    pub fit_curve: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportBundle {
    pub rows: Vec<ResonatorRow>,
    pub comparison: Vec<ComparisonRow>,
    pub traces: Vec<Trace>,
    pub sweeps: Vec<SweepPlot>,
    pub area: Option<AreaPlot>,
    /// Input files as given on the command line.
    pub inputs: Vec<String>,
    pub config_hash: String,
}

impl ReportBundle {
    pub fn validate(&self) -> Result<()> {
        let mut labels = BTreeSet::new();
        for r in &self.rows {
            if !labels.insert(r.label.as_str()) {
                return Err(Error::Domain(format!(
                    "duplicate resonator label {:?}",
                    r.label
                )));
            }
            if !r.freq_hz.is_finite() || r.freq_hz <= 0.0 {
                return Err(Error::Domain(format!(
                    "resonator {:?} has frequency {}",
                    r.label, r.freq_hz
                )));
            }
        }
        for c in &self.comparison {
            if c.delta_hz != c.freq_hz_b - c.freq_hz_a {
                return Err(Error::Domain(format!(
                    "comparison delta for {:?} is inconsistent",
                    c.label
                )));
            }
        }
        Ok(())
    }
}

pub fn resonators_csv_string(rows: &[ResonatorRow]) -> String {
    let mut out = format!(
        "# schema = {RESONATORS_SCHEMA}\n{}\n",
        RESONATOR_COLUMNS.join(",")
    );
    for r in rows {
        out.push_str(&csv_line(&r.fields()));
    }
    out
}

fn comparison_csv_string(rows: &[ComparisonRow]) -> String {
    let mut out = format!(
        "# schema = {COMPARISON_SCHEMA}\n{}\n",
        COMPARISON_COLUMNS.join(",")
    );
    for c in rows {
        out.push_str(&csv_line(&[
            c.label.clone(),
            fmt_f64(c.freq_hz_a),
            fmt_f64(c.freq_hz_b),
            fmt_f64(c.delta_hz),
        ]));
    }
    out
}

fn check_schema(meta: &[(String, String)], expected: &str) -> Result<()> {
    match meta.iter().find(|(k, _)| k == "schema") {
        Some((_, v)) if v == expected => Ok(()),
        Some((_, v)) => Err(Error::Schema {
            message: format!("schema {v:?}, expected {expected:?}"),
            columns: vec![],
        }),
        None => Err(Error::Schema {
            message: format!("missing '# schema = {expected}' comment"),
            columns: vec![],
        }),
    }
}

pub fn parse_resonators_csv(path: &Path) -> Result<Vec<ResonatorRow>> {
    parse_resonators_csv_str(&read_text(path)?)
}

pub fn parse_resonators_csv_str(text: &str) -> Result<Vec<ResonatorRow>> {
    let (meta, lines) = split_comments(text);
    check_schema(&meta, RESONATORS_SCHEMA)?;
    if lines.is_empty() {
        return Err(Error::Schema {
            message: "missing header row".into(),
            columns: vec![],
        });
    }
    let (header, rows) = read_records(&lines)?;
    let c = column_indices(&header, &RESONATOR_COLUMNS).ok_or_else(|| Error::Schema {
        message: format!("expected columns {}", RESONATOR_COLUMNS.join(",")),
        columns: header.clone(),
    })?;
    rows.iter()
        .map(|(line, rec)| {
            let opt = |k: usize| parse_opt(&rec[c[k]], *line);
            Ok(ResonatorRow {
                label: rec[c[0]].to_string(),
                freq_hz: parse_f64(&rec[c[1]], *line)?,
                area_um2: opt(2)?,
                capacitance_f: opt(3)?,
                q_ext_mean: opt(4)?,
                q_in_low_power: opt(5)?,
                q_in_high_power: opt(6)?,
                tan_delta: opt(7)?,
            })
        })
        .collect()
}

pub fn parse_comparison_csv_str(text: &str) -> Result<Vec<ComparisonRow>> {
    let (meta, lines) = split_comments(text);
    check_schema(&meta, COMPARISON_SCHEMA)?;
    if lines.is_empty() {
        return Err(Error::Schema {
            message: "missing header row".into(),
            columns: vec![],
        });
    }
    let (header, rows) = read_records(&lines)?;
    let c = column_indices(&header, &COMPARISON_COLUMNS).ok_or_else(|| Error::Schema {
        message: format!("expected columns {}", COMPARISON_COLUMNS.join(",")),
        columns: header.clone(),
    })?;
    rows.iter()
        .map(|(line, rec)| {
            Ok(ComparisonRow {
                label: rec[c[0]].to_string(),
                freq_hz_a: parse_f64(&rec[c[1]], *line)?,
                freq_hz_b: parse_f64(&rec[c[2]], *line)?,
                delta_hz: parse_f64(&rec[c[3]], *line)?,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: &'a str,
    toolkit: &'a str,
    version: &'a str,
    config_hash: &'a str,
    inputs: &'a [String],
    resonators: usize,
    files: Vec<String>,
}

/// File-name-safe form of a label.
fn slug(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() {
        "unlabelled".into()
    } else {
        s
    }
}

fn trace_plot(trace: &Trace, index: usize) -> LinePlot {
    let name = trace
        .label()
        .map_or_else(|| format!("trace {index}"), str::to_string);
    let pts = trace
        .points
        .iter()
        .map(|p| (p.freq * 1e-9, p.s21.norm()))
        .collect();
    LinePlot::new(&format!("|S21| {name}"), "frequency (GHz)", "|S21|").with_series(
        &name,
        pts,
        SeriesStyle::Line,
    )
}

fn sweep_plot(s: &SweepPlot) -> LinePlot {
    let mut plot = LinePlot::new(
        &format!("Q_in vs photon number, {}", s.label),
        "photon number",
        "Q_in",
    )
    .log_axes(true, true)
    .with_series("measured", s.points.clone(), SeriesStyle::Markers);
    if !s.fit_curve.is_empty() {
        plot = plot.with_series("TLS fit", s.fit_curve.clone(), SeriesStyle::Line);
    }
    plot
}

fn area_plot(a: &AreaPlot) -> LinePlot {
    let mut plot = LinePlot::new(
        "resonance frequency vs capacitor area",
        "area (µm²)",
        "frequency (GHz)",
    )
    .with_series("measured", a.points.clone(), SeriesStyle::Markers);
    if !a.fit_curve.is_empty() {
        plot = plot.with_series("fit", a.fit_curve.clone(), SeriesStyle::Line);
    }
    plot
}

/// Writes the tables, plots and `report.json` into `dir` and returns the
/// written paths relative to `dir`, manifest last.
pub fn emit_report(bundle: &ReportBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    bundle.validate()?;
    let plots = dir.join("plots");
    fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;

    let mut files: Vec<(PathBuf, String)> = vec![
        (
            PathBuf::from("resonators.csv"),
            resonators_csv_string(&bundle.rows),
        ),
        (
            PathBuf::from("comparison.csv"),
            comparison_csv_string(&bundle.comparison),
        ),
    ];
    for (i, t) in bundle.traces.iter().enumerate() {
        let name = format!("s21_{i:03}_{}.svg", slug(t.label().unwrap_or("trace")));
        files.push((Path::new("plots").join(name), trace_plot(t, i).to_svg()));
    }
    for s in &bundle.sweeps {
        let name = format!("qin_{}.svg", slug(&s.label));
        files.push((Path::new("plots").join(name), sweep_plot(s).to_svg()));
    }
    if let Some(a) = &bundle.area {
        files.push((
            Path::new("plots").join("frequency_vs_area.svg"),
            area_plot(a).to_svg(),
        ));
    }

    let mut seen = BTreeSet::new();
    for (rel, body) in &files {
        if !seen.insert(rel.clone()) {
            return Err(Error::Domain(format!(
                "two artifacts map to {}",
                rel.display()
            )));
        }
        write_atomic(&dir.join(rel), body.as_bytes())?;
    }

    let manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        toolkit: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_hash: &bundle.config_hash,
        inputs: &bundle.inputs,
        resonators: bundle.rows.len(),
        files: files
            .iter()
            .map(|(p, _)| p.to_string_lossy().replace('\\', "/"))
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    write_atomic(&dir.join("report.json"), json.as_bytes())?;

    let mut out: Vec<PathBuf> = files.into_iter().map(|(p, _)| p).collect();
    out.push(PathBuf::from("report.json"));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table_shaped() -> Vec<ResonatorRow> {
        let f = [
            7.30, 8.91, 9.00, 10.61, 10.76, 10.85, 12.50, 12.62, 12.92, 13.06,
        ];
        f.iter()
            .enumerate()
            .map(|(i, g)| ResonatorRow {
                area_um2: Some(100.0 - 5.0 * i as f64),
                capacitance_f: Some(1.5e-12 - 1e-13 * i as f64),
                q_ext_mean: Some(7e3),
                q_in_low_power: Some(3e3),
                q_in_high_power: Some(3.5e4),
                tan_delta: Some(3.3e-4),
                ..ResonatorRow::new(&format!("R{}", i + 1), g * 1e9)
            })
            .collect()
    }

    #[test]
    fn ten_row_table() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = ReportBundle {
            rows: table_shaped(),
            config_hash: "abc".into(),
            ..Default::default()
        };
        emit_report(&bundle, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("resonators.csv")).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 11);
        assert!(data.iter().all(|l| l.split(',').count() == 8));
        assert_eq!(
            parse_resonators_csv(&dir.path().join("resonators.csv")).unwrap(),
            bundle.rows
        );
    }

    #[test]
    fn empty_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&ReportBundle::default(), dir.path()).unwrap();
        assert_eq!(files.last().unwrap(), Path::new("report.json"));
        assert!(parse_resonators_csv(&dir.path().join("resonators.csv"))
            .unwrap()
            .is_empty());
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["schema"], "report/v1");
        assert_eq!(manifest["resonators"], 0);
    }

    #[test]
    fn seventy_megahertz_shift() {
        let a = table_shaped();
        let mut b = a.clone();
        b[3].freq_hz += 70e6;
        b.push(ResonatorRow::new("unmatched", 5e9));
        let cmp = compare_sessions(&a, &b);
        assert_eq!(cmp.len(), 10);
        assert!((cmp[3].delta_hz - 70e6).abs() < 1e-3);
        assert!(cmp
            .iter()
            .enumerate()
            .all(|(i, c)| i == 3 || c.delta_hz == 0.0));
        assert_eq!(
            parse_comparison_csv_str(&comparison_csv_string(&cmp)).unwrap(),
            cmp
        );
    }

    #[test]
    fn unwritable_directory() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("occupied");
        fs::write(&file, "x").unwrap();
        assert!(matches!(
            emit_report(&ReportBundle::default(), &file),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn schema_is_checked() {
        let text = resonators_csv_string(&table_shaped()).replace("resonators/v1", "resonators/v0");
        assert!(matches!(
            parse_resonators_csv_str(&text),
            Err(Error::Schema { .. })
        ));
    }

    fn opt() -> impl Strategy<Value = Option<f64>> {
        prop::option::of(any::<f64>().prop_filter("finite", |v| v.is_finite()))
    }

    proptest! {
        #[test]
        fn rows_round_trip(
            label in "[ -~]{0,10}",
            f in 1e6f64..1e11,
            vals in (opt(), opt(), opt(), opt(), opt(), opt()),
        ) {
            let row = ResonatorRow {
                label: label.trim().to_string(),
                freq_hz: f,
                area_um2: vals.0,
                capacitance_f: vals.1,
                q_ext_mean: vals.2,
                q_in_low_power: vals.3,
                q_in_high_power: vals.4,
                tan_delta: vals.5,
            };
            let back = parse_resonators_csv_str(&resonators_csv_string(std::slice::from_ref(&row))).unwrap();
            prop_assert_eq!(back, vec![row]);
        }
    }
}
