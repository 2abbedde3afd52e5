use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;

use super::{
    column_indices, fmt_f64, parse_f64, read_records, read_text, split_comments, write_atomic,
};
use crate::error::{Error, Result};
use crate::notch::{check_increasing, Trace, TracePoint};

const POWER_KEY: &str = "applied_power_w";

pub fn parse_trace_csv(path: &Path) -> Result<Trace> {
    parse_trace_csv_str(&read_text(path)?)
}

/// Header `freq_hz,re,im` or `freq_hz,mag_db,phase_rad`, any column order.
/// `# key = value` comments become metadata; `applied_power_w` sets the power.
pub fn parse_trace_csv_str(text: &str) -> Result<Trace> {
    let (meta, lines) = split_comments(text);
    if lines.is_empty() {
        return Err(Error::Schema {
            message: "missing header row".into(),
            columns: vec![],
        });
    }
    let (header, rows) = read_records(&lines)?;
    let (cols, polar) = if let Some(c) = column_indices(&header, &["freq_hz", "re", "im"]) {
        (c, false)
    } else if let Some(c) = column_indices(&header, &["freq_hz", "mag_db", "phase_rad"]) {
        (c, true)
    } else {
        return Err(Error::Schema {
            message: "expected columns freq_hz,re,im or freq_hz,mag_db,phase_rad".into(),
            columns: header,
        });
    };

    let mut points = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        let f = parse_f64(&rec[cols[0]], *line)?;
        let a = parse_f64(&rec[cols[1]], *line)?;
        let b = parse_f64(&rec[cols[2]], *line)?;
        let s21 = if polar {
            Complex64::from_polar(10f64.powf(a / 20.0), b)
        } else {
            Complex64::new(a, b)
        };
        points.push(TracePoint { freq: f, s21 });
    }
    check_increasing(points.iter().map(|p| p.freq))?;

    let mut trace = Trace {
        points,
        applied_power: None,
        metadata: BTreeMap::new(),
    };
    for (k, v) in meta {
        if k == POWER_KEY {
            trace.applied_power = Some(parse_f64(&v, 0)?);
        } else {
            trace.metadata.insert(k, v);
        }
    }
    Ok(trace)
}

/// Rectangular-form CSV; parses back to the identical trace.
pub fn trace_csv_string(trace: &Trace) -> String {
    let mut out = String::new();
    if let Some(p) = trace.applied_power {
        out.push_str(&format!("# {POWER_KEY} = {}\n", fmt_f64(p)));
    }
    for (k, v) in &trace.metadata {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str("freq_hz,re,im\n");
    for p in &trace.points {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(p.freq),
            fmt_f64(p.s21.re),
            fmt_f64(p.s21.im)
        ));
    }
    out
}

pub fn write_trace_csv(path: &Path, trace: &Trace) -> Result<()> {
    trace.validate()?;
    for (k, v) in &trace.metadata {
        let bad = |s: &str| s.contains(['\n', '\r', '=']) || s.trim() != s || s.is_empty();
        if bad(k) || v.contains(['\n', '\r']) || v.trim() != v {
            return Err(Error::Domain(format!(
                "metadata entry {k:?} = {v:?} cannot be stored"
            )));
        }
    }
    write_atomic(path, trace_csv_string(trace).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rectangular_row() {
        let t = parse_trace_csv_str("freq_hz,re,im\n7.30e9,0.6667,0.0\n").unwrap();
        assert_eq!(t.points[0].freq, 7.30e9);
        assert_eq!(t.points[0].s21, Complex64::new(0.6667, 0.0));
    }

    #[test]
    fn polar_row() {
        let t = parse_trace_csv_str("# label = r1\nfreq_hz,mag_db,phase_rad\n7.30e9,-3.5218,0.0\n")
            .unwrap();
        assert!((t.points[0].s21.norm() - 2.0 / 3.0).abs() < 1e-4);
        assert_eq!(t.label(), Some("r1"));
    }

    #[test]
    fn reordered_columns_and_power() {
        let t = parse_trace_csv_str("# applied_power_w = 1e-17\nim, freq_hz, re\n0.5,1e9,0.25\n")
            .unwrap();
        assert_eq!(t.points[0].s21, Complex64::new(0.25, 0.5));
        assert_eq!(t.applied_power, Some(1e-17));
    }

    #[test]
    fn unknown_header() {
        match parse_trace_csv_str("f,x,y\n1,2,3\n") {
            Err(Error::Schema { columns, .. }) => assert_eq!(columns, vec!["f", "x", "y"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_monotonic_frequency() {
        let r = parse_trace_csv_str("freq_hz,re,im\n1,0,0\n2,0,0\n2,0,0\n3,0,0\n");
        assert!(matches!(r, Err(Error::Ordering { row: 2 })));
    }

    #[test]
    fn bad_number_reports_line() {
        let r = parse_trace_csv_str("# c\nfreq_hz,re,im\n1,0,0\n2,x,0\n");
        assert!(matches!(r, Err(Error::Format { line: 4, .. })));
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            any::<f64>().prop_filter("finite", |v| v.is_finite()),
            -1.0f64..1.0
        ]
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(
            start in 1.0f64..1e10,
            steps in prop::collection::vec((1e-3f64..1e6, finite(), finite()), 1..40),
            power in prop::option::of(0.0f64..1e-3),
            label in "[a-zA-Z0-9_]{1,12}",
        ) {
            let mut f = start;
            let points: Vec<TracePoint> = steps
                .iter()
                .map(|(df, re, im)| {
                    f += df;
                    TracePoint { freq: f, s21: Complex64::new(*re, *im) }
                })
                .collect();
            let mut trace = Trace::new(points).unwrap().with_label(&label);
            trace.applied_power = power;
            let back = parse_trace_csv_str(&trace_csv_string(&trace)).unwrap();
            prop_assert_eq!(back.points.len(), trace.points.len());
            for (a, b) in back.points.iter().zip(&trace.points) {
                prop_assert_eq!(a.freq.to_bits(), b.freq.to_bits());
                prop_assert_eq!(a.s21.re.to_bits(), b.s21.re.to_bits());
                prop_assert_eq!(a.s21.im.to_bits(), b.s21.im.to_bits());
            }
            prop_assert_eq!(back.applied_power.map(f64::to_bits), trace.applied_power.map(f64::to_bits));
            prop_assert_eq!(back.metadata, trace.metadata);
        }
    }
}
