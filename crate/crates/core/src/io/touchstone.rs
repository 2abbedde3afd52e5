use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;

use super::{parse_f64, read_text};
use crate::error::{Error, Result};
use crate::notch::{check_increasing, Trace, TracePoint};

/// Which S-parameter to extract: `S{to}{from}`, ports 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortPair {
    pub to: u8,
    pub from: u8,
}

impl PortPair {
    pub const S21: PortPair = PortPair { to: 2, from: 1 };

    /// Column among the four values of a two-port line (S11 S21 S12 S22).
    fn column(self) -> Result<usize> {
        match (self.to, self.from) {
            (1, 1) => Ok(0),
            (2, 1) => Ok(1),
            (1, 2) => Ok(2),
            (2, 2) => Ok(3),
            _ => Err(Error::Domain(format!(
                "ports must be 1 or 2, got S{}{}",
                self.to, self.from
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum DataFormat {
    RealImag,
    MagAngle,
    DbAngle,
}

pub fn parse_touchstone(path: &Path, ports: PortPair) -> Result<Trace> {
    parse_touchstone_str(&read_text(path)?, ports)
}

/// Touchstone v1 two-port data: `!` comments, one `#` option line before the
/// data, nine values per frequency line.
pub fn parse_touchstone_str(text: &str, ports: PortPair) -> Result<Trace> {
    let column = ports.column()?;
    let mut options: Option<(f64, DataFormat)> = None;
    let mut points = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if options.is_none() {
                options = Some(parse_options(rest, line_no)?);
            }
            continue;
        }
        let (unit, format) = options.ok_or(Error::Format {
            line: line_no,
            message: "data before the '#' option line".into(),
        })?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.len() {
            9 => {}
            3 => {
                return Err(Error::Structure(format!(
                    "line {line_no} holds one-port data; a two-port file is required"
                )))
            }
            n => {
                return Err(Error::Format {
                    line: line_no,
                    message: format!("expected 9 values for two-port data, found {n}"),
                })
            }
        }
        let values: Vec<f64> = tokens
            .iter()
            .map(|t| parse_f64(t, line_no))
            .collect::<Result<_>>()?;
        let (a, b) = (values[1 + 2 * column], values[2 + 2 * column]);
        let s = match format {
            DataFormat::RealImag => Complex64::new(a, b),
            DataFormat::MagAngle => Complex64::from_polar(a, b * PI / 180.0),
            DataFormat::DbAngle => Complex64::from_polar(10f64.powf(a / 20.0), b * PI / 180.0),
        };
        points.push(TracePoint {
            freq: values[0] * unit,
            s21: s,
        });
    }
    if options.is_none() {
        return Err(Error::Format {
            line: 0,
            message: "missing '#' option line".into(),
        });
    }
    if points.is_empty() {
        return Err(Error::Structure("no data lines".into()));
    }
    check_increasing(points.iter().map(|p| p.freq))?;
    let mut metadata = BTreeMap::new();
    metadata.insert("parameter".into(), format!("S{}{}", ports.to, ports.from));
    Ok(Trace {
        points,
        applied_power: None,
        metadata,
    })
}

/// `# <unit> <parameter> <format> R <ohms>` in any order; omitted fields take
/// the Touchstone defaults GHz, S, MA.
fn parse_options(rest: &str, line: usize) -> Result<(f64, DataFormat)> {
    let mut unit = 1e9;
    let mut format = DataFormat::MagAngle;
    let mut tokens = rest.split_whitespace();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => unit = 1.0,
            "KHZ" => unit = 1e3,
            "MHZ" => unit = 1e6,
            "GHZ" => unit = 1e9,
            "S" => {}
            p @ ("Y" | "Z" | "H" | "G") => {
                return Err(Error::Unsupported(format!(
                    "{p}-parameter files are not supported"
                )))
            }
            "RI" => format = DataFormat::RealImag,
            "MA" => format = DataFormat::MagAngle,
            "DB" => format = DataFormat::DbAngle,
            "R" => {
                let r = tokens.next().ok_or(Error::Format {
                    line,
                    message: "reference impedance missing after R".into(),
                })?;
                parse_f64(r, line)?;
            }
            other => {
                return Err(Error::Format {
                    line,
                    message: format!("unknown option {other:?}"),
                })
            }
        }
    }
    Ok((unit, format))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_trace_csv_str;

    const RI: &str = "! two-port\n# HZ S RI R 50\n7.3e9 0.1 0 0.6667 0 0.6667 0 0.1 0\n7.4e9 0.1 0 0.5 0.25 0.5 0.25 0.1 0\n";

    #[test]
    fn ri_matches_csv() {
        let t = parse_touchstone_str(RI, PortPair::S21).unwrap();
        let csv = parse_trace_csv_str("freq_hz,re,im\n7.30e9,0.6667,0.0\n").unwrap();
        assert_eq!(t.points[0], csv.points[0]);
        assert_eq!(t.points[1].s21, Complex64::new(0.5, 0.25));
        let s11 = parse_touchstone_str(RI, PortPair { to: 1, from: 1 }).unwrap();
        assert_eq!(s11.points[0].s21, Complex64::new(0.1, 0.0));
    }

    #[test]
    fn db_and_ma_match_ri() {
        let ri = parse_touchstone_str(RI, PortPair::S21).unwrap();
        let line = |f: f64, z: Complex64, db: bool| {
            let a = if db {
                20.0 * z.norm().log10()
            } else {
                z.norm()
            };
            let ang = z.arg() * 180.0 / PI;
            format!("{f} 0.1 0 {a} {ang} {a} {ang} 0.1 0\n")
        };
        for (db, opt) in [(true, "# GHZ S DB R 50\n"), (false, "# ghz s ma r 50\n")] {
            let mut text = opt.to_string();
            for p in &ri.points {
                text.push_str(&line(p.freq * 1e-9, p.s21, db));
            }
            let t = parse_touchstone_str(&text, PortPair::S21).unwrap();
            for (a, b) in t.points.iter().zip(&ri.points) {
                assert!((a.freq - b.freq).abs() <= 1e-9 * b.freq);
                assert!((a.s21 - b.s21).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn malformed_files() {
        assert!(matches!(
            parse_touchstone_str("7.3e9 0.1 0 0.6 0 0.6 0 0.1 0\n", PortPair::S21),
            Err(Error::Format { .. })
        ));
        assert!(matches!(
            parse_touchstone_str("# HZ S RI R 50\n", PortPair::S21),
            Err(Error::Structure(_))
        ));
        assert!(matches!(
            parse_touchstone_str("# HZ Z RI R 50\n7.3e9 1 0 1 0 1 0 1 0\n", PortPair::S21),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            parse_touchstone_str("# HZ S RI R 50\n7.3e9 0.6 0.1\n", PortPair::S21),
            Err(Error::Structure(_))
        ));
        assert!(matches!(
            parse_touchstone_str("# HZ S RI R 50\n7.3e9 0.6 0.1 1\n", PortPair::S21),
            Err(Error::Format { line: 2, .. })
        ));
        assert!(matches!(
            parse_touchstone_str(RI, PortPair { to: 3, from: 1 }),
            Err(Error::Domain(_))
        ));
    }
}
