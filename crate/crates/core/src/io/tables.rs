use std::collections::BTreeMap;
use std::path::Path;

use super::{
    column_indices, csv_line, fmt_f64, fmt_opt, parse_f64, parse_opt, read_records, read_text,
    split_comments,
};
use crate::error::{Error, Result};
use crate::extraction::NotchFitResult;
use crate::loss::{PowerSweep, SweepFitResult, SweepPoint};
use crate::notch::photons_from_power;

const SWEEP_COLUMNS: [&str; 3] = ["photon_number", "q_internal", "sigma"];

pub fn parse_sweep_csv(path: &Path) -> Result<PowerSweep> {
    parse_sweep_csv_str(&read_text(path)?)
}

/// Columns `photon_number,q_internal,sigma`; `# resonator_freq_hz` and
/// `# temperature_k` comments are required.
pub fn parse_sweep_csv_str(text: &str) -> Result<PowerSweep> {
    let (meta, lines) = split_comments(text);
    let meta: BTreeMap<String, String> = meta.into_iter().collect();
    let get = |key: &str| -> Result<f64> {
        let v = meta.get(key).ok_or_else(|| Error::Schema {
            message: format!("missing '# {key} = ...' comment"),
            columns: vec![],
        })?;
        parse_f64(v, 0)
    };
    if lines.is_empty() {
        return Err(Error::Schema {
            message: "missing header row".into(),
            columns: vec![],
        });
    }
    let (header, rows) = read_records(&lines)?;
    let cols = column_indices(&header, &SWEEP_COLUMNS).ok_or_else(|| Error::Schema {
        message: format!("expected columns {}", SWEEP_COLUMNS.join(",")),
        columns: header.clone(),
    })?;
    let points = rows
        .iter()
        .map(|(line, rec)| {
            Ok(SweepPoint {
                photon_number: parse_f64(&rec[cols[0]], *line)?,
                q_internal: parse_f64(&rec[cols[1]], *line)?,
                sigma: parse_f64(&rec[cols[2]], *line)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sweep = PowerSweep {
        points,
        resonator_freq: get("resonator_freq_hz")?,
        temperature: get("temperature_k")?,
    };
    sweep.validate()?;
    Ok(sweep)
}

pub fn sweep_csv_string(sweep: &PowerSweep) -> String {
    let mut out = format!(
        "# resonator_freq_hz = {}\n# temperature_k = {}\n{}\n",
        fmt_f64(sweep.resonator_freq),
        fmt_f64(sweep.temperature),
        SWEEP_COLUMNS.join(",")
    );
    for p in &sweep.points {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(p.photon_number),
            fmt_f64(p.q_internal),
            fmt_f64(p.sigma)
        ));
    }
    out
}

pub const FITS_COLUMNS: [&str; 15] = [
    "label",
    "applied_power_w",
    "photon_number",
    "f_r_hz",
    "f_r_err",
    "q_loaded",
    "q_loaded_err",
    "q_internal",
    "q_internal_err",
    "q_ext_mag",
    "q_ext_err",
    "phi",
    "phi_err",
    "residual_rms",
    "converged",
];

/// One notch fit as stored in `fits.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub label: String,
    pub applied_power_w: Option<f64>,
    pub photon_number: Option<f64>,
    pub f_r_hz: f64,
    pub f_r_err: f64,
    pub q_loaded: f64,
    pub q_loaded_err: f64,
    pub q_internal: f64,
    pub q_internal_err: f64,
    pub q_ext_mag: f64,
    pub q_ext_err: f64,
    pub phi: f64,
    pub phi_err: f64,
    pub residual_rms: f64,
    pub converged: bool,
}

impl FitRow {
    pub fn from_result(label: &str, applied_power: Option<f64>, r: &NotchFitResult) -> Self {
        let photons = applied_power.and_then(|p| photons_from_power(&r.params, p).ok());
        let u = &r.uncertainties;
        Self {
            label: label.to_string(),
            applied_power_w: applied_power,
            photon_number: photons,
            f_r_hz: r.params.f_r,
            f_r_err: u.f_r,
            q_loaded: r.params.q_loaded,
            q_loaded_err: u.q_loaded,
            q_internal: r.q_internal,
            q_internal_err: u.q_internal,
            q_ext_mag: r.params.q_ext_mag,
            q_ext_err: u.q_ext_mag,
            phi: r.params.mismatch_phi,
            phi_err: u.mismatch_phi,
            residual_rms: r.residual_rms,
            converged: r.converged,
        }
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.label.clone(),
            fmt_opt(self.applied_power_w),
            fmt_opt(self.photon_number),
            fmt_f64(self.f_r_hz),
            fmt_f64(self.f_r_err),
            fmt_f64(self.q_loaded),
            fmt_f64(self.q_loaded_err),
            fmt_f64(self.q_internal),
            fmt_f64(self.q_internal_err),
            fmt_f64(self.q_ext_mag),
            fmt_f64(self.q_ext_err),
            fmt_f64(self.phi),
            fmt_f64(self.phi_err),
            fmt_f64(self.residual_rms),
            self.converged.to_string(),
        ]
    }
}

pub fn fits_csv_string(rows: &[FitRow]) -> String {
    let mut out = format!("# schema = fits/v1\n{}\n", FITS_COLUMNS.join(","));
    for r in rows {
        out.push_str(&csv_line(&r.fields()));
    }
    out
}

pub fn parse_fits_csv(path: &Path) -> Result<Vec<FitRow>> {
    parse_fits_csv_str(&read_text(path)?)
}

pub fn parse_fits_csv_str(text: &str) -> Result<Vec<FitRow>> {
    let (_, lines) = split_comments(text);
    if lines.is_empty() {
        return Err(Error::Schema {
            message: "missing header row".into(),
            columns: vec![],
        });
    }
    let (header, rows) = read_records(&lines)?;
    let c = column_indices(&header, &FITS_COLUMNS).ok_or_else(|| Error::Schema {
        message: format!("expected columns {}", FITS_COLUMNS.join(",")),
        columns: header.clone(),
    })?;
    rows.iter()
        .map(|(line, rec)| {
            let num = |k: usize| parse_f64(&rec[c[k]], *line);
            let converged = parse_bool(&rec[c[14]], *line)?;
            Ok(FitRow {
                label: rec[c[0]].to_string(),
                applied_power_w: parse_opt(&rec[c[1]], *line)?,
                photon_number: parse_opt(&rec[c[2]], *line)?,
                f_r_hz: num(3)?,
                f_r_err: num(4)?,
                q_loaded: num(5)?,
                q_loaded_err: num(6)?,
                q_internal: num(7)?,
                q_internal_err: num(8)?,
                q_ext_mag: num(9)?,
                q_ext_err: num(10)?,
                phi: num(11)?,
                phi_err: num(12)?,
                residual_rms: num(13)?,
                converged,
            })
        })
        .collect()
}

/// Groups converged, power-tagged fits by label into power sweeps ordered by
/// photon number. Rows without a positive Q_in error are skipped.
pub fn sweeps_from_fits(rows: &[FitRow], temperature: f64) -> BTreeMap<String, PowerSweep> {
    let mut groups: BTreeMap<String, Vec<&FitRow>> = BTreeMap::new();
    for r in rows {
        if r.converged && r.photon_number.is_some_and(|n| n > 0.0) && r.q_internal_err > 0.0 {
            groups.entry(r.label.clone()).or_default().push(r);
        }
    }
    groups
        .into_iter()
        .map(|(label, mut rs)| {
            rs.sort_by(|a, b| {
                a.photon_number
                    .partial_cmp(&b.photon_number)
                    .expect("finite")
            });
            rs.dedup_by(|a, b| a.photon_number == b.photon_number);
            let freq = rs.iter().map(|r| r.f_r_hz).sum::<f64>() / rs.len() as f64;
            let points = rs
                .iter()
                .map(|r| SweepPoint {
                    photon_number: r.photon_number.unwrap_or_default(),
                    q_internal: r.q_internal,
                    sigma: r.q_internal_err,
                })
                .collect();
            (
                label,
                PowerSweep {
                    points,
                    resonator_freq: freq,
                    temperature,
                },
            )
        })
        .collect()
}

const AREA_COLUMNS: [&str; 3] = ["label", "area_um2", "freq_hz"];

/// One resonator of an area series: label, capacitor area (µm²), resonance
/// frequency (Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct AreaRow {
    pub label: String,
    pub area_um2: f64,
    pub freq_hz: f64,
}

pub fn parse_area_csv(path: &Path) -> Result<Vec<AreaRow>> {
    parse_area_csv_str(&read_text(path)?)
}

pub fn parse_area_csv_str(text: &str) -> Result<Vec<AreaRow>> {
    let (_, lines) = split_comments(text);
    if lines.is_empty() {
        return Err(Error::Schema {
            message: "missing header row".into(),
            columns: vec![],
        });
    }
    let (header, rows) = read_records(&lines)?;
    let c = column_indices(&header, &AREA_COLUMNS).ok_or_else(|| Error::Schema {
        message: format!("expected columns {}", AREA_COLUMNS.join(",")),
        columns: header.clone(),
    })?;
    rows.iter()
        .map(|(line, rec)| {
            Ok(AreaRow {
                label: rec[c[0]].to_string(),
                area_um2: parse_f64(&rec[c[1]], *line)?,
                freq_hz: parse_f64(&rec[c[2]], *line)?,
            })
        })
        .collect()
}

pub fn area_csv_string(rows: &[AreaRow]) -> String {
    let mut out = format!("{}\n", AREA_COLUMNS.join(","));
    for r in rows {
        out.push_str(&csv_line(&[
            r.label.clone(),
            fmt_f64(r.area_um2),
            fmt_f64(r.freq_hz),
        ]));
    }
    out
}

pub const TLS_COLUMNS: [&str; 15] = [
    "label",
    "resonator_freq_hz",
    "tan_delta_tls0",
    "tan_delta_tls0_err",
    "n_critical",
    "n_critical_err",
    "beta",
    "beta_err",
    "tan_delta_other",
    "tan_delta_other_err",
    "reduced_chi_square",
    "points_used",
    "converged",
    "narrow_range",
    "tail_excess",
];

/// One power-sweep fit as stored in `tls.csv`. A fixed β has zero error.
#[derive(Debug, Clone, PartialEq)]
pub struct TlsRow {
    pub label: String,
    pub resonator_freq_hz: f64,
    pub values: [f64; 4],
    pub errors: [f64; 4],
    pub reduced_chi_square: f64,
    pub points_used: usize,
    pub converged: bool,
    pub narrow_range: bool,
    pub tail_excess: bool,
}

impl TlsRow {
    pub fn from_result(label: &str, sweep: &PowerSweep, r: &SweepFitResult) -> Self {
        let p = &r.params;
        Self {
            label: label.to_string(),
            resonator_freq_hz: sweep.resonator_freq,
            values: [p.tan_delta_tls0, p.n_critical, p.beta, p.tan_delta_other],
            errors: r.std_errors,
            reduced_chi_square: r.reduced_chi_square,
            points_used: r.points_used,
            converged: r.converged,
            narrow_range: r.narrow_range,
            tail_excess: r.tail_excess,
        }
    }
}

pub fn tls_csv_string(rows: &[TlsRow]) -> String {
    let mut out = format!("# schema = tls/v1\n{}\n", TLS_COLUMNS.join(","));
    for r in rows {
        let mut fields = vec![r.label.clone(), fmt_f64(r.resonator_freq_hz)];
        for k in 0..4 {
            fields.push(fmt_f64(r.values[k]));
            fields.push(fmt_f64(r.errors[k]));
        }
        fields.push(fmt_f64(r.reduced_chi_square));
        fields.push(r.points_used.to_string());
        fields.push(r.converged.to_string());
        fields.push(r.narrow_range.to_string());
        fields.push(r.tail_excess.to_string());
        out.push_str(&csv_line(&fields));
    }
    out
}

fn parse_bool(field: &str, line: usize) -> Result<bool> {
    match field.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Format {
            line,
            message: format!("expected true or false, got {other:?}"),
        }),
    }
}

pub fn parse_tls_csv_str(text: &str) -> Result<Vec<TlsRow>> {
    let (_, lines) = split_comments(text);
    if lines.is_empty() {
        return Err(Error::Schema {
            message: "missing header row".into(),
            columns: vec![],
        });
    }
    let (header, rows) = read_records(&lines)?;
    let c = column_indices(&header, &TLS_COLUMNS).ok_or_else(|| Error::Schema {
        message: format!("expected columns {}", TLS_COLUMNS.join(",")),
        columns: header.clone(),
    })?;
    rows.iter()
        .map(|(line, rec)| {
            let num = |k: usize| parse_f64(&rec[c[k]], *line);
            let mut values = [0.0; 4];
            let mut errors = [0.0; 4];
            for k in 0..4 {
                values[k] = num(2 + 2 * k)?;
                errors[k] = num(3 + 2 * k)?;
            }
            Ok(TlsRow {
                label: rec[c[0]].to_string(),
                resonator_freq_hz: num(1)?,
                values,
                errors,
                reduced_chi_square: num(10)?,
                points_used: rec[c[11]].trim().parse().map_err(|_| Error::Format {
                    line: *line,
                    message: format!("points_used must be an integer, got {:?}", &rec[c[11]]),
                })?,
                converged: parse_bool(&rec[c[12]], *line)?,
                narrow_range: parse_bool(&rec[c[13]], *line)?,
                tail_excess: parse_bool(&rec[c[14]], *line)?,
            })
        })
        .collect()
}
