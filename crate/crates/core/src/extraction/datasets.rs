use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::constants::units;
use crate::error::{Error, Result};
use crate::fit::{linear_wls, linear_wls_design, nonlinear_ls, Basis, FitConfig, FitProblem};

/// Resonators sharing one inductor, measured at different capacitor areas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaFrequencyDataset {
    /// (area in µm², frequency in Hz).
    pub rows: Vec<(f64, f64)>,
    /// Effective inductance, H.
    pub inductance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaFrequencyFit {
    /// Capacitance per area, F/µm².
    pub cap_per_area: f64,
    /// Capacitance to ground, F.
    pub cap_to_ground: f64,
    /// Covariance of (cap_per_area, cap_to_ground) in F/µm² and F. NaN when
    /// the data determine the parameters exactly.
    pub covariance: [[f64; 2]; 2],
    pub cap_per_area_err: f64,
    pub cap_to_ground_err: f64,
    /// RMS frequency residual, Hz.
    pub residual_rms: f64,
    pub converged: bool,
}

/// Scale factors for [`frequency_area_curve`] parameters.
pub const AREA_PARAM_SCALES: [f64; 2] = [1.0, 1.0];

/// f(S) in GHz for `params = [c (fF/µm²), C_g (fF)]` at areas in µm² and
/// inductance in H.
pub fn frequency_area_curve(params: &[f64], areas_um2: &[f64], inductance: f64) -> Vec<f64> {
    areas_um2
        .iter()
        .map(|s| {
            let c = (params[1] + params[0] * s) * units::FEMTOFARAD;
            1e-9 / (2.0 * PI * (inductance * c).sqrt())
        })
        .collect()
}

/// Nonlinear least squares of f = 1/(2π√(L(C_g + c·S))) over the rows.
pub fn fit_frequency_vs_area(ds: &AreaFrequencyDataset) -> Result<AreaFrequencyFit> {
    fit_frequency_vs_area_with(ds, &FitConfig::default())
}

pub fn fit_frequency_vs_area_with(
    ds: &AreaFrequencyDataset,
    config: &FitConfig,
) -> Result<AreaFrequencyFit> {
    if ds.rows.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: ds.rows.len(),
        });
    }
    if !(ds.inductance > 0.0 && ds.inductance.is_finite()) {
        return Err(Error::Domain(format!(
            "inductance must be positive, got {}",
            ds.inductance
        )));
    }
    for &(s, f) in &ds.rows {
        if !(s >= 0.0 && s.is_finite() && f > 0.0 && f.is_finite()) {
            return Err(Error::Domain(format!(
                "invalid row (area {s}, frequency {f})"
            )));
        }
    }
    let mut sorted: Vec<f64> = ds.rows.iter().map(|r| r.0).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DegenerateDataset(
            "capacitor areas must be distinct".into(),
        ));
    }

    let areas: Vec<f64> = ds.rows.iter().map(|r| r.0).collect();
    let freqs_ghz: Vec<f64> = ds.rows.iter().map(|r| r.1 * 1e-9).collect();

    // 1/(L ω²) = C_g + c·S is linear in the parameters and seeds the fit.
    let total_cap_ff: Vec<f64> = ds
        .rows
        .iter()
        .map(|&(_, f)| 1.0 / (ds.inductance * (2.0 * PI * f).powi(2)) / units::FEMTOFARAD)
        .collect();
    let seed =
        linear_wls(&areas, &total_cap_ff, None, &Basis::Polynomial(1)).map_err(|e| match e {
            Error::RankDeficient(m) => Error::DegenerateDataset(m),
            other => other,
        })?;
    let initial = vec![seed.params[1], seed.params[0]];

    let residuals = |p: &[f64]| -> Vec<f64> {
        frequency_area_curve(p, &areas, ds.inductance)
            .into_iter()
            .zip(&freqs_ghz)
            .map(|(m, d)| m - d)
            .collect()
    };
    let problem = FitProblem::new(residuals, initial).with_scales(AREA_PARAM_SCALES.to_vec());
    let fit = nonlinear_ls(&problem, config)?;
    if fit.rank_deficient {
        return Err(Error::DegenerateDataset(
            "normal equations are singular".into(),
        ));
    }

    let ff = units::FEMTOFARAD;
    let cov = &fit.covariance;
    let covariance = [
        [cov[(0, 0)] * ff * ff, cov[(0, 1)] * ff * ff],
        [cov[(1, 0)] * ff * ff, cov[(1, 1)] * ff * ff],
    ];
    Ok(AreaFrequencyFit {
        cap_per_area: fit.params[0] * ff,
        cap_to_ground: fit.params[1] * ff,
        covariance,
        cap_per_area_err: covariance[0][0].sqrt(),
        cap_to_ground_err: covariance[1][1].sqrt(),
        residual_rms: fit.residual_norm / (ds.rows.len() as f64).sqrt() * 1e9,
        converged: fit.converged,
    })
}

/// One measured parallel-plate capacitor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitanceRow {
    /// µm².
    pub area: f64,
    /// F.
    pub capacitance: f64,
    /// Pad-size group; each group carries its own offset.
    pub group: String,
    /// Standard deviation of `capacitance`, F. Unweighted when absent.
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitanceFit {
    /// F/µm².
    pub cap_per_area: f64,
    pub cap_per_area_err: f64,
    /// Offset per group, F.
    pub offsets: BTreeMap<String, f64>,
    pub offset_errors: BTreeMap<String, f64>,
    /// Covariance of (c, offsets in group order) in F/µm² and F.
    pub covariance: Vec<Vec<f64>>,
}

/// C = c·S + C_offset(group): shared slope, one intercept per group, weighted
/// linear least squares.
pub fn fit_capacitance_vs_area(rows: &[CapacitanceRow]) -> Result<CapacitanceFit> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in rows {
        if !(r.area >= 0.0 && r.area.is_finite() && r.capacitance.is_finite()) {
            return Err(Error::Domain(format!(
                "invalid row (area {}, C {})",
                r.area, r.capacitance
            )));
        }
        groups.entry(r.group.as_str()).or_default().push(r.area);
    }
    if groups.is_empty() {
        return Err(Error::InsufficientData { needed: 2, got: 0 });
    }
    for (name, areas) in &groups {
        if areas.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: areas.len(),
            });
        }
        if areas.iter().all(|a| *a == areas[0]) {
            return Err(Error::RankDeficient(format!(
                "all areas in group {name:?} are equal"
            )));
        }
    }
    let names: Vec<&str> = groups.keys().copied().collect();
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();

    let ff = units::FEMTOFARAD;
    let design = DMatrix::from_fn(rows.len(), 1 + names.len(), |i, k| {
        if k == 0 {
            rows[i].area
        } else if index[rows[i].group.as_str()] == k - 1 {
            1.0
        } else {
            0.0
        }
    });
    let y: Vec<f64> = rows.iter().map(|r| r.capacitance / ff).collect();
    let sigma: Option<Vec<f64>> = if rows.iter().all(|r| r.sigma.is_some()) {
        Some(rows.iter().map(|r| r.sigma.unwrap_or(1.0) / ff).collect())
    } else if rows.iter().any(|r| r.sigma.is_some()) {
        return Err(Error::Domain(
            "sigma must be given for every row or none".into(),
        ));
    } else {
        None
    };
    let fit = linear_wls_design(&design, &y, sigma.as_deref())?;
    let scale = if sigma.is_none() && fit.degrees_of_freedom > 0 {
        fit.reduced_chi_square()
    } else {
        1.0
    };
    let n = 1 + names.len();
    let covariance: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| fit.covariance[(i, j)] * scale * ff * ff)
                .collect()
        })
        .collect();
    let offsets = names
        .iter()
        .enumerate()
        .map(|(k, n)| (n.to_string(), fit.params[k + 1] * ff))
        .collect();
    let offset_errors = names
        .iter()
        .enumerate()
        .map(|(k, n)| (n.to_string(), covariance[k + 1][k + 1].sqrt()))
        .collect();
    Ok(CapacitanceFit {
        cap_per_area: fit.params[0] * ff,
        cap_per_area_err: covariance[0][0].sqrt(),
        offsets,
        offset_errors,
        covariance,
    })
}
