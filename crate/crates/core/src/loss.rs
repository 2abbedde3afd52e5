//! Dielectric loss: tan δ bookkeeping, thermal saturation and the
//! two-level-system power dependence, with a fitter for power sweeps.

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, PLANCK};
use crate::error::{Error, Result};
use crate::fit::{nonlinear_ls, FitConfig, FitProblem, SigmaMode};
use crate::notch::check_increasing;

/// Default saturation exponent.
pub const DEFAULT_BETA: f64 = 0.5;
/// Minimum photon-number span, in decades, for a well-conditioned sweep fit.
pub const MIN_DECADES: f64 = 3.0;
/// Mean standardised residual of the highest-power points above which the
/// tail is flagged as rising above the model.
const TAIL_EXCESS_LIMIT: f64 = 2.0;
const TAIL_POINTS: usize = 3;

/// tan δ = 1/Q_in.
pub fn tan_delta_from_q(q_internal: f64) -> f64 {
    1.0 / q_internal
}

/// tanh(hf / 2k_BT). `temperature = 0` gives the zero-temperature limit.
pub fn thermal_factor(freq: f64, temperature: f64) -> f64 {
    (PLANCK * freq / (2.0 * BOLTZMANN * temperature)).tanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsFitParams {
    pub tan_delta_tls0: f64,
    /// Critical photon number.
    pub n_critical: f64,
    pub beta: f64,
    /// Power-independent loss.
    pub tan_delta_other: f64,
}

impl TlsFitParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tan_delta_tls0 >= 0.0 && self.tan_delta_other >= 0.0) {
            return Err(Error::Domain("loss tangents must be non-negative".into()));
        }
        if !(self.n_critical > 0.0 && self.n_critical.is_finite()) {
            return Err(Error::Domain(format!(
                "n_critical must be positive, got {}",
                self.n_critical
            )));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Domain(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// tan δ(n) = tan δ_TLS0 · tanh(hf/2k_BT) / (1 + n/n_c)^β + tan δ_other.
pub fn tls_tan_delta(photons: f64, p: &TlsFitParams, freq: f64, temperature: f64) -> f64 {
    tls_term(
        photons,
        p.tan_delta_tls0,
        p.n_critical,
        p.beta,
        thermal_factor(freq, temperature),
    ) + p.tan_delta_other
}

fn tls_term(n: f64, tls0: f64, n_c: f64, beta: f64, thermal: f64) -> f64 {
    tls0 * thermal / (1.0 + n / n_c).powf(beta)
}

/// Step scales for [`tls_curve`] parameters.
pub const TLS_PARAM_SCALES: [f64; 4] = [1e-4, 1.0, 1.0, 1e-4];

/// tan δ at each photon number for `params = [tls0, n_c, β, other]` and a
/// fixed thermal factor.
pub fn tls_curve(params: &[f64], photons: &[f64], thermal: f64) -> Vec<f64> {
    photons
        .iter()
        .map(|&n| tls_term(n, params[0], params[1], params[2], thermal) + params[3])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub photon_number: f64,
    pub q_internal: f64,
    /// Standard deviation of `q_internal`.
    pub sigma: f64,
}

/// Internal quality factor of one resonator against drive strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSweep {
    pub points: Vec<SweepPoint>,
    /// Hz.
    pub resonator_freq: f64,
    /// K.
    pub temperature: f64,
}

impl PowerSweep {
    pub fn validate(&self) -> Result<()> {
        check_increasing(self.points.iter().map(|p| p.photon_number))?;
        for p in &self.points {
            if !(p.photon_number > 0.0) {
                return Err(Error::Domain(format!(
                    "photon number must be positive, got {}",
                    p.photon_number
                )));
            }
            if !(p.q_internal > 0.0 && p.q_internal.is_finite()) {
                return Err(Error::Domain(format!(
                    "Q_in must be positive, got {}",
                    p.q_internal
                )));
            }
            if !(p.sigma > 0.0 && p.sigma.is_finite()) {
                return Err(Error::Domain(format!(
                    "sigma must be positive, got {}",
                    p.sigma
                )));
            }
        }
        if !(self.resonator_freq > 0.0) {
            return Err(Error::Domain("resonator frequency must be positive".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::Domain("temperature must be non-negative".into()));
        }
        Ok(())
    }

    /// Photon-number span in decades.
    pub fn decades(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => (b.photon_number / a.photon_number).log10(),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaMode {
    /// Fit β starting from the given value.
    Free(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepFitOptions {
    pub beta: BetaMode,
    /// Points above this photon number are excluded.
    pub n_max: Option<f64>,
    pub config: FitConfig,
}

impl Default for SweepFitOptions {
    fn default() -> Self {
        Self {
            beta: BetaMode::Fixed(DEFAULT_BETA),
            n_max: None,
            config: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFitResult {
    pub params: TlsFitParams,
    /// Order (tls0, n_c, β, other); the β row and column are zero when β is fixed.
    pub covariance: [[f64; 4]; 4],
    pub std_errors: [f64; 4],
    pub reduced_chi_square: f64,
    pub points_used: usize,
    pub converged: bool,
    /// Fewer than [`MIN_DECADES`] of photon number after masking.
    pub narrow_range: bool,
    /// The highest-power points sit systematically above the model.
    pub tail_excess: bool,
}

pub fn fit_power_sweep(sweep: &PowerSweep) -> Result<SweepFitResult> {
    fit_power_sweep_with(sweep, &SweepFitOptions::default())
}

/// Weighted least squares of tan δ = 1/Q_in with σ_tanδ = σ_Q/Q².
pub fn fit_power_sweep_with(
    sweep: &PowerSweep,
    options: &SweepFitOptions,
) -> Result<SweepFitResult> {
    sweep.validate()?;
    let points: Vec<SweepPoint> = sweep
        .points
        .iter()
        .filter(|p| options.n_max.is_none_or(|m| p.photon_number <= m))
        .copied()
        .collect();
    let fixed_beta = match options.beta {
        BetaMode::Fixed(b) => Some(b),
        BetaMode::Free(_) => None,
    };
    let n_params = if fixed_beta.is_some() { 3 } else { 4 };
    if points.len() < 4.max(n_params) {
        return Err(Error::InsufficientData {
            needed: 4,
            got: points.len(),
        });
    }
    let beta0 = match options.beta {
        BetaMode::Free(b) | BetaMode::Fixed(b) => b,
    };
    if !(beta0 > 0.0 && beta0 <= 1.0) {
        return Err(Error::Domain(format!(
            "beta must lie in (0, 1], got {beta0}"
        )));
    }

    let thermal = thermal_factor(sweep.resonator_freq, sweep.temperature);
    let photons: Vec<f64> = points.iter().map(|p| p.photon_number).collect();
    let tan: Vec<f64> = points
        .iter()
        .map(|p| tan_delta_from_q(p.q_internal))
        .collect();
    let sigma_tan: Vec<f64> = points
        .iter()
        .map(|p| p.sigma / (p.q_internal * p.q_internal))
        .collect();
    let weights: Vec<f64> = sigma_tan.iter().map(|s| 1.0 / (s * s)).collect();

    let (tls0_guess, nc_guess, other_guess) = initial_guess(&photons, &tan, thermal, beta0);
    let expand = |p: &[f64]| -> [f64; 4] {
        match fixed_beta {
            Some(b) => [p[0], p[1], b, p[2]],
            None => [p[0], p[1], p[2], p[3]],
        }
    };
    let residuals = |p: &[f64]| -> Vec<f64> {
        tls_curve(&expand(p), &photons, thermal)
            .into_iter()
            .zip(&tan)
            .map(|(m, d)| m - d)
            .collect()
    };
    let (initial, bounds, scales) = match fixed_beta {
        Some(_) => (
            vec![tls0_guess, nc_guess, other_guess],
            vec![
                (0.0, f64::INFINITY),
                (1e-12, f64::INFINITY),
                (0.0, f64::INFINITY),
            ],
            vec![
                TLS_PARAM_SCALES[0],
                TLS_PARAM_SCALES[1],
                TLS_PARAM_SCALES[3],
            ],
        ),
        None => (
            vec![tls0_guess, nc_guess, beta0.max(1e-3), other_guess],
            vec![
                (0.0, f64::INFINITY),
                (1e-12, f64::INFINITY),
                (1e-3, 1.0),
                (0.0, f64::INFINITY),
            ],
            TLS_PARAM_SCALES.to_vec(),
        ),
    };
    let problem = FitProblem::new(residuals, initial)
        .with_bounds(bounds)
        .with_weights(weights)
        .with_scales(scales)
        .with_sigma_mode(SigmaMode::Absolute);
    let fit = nonlinear_ls(&problem, &options.config)?;

    let full = expand(&fit.params);
    let params = TlsFitParams {
        tan_delta_tls0: full[0],
        n_critical: full[1],
        beta: full[2],
        tan_delta_other: full[3],
    };
    let map: Vec<usize> = match fixed_beta {
        Some(_) => vec![0, 1, 3],
        None => vec![0, 1, 2, 3],
    };
    let mut covariance = [[0.0; 4]; 4];
    for (i, &a) in map.iter().enumerate() {
        for (j, &b) in map.iter().enumerate() {
            covariance[a][b] = fit.covariance[(i, j)];
        }
    }
    let std_errors = [0, 1, 2, 3].map(|k| covariance[k][k].max(0.0).sqrt());

    let model = tls_curve(&full, &photons, thermal);
    let standardized: Vec<f64> = tan
        .iter()
        .zip(&model)
        .zip(&sigma_tan)
        .map(|((d, m), s)| (d - m) / s)
        .collect();
    let tail = &standardized[standardized.len().saturating_sub(TAIL_POINTS)..];
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;

    Ok(SweepFitResult {
        params,
        covariance,
        std_errors,
        reduced_chi_square: fit.reduced_chi_square(),
        points_used: points.len(),
        converged: fit.converged,
        narrow_range: (photons[photons.len() - 1] / photons[0]).log10() < MIN_DECADES,
        tail_excess: tail_mean > TAIL_EXCESS_LIMIT,
    })
}

/// Plateau levels from the sweep ends; n_c from where the excess over the
/// high-power floor halves.
fn initial_guess(photons: &[f64], tan: &[f64], thermal: f64, beta: f64) -> (f64, f64, f64) {
    let low = tan[0];
    let high = tan.iter().copied().fold(f64::INFINITY, f64::min);
    let other = 0.5 * high;
    let tls0 = ((low - other) / thermal.max(1e-300)).max(1e-12 * low.abs().max(1e-300));
    let target = other + 0.5 * (low - other);
    let n_half = photons
        .iter()
        .zip(tan)
        .find(|(_, t)| **t <= target)
        .map_or(photons[photons.len() / 2], |(n, _)| *n);
    // (1 + n/n_c)^β = 2 at the half point.
    let nc = n_half / (2f64.powf(1.0 / beta) - 1.0);
    (tls0, nc.max(1e-12), other)
}
