use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::delay::wrap;
use crate::error::{Error, Result};
use crate::fit::{nonlinear_ls, FitConfig, FitProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseFit {
    /// Hz.
    pub f_r: f64,
    pub q_loaded: f64,
    /// Angle about the circle center at f = f_r, rad.
    pub theta0: f64,
    pub f_r_err: f64,
    pub q_loaded_err: f64,
    pub theta0_err: f64,
    pub converged: bool,
}

/// θ(f) = θ0 + 2·arctan(2Q_l(1 − f/f_r)).
pub fn phase_model(f: f64, f_r: f64, q_loaded: f64, theta0: f64) -> f64 {
    theta0 + 2.0 * (2.0 * q_loaded * (1.0 - f / f_r)).atan()
}

/// Angle about `center`, unwrapped outward from the middle sample.
pub(crate) fn centered_phase(points: &[Complex64], center: Complex64) -> Vec<f64> {
    let raw: Vec<f64> = points.iter().map(|p| (p - center).arg()).collect();
    let n = raw.len();
    let mut out = raw.clone();
    if n == 0 {
        return out;
    }
    let mid = n / 2;
    for i in mid + 1..n {
        out[i] = out[i - 1] + wrap(raw[i] - raw[i - 1]);
    }
    for i in (0..mid).rev() {
        out[i] = out[i + 1] + wrap(raw[i] - raw[i + 1]);
    }
    out
}

/// Fits the angle of each delay-corrected point about the circle center.
pub fn fit_phase(freqs: &[f64], points: &[Complex64], center: Complex64) -> Result<PhaseFit> {
    fit_phase_with(freqs, points, center, &FitConfig::default())
}

pub fn fit_phase_with(
    freqs: &[f64],
    points: &[Complex64],
    center: Complex64,
    config: &FitConfig,
) -> Result<PhaseFit> {
    let n = freqs.len();
    if n != points.len() {
        return Err(Error::Domain(format!(
            "{n} frequencies but {} points",
            points.len()
        )));
    }
    if n < 4 {
        return Err(Error::InsufficientData { needed: 4, got: n });
    }
    let theta = centered_phase(points, center);
    let drop = theta[0] - theta[n - 1];
    if !(drop >= FRAC_PI_2) {
        return Err(Error::FitInstability(format!(
            "phase falls by only {drop:.3} rad across the trace; expected a monotone decrease through resonance"
        )));
    }

    let theta0_guess = 0.5 * (theta[0] + theta[n - 1]);
    let f_guess = crossing(freqs, &theta, theta0_guess).unwrap_or(freqs[n / 2]);
    let q_guess = match (
        crossing(freqs, &theta, theta0_guess + FRAC_PI_2),
        crossing(freqs, &theta, theta0_guess - FRAC_PI_2),
    ) {
        (Some(lo), Some(hi)) if hi > lo => f_guess / (hi - lo),
        _ => slope_q_guess(freqs, &theta, f_guess),
    };

    let residuals = |p: &[f64]| -> Vec<f64> {
        let f_r = f_guess * (1.0 + p[2]);
        freqs
            .iter()
            .zip(&theta)
            .map(|(&f, &t)| wrap(phase_model(f, f_r, p[1], p[0]) - t))
            .collect()
    };
    let lower = (freqs[0] / f_guess - 1.0).min(0.0);
    let upper = (freqs[n - 1] / f_guess - 1.0).max(0.0);
    let problem = FitProblem::new(residuals, vec![theta0_guess, q_guess.max(1e-3), 0.0])
        .with_bounds(vec![
            (f64::NEG_INFINITY, f64::INFINITY),
            (1e-3, f64::INFINITY),
            (lower, upper),
        ])
        .with_scales(vec![1.0, 1.0, 1.0 / q_guess.max(1.0)]);
    let fit = nonlinear_ls(&problem, config)?;
    let err = fit.std_errors();
    let theta0 = fit.params[0];
    // Keep θ0 in the branch of the unwrapped data.
    let shift = 2.0 * PI * ((theta0 - theta0_guess) / (2.0 * PI)).round();
    Ok(PhaseFit {
        f_r: f_guess * (1.0 + fit.params[2]),
        q_loaded: fit.params[1],
        theta0: theta0 - shift,
        f_r_err: f_guess * err[2],
        q_loaded_err: err[1],
        theta0_err: err[0],
        converged: fit.converged,
    })
}

/// First frequency where the (decreasing) phase passes `level`, linearly interpolated.
fn crossing(freqs: &[f64], theta: &[f64], level: f64) -> Option<f64> {
    theta.windows(2).enumerate().find_map(|(i, w)| {
        if w[0] >= level && w[1] < level {
            let t = (w[0] - level) / (w[0] - w[1]);
            Some(freqs[i] + t * (freqs[i + 1] - freqs[i]))
        } else {
            None
        }
    })
}

/// Q_l from the local slope dθ/df = −4Q_l/f_r near the resonance.
fn slope_q_guess(freqs: &[f64], theta: &[f64], f_r: f64) -> f64 {
    let i = freqs
        .iter()
        .position(|&f| f >= f_r)
        .unwrap_or(freqs.len() / 2)
        .clamp(1, freqs.len() - 2);
    let slope = (theta[i + 1] - theta[i - 1]) / (freqs[i + 1] - freqs[i - 1]);
    (-slope * f_r / 4.0).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(
        f_r: f64,
        q: f64,
        theta0: f64,
        n: usize,
        span_lw: f64,
    ) -> (Vec<f64>, Vec<Complex64>) {
        let center = Complex64::new(0.6, 0.1);
        let lw = f_r / q;
        let freqs: Vec<f64> = (0..n)
            .map(|k| f_r - span_lw * lw + 2.0 * span_lw * lw * k as f64 / (n - 1) as f64)
            .collect();
        let pts = freqs
            .iter()
            .map(|&f| center + Complex64::from_polar(0.3, phase_model(f, f_r, q, theta0)))
            .collect();
        (freqs, pts)
    }

    #[test]
    fn noiseless_recovery() {
        let (f, p) = synthetic(7.3e9, 3000.0, 0.2, 501, 10.0);
        let fit = fit_phase(&f, &p, Complex64::new(0.6, 0.1)).unwrap();
        assert!(fit.converged);
        assert!((fit.f_r / 7.3e9 - 1.0).abs() < 1e-9, "{}", fit.f_r);
        assert!(
            (fit.q_loaded / 3000.0 - 1.0).abs() < 1e-9,
            "{}",
            fit.q_loaded
        );
        assert!((fit.theta0 - 0.2).abs() < 1e-9, "{}", fit.theta0);
    }

    #[test]
    fn model_identity_and_slope() {
        assert_eq!(phase_model(7.3e9, 7.3e9, 3000.0, 0.2), 0.2);
        let h = 1.0;
        let slope = (phase_model(7.3e9 + h, 7.3e9, 3000.0, 0.2)
            - phase_model(7.3e9 - h, 7.3e9, 3000.0, 0.2))
            / (2.0 * h);
        assert!((slope / (-4.0 * 3000.0 / 7.3e9) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn off_center_span_uses_slope_guess() {
        let (f, p) = synthetic(7.3e9, 3000.0, -2.5, 301, 0.8);
        let fit = fit_phase(&f, &p, Complex64::new(0.6, 0.1)).unwrap();
        assert!((fit.f_r / 7.3e9 - 1.0).abs() < 1e-9);
        assert!((fit.q_loaded / 3000.0 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn flat_phase_is_unstable() {
        let freqs: Vec<f64> = (0..50).map(|k| 7e9 + k as f64 * 1e5).collect();
        let pts: Vec<Complex64> = freqs.iter().map(|_| Complex64::new(1.0, 0.0)).collect();
        assert!(matches!(
            fit_phase(&freqs, &pts, Complex64::new(0.5, 0.0)),
            Err(Error::FitInstability(_))
        ));
    }
}
