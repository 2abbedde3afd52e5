use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::circle::{fit_circle, Circle};
use super::delay::{estimate_delay_raw, remove_delay, resonance_present};
use super::phase::{fit_phase_with, PhaseFit};
use crate::error::{Error, Result};
use crate::fit::{nonlinear_ls, FitConfig, FitProblem};
use crate::notch::{
    notch_curve, notch_from_vector, notch_to_vector, synthesize_trace, NotchParams, Trace,
    MIN_FIT_POINTS, NOTCH_PARAM_SCALES,
};

/// Gain, phase and cable delay of the measurement chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub gain: f64,
    /// rad.
    pub phase: f64,
    /// s.
    pub delay: f64,
}

/// One-sigma errors of each fitted quantity, in the units of [`NotchParams`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NotchUncertainties {
    pub f_r: f64,
    pub q_loaded: f64,
    pub q_ext_mag: f64,
    pub mismatch_phi: f64,
    pub env_gain: f64,
    pub env_phase: f64,
    pub cable_delay: f64,
    pub q_internal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchFitResult {
    pub params: NotchParams,
    pub q_internal: f64,
    pub uncertainties: NotchUncertainties,
    /// RMS complex residual divided by the fitted gain.
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Standard error of Q_in from the (Q_l, |Q_e|, φ) covariance block.
fn q_internal_error(p: &NotchParams, cov: [[f64; 3]; 3]) -> f64 {
    let qi = p.q_internal();
    let grad = [
        qi * qi / (p.q_loaded * p.q_loaded),
        -qi * qi * p.mismatch_phi.cos() / (p.q_ext_mag * p.q_ext_mag),
        -qi * qi * p.mismatch_phi.sin() / p.q_ext_mag,
    ];
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += grad[i] * cov[i][j] * grad[j];
        }
    }
    var.max(0.0).sqrt()
}

fn check_physical(p: &NotchParams) -> Result<()> {
    let inv_loaded = 1.0 / p.q_loaded;
    let coupling = p.mismatch_phi.cos() / p.q_ext_mag;
    if inv_loaded <= coupling {
        return Err(Error::NonphysicalQin {
            inv_loaded,
            coupling,
        });
    }
    Ok(())
}

/// Quality factors from the circle in the normalised frame (off-resonant
/// point at 1) and the phase fit.
pub fn extract_qfactors(
    canonical: &Circle,
    phase: &PhaseFit,
    env: &Environment,
) -> Result<NotchFitResult> {
    if !(canonical.radius > 0.0) {
        return Err(Error::DegenerateGeometry(
            "circle radius must be positive".into(),
        ));
    }
    let to_center = Complex64::new(1.0, 0.0) - canonical.center;
    let q_ext_mag = phase.q_loaded / (2.0 * canonical.radius);
    let params = NotchParams {
        f_r: phase.f_r,
        q_loaded: phase.q_loaded,
        q_ext_mag,
        mismatch_phi: to_center.arg(),
        env_gain: env.gain,
        env_phase: env.phase,
        cable_delay: env.delay,
    };
    check_physical(&params)?;

    let sr = canonical.radius_error();
    let sc = canonical.center_error();
    let q_ext_err = ((phase.q_loaded_err / (2.0 * canonical.radius)).powi(2)
        + (q_ext_mag * sr / canonical.radius).powi(2))
    .sqrt();
    let phi_err = sc / to_center.norm();
    let cov = [
        [phase.q_loaded_err.powi(2), 0.0, 0.0],
        [0.0, q_ext_err.powi(2), 0.0],
        [0.0, 0.0, phi_err.powi(2)],
    ];
    Ok(NotchFitResult {
        params,
        q_internal: params.q_internal(),
        uncertainties: NotchUncertainties {
            f_r: phase.f_r_err,
            q_loaded: phase.q_loaded_err,
            q_ext_mag: q_ext_err,
            mismatch_phi: phi_err,
            env_gain: f64::NAN,
            env_phase: f64::NAN,
            cable_delay: f64::NAN,
            q_internal: q_internal_error(&params, cov),
        },
        residual_rms: canonical.rms,
        converged: phase.converged,
        iterations: 0,
    })
}

/// Full pipeline with default solver settings.
pub fn fit_notch(trace: &Trace) -> Result<NotchFitResult> {
    fit_notch_with(trace, &FitConfig::default())
}

/// Delay estimate, environment normalisation, circle and phase fits, then a
/// single joint refinement of all seven model parameters.
pub fn fit_notch_with(trace: &Trace, config: &FitConfig) -> Result<NotchFitResult> {
    let seed = circle_fit_stage(trace, config)?;
    refine(trace, &seed, config)
}

/// The geometric stages only, without the joint refinement.
pub fn circle_fit_stage(trace: &Trace, config: &FitConfig) -> Result<NotchFitResult> {
    trace.validate()?;
    if trace.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: trace.len(),
        });
    }
    let freqs = trace.frequencies();
    let values = trace.values();
    if values
        .iter()
        .any(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        return Err(Error::Domain(
            "trace contains non-finite transmission".into(),
        ));
    }

    let tau = estimate_delay_raw(&freqs, &values)?;
    let corrected = remove_delay(&freqs, &values, tau);
    if !resonance_present(&freqs, &corrected) {
        return Err(Error::NoResonance(
            "transmission shows no dip above the noise".into(),
        ));
    }

    let circle = fit_circle(&corrected)?;
    let phase = fit_phase_with(&freqs, &corrected, circle.center, config)?;
    let off_resonant = circle.center + Complex64::from_polar(circle.radius, phase.theta0 + PI);
    let env = Environment {
        gain: off_resonant.norm(),
        phase: off_resonant.arg(),
        delay: tau,
    };
    let normalized: Vec<Complex64> = corrected.iter().map(|z| z / off_resonant).collect();
    let canonical = fit_circle(&normalized)?;
    extract_qfactors(&canonical, &phase, &env)
}

fn refine(trace: &Trace, seed: &NotchFitResult, config: &FitConfig) -> Result<NotchFitResult> {
    let freqs = trace.frequencies();
    let data: Vec<f64> = trace
        .points
        .iter()
        .flat_map(|p| [p.s21.re, p.s21.im])
        .collect();
    let residuals = |p: &[f64]| -> Vec<f64> {
        notch_curve(p, &freqs)
            .into_iter()
            .zip(&data)
            .map(|(m, d)| m - d)
            .collect()
    };

    let phi_limit = FRAC_PI_2 * (1.0 - 1e-9);
    let bounds = vec![
        (freqs[0] * 1e-9, freqs[freqs.len() - 1] * 1e-9),
        (1.0, f64::INFINITY),
        (1.0, f64::INFINITY),
        (-phi_limit, phi_limit),
        (f64::MIN_POSITIVE, f64::INFINITY),
        (f64::NEG_INFINITY, f64::INFINITY),
        (f64::NEG_INFINITY, f64::INFINITY),
    ];
    let mut initial = notch_to_vector(&seed.params);
    for (v, (lo, hi)) in initial.iter_mut().zip(&bounds) {
        *v = v.clamp(*lo, *hi);
    }
    let problem = FitProblem::new(residuals, initial)
        .with_bounds(bounds)
        .with_scales(NOTCH_PARAM_SCALES.to_vec());
    let fit = nonlinear_ls(&problem, config)?;

    let params = notch_from_vector(&fit.params);
    check_physical(&params)?;
    let c = &fit.covariance;
    let sd = |i: usize| c[(i, i)].max(0.0).sqrt();
    let block = [
        [c[(1, 1)], c[(1, 2)], c[(1, 3)]],
        [c[(2, 1)], c[(2, 2)], c[(2, 3)]],
        [c[(3, 1)], c[(3, 2)], c[(3, 3)]],
    ];
    let rms = (fit.residual_norm.powi(2) / freqs.len() as f64).sqrt() / params.env_gain;
    Ok(NotchFitResult {
        params,
        q_internal: params.q_internal(),
        uncertainties: NotchUncertainties {
            f_r: sd(0) * 1e9,
            q_loaded: sd(1),
            q_ext_mag: sd(2),
            mismatch_phi: sd(3),
            env_gain: sd(4),
            env_phase: sd(5),
            cable_delay: sd(6) * 1e-9,
            q_internal: q_internal_error(&params, block),
        },
        residual_rms: rms,
        converged: fit.converged,
        iterations: fit.iterations,
    })
}

/// Parameter scatter from refitting `draws` synthetic traces generated at the
/// fitted parameters, on the trace's own grid, with the fitted residual level
/// as per-quadrature noise.
pub fn monte_carlo_uncertainties(
    trace: &Trace,
    fit: &NotchFitResult,
    draws: usize,
    seed: u64,
) -> Result<NotchUncertainties> {
    if draws < 2 {
        return Err(Error::Domain(
            "Monte-Carlo propagation needs at least 2 draws".into(),
        ));
    }
    let grid = trace.frequencies();
    let sigma = fit.residual_rms * fit.params.env_gain / 2f64.sqrt();
    let mut samples: Vec<[f64; 8]> = Vec::with_capacity(draws);
    for k in 0..draws {
        let synthetic = synthesize_trace(&fit.params, &grid, sigma, seed.wrapping_add(k as u64))?;
        if let Ok(r) = fit_notch(&synthetic) {
            let p = r.params;
            samples.push([
                p.f_r,
                p.q_loaded,
                p.q_ext_mag,
                p.mismatch_phi,
                p.env_gain,
                p.env_phase,
                p.cable_delay,
                r.q_internal,
            ]);
        }
    }
    if samples.len() < 2 {
        return Err(Error::FitInstability(
            "too few Monte-Carlo refits succeeded".into(),
        ));
    }
    let m = samples.len() as f64;
    let sd = |j: usize| {
        let mean = samples.iter().map(|s| s[j]).sum::<f64>() / m;
        (samples.iter().map(|s| (s[j] - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    };
    Ok(NotchUncertainties {
        f_r: sd(0),
        q_loaded: sd(1),
        q_ext_mag: sd(2),
        mismatch_phi: sd(3),
        env_gain: sd(4),
        env_phase: sd(5),
        cable_delay: sd(6),
        q_internal: sd(7),
    })
}

/// Arithmetic mean of per-trace |Q_e| values.
pub fn mean_q_ext(results: &[NotchFitResult]) -> Option<f64> {
    if results.is_empty() {
        None
    } else {
        Some(results.iter().map(|r| r.params.q_ext_mag).sum::<f64>() / results.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notch::{linewidth_grid, synthesize_trace, TracePoint};

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    #[test]
    fn table_row_one_qfactors() {
        let canonical = Circle {
            center: Complex64::new(1.0 - 3000.0 / 9000.0 / 2.0, 0.0),
            radius: 3000.0 / 9000.0 / 2.0,
            rms: 0.0,
            n_points: 100,
        };
        let phase = PhaseFit {
            f_r: 7.3e9,
            q_loaded: 3000.0,
            theta0: 0.0,
            f_r_err: 0.0,
            q_loaded_err: 0.0,
            theta0_err: 0.0,
            converged: true,
        };
        let env = Environment {
            gain: 1.0,
            phase: 0.0,
            delay: 0.0,
        };
        let r = extract_qfactors(&canonical, &phase, &env).unwrap();
        assert!(rel(r.params.q_ext_mag, 9000.0) < 1e-12);
        assert!(r.params.mismatch_phi.abs() < 1e-15);
        assert!(rel(r.q_internal, 4500.0) < 1e-12);
    }

    #[test]
    fn decoupled_limit() {
        let p = NotchParams {
            q_ext_mag: 1e300,
            ..NotchParams::from_internal(7e9, 1e4, 9e3, 0.0)
        };
        assert!(rel(p.q_internal(), p.q_loaded) < 1e-15);
    }

    #[test]
    fn overcoupled_circle_is_nonphysical() {
        let canonical = Circle {
            center: Complex64::new(0.4, 0.0),
            radius: 0.6,
            rms: 0.0,
            n_points: 10,
        };
        let phase = PhaseFit {
            f_r: 7e9,
            q_loaded: 3000.0,
            theta0: 0.0,
            f_r_err: 0.0,
            q_loaded_err: 0.0,
            theta0_err: 0.0,
            converged: true,
        };
        let env = Environment {
            gain: 1.0,
            phase: 0.0,
            delay: 0.0,
        };
        assert!(matches!(
            extract_qfactors(&canonical, &phase, &env),
            Err(Error::NonphysicalQin { .. })
        ));
    }

    #[test]
    fn noiseless_round_trip() {
        let p =
            NotchParams::from_internal(7.30e9, 4.5e3, 9e3, 0.15).with_environment(0.8, 1.2, 35e-9);
        let t = synthesize_trace(&p, &linewidth_grid(&p, 1001, 10.0), 0.0, 0).unwrap();
        let r = fit_notch(&t).unwrap();
        assert!(r.converged);
        let got = r.params;
        assert!(rel(got.f_r, p.f_r) < 1e-9);
        assert!(rel(got.q_loaded, p.q_loaded) < 1e-9);
        assert!(rel(got.q_ext_mag, p.q_ext_mag) < 1e-9);
        assert!((got.mismatch_phi - p.mismatch_phi).abs() < 1e-9);
        assert!(rel(got.env_gain, p.env_gain) < 1e-9);
        assert!((got.env_phase - p.env_phase).abs() < 1e-9);
        assert!(rel(got.cable_delay, p.cable_delay) < 1e-9);
        assert!(rel(r.q_internal, 4.5e3) < 1e-9);
    }

    #[test]
    fn noisy_table_row_one() {
        let p =
            NotchParams::from_internal(7.30e9, 4.5e3, 9e3, 0.0).with_environment(1.0, 0.0, 20e-9);
        let grid = linewidth_grid(&p, 1001, 10.0);
        for seed in 0..10 {
            let t = synthesize_trace(&p, &grid, 0.003, seed).unwrap();
            let r = fit_notch(&t).unwrap();
            assert!(r.converged);
            assert!(rel(r.params.f_r, p.f_r) < 1e-6, "seed {seed}");
            assert!(
                rel(r.q_internal, 4.5e3) < 0.05,
                "seed {seed}: {}",
                r.q_internal
            );
            assert!(rel(r.params.q_ext_mag, 9e3) < 0.05, "seed {seed}");
            assert!(rel(r.params.q_loaded, 3e3) < 0.05, "seed {seed}");
        }
    }

    #[test]
    fn reported_qin_is_consistent() {
        let p =
            NotchParams::from_internal(8.91e9, 2.8e3, 8e3, -0.2).with_environment(0.5, -0.7, 10e-9);
        let t = synthesize_trace(&p, &linewidth_grid(&p, 801, 8.0), 0.003, 9).unwrap();
        let r = fit_notch(&t).unwrap();
        let lhs = 1.0 / r.q_internal;
        let rhs = 1.0 / r.params.q_loaded - r.params.mismatch_phi.cos() / r.params.q_ext_mag;
        assert!((lhs - rhs).abs() <= 1e-15 * lhs.abs());
        assert!(r.uncertainties.q_internal > 0.0);
    }

    #[test]
    fn flat_trace_has_no_resonance() {
        let pts = (0..500)
            .map(|k| TracePoint {
                freq: 7e9 + 1e4 * k as f64,
                s21: Complex64::from_polar(0.9, 0.4 - 2.0 * PI * (7e9 + 1e4 * k as f64) * 20e-9),
            })
            .collect();
        let err = fit_notch(&Trace::new(pts).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NoResonance(_)), "{err}");
        assert!(err.is_convergence_failure());
    }

    #[test]
    fn reported_errors_track_monte_carlo_scatter() {
        let p = NotchParams::from_internal(7.3e9, 2e4, 7e3, 0.1);
        let grid = linewidth_grid(&p, 401, 10.0);
        let t = synthesize_trace(&p, &grid, 0.003, 5).unwrap();
        let r = fit_notch(&t).unwrap();
        let mc = monte_carlo_uncertainties(&t, &r, 60, 100).unwrap();
        for (a, b) in [
            (r.uncertainties.f_r, mc.f_r),
            (r.uncertainties.q_loaded, mc.q_loaded),
            (r.uncertainties.q_internal, mc.q_internal),
        ] {
            assert!(a / b > 0.6 && a / b < 1.6, "{a} vs {b}");
        }
    }

    #[test]
    fn mean_of_external_q() {
        assert_eq!(mean_q_ext(&[]), None);
    }
}
