use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::circle::fit_circle;
use crate::error::{Error, Result};
use crate::fit::{linear_wls, linear_wls_design, Basis};
use crate::notch::{Trace, MIN_FIT_POINTS};

/// Fraction of the trace at each end treated as off-resonant baseline.
const EDGE_FRACTION: f64 = 0.15;
const GRID_POINTS: usize = 21;
const GOLDEN_ITERATIONS: usize = 80;
/// Deviation from the baseline, in noise standard deviations, that counts as a resonance.
const DETECTION_SIGMAS: f64 = 8.0;

/// Cable delay (s) of a trace: a linear fit to the unwrapped phase of the
/// baseline, refined by minimising the circle residual of the delay-corrected
/// points over a window of ±0.5 rad of phase across the span.
pub fn estimate_delay(trace: &Trace) -> Result<f64> {
    let freqs = trace.frequencies();
    let values = trace.values();
    estimate_delay_raw(&freqs, &values)
}

pub(crate) fn estimate_delay_raw(freqs: &[f64], values: &[Complex64]) -> Result<f64> {
    let n = freqs.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: n,
        });
    }
    let coarse = edge_phase_delay(freqs, values)?;
    if !resonance_present(freqs, &remove_delay(freqs, values, coarse)) {
        return whole_trace_phase_delay(freqs, values);
    }

    let span = freqs[n - 1] - freqs[0];
    let window = 0.5 / (2.0 * PI * span);
    let cost = |tau: f64| -> f64 {
        fit_circle(&remove_delay(freqs, values, tau)).map_or(f64::INFINITY, |c| c.rms)
    };

    let step = 2.0 * window / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|k| coarse - window + step * k as f64)
        .collect();
    let costs: Vec<f64> = grid.iter().map(|&t| cost(t)).collect();
    let best = costs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(GRID_POINTS / 2);
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(GRID_POINTS - 1)];
    Ok(golden_section(cost, lo, hi))
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_ITERATIONS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Multiplies each point by e^{+2πifτ}.
pub fn remove_delay(freqs: &[f64], values: &[Complex64], tau: f64) -> Vec<Complex64> {
    freqs
        .iter()
        .zip(values)
        .map(|(&f, &z)| z * Complex64::from_polar(1.0, 2.0 * PI * f * tau))
        .collect()
}

/// Sequentially unwrapped phase.
pub(crate) fn unwrap_phase(values: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev_raw = 0.0;
    let mut acc = 0.0;
    for (i, z) in values.iter().enumerate() {
        let raw = z.arg();
        if i == 0 {
            acc = raw;
        } else {
            acc += wrap(raw - prev_raw);
        }
        prev_raw = raw;
        out.push(acc);
    }
    out
}

pub(crate) fn wrap(x: f64) -> f64 {
    x.sin().atan2(x.cos())
}

fn edge_count(n: usize) -> usize {
    ((n as f64 * EDGE_FRACTION).ceil() as usize).clamp(2, n / 2)
}

/// Slope of the phase over the two edge blocks, each with its own intercept
/// so a winding offset between the blocks does not bias the slope.
fn edge_phase_delay(freqs: &[f64], values: &[Complex64]) -> Result<f64> {
    let n = freqs.len();
    let k = edge_count(n);
    let left = unwrap_phase(&values[..k]);
    let right = unwrap_phase(&values[n - k..]);
    let f_mid = 0.5 * (freqs[0] + freqs[n - 1]);
    let design = DMatrix::from_fn(2 * k, 3, |row, col| {
        let (f, is_left) = if row < k {
            (freqs[row], true)
        } else {
            (freqs[n - 2 * k + row], false)
        };
        match col {
            0 => (f - f_mid) * 1e-9,
            1 => f64::from(u8::from(is_left)),
            _ => f64::from(u8::from(!is_left)),
        }
    });
    let phases: Vec<f64> = left.into_iter().chain(right).collect();
    let fit = linear_wls_design(&design, &phases, None)?;
    Ok(-fit.params[0] * 1e-9 / (2.0 * PI))
}

fn whole_trace_phase_delay(freqs: &[f64], values: &[Complex64]) -> Result<f64> {
    let f_mid = 0.5 * (freqs[0] + freqs[freqs.len() - 1]);
    let x: Vec<f64> = freqs.iter().map(|f| (f - f_mid) * 1e-9).collect();
    let fit = linear_wls(&x, &unwrap_phase(values), None, &Basis::Polynomial(1))?;
    Ok(-fit.params[1] * 1e-9 / (2.0 * PI))
}

/// Per-quadrature noise estimate from the median squared point-to-point step.
pub(crate) fn noise_sigma(values: &[Complex64]) -> f64 {
    let mut d2: Vec<f64> = values
        .windows(2)
        .map(|w| (w[1] - w[0]).norm_sqr())
        .collect();
    if d2.is_empty() {
        return 0.0;
    }
    d2.sort_by(f64::total_cmp);
    let median = d2[d2.len() / 2];
    (median / (4.0 * std::f64::consts::LN_2)).sqrt()
}

/// True when some point departs from the straight baseline joining the two
/// edge means by much more than the point-to-point noise.
pub(crate) fn resonance_present(freqs: &[f64], values: &[Complex64]) -> bool {
    let n = freqs.len();
    let k = edge_count(n);
    let mean = |r: std::ops::Range<usize>| {
        let len = r.len() as f64;
        let z: Complex64 = values[r.clone()].iter().sum::<Complex64>() / len;
        let f = freqs[r].iter().sum::<f64>() / len;
        (f, z)
    };
    let (f_left, z_left) = mean(0..k);
    let (f_right, z_right) = mean(n - k..n);
    let baseline = |f: f64| z_left + (z_right - z_left) * ((f - f_left) / (f_right - f_left));
    let deviation = freqs
        .iter()
        .zip(values)
        .map(|(&f, &z)| (z - baseline(f)).norm())
        .fold(0.0, f64::max);
    let level = 0.5 * (z_left.norm() + z_right.norm());
    deviation > DETECTION_SIGMAS * noise_sigma(values) + 1e-9 * level
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notch::{linewidth_grid, synthesize_trace, NotchParams};

    fn baseline_trace(tau: f64, noise: f64) -> Trace {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let pts = (0..401)
            .map(|k| {
                let f = 7.0e9 + 1e5 * k as f64;
                let n = Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)) * noise;
                crate::notch::TracePoint {
                    freq: f,
                    s21: Complex64::from_polar(0.7, 0.3 - 2.0 * PI * f * tau) + n,
                }
            })
            .collect();
        Trace::new(pts).unwrap()
    }

    #[test]
    fn resonance_free_delay() {
        let tau = estimate_delay(&baseline_trace(50e-9, 0.0)).unwrap();
        assert!((tau / 50e-9 - 1.0).abs() < 1e-2, "{tau}");
        let noisy = estimate_delay(&baseline_trace(50e-9, 0.003)).unwrap();
        assert!((noisy / 50e-9 - 1.0).abs() < 1e-2, "{noisy}");
    }

    #[test]
    fn zero_delay() {
        let p = NotchParams::from_internal(7.3e9, 4.5e3, 9e3, 0.1);
        let t = synthesize_trace(&p, &linewidth_grid(&p, 1001, 10.0), 0.0, 0).unwrap();
        let tau = estimate_delay(&t).unwrap();
        assert!(tau.abs() < 1e-12, "{tau}");
        assert!(estimate_delay(&baseline_trace(0.0, 0.0)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn notch_trace_delay() {
        let p =
            NotchParams::from_internal(7.3e9, 4.5e3, 9e3, 0.2).with_environment(0.9, 1.0, 30e-9);
        let grid = linewidth_grid(&p, 1001, 10.0);
        for seed in 0..5 {
            let t = synthesize_trace(&p, &grid, 0.003, seed).unwrap();
            let tau = estimate_delay(&t).unwrap();
            assert!((tau / 30e-9 - 1.0).abs() < 0.02, "seed {seed}: {tau}");
        }
        let clean = synthesize_trace(&p, &grid, 0.0, 0).unwrap();
        let tau = estimate_delay(&clean).unwrap();
        assert!((tau / 30e-9 - 1.0).abs() < 1e-6, "{tau}");
    }

    #[test]
    fn short_trace_is_rejected() {
        let p = NotchParams::from_internal(7.3e9, 4.5e3, 9e3, 0.0);
        let t = synthesize_trace(&p, &linewidth_grid(&p, 7, 10.0), 0.0, 0).unwrap();
        assert!(matches!(
            estimate_delay(&t),
            Err(Error::InsufficientData { needed: 8, got: 7 })
        ));
    }

    #[test]
    fn detection_separates_dip_from_baseline() {
        let p = NotchParams::from_internal(7.3e9, 1e3, 9e3, 0.0);
        let grid = linewidth_grid(&p, 1001, 10.0);
        let dip = synthesize_trace(&p, &grid, 0.003, 1).unwrap();
        assert!(resonance_present(&grid, &dip.values()));
        let flat = baseline_trace(0.0, 0.003);
        assert!(!resonance_present(&flat.frequencies(), &flat.values()));
    }
}
