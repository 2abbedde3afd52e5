//! Notch-coupled resonator transmission: forward model, synthetic traces and
//! drive-power to photon-number conversion.
//!
//! The model is
//!
//! ```text
//! S21(f) = a·e^{iα}·e^{−2πifτ}·[1 − (Q_l/|Q_e|)·e^{iφ} / (1 + 2iQ_l(f/f_r − 1))]
//! ```
//!
//! where `a`, `α` and `τ` describe the measurement chain and the bracket is
//! the resonator in its canonical frame (off-resonant point at 1, circle of
//! diameter Q_l/|Q_e|).

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{Error, Result};

/// Minimum trace length accepted by the fitters.
pub const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchParams {
    /// Resonance frequency, Hz.
    pub f_r: f64,
    pub q_loaded: f64,
    /// Magnitude of the complex coupling quality factor.
    pub q_ext_mag: f64,
    /// Impedance-mismatch angle φ, rad.
    pub mismatch_phi: f64,
    pub env_gain: f64,
    /// rad.
    pub env_phase: f64,
    /// s.
    pub cable_delay: f64,
}

impl NotchParams {
    /// Ideal environment (unit gain, no phase, no delay) from internal and
    /// coupling quality factors: 1/Q_l = 1/Q_in + cos φ/|Q_e|.
    pub fn from_internal(f_r: f64, q_internal: f64, q_ext_mag: f64, mismatch_phi: f64) -> Self {
        let q_loaded = 1.0 / (1.0 / q_internal + mismatch_phi.cos() / q_ext_mag);
        Self {
            f_r,
            q_loaded,
            q_ext_mag,
            mismatch_phi,
            env_gain: 1.0,
            env_phase: 0.0,
            cable_delay: 0.0,
        }
    }

    pub fn with_environment(mut self, gain: f64, phase: f64, delay: f64) -> Self {
        self.env_gain = gain;
        self.env_phase = phase;
        self.cable_delay = delay;
        self
    }

    /// 1/Q_in = 1/Q_l − cos φ/|Q_e|.
    pub fn q_internal(&self) -> f64 {
        1.0 / (1.0 / self.q_loaded - self.mismatch_phi.cos() / self.q_ext_mag)
    }

    /// Circle diameter in the canonical frame.
    pub fn diameter(&self) -> f64 {
        self.q_loaded / self.q_ext_mag
    }

    /// Full width at half depth, Hz.
    pub fn linewidth(&self) -> f64 {
        self.f_r / self.q_loaded
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.f_r,
            self.q_loaded,
            self.q_ext_mag,
            self.mismatch_phi,
            self.env_gain,
            self.env_phase,
            self.cable_delay,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain("notch parameters must be finite".into()));
        }
        if !(self.f_r > 0.0 && self.q_loaded > 0.0 && self.q_ext_mag > 0.0) {
            return Err(Error::Domain(format!(
                "f_r, Q_l and |Q_e| must be positive (got {}, {}, {})",
                self.f_r, self.q_loaded, self.q_ext_mag
            )));
        }
        if self.mismatch_phi.abs() >= FRAC_PI_2 {
            return Err(Error::Domain(format!(
                "mismatch angle {} must satisfy |phi| < pi/2",
                self.mismatch_phi
            )));
        }
        if !(self.env_gain > 0.0) {
            return Err(Error::Domain(format!(
                "gain must be positive, got {}",
                self.env_gain
            )));
        }
        let inv_loaded = 1.0 / self.q_loaded;
        let coupling = self.mismatch_phi.cos() / self.q_ext_mag;
        if inv_loaded <= coupling {
            return Err(Error::NonphysicalQin {
                inv_loaded,
                coupling,
            });
        }
        Ok(())
    }

    /// Resonator response without the measurement chain.
    pub fn canonical(&self, f: f64) -> Complex64 {
        let x = f / self.f_r - 1.0;
        let coupling = Complex64::from_polar(self.diameter(), self.mismatch_phi);
        Complex64::new(1.0, 0.0) - coupling / Complex64::new(1.0, 2.0 * self.q_loaded * x)
    }

    /// Gain, phase and delay of the measurement chain at `f`.
    pub fn environment(&self, f: f64) -> Complex64 {
        Complex64::from_polar(
            self.env_gain,
            self.env_phase - 2.0 * PI * f * self.cable_delay,
        )
    }
}

/// Complex transmission of the model at frequency `f`.
pub fn s21_at(params: &NotchParams, f: f64) -> Complex64 {
    params.environment(f) * params.canonical(f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    /// Hz.
    pub freq: f64,
    pub s21: Complex64,
}

/// An ordered frequency sweep of complex transmission samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub points: Vec<TracePoint>,
    /// Power on chip, W.
    pub applied_power: Option<f64>,
    pub metadata: BTreeMap<String, String>,
}

impl Trace {
    /// Builds a trace, rejecting non-increasing frequencies.
    pub fn new(points: Vec<TracePoint>) -> Result<Self> {
        check_increasing(points.iter().map(|p| p.freq))?;
        Ok(Self {
            points,
            applied_power: None,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_power(mut self, watts: f64) -> Self {
        self.applied_power = Some(watts);
        self
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.metadata.insert("label".into(), label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.metadata.get("label").map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.freq).collect()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.s21).collect()
    }

    pub fn validate(&self) -> Result<()> {
        check_increasing(self.points.iter().map(|p| p.freq))
    }
}

/// Returns the index of the first sample that does not increase.
pub(crate) fn check_increasing(freqs: impl Iterator<Item = f64>) -> Result<()> {
    let mut prev: Option<f64> = None;
    for (row, f) in freqs.enumerate() {
        if !f.is_finite() {
            return Err(Error::Ordering { row });
        }
        if let Some(p) = prev {
            if !(f > p) {
                return Err(Error::Ordering { row });
            }
        }
        prev = Some(f);
    }
    Ok(())
}

/// `n` equally spaced frequencies covering ±`span_linewidths` around f_r.
pub fn linewidth_grid(params: &NotchParams, n: usize, span_linewidths: f64) -> Vec<f64> {
    let lw = params.linewidth();
    let half = span_linewidths * lw;
    if n == 1 {
        return vec![params.f_r];
    }
    (0..n)
        .map(|i| params.f_r - half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect()
}

/// Model values on `grid` plus i.i.d. Gaussian noise of standard deviation
/// `noise_sigma` on each quadrature. Deterministic for a given `seed`.
pub fn synthesize_trace(
    params: &NotchParams,
    grid: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<Trace> {
    if grid.is_empty() {
        return Err(Error::Domain("frequency grid is empty".into()));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "noise sigma must be non-negative, got {noise_sigma}"
        )));
    }
    params.validate()?;
    check_increasing(grid.iter().copied())?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let points = grid
        .iter()
        .map(|&f| {
            let mut s21 = s21_at(params, f);
            if noise_sigma > 0.0 {
                let re = normal.sample(&mut rng);
                let im = normal.sample(&mut rng);
                s21 += Complex64::new(re, im) * noise_sigma;
            }
            TracePoint { freq: f, s21 }
        })
        .collect();
    Ok(Trace {
        points,
        applied_power: None,
        metadata: BTreeMap::new(),
    })
}

/// Mean intra-resonator photon number for `power_on_chip` watts:
/// ⟨n⟩ = 2·Q_l²·P / (|Q_e|·ħ·ω_r²).
pub fn photons_from_power(params: &NotchParams, power_on_chip: f64) -> Result<f64> {
    if !(power_on_chip >= 0.0) {
        return Err(Error::Domain(format!(
            "power must be non-negative, got {power_on_chip}"
        )));
    }
    let omega = 2.0 * PI * params.f_r;
    Ok(2.0 * params.q_loaded * params.q_loaded * power_on_chip
        / (params.q_ext_mag * HBAR * omega * omega))
}

/// Inverse of [`photons_from_power`].
pub fn power_for_photons(params: &NotchParams, photons: f64) -> f64 {
    let omega = 2.0 * PI * params.f_r;
    photons * params.q_ext_mag * HBAR * omega * omega / (2.0 * params.q_loaded * params.q_loaded)
}

/// Finite-difference step scales for [`notch_curve`] parameters.
pub const NOTCH_PARAM_SCALES: [f64; 7] = [1e-3, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];

/// The notch model as a parameter vector in fit units:
/// `[f_r (GHz), Q_l, |Q_e|, φ, a, α, τ (ns)]`.
pub fn notch_to_vector(p: &NotchParams) -> Vec<f64> {
    vec![
        p.f_r * 1e-9,
        p.q_loaded,
        p.q_ext_mag,
        p.mismatch_phi,
        p.env_gain,
        p.env_phase,
        p.cable_delay * 1e9,
    ]
}

pub fn notch_from_vector(v: &[f64]) -> NotchParams {
    NotchParams {
        f_r: v[0] * 1e9,
        q_loaded: v[1],
        q_ext_mag: v[2],
        mismatch_phi: v[3],
        env_gain: v[4],
        env_phase: v[5],
        cable_delay: v[6] * 1e-9,
    }
}

/// Model output for the fit-unit vector at each frequency (Hz), interleaved
/// as `[re₀, im₀, re₁, im₁, …]`.
pub fn notch_curve(params: &[f64], freqs: &[f64]) -> Vec<f64> {
    let p = notch_from_vector(params);
    let mut out = Vec::with_capacity(2 * freqs.len());
    for &f in freqs {
        let v = s21_at(&p, f);
        out.push(v.re);
        out.push(v.im);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn row1() -> NotchParams {
        NotchParams::from_internal(7.30e9, 4.5e3, 9e3, 0.0)
    }

    #[test]
    fn on_resonance_ideal_value() {
        let p = NotchParams {
            f_r: 7.3e9,
            q_loaded: 2000.0,
            q_ext_mag: 5000.0,
            mismatch_phi: 0.0,
            env_gain: 1.0,
            env_phase: 0.0,
            cable_delay: 0.0,
        };
        assert_eq!(
            s21_at(&p, p.f_r),
            Complex64::new(1.0 - 2000.0 / 5000.0, 0.0)
        );
    }

    #[test]
    fn far_off_resonance_magnitude_is_the_gain() {
        let p = row1().with_environment(0.37, 1.1, 25e-9);
        let far = s21_at(&p, p.f_r * 1.5);
        assert!((far.norm() - 0.37).abs() < 1e-4, "{}", far.norm());
    }

    #[test]
    fn table_row_one_depth() {
        let p = row1();
        assert_relative_eq!(p.q_loaded, 3000.0, max_relative = 1e-12);
        assert_relative_eq!(s21_at(&p, p.f_r).norm(), 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(p.q_internal(), 4500.0, max_relative = 1e-12);
    }

    #[test]
    fn dip_deepens_with_loaded_q() {
        let shallow = NotchParams {
            q_loaded: 1000.0,
            ..row1()
        };
        let deep = NotchParams {
            q_loaded: 3000.0,
            ..row1()
        };
        assert!(s21_at(&deep, deep.f_r).norm() < s21_at(&shallow, shallow.f_r).norm());
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = row1();
        p.mismatch_phi = 1.6;
        assert!(p.validate().is_err());
        let over = NotchParams {
            q_loaded: 20_000.0,
            ..row1()
        };
        assert!(matches!(over.validate(), Err(Error::NonphysicalQin { .. })));
    }

    #[test]
    fn noiseless_trace_is_exact() {
        let p = row1().with_environment(0.8, -0.4, 30e-9);
        let grid = linewidth_grid(&p, 101, 10.0);
        let t = synthesize_trace(&p, &grid, 0.0, 1).unwrap();
        for pt in &t.points {
            assert_eq!(pt.s21, s21_at(&p, pt.freq));
        }
    }

    #[test]
    fn synthesis_is_deterministic_per_seed() {
        let p = row1();
        let grid = linewidth_grid(&p, 301, 10.0);
        let a = synthesize_trace(&p, &grid, 0.003, 42).unwrap();
        let b = synthesize_trace(&p, &grid, 0.003, 42).unwrap();
        let c = synthesize_trace(&p, &grid, 0.003, 43).unwrap();
        assert!(a.points.iter().zip(&b.points).all(|(x, y)| {
            x.s21.re.to_bits() == y.s21.re.to_bits() && x.s21.im.to_bits() == y.s21.im.to_bits()
        }));
        assert_ne!(a, c);
    }

    #[test]
    fn synthesis_rejects_bad_grids() {
        assert!(synthesize_trace(&row1(), &[], 0.0, 0).is_err());
        assert!(matches!(
            synthesize_trace(&row1(), &[2.0, 1.0], 0.0, 0),
            Err(Error::Ordering { row: 1 })
        ));
    }

    #[test]
    fn photon_number_example() {
        // 2·3000²·1e-17 / (9000·1.0546e-34·(2π·7.3e9)²) = 0.0901
        let n = photons_from_power(&row1(), 1e-17).unwrap();
        assert!((n - 0.0901).abs() < 5e-4, "{n}");
        assert_eq!(photons_from_power(&row1(), 0.0).unwrap(), 0.0);
        assert_eq!(photons_from_power(&row1(), 2e-17).unwrap(), 2.0 * n);
        assert_relative_eq!(power_for_photons(&row1(), n), 1e-17, max_relative = 1e-14);
        assert!(photons_from_power(&row1(), -1.0).is_err());
    }

    #[test]
    fn photon_number_is_quadratic_in_loaded_q() {
        let p = row1();
        let doubled = NotchParams {
            q_loaded: 2.0 * p.q_loaded,
            ..p
        };
        assert_relative_eq!(
            photons_from_power(&doubled, 1e-15).unwrap(),
            4.0 * photons_from_power(&p, 1e-15).unwrap(),
            max_relative = 1e-14
        );
    }

    fn circle_residual(points: &[Complex64]) -> f64 {
        // Exact algebraic circle through the first three points, then the
        // largest distance mismatch over the rest.
        let (a, b, c) = (
            points[0],
            points[points.len() / 3],
            points[2 * points.len() / 3],
        );
        let d = 2.0 * (a.re * (b.im - c.im) + b.re * (c.im - a.im) + c.re * (a.im - b.im));
        let ux = (a.norm_sqr() * (b.im - c.im)
            + b.norm_sqr() * (c.im - a.im)
            + c.norm_sqr() * (a.im - b.im))
            / d;
        let uy = (a.norm_sqr() * (c.re - b.re)
            + b.norm_sqr() * (a.re - c.re)
            + c.norm_sqr() * (b.re - a.re))
            / d;
        let center = Complex64::new(ux, uy);
        let r = (a - center).norm();
        points
            .iter()
            .map(|p| ((p - center).norm() - r).abs())
            .fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn deembedded_locus_is_a_circle(
            q_in in 1e3f64..1e5, q_e in 1e3f64..1e4, phi in -0.5f64..0.5,
            gain in 0.1f64..2.0, alpha in -3.0f64..3.0, tau in 0.0f64..80e-9,
        ) {
            let p = NotchParams::from_internal(7.3e9, q_in, q_e, phi).with_environment(gain, alpha, tau);
            let grid = linewidth_grid(&p, 64, 5.0);
            let deembedded: Vec<Complex64> = grid.iter().map(|&f| s21_at(&p, f) / p.environment(f)).collect();
            prop_assert!(circle_residual(&deembedded) < 1e-12);
        }

        #[test]
        fn photons_are_linear_in_power(q_in in 1e3f64..1e5, q_e in 1e3f64..1e4, p1 in 0.0f64..1e-12, k in 0.0f64..100.0) {
            let p = NotchParams::from_internal(7.3e9, q_in, q_e, 0.0);
            let a = photons_from_power(&p, p1).unwrap();
            let b = photons_from_power(&p, k * p1).unwrap();
            prop_assert!((b - k * a).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }
}
