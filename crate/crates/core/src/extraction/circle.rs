use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
    /// Root-mean-square geometric distance of the points from the circle.
    pub rms: f64,
    pub n_points: usize,
}

impl Circle {
    /// First-order standard error of the radius, from the residual scatter.
    pub fn radius_error(&self) -> f64 {
        self.rms / (self.n_points as f64).sqrt()
    }

    /// First-order standard error of each center coordinate.
    pub fn center_error(&self) -> f64 {
        self.rms * (2.0 / self.n_points as f64).sqrt()
    }
}

/// Algebraic circle fit (Taubin moments, Newton root of the characteristic
/// polynomial). Points are centered and scaled internally.
pub fn fit_circle(points: &[Complex64]) -> Result<Circle> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    if points
        .iter()
        .any(|p| !(p.re.is_finite() && p.im.is_finite()))
    {
        return Err(Error::Domain("circle points must be finite".into()));
    }
    let nf = n as f64;
    let mean = points.iter().sum::<Complex64>() / nf;
    let scale = (points.iter().map(|p| (p - mean).norm_sqr()).sum::<f64>() / nf).sqrt();
    if !(scale > 0.0) {
        return Err(Error::DegenerateGeometry("all points coincide".into()));
    }

    let (mut mxx, mut myy, mut mxy, mut mxz, mut myz, mut mzz) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let q = (p - mean) / scale;
        let (x, y) = (q.re, q.im);
        let z = x * x + y * y;
        mxx += x * x;
        myy += y * y;
        mxy += x * y;
        mxz += x * z;
        myz += y * z;
        mzz += z * z;
    }
    mxx /= nf;
    myy /= nf;
    mxy /= nf;
    mxz /= nf;
    myz /= nf;
    mzz /= nf;

    let mz = mxx + myy;
    let cov_xy = mxx * myy - mxy * mxy;
    let var_z = mzz - mz * mz;
    let a3 = 4.0 * mz;
    let a2 = -3.0 * mz * mz - mzz;
    let a1 = var_z * mz + 4.0 * cov_xy * mz - mxz * mxz - myz * myz;
    let a0 = mxz * (mxz * myy - myz * mxy) + myz * (myz * mxx - mxz * mxy) - var_z * cov_xy;

    let mut x = 0.0;
    let mut y = a0;
    for _ in 0..100 {
        let dy = a1 + x * (2.0 * a2 + 3.0 * a3 * x);
        let x_new = x - y / dy;
        if x_new == x || !x_new.is_finite() {
            break;
        }
        let y_new = a0 + x_new * (a1 + x_new * (a2 + x_new * a3));
        if y_new.abs() >= y.abs() {
            break;
        }
        x = x_new;
        y = y_new;
    }

    let det = x * x - x * mz + cov_xy;
    let cx = (mxz * (myy - x) - myz * mxy) / det / 2.0;
    let cy = (myz * (mxx - x) - mxz * mxy) / det / 2.0;
    let radius_sq = cx * cx + cy * cy + mz;
    // Collinear input sends the center to infinity.
    if !(cx.is_finite() && cy.is_finite()) || det.abs() < 1e-14 || cx.hypot(cy) > 1e8 {
        return Err(Error::DegenerateGeometry("points are collinear".into()));
    }

    let center = mean + Complex64::new(cx, cy) * scale;
    let radius = radius_sq.sqrt() * scale;
    let rms = (points
        .iter()
        .map(|p| ((p - center).norm() - radius).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    Ok(Circle {
        center,
        radius,
        rms,
        n_points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, Uniform};

    fn ring(center: Complex64, r: f64, n: usize, arc: f64) -> Vec<Complex64> {
        (0..n)
            .map(|k| center + Complex64::from_polar(r, arc * k as f64 / n as f64))
            .collect()
    }

    #[test]
    fn exact_circle() {
        let c = fit_circle(&ring(
            Complex64::new(0.5, 0.0),
            0.25,
            100,
            2.0 * std::f64::consts::PI,
        ))
        .unwrap();
        assert!((c.center - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((c.radius - 0.25).abs() < 1e-12);
        assert!(c.rms < 1e-12);
    }

    #[test]
    fn three_points_define_the_circle() {
        let pts = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
        ];
        let c = fit_circle(&pts).unwrap();
        assert!(c.center.norm() < 1e-12);
        assert!((c.radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn short_arc_is_still_exact() {
        let c = fit_circle(&ring(Complex64::new(3.0, -2.0), 0.01, 50, 0.5)).unwrap();
        assert!((c.center - Complex64::new(3.0, -2.0)).norm() < 1e-10);
        assert!((c.radius - 0.01).abs() < 1e-10);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts: Vec<Complex64> = (0..10)
            .map(|k| Complex64::new(k as f64, 2.0 * k as f64))
            .collect();
        assert!(matches!(
            fit_circle(&pts),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(matches!(
            fit_circle(&[Complex64::new(0.0, 0.0); 2]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn noisy_circle_monte_carlo() {
        let center = Complex64::new(0.5, 0.0);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let angle = Uniform::new(0.0, 2.0 * std::f64::consts::PI).unwrap();
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Complex64> = (0..200)
                .map(|_| {
                    center
                        + Complex64::from_polar(
                            0.25 + noise.sample(&mut rng),
                            angle.sample(&mut rng),
                        )
                })
                .collect();
            let c = fit_circle(&pts).unwrap();
            assert!((c.center - center).norm() < 5e-3, "seed {seed}");
            assert!((c.radius - 0.25).abs() < 5e-3, "seed {seed}");
        }
    }

    proptest! {
        #[test]
        fn rms_invariant_under_rigid_motion(
            seed in 0u64..1000, rot in -3.1f64..3.1, dx in -5.0f64..5.0, dy in -5.0f64..5.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, 0.02).unwrap();
            let pts: Vec<Complex64> = ring(Complex64::new(0.3, 0.1), 0.4, 60, 4.0)
                .into_iter()
                .map(|p| p + Complex64::new(noise.sample(&mut rng), noise.sample(&mut rng)))
                .collect();
            let moved: Vec<Complex64> = pts
                .iter()
                .map(|p| p * Complex64::from_polar(1.0, rot) + Complex64::new(dx, dy))
                .collect();
            let a = fit_circle(&pts).unwrap();
            let b = fit_circle(&moved).unwrap();
            prop_assert!((a.rms - b.rms).abs() < 1e-10);
            prop_assert!((a.radius - b.radius).abs() < 1e-10);
        }
    }
}
