use nalgebra::{DMatrix, DVector};

use super::FitResult;
use crate::error::{Error, Result};

/// Relative singular-value floor below which a (column-equilibrated) design is
/// treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-12;

/// Basis functions for a linear model y = Σ β_k φ_k(x).
pub enum Basis<'a> {
    /// 1, x, x², …, x^degree.
    Polynomial(usize),
    Functions(Vec<&'a dyn Fn(f64) -> f64>),
}

impl Basis<'_> {
    fn len(&self) -> usize {
        match self {
            Basis::Polynomial(d) => d + 1,
            Basis::Functions(fs) => fs.len(),
        }
    }

    fn eval(&self, k: usize, x: f64) -> f64 {
        match self {
            Basis::Polynomial(_) => x.powi(k as i32),
            Basis::Functions(fs) => fs[k](x),
        }
    }
}

/// Weighted linear least squares of `y` on the basis evaluated at `x`.
/// `sigma` are per-point standard deviations (unit when `None`); the returned
/// covariance is (XᵀWX)⁻¹ with W = diag(1/σ²).
pub fn linear_wls(x: &[f64], y: &[f64], sigma: Option<&[f64]>, basis: &Basis) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "x has {} points but y has {}",
            x.len(),
            y.len()
        )));
    }
    let design = DMatrix::from_fn(x.len(), basis.len(), |i, k| basis.eval(k, x[i]));
    linear_wls_design(&design, y, sigma)
}

/// Weighted linear least squares with an explicit design matrix (rows = points).
pub fn linear_wls_design(
    design: &DMatrix<f64>,
    y: &[f64],
    sigma: Option<&[f64]>,
) -> Result<FitResult> {
    let (m, n) = design.shape();
    if y.len() != m {
        return Err(Error::Domain(format!(
            "design has {m} rows but y has {}",
            y.len()
        )));
    }
    if m < n {
        return Err(Error::InsufficientData { needed: n, got: m });
    }
    if let Some(s) = sigma {
        if s.len() != m {
            return Err(Error::Domain(format!(
                "sigma has {} entries, expected {m}",
                s.len()
            )));
        }
        if let Some(bad) = s.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!(
                "sigma must be positive and finite, got {bad}"
            )));
        }
    }
    let w_sqrt: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|v| 1.0 / v).collect(),
        None => vec![1.0; m],
    };

    let mut a = DMatrix::from_fn(m, n, |i, k| design[(i, k)] * w_sqrt[i]);
    let b = DVector::from_fn(m, |i, _| y[i] * w_sqrt[i]);

    // Equilibrate columns so the rank test is independent of units.
    let mut col_scale = vec![1.0; n];
    for k in 0..n {
        let norm = a.column(k).norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::RankDeficient(format!(
                "basis column {k} is identically zero"
            )));
        }
        col_scale[k] = norm;
        a.column_mut(k).scale_mut(1.0 / norm);
    }

    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_TOLERANCE * smax) {
        return Err(Error::RankDeficient(format!(
            "condition number {:.3e} exceeds {:.0e}",
            smax / smin,
            1.0 / RANK_TOLERANCE
        )));
    }
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");

    let utb = u.transpose() * &b;
    let mut z = DVector::zeros(n);
    for k in 0..n {
        z[k] = utb[k] / svd.singular_values[k];
    }
    let scaled = v_t.transpose() * z;
    let params: Vec<f64> = (0..n).map(|k| scaled[k] / col_scale[k]).collect();

    let mut inv_s2 = DMatrix::zeros(n, n);
    for k in 0..n {
        inv_s2[(k, k)] = 1.0 / (svd.singular_values[k] * svd.singular_values[k]);
    }
    let cov_scaled = v_t.transpose() * inv_s2 * v_t;
    let covariance = DMatrix::from_fn(n, n, |i, j| {
        cov_scaled[(i, j)] / (col_scale[i] * col_scale[j])
    });

    let p = DVector::from_vec(params.clone());
    let resid = design * &p - DVector::from_column_slice(y);
    let residual_norm = resid
        .iter()
        .zip(&w_sqrt)
        .map(|(r, w)| (r * w) * (r * w))
        .sum::<f64>()
        .sqrt();

    Ok(FitResult {
        params: params.clone(),
        covariance,
        residual_norm,
        iterations: 0,
        converged: true,
        stationary: false,
        rank_deficient: false,
        cost_history: vec![residual_norm * residual_norm],
        param_history: vec![params],
        degrees_of_freedom: m - n,
    })
}
