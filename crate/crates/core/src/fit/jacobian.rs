use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Central-difference Jacobian of `model` at `params`.
///
/// Parameter `j` is stepped by `scale[j]·max(|p_j|, 1)·1e-6`; a missing scale means 1.
pub fn numeric_jacobian<F>(model: F, params: &[f64], scale: Option<&[f64]>) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    jacobian_with_step(&model, params, scale, None, 1e-6)
}

/// As [`numeric_jacobian`] with a configurable relative step. A parameter
/// whose two-sided stencil would cross a bound is differenced one-sided.
pub(crate) fn jacobian_with_step<F>(
    model: &F,
    params: &[f64],
    scale: Option<&[f64]>,
    bounds: Option<&[(f64, f64)]>,
    rel_step: f64,
) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = params.len();
    let mut probe = params.to_vec();
    let mut jac: Option<DMatrix<f64>> = None;
    for j in 0..n {
        let s = scale.map_or(1.0, |s| s[j]);
        let h = s * params[j].abs().max(1.0) * rel_step;
        let (lo, hi) = bounds.map_or((f64::NEG_INFINITY, f64::INFINITY), |b| b[j]);
        let upper = if params[j] + h <= hi {
            params[j] + h
        } else {
            params[j]
        };
        let lower = if params[j] - h >= lo {
            params[j] - h
        } else {
            params[j]
        };
        probe[j] = upper;
        let plus = model(&probe);
        probe[j] = lower;
        let minus = model(&probe);
        probe[j] = params[j];

        if plus.len() != minus.len() {
            return Err(Error::ModelEvaluation("model output length changed".into()));
        }
        let m = plus.len();
        let jac = jac.get_or_insert_with(|| DMatrix::zeros(m, n));
        if jac.nrows() != m {
            return Err(Error::ModelEvaluation("model output length changed".into()));
        }
        // Dividing by the realised step absorbs rounding in p ± h.
        let span = upper - lower;
        if span == 0.0 {
            return Err(Error::ModelEvaluation(format!(
                "parameter {j} has no room between its bounds"
            )));
        }
        for i in 0..m {
            let d = (plus[i] - minus[i]) / span;
            if !d.is_finite() {
                return Err(Error::ModelEvaluation(format!(
                    "non-finite derivative of output {i} with respect to parameter {j}"
                )));
            }
            jac[(i, j)] = d;
        }
    }
    Ok(jac.unwrap_or_else(|| DMatrix::zeros(model(params).len(), 0)))
}
