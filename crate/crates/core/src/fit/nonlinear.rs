use nalgebra::{DMatrix, DVector};

use super::jacobian::jacobian_with_step;
use super::{FitConfig, FitProblem, FitResult, SigmaMode};
use crate::error::{Error, Result};

/// Damping beyond which no descent direction is numerically reachable.
const MAX_DAMPING: f64 = 1e16;

/// Damped Gauss–Newton (Levenberg–Marquardt) minimisation of the weighted
/// residual norm. Bounds are enforced by projecting each trial point.
pub fn nonlinear_ls<F>(problem: &FitProblem<F>, config: &FitConfig) -> Result<FitResult>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = problem.initial.len();
    let scales = match &problem.scales {
        Some(s) if s.len() != n => {
            return Err(Error::Domain(format!(
                "{} scales for {n} parameters",
                s.len()
            )))
        }
        Some(s) => s.clone(),
        None => vec![1.0; n],
    };
    if let Some(b) = &problem.bounds {
        if b.len() != n {
            return Err(Error::Domain(format!(
                "{} bounds for {n} parameters",
                b.len()
            )));
        }
        for (i, ((lo, hi), p)) in b.iter().zip(&problem.initial).enumerate() {
            if !(lo <= p && p <= hi) {
                return Err(Error::Domain(format!(
                    "initial parameter {i} = {p} outside bounds [{lo}, {hi}]"
                )));
            }
        }
    }
    if let Some(w) = &problem.weights {
        if let Some(bad) = w.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!(
                "weights must be positive, got {bad}"
            )));
        }
    }

    let w_sqrt: Option<Vec<f64>> = problem
        .weights
        .as_ref()
        .map(|w| w.iter().map(|v| v.sqrt()).collect());
    let weighted = |p: &[f64]| -> Vec<f64> {
        let mut r = (problem.residuals)(p);
        if let Some(w) = &w_sqrt {
            if w.len() == r.len() {
                r.iter_mut().zip(w).for_each(|(ri, wi)| *ri *= wi);
            } else {
                r.iter_mut().for_each(|ri| *ri = f64::NAN);
            }
        }
        r
    };
    let project = |p: &mut [f64]| {
        if let Some(b) = &problem.bounds {
            for (v, (lo, hi)) in p.iter_mut().zip(b) {
                *v = v.clamp(*lo, *hi);
            }
        }
    };

    let mut params = problem.initial.clone();
    let first = weighted(&params);
    if first.is_empty() || first.iter().any(|v| !v.is_finite()) {
        return Err(Error::ModelEvaluation(
            "residuals at the initial point are not finite".into(),
        ));
    }
    let m = first.len();
    let mut resid = DVector::from_vec(first);
    let mut cost = resid.norm_squared();
    let mut jac = jacobian_with_step(
        &weighted,
        &params,
        Some(&scales),
        problem.bounds.as_deref(),
        config.jacobian_step,
    )?;

    let mut lambda = config.initial_damping;
    let mut iterations = 0;
    let mut converged = false;
    let mut stationary = false;
    let mut cost_history = vec![cost];
    let mut param_history = vec![params.clone()];

    'outer: while iterations < config.max_iterations {
        let jt = jac.transpose();
        let gradient = &jt * &resid;
        if cost == 0.0 || gradient.amax() == 0.0 {
            converged = true;
            stationary = iterations == 0;
            break;
        }
        let normal = &jt * &jac;
        let diag_max = normal.diagonal().max();
        let damping_diag: Vec<f64> = normal
            .diagonal()
            .iter()
            .map(|d| d.max(diag_max * 1e-15).max(f64::MIN_POSITIVE))
            .collect();

        // Parameters pinned at a bound with the descent direction pointing
        // outward are held fixed for this step.
        let active: Vec<bool> = match &problem.bounds {
            Some(b) => (0..n)
                .map(|i| {
                    (params[i] <= b[i].0 && gradient[i] > 0.0)
                        || (params[i] >= b[i].1 && gradient[i] < 0.0)
                })
                .collect(),
            None => vec![false; n],
        };
        if active.iter().all(|a| *a) {
            converged = true;
            break;
        }
        let mut free_gradient = gradient.clone();
        for i in (0..n).filter(|&i| active[i]) {
            free_gradient[i] = 0.0;
        }

        loop {
            let mut lhs = normal.clone();
            for (i, d) in damping_diag.iter().enumerate() {
                lhs[(i, i)] += lambda * d;
            }
            for i in (0..n).filter(|&i| active[i]) {
                for j in 0..n {
                    if j != i {
                        lhs[(i, j)] = 0.0;
                        lhs[(j, i)] = 0.0;
                    }
                }
            }
            let step = match lhs.cholesky() {
                Some(ch) => -ch.solve(&free_gradient),
                None => {
                    lambda *= config.damping_increase;
                    if lambda > MAX_DAMPING {
                        converged = true;
                        break 'outer;
                    }
                    continue;
                }
            };

            let mut trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            project(&mut trial);
            let trial_resid = weighted(&trial);
            let trial_cost: f64 = trial_resid.iter().map(|v| v * v).sum();

            if trial_resid.len() == m && trial_cost.is_finite() && trial_cost <= cost {
                let small_step = trial
                    .iter()
                    .zip(&params)
                    .zip(&scales)
                    .all(|((t, p), s)| (t - p).abs() <= config.step_tolerance * (p.abs() + s));
                let small_gain = cost - trial_cost <= config.cost_tolerance * cost;

                params = trial;
                resid = DVector::from_vec(trial_resid);
                cost = trial_cost;
                lambda /= config.damping_decrease;
                iterations += 1;
                cost_history.push(cost);
                param_history.push(params.clone());

                if small_step || small_gain || cost == 0.0 {
                    converged = true;
                    break 'outer;
                }
                jac = jacobian_with_step(
                    &weighted,
                    &params,
                    Some(&scales),
                    problem.bounds.as_deref(),
                    config.jacobian_step,
                )?;
                break;
            }

            lambda *= config.damping_increase;
            if lambda > MAX_DAMPING {
                converged = true;
                break 'outer;
            }
        }
    }

    let jac = jacobian_with_step(
        &weighted,
        &params,
        Some(&scales),
        problem.bounds.as_deref(),
        config.jacobian_step,
    )?;
    let (mut covariance, rank_deficient) = normal_inverse(&jac);
    let dof = m.saturating_sub(n);
    if problem.sigma_mode == SigmaMode::Relative {
        let s2 = if dof > 0 { cost / dof as f64 } else { f64::NAN };
        covariance *= s2;
    }

    Ok(FitResult {
        params,
        covariance,
        residual_norm: cost.sqrt(),
        iterations,
        converged,
        stationary,
        rank_deficient,
        cost_history,
        param_history,
        degrees_of_freedom: dof,
    })
}

/// (JᵀJ)⁻¹ through an equilibrated SVD; singular directions are dropped.
fn normal_inverse(jac: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let n = jac.ncols();
    let mut a = jac.clone();
    let mut scale = vec![1.0; n];
    for k in 0..n {
        let norm = a.column(k).norm();
        if norm > 0.0 && norm.is_finite() {
            scale[k] = norm;
            a.column_mut(k).scale_mut(1.0 / norm);
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested Vᵀ");
    let smax = svd.singular_values.max();
    let mut rank_deficient = false;
    let mut inner = DMatrix::zeros(n, n);
    for k in 0..svd.singular_values.len() {
        let s = svd.singular_values[k];
        if s > 1e-12 * smax {
            inner[(k, k)] = 1.0 / (s * s);
        } else {
            rank_deficient = true;
        }
    }
    if svd.singular_values.len() < n {
        rank_deficient = true;
    }
    let v_rows = v_t.nrows();
    let inner = inner.view((0, 0), (v_rows, v_rows)).into_owned();
    let cov = v_t.transpose() * inner * &v_t;
    let cov = DMatrix::from_fn(n, n, |i, j| cov[(i, j)] / (scale[i] * scale[j]));
    (cov, rank_deficient)
}
