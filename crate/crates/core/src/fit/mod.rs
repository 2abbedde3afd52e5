//! Least-squares substrate shared by every fitter in the crate.

mod jacobian;
mod linear;
mod nonlinear;

pub use jacobian::numeric_jacobian;
pub use linear::{linear_wls, linear_wls_design, Basis};
pub use nonlinear::nonlinear_ls;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Numerical knobs for the damped Gauss–Newton solver. Defaults are frozen so
/// golden outputs stay reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Stop when every parameter moves by less than this, relative to its magnitude.
    pub step_tolerance: f64,
    /// Stop when the cost decreases by less than this fraction.
    pub cost_tolerance: f64,
    /// Starting Marquardt damping, relative to the diagonal of JᵀJ.
    pub initial_damping: f64,
    pub damping_increase: f64,
    pub damping_decrease: f64,
    /// Relative central-difference step; multiplied by the parameter scale.
    pub jacobian_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-10,
            cost_tolerance: 1e-12,
            initial_damping: 1e-3,
            damping_increase: 10.0,
            damping_decrease: 3.0,
            jacobian_step: 1e-6,
        }
    }
}

/// How the covariance of the estimate is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaMode {
    /// Weights are exact inverse variances: cov = (JᵀWJ)⁻¹.
    Absolute,
    /// Weights are relative; cov is scaled by the reduced chi-square.
    Relative,
}

/// A nonlinear least-squares problem. `residuals(p)` returns model − data;
/// the solver multiplies each entry by √weight.
pub struct FitProblem<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    pub residuals: F,
    pub initial: Vec<f64>,
    pub bounds: Option<Vec<(f64, f64)>>,
    pub weights: Option<Vec<f64>>,
    /// Per-parameter magnitude used for finite-difference steps and step tests.
    pub scales: Option<Vec<f64>>,
    pub sigma_mode: SigmaMode,
}

impl<F> FitProblem<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(residuals: F, initial: Vec<f64>) -> Self {
        Self {
            residuals,
            initial,
            bounds: None,
            weights: None,
            scales: None,
            sigma_mode: SigmaMode::Relative,
        }
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn with_scales(mut self, scales: Vec<f64>) -> Self {
        self.scales = Some(scales);
        self
    }

    pub fn with_sigma_mode(mut self, mode: SigmaMode) -> Self {
        self.sigma_mode = mode;
        self
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// Weighted residual 2-norm at `params`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The starting point already had a zero gradient; no step was taken.
    pub stationary: bool,
    /// JᵀWJ was singular at the solution; covariance is a pseudo-inverse.
    pub rank_deficient: bool,
    /// Cost (squared weighted norm) after each accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
    /// Parameters after each accepted step, starting with the initial point.
    pub param_history: Vec<Vec<f64>>,
    pub degrees_of_freedom: usize,
}

impl FitResult {
    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.params.len())
            .map(|i| self.covariance[(i, i)].max(0.0).sqrt())
            .collect()
    }

    pub fn reduced_chi_square(&self) -> f64 {
        if self.degrees_of_freedom == 0 {
            f64::NAN
        } else {
            self.residual_norm * self.residual_norm / self.degrees_of_freedom as f64
        }
    }
}
