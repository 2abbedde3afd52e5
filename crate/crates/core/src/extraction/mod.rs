//! Inverse problems: notch-resonator parameters from a transmission trace,
//! and capacitor constants from resonator ensembles.

mod circle;
mod datasets;
mod delay;
mod notch_fit;
mod phase;

pub use circle::{fit_circle, Circle};
pub use datasets::{
    fit_capacitance_vs_area, fit_frequency_vs_area, fit_frequency_vs_area_with,
    frequency_area_curve, AreaFrequencyDataset, AreaFrequencyFit, CapacitanceFit, CapacitanceRow,
    AREA_PARAM_SCALES,
};
pub use delay::{estimate_delay, remove_delay};
pub use notch_fit::{
    circle_fit_stage, extract_qfactors, fit_notch, fit_notch_with, mean_q_ext,
    monte_carlo_uncertainties, Environment, NotchFitResult, NotchUncertainties,
};
pub use phase::{fit_phase, fit_phase_with, phase_model, PhaseFit};
