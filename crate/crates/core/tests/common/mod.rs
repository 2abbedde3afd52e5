//! Published per-resonator table used as reference data by the integration
//! tests. Row 9 is an outlier in every loss column and is excluded from loss
//! tolerances.

#![allow(dead_code)]

/// Measured resonance frequency, GHz.
pub const FREQ_GHZ: [f64; 10] = [
    7.30, 8.91, 9.00, 10.61, 10.76, 10.85, 12.50, 12.62, 12.92, 13.06,
];
/// Parallel-plate capacitance, pF.
pub const CAP_PF: [f64; 10] = [1.56, 1.02, 0.99, 0.70, 0.69, 0.68, 0.50, 0.48, 0.47, 0.46];
/// Square root of the capacitor area, µm.
pub const SQRT_AREA_UM: [f64; 10] = [10.64, 8.6, 8.5, 7.16, 7.09, 7.04, 6.04, 5.94, 5.84, 5.8];
/// Power-averaged |Q_e|, units of 1e3.
pub const Q_EXT_K: [f64; 10] = [9.0, 8.0, 6.0, 6.0, 6.0, 6.0, 6.0, 7.0, 7.0, 9.0];
/// Q_in near 1e5 photons, units of 1e3.
pub const Q_IN_HIGH_K: [f64; 10] = [45.5, 35.5, 33.6, 43.9, 31.3, 35.9, 34.5, 40.0, 21.3, 18.9];
/// Q_in near one photon, units of 1e3.
pub const Q_IN_LOW_K: [f64; 10] = [4.5, 2.8, 1.6, 3.4, 0.6, 2.5, 3.0, 8.3, 0.1, 2.8];
/// Single-photon loss tangent, units of 1e-4.
pub const TAN_DELTA_E4: [f64; 10] = [2.22, 3.57, 6.25, 2.94, 16.6, 4.00, 3.33, 1.20, 100.0, 3.57];

pub const OUTLIER_ROW: usize = 8;

/// Fit constants quoted alongside the table.
pub const L_NH: f64 = 0.3;
pub const C_FF_UM2: f64 = 13.86;
pub const C_FF_UM2_ERR: f64 = 0.14;
pub const CG_FF: f64 = 33.65;
pub const CG_FF_ERR: f64 = 6.40;

pub fn areas_um2() -> Vec<f64> {
    SQRT_AREA_UM.iter().map(|s| s * s).collect()
}
