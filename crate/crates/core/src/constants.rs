//! Frozen physical constants and unit conversion factors.
//!
//! Everything inside the library is SI. The factors below convert lab units
//! (GHz, nH, fF, µm²) at the interface boundary.

use std::f64::consts::PI;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.0546e-34;
/// Planck constant, J·s.
pub const PLANCK: f64 = 2.0 * PI * HBAR;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.381e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602e-19;
/// Magnetic flux quantum, Wb.
pub const FLUX_QUANTUM: f64 = 2.068e-15;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.85e-12;

pub mod units {
    pub const GHZ: f64 = 1e9;
    pub const MHZ: f64 = 1e6;
    pub const NANOHENRY: f64 = 1e-9;
    pub const PICOFARAD: f64 = 1e-12;
    pub const FEMTOFARAD: f64 = 1e-15;
    pub const NANOMETER: f64 = 1e-9;
    pub const NANOSECOND: f64 = 1e-9;
    pub const MICROMETER: f64 = 1e-6;
    /// One square micrometer in m².
    pub const SQUARE_MICROMETER: f64 = 1e-12;
    /// One fF/µm² in F/m².
    pub const FF_PER_UM2: f64 = FEMTOFARAD / SQUARE_MICROMETER;
    pub const MICROELECTRONVOLT: f64 = 1e-6;

    /// dBm to watts.
    pub fn dbm_to_watt(dbm: f64) -> f64 {
        1e-3 * 10f64.powf(dbm / 10.0)
    }

    pub fn watt_to_dbm(watt: f64) -> f64 {
        10.0 * (watt / 1e-3).log10()
    }
}
