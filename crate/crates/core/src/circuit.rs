//! Closed-form physics of lumped-element resonators and parallel-plate capacitors.
//!
//! All inputs and outputs are SI: henry, farad, m², F/m², hertz, kelvin, joule.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{units, BOLTZMANN, ELEMENTARY_CHARGE, FLUX_QUANTUM, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};

/// Default kinetic-inductance fraction used when reproducing the measured chip.
/// The estimated physical value is [`ESTIMATED_KINETIC_FRACTION`].
pub const DEFAULT_KINETIC_FRACTION: f64 = 0.0;
pub const ESTIMATED_KINETIC_FRACTION: f64 = 0.06;

/// Aluminum superconducting gap used when none is supplied (180 µeV).
pub const ALUMINUM_GAP: f64 = 180.0 * units::MICROELECTRONVOLT * ELEMENTARY_CHARGE;

/// A lumped LC resonator: wire inductor plus parallel-plate capacitor with a
/// parasitic capacitance to ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorDesign {
    /// Geometric inductance, H.
    pub inductance_geometric: f64,
    /// Kinetic inductance as a fraction of the geometric one.
    pub kinetic_fraction: f64,
    /// Capacitor overlap area, m².
    pub cap_area: f64,
    /// Capacitance per area, F/m².
    pub cap_per_area: f64,
    /// Capacitance to ground, F.
    pub cap_to_ground: f64,
}

impl ResonatorDesign {
    pub fn new(inductance: f64, cap_area: f64, cap_per_area: f64, cap_to_ground: f64) -> Self {
        Self {
            inductance_geometric: inductance,
            kinetic_fraction: DEFAULT_KINETIC_FRACTION,
            cap_area,
            cap_per_area,
            cap_to_ground,
        }
    }

    /// Design in lab units: nH, µm², fF/µm², fF.
    pub fn from_lab_units(l_nh: f64, area_um2: f64, c_ff_um2: f64, cg_ff: f64) -> Self {
        Self::new(
            l_nh * units::NANOHENRY,
            area_um2 * units::SQUARE_MICROMETER,
            c_ff_um2 * units::FF_PER_UM2,
            cg_ff * units::FEMTOFARAD,
        )
    }

    pub fn with_area(mut self, area: f64) -> Self {
        self.cap_area = area;
        self
    }

    pub fn with_kinetic_fraction(mut self, fraction: f64) -> Self {
        self.kinetic_fraction = fraction;
        self
    }

    pub fn effective_inductance(&self) -> f64 {
        self.inductance_geometric * (1.0 + self.kinetic_fraction)
    }

    pub fn total_capacitance(&self) -> f64 {
        self.cap_to_ground + self.cap_per_area * self.cap_area
    }

    /// Resonance frequency at zero capacitor area, the upper bound of the design family.
    pub fn ceiling_frequency(&self) -> Result<f64> {
        self.validate_without_area()?;
        Ok(1.0 / (2.0 * PI * (self.effective_inductance() * self.cap_to_ground).sqrt()))
    }

    fn validate_without_area(&self) -> Result<()> {
        if !(self.inductance_geometric > 0.0 && self.inductance_geometric.is_finite()) {
            return Err(Error::Domain(format!(
                "inductance must be positive, got {}",
                self.inductance_geometric
            )));
        }
        if !(0.0..1.0).contains(&self.kinetic_fraction) {
            return Err(Error::Domain(format!(
                "kinetic fraction must lie in [0, 1), got {}",
                self.kinetic_fraction
            )));
        }
        if !(self.cap_per_area > 0.0 && self.cap_per_area.is_finite()) {
            return Err(Error::Domain(format!(
                "capacitance per area must be positive, got {}",
                self.cap_per_area
            )));
        }
        if !(self.cap_to_ground > 0.0 && self.cap_to_ground.is_finite()) {
            return Err(Error::Domain(format!(
                "capacitance to ground must be positive, got {}",
                self.cap_to_ground
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_without_area()?;
        if !(self.cap_area >= 0.0 && self.cap_area.is_finite()) {
            return Err(Error::Domain(format!(
                "capacitor area must be non-negative, got {}",
                self.cap_area
            )));
        }
        Ok(())
    }
}

/// f = 1 / (2π √(L_eff (C_g + c·S))).
pub fn resonance_frequency(design: &ResonatorDesign) -> Result<f64> {
    design.validate()?;
    let l = design.effective_inductance();
    let c = design.total_capacitance();
    if !(l > 0.0 && c > 0.0) {
        return Err(Error::Domain(format!(
            "effective inductance {l:e} H and capacitance {c:e} F must be positive"
        )));
    }
    Ok(1.0 / (2.0 * PI * (l * c).sqrt()))
}

/// Capacitor area that puts the resonance at `target` Hz. The area stored in
/// `design` is ignored.
pub fn area_for_frequency(target: f64, design: &ResonatorDesign) -> Result<f64> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::Domain(format!(
            "target frequency must be positive, got {target}"
        )));
    }
    let ceiling = design.ceiling_frequency()?;
    if target >= ceiling {
        return Err(Error::UnreachableFrequency { target, ceiling });
    }
    let omega = 2.0 * PI * target;
    let total = 1.0 / (design.effective_inductance() * omega * omega);
    Ok((total - design.cap_to_ground) / design.cap_per_area)
}

/// C = c·S + C_offset.
pub fn capacitance_from_area(area: f64, cap_per_area: f64, offset: f64) -> Result<f64> {
    if !(area >= 0.0) {
        return Err(Error::Domain(format!(
            "area must be non-negative, got {area}"
        )));
    }
    Ok(cap_per_area * area + offset)
}

/// Relative permittivity of a parallel-plate dielectric, ε = d·c/ε0.
pub fn dielectric_constant(cap_per_area: f64, thickness: f64) -> Result<f64> {
    if !(cap_per_area > 0.0 && thickness > 0.0) {
        return Err(Error::Domain(format!(
            "capacitance per area ({cap_per_area}) and thickness ({thickness}) must be positive"
        )));
    }
    Ok(thickness * cap_per_area / VACUUM_PERMITTIVITY)
}

/// Dielectric layer with Debye relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DielectricSpec {
    /// Layer thickness, m.
    pub thickness: f64,
    pub eps_static: f64,
    pub eps_inf: f64,
    /// Relaxation time, s.
    pub relax_time: f64,
}

impl DielectricSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.thickness > 0.0) {
            return Err(Error::Domain(format!(
                "thickness must be positive, got {}",
                self.thickness
            )));
        }
        if !(self.eps_static >= self.eps_inf && self.eps_inf >= 1.0) {
            return Err(Error::Domain(format!(
                "need eps_static >= eps_inf >= 1, got {} and {}",
                self.eps_static, self.eps_inf
            )));
        }
        if !(self.relax_time >= 0.0) {
            return Err(Error::Domain(format!(
                "relaxation time must be non-negative, got {}",
                self.relax_time
            )));
        }
        Ok(())
    }

    /// Capacitance per area at angular frequency `omega`, ε(ω)·ε0/d.
    pub fn cap_per_area(&self, omega: f64) -> f64 {
        debye_permittivity(self, omega) * VACUUM_PERMITTIVITY / self.thickness
    }
}

/// ε(ω) = ε_∞ + (ε_s − ε_∞) / (1 + ω²τ²).
pub fn debye_permittivity(spec: &DielectricSpec, angular_freq: f64) -> f64 {
    let wt = angular_freq * spec.relax_time;
    spec.eps_inf + (spec.eps_static - spec.eps_inf) / (1.0 + wt * wt)
}

/// Parameter step scales for [`debye_curve`].
pub const DEBYE_PARAM_SCALES: [f64; 3] = [1.0, 1.0, 1.0];

/// Debye permittivity as a parametric model: `params = [eps_static, eps_inf,
/// relax_time_us]`, evaluated at angular frequencies in rad/s.
pub fn debye_curve(params: &[f64], angular_freqs: &[f64]) -> Vec<f64> {
    let spec = DielectricSpec {
        thickness: 1.0,
        eps_static: params[0],
        eps_inf: params[1],
        relax_time: params[2] * 1e-6,
    };
    angular_freqs
        .iter()
        .map(|&w| debye_permittivity(&spec, w))
        .collect()
}

/// Tunnel-barrier leakage through the capacitor dielectric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionLeakageSpec {
    /// Resistance-area product, Ω·m².
    pub specific_resistance: f64,
    /// Barrier area, m².
    pub area: f64,
    /// Superconducting gap Δ, J.
    pub gap_energy: f64,
    /// Temperature, K.
    pub temperature: f64,
}

impl JunctionLeakageSpec {
    pub fn aluminum(specific_resistance: f64, area: f64, temperature: f64) -> Self {
        Self {
            specific_resistance,
            area,
            gap_energy: ALUMINUM_GAP,
            temperature,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let gap_ev = self.gap_energy / ELEMENTARY_CHARGE;
        if !(self.specific_resistance > 0.0 && self.area > 0.0 && self.temperature > 0.0) {
            return Err(Error::Domain(
                "specific resistance, area and temperature must be positive".into(),
            ));
        }
        if !(gap_ev > 0.0 && gap_ev < 1e-2) {
            return Err(Error::Domain(format!(
                "gap {gap_ev:e} eV outside the (0, 1e-2) eV sanity window"
            )));
        }
        Ok(())
    }

    pub fn normal_resistance(&self) -> f64 {
        self.specific_resistance / self.area
    }

    /// Ambegaokar–Baratoff critical current, I_c = (πΔ / 2eR)·tanh(Δ / 2k_BT).
    pub fn critical_current(&self) -> f64 {
        let thermal = (self.gap_energy / (2.0 * BOLTZMANN * self.temperature)).tanh();
        PI * self.gap_energy / (2.0 * ELEMENTARY_CHARGE * self.normal_resistance()) * thermal
    }
}

/// Josephson inductance of an unintended tunnel path through the dielectric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShuntInductance {
    /// L = Φ0 / (2π I_c), H.
    Finite(f64),
    /// The critical current vanished; the shunt is effectively open.
    Negligible,
}

impl ShuntInductance {
    pub fn henry(&self) -> f64 {
        match *self {
            ShuntInductance::Finite(l) => l,
            ShuntInductance::Negligible => f64::INFINITY,
        }
    }
}

pub fn junction_shunt_inductance(spec: &JunctionLeakageSpec) -> Result<ShuntInductance> {
    spec.validate()?;
    let ic = spec.critical_current();
    if ic <= 0.0 {
        return Ok(ShuntInductance::Negligible);
    }
    let l = FLUX_QUANTUM / (2.0 * PI * ic);
    if l.is_finite() {
        Ok(ShuntInductance::Finite(l))
    } else {
        Ok(ShuntInductance::Negligible)
    }
}

/// Qubit–resonator parameters for the dispersive-readout Q budget. All in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersiveBudget {
    pub resonator_freq: f64,
    pub detuning: f64,
    pub coupling: f64,
}

impl DispersiveBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.resonator_freq > 0.0 && self.detuning > 0.0 && self.coupling > 0.0) {
            return Err(Error::Domain("budget frequencies must be positive".into()));
        }
        if self.coupling >= self.detuning {
            return Err(Error::Domain(format!(
                "coupling {} Hz must be below detuning {} Hz for the dispersive regime",
                self.coupling, self.detuning
            )));
        }
        Ok(())
    }

    /// Dispersive shift χ = g²/Δ.
    pub fn chi(&self) -> f64 {
        self.coupling * self.coupling / self.detuning
    }

    /// Resonator linewidth κ = ω/Q for a total quality factor `q_total`.
    pub fn linewidth(&self, q_total: f64) -> f64 {
        self.resonator_freq / q_total
    }

    pub fn min_q(&self) -> f64 {
        self.resonator_freq * self.detuning / (self.coupling * self.coupling)
    }
}

/// Smallest total Q for which χ ≥ κ: Q ≥ ωΔ/g².
pub fn dispersive_min_q(budget: &DispersiveBudget) -> Result<f64> {
    budget.validate()?;
    Ok(budget.min_q())
}

/// Relative TLS-noise weight 1/(ε²·E·V). Only ratios between designs are meaningful;
/// `field_scale` must be expressed consistently across the compared designs.
pub fn tls_noise_weight(eps: f64, field_scale: f64, volume: f64) -> Result<f64> {
    if !(eps > 0.0 && field_scale > 0.0 && volume > 0.0) {
        return Err(Error::Domain(
            "permittivity, field scale and volume must be positive".into(),
        ));
    }
    Ok(1.0 / (eps * eps * field_scale * volume))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::units::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn paper_design(sqrt_area_um: f64) -> ResonatorDesign {
        ResonatorDesign::from_lab_units(0.3, sqrt_area_um * sqrt_area_um, 13.86, 33.65)
    }

    #[test]
    fn frequency_matches_largest_and_smallest_capacitor() {
        let f1 = resonance_frequency(&paper_design(10.64)).unwrap();
        assert!((f1 / GHZ - 7.26).abs() < 0.005, "{f1}");
        assert!((f1 / (7.30 * GHZ) - 1.0).abs() < 0.01);

        let f10 = resonance_frequency(&paper_design(5.8)).unwrap();
        assert!((f10 / GHZ - 13.0).abs() < 0.005, "{f10}");
        assert!((f10 / (13.06 * GHZ) - 1.0).abs() < 0.01);
    }

    #[test]
    fn zero_area_reads_ground_capacitance_only() {
        let f0 = resonance_frequency(&paper_design(0.0)).unwrap();
        // 1/(2π√(0.3e-9 · 33.65e-15))
        assert!((f0 / GHZ - 50.09).abs() < 0.01, "{f0}");
        assert_eq!(f0, paper_design(3.0).ceiling_frequency().unwrap());
    }

    #[test]
    fn nonpositive_parameters_are_rejected() {
        let mut d = paper_design(10.0);
        d.inductance_geometric = 0.0;
        assert!(matches!(resonance_frequency(&d), Err(Error::Domain(_))));
        let d = paper_design(10.0).with_area(-1e-12);
        assert!(matches!(resonance_frequency(&d), Err(Error::Domain(_))));
        let d = paper_design(10.0).with_kinetic_fraction(1.0);
        assert!(resonance_frequency(&d).is_err());
    }

    #[test]
    fn kinetic_fraction_lowers_frequency() {
        let bare = resonance_frequency(&paper_design(10.64)).unwrap();
        let kin = resonance_frequency(&paper_design(10.64).with_kinetic_fraction(0.06)).unwrap();
        assert_relative_eq!(bare / kin, 1.06f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn area_for_frequency_examples() {
        let d = paper_design(0.0);
        let s = area_for_frequency(7.26 * GHZ, &d).unwrap() / SQUARE_MICROMETER;
        assert!((s - 113.2).abs() < 0.1, "{s}");
        let s = area_for_frequency(13.0 * GHZ, &d).unwrap() / SQUARE_MICROMETER;
        assert!((s - 33.6).abs() < 0.1, "{s}");

        let ceiling = d.ceiling_frequency().unwrap();
        assert!(matches!(
            area_for_frequency(ceiling, &d),
            Err(Error::UnreachableFrequency { .. })
        ));
        assert!(area_for_frequency(ceiling * 1.5, &d).is_err());
    }

    #[test]
    fn capacitance_examples() {
        let c = capacitance_from_area(113.21 * SQUARE_MICROMETER, 13.86 * FF_PER_UM2, 0.0).unwrap();
        assert!((c / PICOFARAD - 1.569).abs() < 5e-4, "{c}");
        assert!((c / PICOFARAD - 1.56).abs() < 0.01);
        assert_eq!(
            capacitance_from_area(0.0, 13.86 * FF_PER_UM2, 42e-15).unwrap(),
            42e-15
        );
        let c = capacitance_from_area(100.0 * SQUARE_MICROMETER, 22.0 * FF_PER_UM2, 0.0).unwrap();
        assert_relative_eq!(c, 2.2 * PICOFARAD, max_relative = 1e-12);
        assert!(capacitance_from_area(-1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn permittivity_examples() {
        let room = dielectric_constant(22.0 * FF_PER_UM2, 12.0 * NANOMETER).unwrap();
        assert!((room - 29.8).abs() < 0.1, "{room}");
        assert!((room - 30.0).abs() <= 5.0);
        let cryo = dielectric_constant(13.86 * FF_PER_UM2, 12.0 * NANOMETER).unwrap();
        assert!((cryo - 18.8).abs() < 0.1, "{cryo}");
        assert!((cryo - 19.0).abs() <= 3.0);
        let d = 7e-9;
        assert_eq!(
            dielectric_constant(VACUUM_PERMITTIVITY / d, d).unwrap(),
            1.0
        );
        assert!(dielectric_constant(0.0, d).is_err());
    }

    #[test]
    fn debye_limits() {
        let spec = DielectricSpec {
            thickness: 12e-9,
            eps_static: 30.0,
            eps_inf: 19.0,
            relax_time: 1e-5,
        };
        spec.validate().unwrap();
        assert_eq!(debye_permittivity(&spec, 0.0), 30.0);
        assert!((debye_permittivity(&spec, 1e9 / spec.relax_time) - 19.0).abs() <= 1e-15);
        assert_eq!(debye_permittivity(&spec, 1.0 / spec.relax_time), 24.5);
        assert_relative_eq!(
            spec.cap_per_area(0.0),
            30.0 * VACUUM_PERMITTIVITY / 12e-9,
            max_relative = 1e-15
        );
        let bad = DielectricSpec {
            eps_inf: 31.0,
            ..spec
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn shunt_inductance_at_zero_temperature() {
        // R = 3e6 Ω·µm² / 113.2 µm² = 26 502 Ω; I_c = πΔ/(2eR) with Δ/e = 180 µV
        // gives 10.67 nA; L = Φ0/(2π I_c) = 30.85 nH.
        let spec =
            JunctionLeakageSpec::aluminum(3e6 * SQUARE_MICROMETER, 113.2 * SQUARE_MICROMETER, 1e-3);
        let ic = spec.critical_current();
        assert!((ic / 1e-9 - 10.67).abs() < 0.01, "{ic}");
        let l = junction_shunt_inductance(&spec).unwrap().henry();
        assert!((l / NANOHENRY - 30.85).abs() < 0.05, "{l}");

        let doubled = JunctionLeakageSpec {
            specific_resistance: 2.0 * spec.specific_resistance,
            ..spec
        };
        let l2 = junction_shunt_inductance(&doubled).unwrap().henry();
        assert_relative_eq!(l2, 2.0 * l, max_relative = 1e-15);
    }

    #[test]
    fn vanishing_thermal_factor_signals_negligible_shunt() {
        let spec = JunctionLeakageSpec::aluminum(3e-6, 1e-10, f64::INFINITY);
        assert_eq!(
            junction_shunt_inductance(&spec).unwrap(),
            ShuntInductance::Negligible
        );
        assert_eq!(ShuntInductance::Negligible.henry(), f64::INFINITY);
    }

    #[test]
    fn leakage_gap_window() {
        let mut spec = JunctionLeakageSpec::aluminum(3e-6, 1e-10, 0.01);
        spec.gap_energy = 0.02 * ELEMENTARY_CHARGE;
        assert!(junction_shunt_inductance(&spec).is_err());
    }

    #[test]
    fn dispersive_budget_examples() {
        let b = DispersiveBudget {
            resonator_freq: 7e9,
            detuning: 1e9,
            coupling: 50e6,
        };
        assert_relative_eq!(dispersive_min_q(&b).unwrap(), 2800.0, max_relative = 1e-14);
        let q = b.min_q();
        assert_relative_eq!(b.chi(), b.linewidth(q), max_relative = 1e-14);

        let g2 = DispersiveBudget {
            coupling: 100e6,
            ..b
        };
        assert_eq!(
            dispersive_min_q(&g2).unwrap(),
            dispersive_min_q(&b).unwrap() / 4.0
        );

        // g² = ω·Δ forces Q = 1; needs g < Δ so ω < Δ.
        let unit = DispersiveBudget {
            resonator_freq: 0.25e9,
            detuning: 4e9,
            coupling: 1e9,
        };
        assert_eq!(dispersive_min_q(&unit).unwrap(), 1.0);

        let strong = DispersiveBudget { coupling: 2e9, ..b };
        assert!(dispersive_min_q(&strong).is_err());
    }

    #[test]
    fn tls_noise_weight_scaling() {
        let w = tls_noise_weight(19.0, 1.0, 1e-21).unwrap();
        assert_eq!(tls_noise_weight(19.0, 1.0, 2e-21).unwrap(), w / 2.0);
        assert_relative_eq!(
            tls_noise_weight(38.0, 1.0, 1e-21).unwrap(),
            w / 4.0,
            max_relative = 1e-15
        );
        // ε·√(E·V) equal between designs.
        let a = tls_noise_weight(10.0, 4.0, 1e-21).unwrap();
        let b = tls_noise_weight(20.0, 1.0, 1e-21).unwrap();
        assert_relative_eq!(a / b, 1.0, max_relative = 1e-15);
        assert!(tls_noise_weight(0.0, 1.0, 1.0).is_err());
    }

    fn design_strategy() -> impl Strategy<Value = ResonatorDesign> {
        (
            0.1f64..5.0,
            1.0f64..500.0,
            1.0f64..40.0,
            1.0f64..100.0,
            0.0f64..0.2,
        )
            .prop_map(|(l, s, c, cg, k)| {
                ResonatorDesign::from_lab_units(l, s, c, cg).with_kinetic_fraction(k)
            })
    }

    proptest! {
        #[test]
        fn area_round_trip(design in design_strategy(), frac in 0.05f64..0.999) {
            let ceiling = design.ceiling_frequency().unwrap();
            let target = ceiling * frac;
            let s = area_for_frequency(target, &design).unwrap();
            let f = resonance_frequency(&design.with_area(s)).unwrap();
            prop_assert!((f / target - 1.0).abs() <= 1e-12, "{} vs {}", f, target);
        }

        #[test]
        fn frequency_decreases_in_each_input(design in design_strategy(), bump in 1.001f64..3.0) {
            let f = resonance_frequency(&design).unwrap();
            let larger_s = ResonatorDesign { cap_area: design.cap_area * bump, ..design };
            let larger_l = ResonatorDesign { inductance_geometric: design.inductance_geometric * bump, ..design };
            let larger_cg = ResonatorDesign { cap_to_ground: design.cap_to_ground * bump, ..design };
            prop_assert!(resonance_frequency(&larger_s).unwrap() < f);
            prop_assert!(resonance_frequency(&larger_l).unwrap() < f);
            prop_assert!(resonance_frequency(&larger_cg).unwrap() < f);
        }

        #[test]
        fn debye_is_monotone_and_bounded(
            eps_inf in 1.0f64..20.0, extra in 0.0f64..20.0, tau in 0.0f64..1e-3,
            w1 in 0.0f64..1e9, w2 in 0.0f64..1e9,
        ) {
            let spec = DielectricSpec { thickness: 1e-8, eps_static: eps_inf + extra, eps_inf, relax_time: tau };
            let (lo, hi) = if w1 <= w2 { (w1, w2) } else { (w2, w1) };
            let a = debye_permittivity(&spec, lo);
            let b = debye_permittivity(&spec, hi);
            prop_assert!(a >= b);
            prop_assert!(b >= spec.eps_inf && a <= spec.eps_static);
        }

        #[test]
        fn shunt_scales_with_resistance_and_area(
            ra in 1e-9f64..1e-3, area in 1e-12f64..1e-9, k in 1.5f64..4.0
        ) {
            let spec = JunctionLeakageSpec::aluminum(ra, area, 1e-3);
            let l = junction_shunt_inductance(&spec).unwrap().henry();
            let lr = junction_shunt_inductance(&JunctionLeakageSpec { specific_resistance: ra * k, ..spec }).unwrap().henry();
            let la = junction_shunt_inductance(&JunctionLeakageSpec { area: area * k, ..spec }).unwrap().henry();
            prop_assert!((lr / (l * k) - 1.0).abs() < 1e-12);
            prop_assert!((la * k / l - 1.0).abs() < 1e-12);
        }
    }
}
