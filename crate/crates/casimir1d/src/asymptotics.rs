//! Closed-form limits: leading low-temperature coefficients, the
//! dissipationless single oscillator and the Dirichlet (g → ∞) line.
//!
//! At low T the Bose factor probes only the slope s = ∂_ωδ(0), and
//! ΔF ≈ −(ħ/π) s ∫₀^∞ ω dω/(e^{βħω} − 1) = −c_F T² with c_F = s ζ(2)/(πħ).
//! The entropy follows as S ≈ 2c_F T.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{green_sectors_real, Geometry, OscillatorParams, ThermalParams};
use crate::numeric::ZETA2;
use crate::phases::System;

/// Relative distance below which a denominator counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// ΔF ≈ −c_F T², S ≈ 2c_F T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowTCoefficients {
    pub system: System,
    pub c_f: f64,
    /// ∂_ωδ(0), from which c_F follows.
    pub slope: f64,
    /// Static sector Green's functions (G₊(0), G₋(0)) for the box.
    pub g_sigma0: Option<(f64, f64)>,
    /// Line slope coefficient c₂.
    pub c2: Option<f64>,
}

impl LowTCoefficients {
    fn from_slope(system: System, slope: f64, hbar: f64) -> Self {
        Self {
            system,
            c_f: slope * ZETA2 / (PI * hbar),
            slope,
            g_sigma0: None,
            c2: None,
        }
    }

    /// Leading entropy slope dS/dT at T → 0.
    pub fn entropy_slope(&self) -> f64 {
        2.0 * self.c_f
    }

    /// −c_F T².
    pub fn free_energy(&self, t: f64) -> f64 {
        -self.c_f * t * t
    }
}

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar > 0.0 && hbar.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("hbar must be > 0 (got {hbar})")))
    }
}

fn nondegenerate(value: f64, scale: f64, what: &str) -> Result<f64> {
    if value.abs() <= DEGENERACY_TOL * scale.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate(format!("{what} vanishes")));
    }
    Ok(value)
}

/// Single oscillator: c_F = γζ(2)/(πħΩ²), or ζ(2)/(πħγ) for Ω = 0.
pub fn low_t_single(p: &OscillatorParams, hbar: f64) -> Result<LowTCoefficients> {
    p.validate()?;
    check_hbar(hbar)?;
    if p.gamma <= 0.0 {
        return Err(Error::param("the low-temperature law of the phase needs gamma > 0"));
    }
    let slope = if p.omega > 0.0 {
        p.gamma / (p.omega * p.omega)
    } else {
        1.0 / p.gamma
    };
    Ok(LowTCoefficients::from_slope(System::Single, slope, hbar))
}

/// Box: c_F = Σ_σ γζ(2)/(πħ(Ω² − gG_σ(0))) with G₊(0) = (L − b)/2 and
/// G₋(0) = b(L − b)/(2L).
pub fn low_t_box(p: &OscillatorParams, geom: &Geometry, hbar: f64) -> Result<LowTCoefficients> {
    p.validate()?;
    geom.validate()?;
    geom.require_box()?;
    check_hbar(hbar)?;
    if p.gamma <= 0.0 {
        return Err(Error::param("the low-temperature law of the phase needs gamma > 0"));
    }
    let r = green_sectors_real(geom, 0.0)?;
    let w2 = p.omega * p.omega;
    let mut slope = 0.0;
    for (name, gs) in [("Omega^2 - g G_+(0)", r.gp), ("Omega^2 - g G_-(0)", r.gm)] {
        let den = nondegenerate(w2 - p.g * gs, w2.max(p.g * gs), name)?;
        slope += p.gamma / den;
    }
    Ok(LowTCoefficients {
        g_sigma0: Some((r.gp, r.gm)),
        ..LowTCoefficients::from_slope(System::Box, slope, hbar)
    })
}

/// Line slope coefficient
/// c₂ = (b²g² + 2(γ − 2bΩ²)g + 6Ω⁴)/((2Ω² − bg)g).
pub fn line_c2(p: &OscillatorParams, b: f64) -> Result<f64> {
    if p.g <= 0.0 {
        return Err(Error::param("the line coefficient c2 needs g > 0"));
    }
    let w2 = p.omega * p.omega;
    let den = nondegenerate(2.0 * w2 - b * p.g, (2.0 * w2).max(b * p.g), "2 Omega^2 - b g")?;
    Ok((b * b * p.g * p.g + 2.0 * (p.gamma - 2.0 * b * w2) * p.g + 6.0 * w2 * w2) / (den * p.g))
}

/// Line: ΔF ≈ −T² ζ(2) c₂/(πħ).
pub fn low_t_line(p: &OscillatorParams, geom: &Geometry, hbar: f64) -> Result<LowTCoefficients> {
    p.validate()?;
    geom.validate()?;
    geom.require_line()?;
    check_hbar(hbar)?;
    let c2 = line_c2(p, geom.b)?;
    Ok(LowTCoefficients {
        c2: Some(c2),
        ..LowTCoefficients::from_slope(System::Line, c2, hbar)
    })
}

/// Dissipationless single oscillator in a thermal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaZeroForms {
    /// F = ħΩ/2 + T ln(1 − e^{−βħΩ}).
    pub free_energy: f64,
    /// E = (ħΩ/2) coth(βħΩ/2).
    pub energy: f64,
    pub entropy: f64,
}

pub fn gamma_zero_forms(p: &OscillatorParams, thermal: &ThermalParams) -> Result<GammaZeroForms> {
    p.validate()?;
    let hw = thermal.hbar * p.omega;
    if thermal.is_zero() {
        return Ok(GammaZeroForms {
            free_energy: 0.5 * hw,
            energy: 0.5 * hw,
            entropy: 0.0,
        });
    }
    if p.omega <= 0.0 {
        return Err(Error::param("the closed form needs Omega > 0 at finite temperature"));
    }
    let t = thermal.temperature;
    let x = hw / t;
    let l = (-(-x).exp_m1()).ln();
    let n = 1.0 / x.exp_m1();
    Ok(GammaZeroForms {
        free_energy: 0.5 * hw + t * l,
        energy: hw * (0.5 + n),
        entropy: -l + x * n,
    })
}

/// Casimir energy −πħ/(24b) of a field segment of length b with Dirichlet
/// ends: the g → ∞ limit of the dissipationless line.
pub fn dirichlet_interval_energy(b: f64, hbar: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::param("b must be > 0"));
    }
    check_hbar(hbar)?;
    Ok(-PI * hbar / (24.0 * b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn osc(omega: f64, gamma: f64, g: f64) -> OscillatorParams {
        OscillatorParams::unit_mass(omega, gamma, g).unwrap()
    }

    #[test]
    fn single_examples() {
        let c = low_t_single(&osc(1.0, 0.1, 0.0), 1.0).unwrap();
        assert!((c.c_f - 0.1 * PI / 6.0).abs() < 1e-16);
        let c = low_t_single(&osc(0.0, 2.0, 0.0), 1.0).unwrap();
        assert!((c.c_f - PI / 12.0).abs() < 1e-16);
        assert_eq!(c.entropy_slope(), 2.0 * c.c_f);
        assert!(low_t_single(&osc(1.0, 0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn box_example_and_decoupling() {
        let geom = Geometry::boxed(1.0, 10.0).unwrap();
        let c = low_t_box(&osc(1.0, 0.1, 1.0), &geom, 1.0).unwrap();
        let expect = 0.1 * (PI / 6.0) * (1.0 / 0.55 + 1.0 / (1.0 - 4.5));
        assert!((c.c_f - expect).abs() < 1e-14);
        let single = low_t_single(&osc(1.0, 0.1, 0.0), 1.0).unwrap();
        let c0 = low_t_box(&osc(1.0, 0.1, 0.0), &geom, 1.0).unwrap();
        assert!((c0.c_f - 2.0 * single.c_f).abs() < 1e-16);
    }

    #[test]
    fn box_degeneracy_rejected() {
        // Ω² = gG₋(0) = 0.45
        let geom = Geometry::boxed(1.0, 10.0).unwrap();
        let p = osc(0.45f64.sqrt(), 0.1, 1.0);
        assert!(matches!(low_t_box(&p, &geom, 1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn line_examples() {
        let geom = Geometry::line(1.0).unwrap();
        assert!((low_t_line(&osc(1.0, 0.0, 1.0), &geom, 1.0).unwrap().c2.unwrap() - 3.0).abs() < 1e-15);
        assert!((line_c2(&osc(0.0, 0.1, 1.0), 1.0).unwrap() + 1.2).abs() < 1e-15);
        assert!(matches!(line_c2(&osc(1.0, 0.1, 1.0), 2.0), Err(Error::Degenerate(_))));
        let c = low_t_line(&osc(1.0, 0.0, 1.0), &geom, 2.0).unwrap();
        assert!((c.c_f - 3.0 * ZETA2 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn gamma_zero_examples() {
        let p = osc(1.0, 0.0, 0.0);
        let f = gamma_zero_forms(&p, &ThermalParams::natural(1.0).unwrap()).unwrap();
        assert!((f.free_energy - 0.041_324_9).abs() < 1e-6);
        assert!((f.energy - (f.free_energy + f.entropy)).abs() < 1e-15);
        let z = gamma_zero_forms(&p, &ThermalParams::natural(0.0).unwrap()).unwrap();
        assert_eq!(z.free_energy, 0.5);
        let lo = gamma_zero_forms(&p, &ThermalParams::natural(1e-3).unwrap()).unwrap();
        assert!((lo.free_energy - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gamma_zero_high_temperature_log() {
        // F = T ln(βħΩ) + O(ħΩ) at large T.
        let p = osc(1.0, 0.0, 0.0);
        for &t in &[1e3, 1e5] {
            let f = gamma_zero_forms(&p, &ThermalParams::natural(t).unwrap()).unwrap().free_energy;
            let lead = t * (1.0 / t).ln();
            assert!((f - lead).abs() < 1.0, "{t}: {f} vs {lead}");
        }
    }

    #[test]
    fn dirichlet_value() {
        assert!((dirichlet_interval_energy(1.0, 1.0).unwrap() + 0.130_899_693_899_574_7).abs() < 1e-15);
    }

    fn check_against_numerics(phase: &crate::phases::PhaseFunction, c: &LowTCoefficients) {
        use crate::thermo::{free_energy_real_freq, ThermoOptions};
        let t = 2e-3;
        let th = ThermalParams::natural(t).unwrap();
        let r = free_energy_real_freq(phase, &th, &ThermoOptions::with_cutoff(1e3)).unwrap();
        let cf = -r.dtf / (t * t);
        let ss = r.s / t;
        assert!((cf / c.c_f - 1.0).abs() < 1e-3, "{:?}: {cf} vs {}", c.system, c.c_f);
        assert!((ss / c.entropy_slope() - 1.0).abs() < 1e-3, "{:?}: {ss}", c.system);
    }

    #[test]
    fn low_t_matches_numerics() {
        use crate::phases::PhaseFunction;
        let p = osc(1.0, 0.5, 1.0);
        check_against_numerics(&PhaseFunction::single(&p).unwrap(), &low_t_single(&p, 1.0).unwrap());
        let bx = Geometry::boxed(1.0, 3.0).unwrap();
        let pb = osc(1.5, 0.5, 1.0);
        check_against_numerics(&PhaseFunction::boxed(&pb, &bx).unwrap(), &low_t_box(&pb, &bx, 1.0).unwrap());
        let ln = Geometry::line(1.0).unwrap();
        check_against_numerics(&PhaseFunction::line(&p, &ln).unwrap(), &low_t_line(&p, &ln, 1.0).unwrap());
        let p0 = osc(0.0, 0.7, 0.0);
        check_against_numerics(&PhaseFunction::single(&p0).unwrap(), &low_t_single(&p0, 1.0).unwrap());
    }

    #[test]
    fn gamma_zero_matches_numerics() {
        use crate::phases::PhaseFunction;
        use crate::thermo::{free_energy_real_freq, ThermoOptions};
        // γ → 0 limit of the dissipative result approaches the closed form.
        let p = osc(1.0, 1e-4, 0.0);
        let th = ThermalParams::natural(0.7).unwrap();
        let r = free_energy_real_freq(&PhaseFunction::single(&p).unwrap(), &th, &ThermoOptions::with_cutoff(1e3)).unwrap();
        let z = gamma_zero_forms(&osc(1.0, 0.0, 0.0), &th).unwrap();
        assert!((r.dtf - (z.free_energy - 0.5)).abs() < 1e-3, "{} vs {}", r.dtf, z.free_energy - 0.5);
    }
}
