//! Real eigenfrequencies of the dissipationless box system and the mode-sum
//! form of its thermal energy.
//!
//! Between consecutive poles of G_σ the function Φ⁰_σ(ω) = Ω² − ω² − gG_σ(ω)
//! falls monotonically from +∞ to −∞ (G_σ is a positive combination of
//! 1/(k_n² − ω²)), so each such interval holds exactly one simple root. The
//! interval below the first pole holds one iff Φ⁰_σ(0) > 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::model::{green_sectors_real, BoxPoles, Geometry, OscillatorParams, ThermalParams};
use crate::numeric::roots::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega: f64,
    pub sigma: i32,
    /// sign(−∂_ω Φ⁰_σ) at the root.
    pub sign: f64,
    /// |Φ⁰_σ(ω_s)| relative to the magnitude of its terms.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    /// Modes sorted by frequency (both sectors merged).
    pub modes: Vec<Mode>,
    pub omega_max: f64,
    pub box_length: f64,
    pub warnings: Vec<String>,
}

impl ModeSpectrum {
    pub fn sector(&self, sigma: i32) -> impl Iterator<Item = &Mode> {
        self.modes.iter().filter(move |m| m.sigma == sigma)
    }

    /// Modes whose sign factor is not +1.
    pub fn negative_signs(&self) -> usize {
        self.modes.iter().filter(|m| m.sign < 0.0).count()
    }
}

/// Φ⁰_σ(ω) and ∂_ωΦ⁰_σ(ω) on the real axis.
pub fn phi0(p: &OscillatorParams, geom: &Geometry, sigma: i32, w: f64) -> Result<(f64, f64)> {
    let r = green_sectors_real(geom, w)?;
    let (g, dg) = if sigma > 0 { (r.gp, r.dgp) } else { (r.gm, r.dgm) };
    let w2 = p.omega * p.omega;
    Ok((w2 - w * w - p.g * g, -2.0 * w - p.g * dg))
}

fn polish(p: &OscillatorParams, geom: &Geometry, sigma: i32, lo: f64, hi: f64, hi_is_pole: bool) -> Result<Mode> {
    let f = |w: f64| phi0(p, geom, sigma, w).map(|v| v.0).unwrap_or(f64::NAN);
    // Step in from the poles until the expected sign pattern (+ above lo,
    // − below hi) shows up; at weak coupling a root may sit within a few
    // ulps of its pole, in which case ω_s equals the pole in f64. The
    // lattice value of the pole is itself only accurate to a few ulps.
    let width = hi - lo;
    let near = |from: f64, dir: f64, want_positive: bool| -> Option<f64> {
        let ok = |x: f64| if want_positive { f(x) > 0.0 } else { f(x) < 0.0 };
        let mut eps = 1e-6 * width;
        while eps > 8.0 * f64::EPSILON * from.abs() {
            let x = from + dir * eps;
            if ok(x) {
                return Some(x);
            }
            eps *= 1e-2;
        }
        let mut x = from;
        for _ in 0..64 {
            x = if dir > 0.0 { next_up(x) } else { next_down(x) };
            if ok(x) {
                return Some(x);
            }
        }
        None
    };
    let a = if lo == 0.0 { Some(0.0) } else { near(lo, 1.0, true) };
    let b = if hi_is_pole { near(hi, -1.0, false) } else { Some(hi) };
    let root = match (a, b) {
        (Some(a), Some(b)) => bisect(f, a, b, 0.0)?,
        (None, _) => return Ok(Mode { omega: lo, sigma, sign: 1.0, residual: 0.0 }),
        (_, None) => return Ok(Mode { omega: hi, sigma, sign: 1.0, residual: 0.0 }),
    };
    let (v, dv) = phi0(p, geom, sigma, root)?;
    let r = green_sectors_real(geom, root)?;
    let g = if sigma > 0 { r.gp } else { r.gm };
    // Near a pole Φ⁰ is steep; one ulp in ω then moves Φ⁰ by |∂Φ⁰|·ulp, so
    // the residual is measured against the larger of the term magnitudes
    // and |ω ∂Φ⁰|.
    let scale = (p.omega * p.omega + root * root + p.g * g.abs()).max((root * dv).abs());
    Ok(Mode {
        omega: root,
        sigma,
        sign: if -dv >= 0.0 { 1.0 } else { -1.0 },
        residual: v.abs() / scale.max(f64::MIN_POSITIVE),
    })
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

fn next_down(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// All real zeros of Φ⁰_σ in (0, ω_max] for σ = ±1 (requires γ = 0).
pub fn find_modes(p: &OscillatorParams, geom: &Geometry, omega_max: f64, exec: Exec) -> Result<ModeSpectrum> {
    let l = geom.require_box()?;
    if p.gamma != 0.0 {
        return Err(Error::param("the real mode spectrum exists only for gamma = 0"));
    }
    if !(omega_max > 0.0 && omega_max.is_finite()) {
        return Err(Error::param("omega_max must be positive"));
    }
    let mut warnings = Vec::new();
    let first = std::f64::consts::PI / l;
    if omega_max < first {
        warnings.push(format!(
            "search window omega_max = {omega_max} lies below the first box resonance {first}"
        ));
    }

    let poles = BoxPoles::new(geom)?;
    let mut brackets: Vec<(i32, f64, f64, bool)> = Vec::new();
    for sigma in [1, -1] {
        if p.g == 0.0 {
            // Φ⁰ = Ω² − ω² has no poles; only the bare oscillator remains.
            if p.omega > 0.0 && p.omega <= omega_max {
                brackets.push((sigma, 0.0, 2.0 * p.omega, false));
            }
            continue;
        }
        let mut edges = vec![0.0];
        edges.extend(poles.list(sigma, omega_max));
        for w in edges.windows(2) {
            if w[0] == 0.0 && phi0(p, geom, sigma, 0.0)?.0 <= 0.0 {
                continue;
            }
            brackets.push((sigma, w[0], w[1], true));
        }
        let last = *edges.last().expect("edges start with 0");
        let top = phi0(p, geom, sigma, omega_max)?.0;
        let left_ok = last > 0.0 || phi0(p, geom, sigma, 0.0)?.0 > 0.0;
        if left_ok && top < 0.0 && last < omega_max {
            brackets.push((sigma, last, omega_max, false));
        }
    }

    let found = exec::map(exec, &brackets, |&(sigma, lo, hi, hi_is_pole)| {
        if p.g == 0.0 {
            Ok(Mode {
                omega: p.omega,
                sigma,
                sign: 1.0,
                residual: 0.0,
            })
        } else {
            polish(p, geom, sigma, lo, hi, hi_is_pole)
        }
    });
    let mut modes = found.into_iter().collect::<Result<Vec<_>>>()?;
    modes.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let negative = modes.iter().filter(|m| m.sign < 0.0).count();
    if negative > 0 {
        warnings.push(format!("{negative} modes carry a negative sign factor"));
    }
    Ok(ModeSpectrum {
        modes,
        omega_max,
        box_length: l,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSumEnergy {
    /// Σ_s s_s ħω_s/(e^{βħω_s} − 1): the temperature-dependent energy.
    pub thermal: f64,
    /// ½ Σ_s s_s ħω_s over the window (cutoff dependent, never compared).
    pub vacuum_in_window: f64,
    /// Bound on the thermal contribution of modes above ω_max.
    pub tail_bound: f64,
}

/// Mode-sum energy ½ Σ_s ħω_s 𝒩_T(ω_s) s_s split into its thermal part and
/// the (cutoff dependent) vacuum part.
pub fn mode_sum_energy(spec: &ModeSpectrum, thermal: &ThermalParams) -> Result<ModeSumEnergy> {
    let hbar = thermal.hbar;
    let vac: f64 = spec.modes.iter().map(|m| 0.5 * hbar * m.omega * m.sign).sum();
    if thermal.is_zero() {
        return Ok(ModeSumEnergy {
            thermal: 0.0,
            vacuum_in_window: vac,
            tail_bound: 0.0,
        });
    }
    let c = hbar / thermal.temperature;
    if spec.omega_max * c < 20.0 {
        return Err(Error::Tolerance {
            what: format!(
                "mode sum: window omega_max = {} too small for T = {} (need beta hbar omega_max >= 20)",
                spec.omega_max, thermal.temperature
            ),
            estimate: f64::NAN,
            error: f64::INFINITY,
        });
    }
    let terms: Vec<f64> = spec
        .modes
        .iter()
        .map(|m| m.sign * hbar * m.omega * thermal.bose(m.omega))
        .collect();
    // Each pole interval above ω_max holds one root per sector; bound the
    // density by 2L/π per unit frequency and the Bose factor by 2e^{−x}.
    let d = 2.0 * std::f64::consts::PI / spec.box_length;
    let a = (spec.omega_max - d).max(0.0);
    let density = 2.0 * spec.box_length / std::f64::consts::PI;
    let tail = 2.0 * density * hbar * (-c * a).exp() * ((a + d) / c + 1.0 / (c * c)) + 2.0 * hbar * (spec.omega_max + d) * 2.0 * (-c * a).exp();
    Ok(ModeSumEnergy {
        thermal: crate::exec::tree_sum(&terms),
        vacuum_in_window: vac,
        tail_bound: tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(omega: f64, g: f64) -> OscillatorParams {
        OscillatorParams::unit_mass(omega, 0.0, g).unwrap()
    }

    #[test]
    fn interlacing_per_sector() {
        let p = params(1.0, 1.0);
        let geom = Geometry::boxed(1.0, 10.0).unwrap();
        let wmax = 30.0;
        let spec = find_modes(&p, &geom, wmax, Exec::Sequential).unwrap();
        let poles = BoxPoles::new(&geom).unwrap();
        for sigma in [1, -1] {
            let lat = poles.list(sigma, wmax);
            let roots: Vec<f64> = spec.sector(sigma).map(|m| m.omega).collect();
            for w in lat.windows(2) {
                let n = roots.iter().filter(|&&r| r > w[0] && r < w[1]).count();
                assert_eq!(n, 1, "sector {sigma}, interval {w:?}");
            }
        }
    }

    #[test]
    fn residuals_are_tiny() {
        let p = params(1.0, 1.0);
        let geom = Geometry::boxed(1.0, 10.0).unwrap();
        let spec = find_modes(&p, &geom, 20.0, Exec::Parallel).unwrap();
        assert!(!spec.modes.is_empty());
        for m in &spec.modes {
            assert!(m.residual < 1e-10, "{m:?}");
        }
    }

    #[test]
    fn union_matches_determinant_roots() {
        // Roots of Φ₊Φ₋ found by an independent fine sign scan of the product.
        let p = params(0.8, 0.7);
        let geom = Geometry::boxed(0.7, 3.1).unwrap();
        let wmax = 12.0;
        let spec = find_modes(&p, &geom, wmax, Exec::Sequential).unwrap();
        let poles = BoxPoles::new(&geom).unwrap().list(0, wmax);
        let f = |w: f64| phi0(&p, &geom, 1, w).unwrap().0 * phi0(&p, &geom, -1, w).unwrap().0;
        let n = 200_000;
        let mut count = 0;
        let mut prev = f(1e-9);
        for i in 1..=n {
            let w = wmax * i as f64 / n as f64;
            let v = f(w);
            let crosses_pole = poles.iter().any(|&k| k > w - wmax / n as f64 && k <= w);
            if v.signum() != prev.signum() && !crosses_pole {
                count += 1;
            }
            prev = v;
        }
        assert_eq!(count, spec.modes.len());
    }

    #[test]
    fn weak_coupling_limit() {
        let p = params(1.0, 1e-6);
        let geom = Geometry::boxed(1.0, 10.0).unwrap();
        let spec = find_modes(&p, &geom, 3.0, Exec::Sequential).unwrap();
        let near_omega = spec.modes.iter().filter(|m| (m.omega - 1.0).abs() < 1e-3).count();
        assert_eq!(near_omega, 2);
        assert!(spec.modes.iter().all(|m| m.sign > 0.0));
        let poles = BoxPoles::new(&geom).unwrap().list(0, 3.0);
        for k in poles {
            assert!(spec.modes.iter().any(|m| (m.omega - k).abs() < 1e-4), "{k}");
        }
    }

    #[test]
    fn weak_coupling_mode_sum_matches_decoupled_sum() {
        let p = params(1.0, 1e-8);
        let geom = Geometry::boxed(1.0, 10.0).unwrap();
        let t = ThermalParams::natural(0.5).unwrap();
        let spec = find_modes(&p, &geom, 40.0, Exec::Sequential).unwrap();
        let e = mode_sum_energy(&spec, &t).unwrap();
        let coth_part = |w: f64| 0.5 * w * ((0.5 * w / 0.5).tanh().recip() - 1.0);
        let mut expect = 2.0 * coth_part(1.0);
        for k in BoxPoles::new(&geom).unwrap().list(0, 40.0) {
            expect += coth_part(k);
        }
        assert!((e.thermal - expect).abs() < 1e-6 * expect, "{} vs {expect}", e.thermal);
        assert!(e.tail_bound < 1e-20);
    }

    #[test]
    fn signs_positive_at_small_coupling() {
        let p = params(1.0, 0.1);
        let geom = Geometry::boxed(1.0, 10.0).unwrap();
        let spec = find_modes(&p, &geom, 20.0, Exec::Sequential).unwrap();
        assert_eq!(spec.negative_signs(), 0);
    }

    #[test]
    fn rejects_dissipation_and_small_window() {
        let geom = Geometry::boxed(1.0, 10.0).unwrap();
        let p = OscillatorParams::unit_mass(1.0, 0.1, 1.0).unwrap();
        assert!(find_modes(&p, &geom, 10.0, Exec::Sequential).is_err());
        let spec = find_modes(&params(1.0, 1.0), &geom, 0.2, Exec::Sequential).unwrap();
        assert!(!spec.warnings.is_empty());
        let t = ThermalParams::natural(1.0).unwrap();
        assert!(mode_sum_energy(&spec, &t).is_err());
    }
}
