//! Branch-continuous phases δ(ω) on ω ≥ 0 with δ(0) = 0, and their
//! derivatives computed analytically as Im[f'/f].
//!
//! * single oscillator: δ = arg N(ω) − arg N(0⁺);
//! * box: δ = Σ_σ δ_σ with δ_σ = arg Φ_σ + π·#(poles of G_σ below ω) − δ_σ(0⁺).
//!   On the real axis Im Φ_σ = γω > 0, so the principal argument lies in
//!   (0, π) and only drops by π when Φ_σ passes through a pole; adding π per
//!   pole yields the continuous branch without sampling;
//! * box separation part: δ₊ + δ₋ − 2δ_ref where Φ_ref = N − gG₁ carries
//!   only the b-independent combination G₁;
//! * line: δ_L = arg L(ω) − arg L(0⁺), unwrapped by adaptive bisection on a
//!   grid fixed at construction (L has no real zeros, but its phase winds);
//! * plasma scattering phase: arg t(ω), unwrapped the same way from t(ω)^{−1}.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    green_sectors_real, l_factor_with_derivative, response_n, transmission_inv_complex, BoxPoles, Geometry,
    OscillatorParams,
};
use crate::spectra;

use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum System {
    Single,
    Box,
    BoxSeparation,
    Line,
    Scattering,
}

/// Which Φ function of the box a component phase refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BoxPart {
    Plus,
    Minus,
    Reference,
}

#[derive(Debug, Clone)]
struct UnwrapGrid {
    w: Vec<f64>,
    /// Unwrapped argument U(ω_i) (not yet shifted by the 0⁺ reference).
    u: Vec<f64>,
    /// Above `w_flat`, |f − 1| < 1 so the branch index is frozen.
    w_flat: f64,
    k_flat: f64,
}

/// A phase function δ(ω) for one of the systems.
#[derive(Debug, Clone)]
pub struct PhaseFunction {
    system: System,
    params: OscillatorParams,
    geom: Option<Geometry>,
    poles: Option<BoxPoles>,
    /// arg f(0⁺) of each component, subtracted so that δ(0) = 0.
    zero_ref: [f64; 3],
    grid: Option<UnwrapGrid>,
}

const MAX_GRID: usize = 2_000_000;

impl PhaseFunction {
    pub fn single(params: &OscillatorParams) -> Result<Self> {
        params.validate()?;
        if params.gamma <= 0.0 {
            return Err(Error::param(
                "the single-oscillator phase is a step function at gamma = 0; use the closed form",
            ));
        }
        let zero = if params.omega > 0.0 { 0.0 } else { FRAC_PI_2 };
        Ok(Self {
            system: System::Single,
            params: *params,
            geom: None,
            poles: None,
            zero_ref: [zero, 0.0, 0.0],
            grid: None,
        })
    }

    fn boxed_impl(params: &OscillatorParams, geom: &Geometry, system: System) -> Result<Self> {
        params.validate()?;
        geom.validate()?;
        geom.require_box()?;
        if params.gamma <= 0.0 {
            return Err(Error::param(
                "the box phase needs gamma > 0; use the mode sum for gamma = 0",
            ));
        }
        let mut pf = Self {
            system,
            params: *params,
            geom: Some(*geom),
            poles: Some(BoxPoles::new(geom)?),
            zero_ref: [0.0; 3],
            grid: None,
        };
        for (i, part) in [BoxPart::Plus, BoxPart::Minus, BoxPart::Reference].into_iter().enumerate() {
            let phi0 = pf.box_phi_real(part, 0.0)?.0.re;
            pf.zero_ref[i] = if phi0 > 0.0 {
                0.0
            } else if phi0 < 0.0 {
                PI
            } else {
                FRAC_PI_2
            };
        }
        Ok(pf)
    }

    /// Full box phase Σ_σ δ_σ.
    pub fn boxed(params: &OscillatorParams, geom: &Geometry) -> Result<Self> {
        Self::boxed_impl(params, geom, System::Box)
    }

    /// Separation-dependent box phase δ₊ + δ₋ − 2δ_ref.
    pub fn box_separation(params: &OscillatorParams, geom: &Geometry) -> Result<Self> {
        Self::boxed_impl(params, geom, System::BoxSeparation)
    }

    /// Line phase δ_L; needs b ≠ 2Ω²/g.
    pub fn line(params: &OscillatorParams, geom: &Geometry) -> Result<Self> {
        params.validate()?;
        geom.validate()?;
        geom.require_line()?;
        if params.g == 0.0 {
            return Ok(Self::trivial_line(System::Line, params, geom));
        }
        let slope0 = line_zero_slope(params, geom.b)?;
        let mut pf = Self {
            system: System::Line,
            params: *params,
            geom: Some(*geom),
            poles: None,
            zero_ref: [if slope0 > 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 }, 0.0, 0.0],
            grid: None,
        };
        pf.grid = Some(pf.build_grid()?);
        Ok(pf)
    }

    /// Scattering phase of the dissipationless line, arg t(ω).
    pub fn scattering(params: &OscillatorParams, geom: &Geometry) -> Result<Self> {
        params.validate()?;
        geom.validate()?;
        geom.require_line()?;
        if params.gamma != 0.0 {
            return Err(Error::param("the scattering phase is defined for gamma = 0"));
        }
        if params.g == 0.0 {
            return Ok(Self::trivial_line(System::Scattering, params, geom));
        }
        let slope0 = line_zero_slope(params, geom.b)?;
        // t^{-1}(ω) ≈ −2iω(b − 2Ω²/g) near zero: the conjugate of L.
        let mut pf = Self {
            system: System::Scattering,
            params: *params,
            geom: Some(*geom),
            poles: None,
            zero_ref: [if slope0 > 0.0 { -FRAC_PI_2 } else { FRAC_PI_2 }, 0.0, 0.0],
            grid: None,
        };
        pf.grid = Some(pf.build_grid()?);
        Ok(pf)
    }

    /// Decoupled line (g = 0): the factor is identically 1, δ ≡ 0.
    fn trivial_line(system: System, params: &OscillatorParams, geom: &Geometry) -> Self {
        Self {
            system,
            params: *params,
            geom: Some(*geom),
            poles: None,
            zero_ref: [0.0; 3],
            grid: None,
        }
    }

    fn is_trivial(&self) -> bool {
        matches!(self.system, System::Line | System::Scattering) && self.grid.is_none()
    }

    pub fn system(&self) -> System {
        self.system
    }

    pub fn params(&self) -> &OscillatorParams {
        &self.params
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geom.as_ref()
    }

    pub fn box_poles(&self) -> Option<&BoxPoles> {
        self.poles.as_ref()
    }

    /// Φ of the given box part and its derivative at real ω.
    fn box_phi_real(&self, part: BoxPart, w: f64) -> Result<(Complex64, Complex64)> {
        let geom = self.geom.as_ref().expect("box phase has a geometry");
        let p = &self.params;
        let r = green_sectors_real(geom, w)?;
        let (g, dg) = match part {
            BoxPart::Plus => (r.gp, r.dgp),
            BoxPart::Minus => (r.gm, r.dgm),
            BoxPart::Reference => (0.5 * (r.gp + r.gm), 0.5 * (r.dgp + r.dgm)),
        };
        let phi = Complex64::new(p.omega * p.omega - w * w - p.g * g, p.gamma * w);
        let dphi = Complex64::new(-2.0 * w - p.g * dg, p.gamma);
        Ok((phi, dphi))
    }

    fn box_component(&self, part: BoxPart, w: f64) -> f64 {
        let idx = part as usize;
        let poles = self.poles.as_ref().expect("box phase has poles");
        let count = match part {
            BoxPart::Plus => poles.count(1, w),
            BoxPart::Minus => poles.count(-1, w),
            BoxPart::Reference => poles.count_union(w),
        };
        let count = if self.params.g == 0.0 { 0 } else { count };
        let phi = self.box_phi_real(part, w).map(|v| v.0);
        let arg = match phi {
            Ok(z) if z.re.is_finite() => z.im.atan2(z.re),
            // Exactly on a pole: Φ = ∓∞; the limit from above is 0.
            _ => 0.0,
        };
        arg + PI * count as f64 - self.zero_ref[idx]
    }

    fn box_component_derivative(&self, part: BoxPart, w: f64) -> f64 {
        match self.box_phi_real(part, w) {
            Ok((phi, dphi)) if phi.re.is_finite() => (dphi * phi.conj()).im / phi.norm_sqr(),
            _ => 0.0,
        }
    }

    /// The complex function whose argument the unwrap grid tracks.
    fn tracked(&self, w: f64) -> Result<(Complex64, Complex64)> {
        let geom = self.geom.as_ref().expect("line phase has a geometry");
        let z = Complex64::new(w, 0.0);
        match self.system {
            System::Line => l_factor_with_derivative(&self.params, geom, z),
            System::Scattering => {
                let f = transmission_inv_complex(&self.params, geom, z)?;
                let h = crate::numeric::diff::default_step(w);
                let df = crate::numeric::diff::d1c(
                    |x| transmission_inv_complex(&self.params, geom, Complex64::new(x, 0.0)).unwrap_or(f),
                    w,
                    h,
                );
                Ok((f, df))
            }
            _ => unreachable!("only line systems are tracked"),
        }
    }

    fn principal(&self, w: f64) -> f64 {
        match self.tracked(w) {
            Ok((f, _)) => f.im.atan2(f.re),
            Err(_) => f64::NAN,
        }
    }

    /// Scales that set the initial sampling step of the unwrap grid.
    fn line_scales(&self) -> (f64, f64) {
        let p = &self.params;
        let b = self.geom.as_ref().map_or(1.0, |g| g.b);
        let xi_p = crate::matsubara::pole_xi(p);
        let mut h = (2.0 * PI / b) / 32.0;
        for s in [p.omega, p.gamma, xi_p, p.g.cbrt()] {
            if s > 0.0 {
                h = h.min(s / 16.0);
            }
        }
        // Beyond w_flat: |u| ≤ g/(2ω·max(ω² − Ω², γω) − g) < 0.3 so |L − 1| < 1.
        let bound = |w: f64| {
            let n = (w * w - p.omega * p.omega).max(p.gamma * w);
            let d = 2.0 * w * n - p.g;
            if d <= 0.0 {
                f64::INFINITY
            } else {
                p.g / d
            }
        };
        let mut w_flat = (2.0 * p.omega).max(p.g.cbrt()).max(1e-3);
        while bound(w_flat) >= 0.3 {
            w_flat *= 1.5;
        }
        (h, w_flat * 1.5)
    }

    fn build_grid(&self) -> Result<UnwrapGrid> {
        let (h0, w_flat) = self.line_scales();
        let a0 = self.zero_ref[0];
        let mut w = vec![0.0];
        let mut u = vec![a0];
        let lift = |prev: f64, a: f64| a + 2.0 * PI * ((prev - a) / (2.0 * PI)).round();
        let mut x = 0.0;
        while x < w_flat {
            let mut step = h0.min(w_flat - x);
            loop {
                let x1 = x + step;
                let prev = *u.last().expect("grid is never empty");
                let a1 = self.principal(x1);
                let am = self.principal(x + 0.5 * step);
                if !a1.is_finite() || !am.is_finite() {
                    return Err(Error::Branch {
                        omega: x1,
                        reason: "tracked function is singular on the real axis".into(),
                    });
                }
                let um = lift(prev, am);
                let u1 = lift(um, a1);
                let ok = (um - prev).abs() < PI / 4.0 && (u1 - um).abs() < PI / 4.0;
                if ok || step < 64.0 * f64::EPSILON * (1.0 + x) {
                    // Near-lossless resonances (γ = 0, large g) swing the phase
                    // over widths ~(ω/g)² without winding; at the resolution
                    // limit the nearest branch is still unambiguous if the
                    // change stays below π/2.
                    let resolved = (um - prev).abs() < PI / 2.0 && (u1 - um).abs() < PI / 2.0;
                    if !ok && !resolved {
                        return Err(Error::Branch {
                            omega: x1,
                            reason: "adaptive refinement could not keep phase steps below pi/2".into(),
                        });
                    }
                    w.push(x1);
                    u.push(u1);
                    x = x1;
                    break;
                }
                step *= 0.5;
            }
            if w.len() > MAX_GRID {
                return Err(Error::Branch {
                    omega: x,
                    reason: "phase grid exceeded its size limit".into(),
                });
            }
        }
        let u_last = *u.last().expect("grid is never empty");
        let a_last = self.principal(x);
        Ok(UnwrapGrid {
            w_flat: x,
            k_flat: ((u_last - a_last) / (2.0 * PI)).round(),
            w,
            u,
        })
    }

    fn unwrapped(&self, w: f64) -> f64 {
        let grid = self.grid.as_ref().expect("line phase has a grid");
        let a = self.principal(w);
        if w >= grid.w_flat {
            return a + 2.0 * PI * grid.k_flat;
        }
        let i = match grid.w.binary_search_by(|x| x.total_cmp(&w)) {
            Ok(i) => return grid.u[i],
            Err(i) => i - 1,
        };
        let prev = grid.u[i];
        a + 2.0 * PI * ((prev - a) / (2.0 * PI)).round()
    }

    /// δ(ω) for ω ≥ 0 (odd extension for ω < 0).
    pub fn delta(&self, w: f64) -> f64 {
        if w < 0.0 {
            return -self.delta(-w);
        }
        if w == 0.0 || self.is_trivial() {
            return 0.0;
        }
        match self.system {
            System::Single => {
                let n = response_n(&self.params, Complex64::new(w, 0.0));
                n.im.atan2(n.re) - self.zero_ref[0]
            }
            System::Box => self.box_component(BoxPart::Plus, w) + self.box_component(BoxPart::Minus, w),
            System::BoxSeparation => {
                self.box_component(BoxPart::Plus, w) + self.box_component(BoxPart::Minus, w)
                    - 2.0 * self.box_component(BoxPart::Reference, w)
            }
            System::Line => self.unwrapped(w) - self.zero_ref[0],
            System::Scattering => -(self.unwrapped(w) - self.zero_ref[0]),
        }
    }

    /// ∂_ωδ(ω), analytic (Im f'/f summed over factors).
    pub fn d_delta(&self, w: f64) -> f64 {
        let w = w.abs();
        if self.is_trivial() {
            return 0.0;
        }
        if w == 0.0 {
            // Richardson extrapolation of the (even) derivative from two
            // small arguments; the remainder is O(h⁴).
            let h = 1e-4 * self.scale();
            return (4.0 * self.d_delta(0.5 * h) - self.d_delta(h)) / 3.0;
        }
        match self.system {
            System::Single => {
                let p = &self.params;
                let n = response_n(p, Complex64::new(w, 0.0));
                p.gamma * (w * w + p.omega * p.omega) / n.norm_sqr()
            }
            System::Box => {
                self.box_component_derivative(BoxPart::Plus, w) + self.box_component_derivative(BoxPart::Minus, w)
            }
            System::BoxSeparation => {
                self.box_component_derivative(BoxPart::Plus, w) + self.box_component_derivative(BoxPart::Minus, w)
                    - 2.0 * self.box_component_derivative(BoxPart::Reference, w)
            }
            System::Line | System::Scattering => {
                let (f, df) = match self.tracked(w) {
                    Ok(v) => v,
                    Err(_) => return f64::NAN,
                };
                let d = (df * f.conj()).im / f.norm_sqr();
                if self.system == System::Scattering {
                    -d
                } else {
                    d
                }
            }
        }
    }

    /// δ and ∂δ on a grid.
    pub fn evaluate_grid(&self, ws: &[f64]) -> Vec<(f64, f64)> {
        ws.iter().map(|&w| (self.delta(w), self.d_delta(w))).collect()
    }

    /// lim_{ω→∞} δ(ω) when it exists.
    pub fn delta_inf(&self) -> Option<f64> {
        match self.system {
            System::Single => Some(PI - self.zero_ref[0]),
            System::Line | System::Scattering => {
                let grid = match self.grid.as_ref() {
                    Some(g) => g,
                    None => return Some(0.0),
                };
                let v = 2.0 * PI * grid.k_flat - self.zero_ref[0];
                Some(if self.system == System::Scattering { -v } else { v })
            }
            _ => None,
        }
    }

    /// A characteristic frequency of the system.
    pub fn scale(&self) -> f64 {
        let p = &self.params;
        let mut s: f64 = p.omega.max(p.gamma).max(p.g.cbrt());
        if let Some(g) = &self.geom {
            s = s.max(1.0 / g.b);
            if let Some(l) = g.box_length {
                s = s.max(PI / l);
            }
        }
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    /// Constants (a, c) with |δ(ω)| ≤ a + cω for all ω ≥ 0.
    pub fn growth_bound(&self) -> (f64, f64) {
        match self.system {
            System::Single => (PI, 0.0),
            System::Box => {
                let l = self.geom.and_then(|g| g.box_length).unwrap_or(1.0);
                (4.0 * PI, 2.0 * l)
            }
            System::BoxSeparation => {
                let l = self.geom.and_then(|g| g.box_length).unwrap_or(1.0);
                (8.0 * PI, 4.0 * l)
            }
            System::Line | System::Scattering => {
                let grid = match self.grid.as_ref() {
                    Some(g) => g,
                    None => return (0.0, 0.0),
                };
                let m = grid.u.iter().fold(0.0f64, |m, &u| m.max((u - self.zero_ref[0]).abs()));
                (m + 2.0 * PI, 0.0)
            }
        }
    }

    /// Frequencies in (0, ω_max) where the integrand has sharp features:
    /// resonances, box poles and the dissipationless mode positions with
    /// their effective widths.
    pub fn breakpoints(&self, w_max: f64) -> Vec<f64> {
        let p = &self.params;
        let mut out = Vec::new();
        let around = |c: f64, width: f64, out: &mut Vec<f64>| {
            out.push(c);
            for k in [1.0, 10.0, 100.0] {
                out.push(c - k * width);
                out.push(c + k * width);
            }
        };
        match self.system {
            System::Single => {
                if p.omega > 0.0 {
                    around(p.omega, p.gamma, &mut out);
                }
            }
            System::Box | System::BoxSeparation => {
                let geom = self.geom.expect("box phase has a geometry");
                out.extend(self.poles.as_ref().expect("box phase has poles").list(0, w_max));
                let p0 = OscillatorParams { gamma: 0.0, ..*p };
                if let Ok(spec) = spectra::find_modes(&p0, &geom, w_max, crate::Exec::Sequential) {
                    for m in &spec.modes {
                        let d = spectra::phi0(&p0, &geom, m.sigma, m.omega).map_or(1.0, |v| v.1.abs());
                        let width = p.gamma * m.omega / d.max(1e-300);
                        around(m.omega, width, &mut out);
                    }
                }
            }
            System::Line | System::Scattering => {
                for s in [p.omega, crate::matsubara::pole_xi(p)] {
                    if s > 0.0 {
                        out.push(s);
                    }
                }
                if p.omega > 0.0 && p.gamma > 0.0 {
                    around(p.omega, p.gamma, &mut out);
                }
            }
        }
        out.retain(|&x| x > 0.0 && x < w_max);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Slope coefficient b − 2Ω²/g of L(ω) ≈ 2iω(b − 2Ω²/g) at small ω.
pub(crate) fn line_zero_slope(p: &OscillatorParams, b: f64) -> Result<f64> {
    if p.g == 0.0 {
        return Err(Error::Degenerate(
            "g = 0: the line factor is identically 1 and carries no phase".into(),
        ));
    }
    let crit = 2.0 * p.omega * p.omega / p.g;
    if (b - crit).abs() <= 1e-8 * b.max(crit) {
        return Err(Error::Degenerate(format!(
            "b = 2 Omega^2 / g = {crit}: the zero-frequency slope of L(omega) vanishes"
        )));
    }
    Ok(b - crit)
}

/// δ of the single oscillator.
pub fn delta_single(params: &OscillatorParams, w: f64) -> Result<f64> {
    Ok(PhaseFunction::single(params)?.delta(w))
}

/// Full box phase.
pub fn delta_box(params: &OscillatorParams, geom: &Geometry, w: f64) -> Result<f64> {
    Ok(PhaseFunction::boxed(params, geom)?.delta(w))
}

/// Line phase δ_L.
pub fn delta_line(params: &OscillatorParams, geom: &Geometry, w: f64) -> Result<f64> {
    Ok(PhaseFunction::line(params, geom)?.delta(w))
}

/// Scattering phase of the plasma model.
pub fn delta_scattering(params: &OscillatorParams, geom: &Geometry, w: f64) -> Result<f64> {
    Ok(PhaseFunction::scattering(params, geom)?.delta(w))
}

/// ∂_ωδ of an existing phase function.
pub fn d_delta(phase: &PhaseFunction, w: f64) -> f64 {
    phase.d_delta(w)
}
