//! Real-frequency representations of the free energy, internal energy and
//! entropy, and the imaginary-axis vacuum energies.
//!
//! With 𝒩_T(ω) = coth(βħω/2) and a phase δ(ω) with δ(0) = 0,
//!
//! ```text
//! E  = ∫₀^∞ dω/2π ħω 𝒩_T(ω) ∂_ωδ(ω)
//! F  = ∫₀^∞ dω/π  [ħω/2 + T ln(1 − e^{−βħω})] ∂_ωδ(ω)
//! F₀ = −(ħ/2π) ∫₀^∞ (δ(ω) − δ(∞)) dω          (integrated by parts)
//! ΔF = −(ħ/π)  ∫₀^∞ δ(ω) / (e^{βħω} − 1) dω
//! S  =  (ħ/π)  ∫₀^∞ δ(ω) (βħω/T) e^{βħω}/(e^{βħω} − 1)² dω
//! ```
//!
//! Both the integrated-by-parts and the direct forms are evaluated and must
//! agree. Where δ does not settle at large ω (single oscillator, full box)
//! the zero-temperature part depends on a caller-supplied cutoff Λ; only the
//! temperature-dependent part is cutoff-free there.
//!
//! For the separation-dependent part of the box, the zero-temperature energy
//! is taken on the imaginary axis, where it converges absolutely, and the
//! temperature-dependent part carries a free-field correction from the box
//! modes k_n at which the component phases jump by π.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matsubara::{self, BoundStateForm};
use crate::model::{l_factor_imag, Geometry, OscillatorParams, ThermalParams};
use crate::numeric::quad::{integrate, integrate_from_zero_log, integrate_from_zero_log_floor, Quad, QuadOptions};
use crate::phases::{PhaseFunction, System};

/// Controls for the real-frequency quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
    /// Upper frequency limit Λ for zero-temperature parts that need one.
    pub cutoff: Option<f64>,
}

impl Default for ThermoOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_intervals: 200_000,
            cutoff: None,
        }
    }
}

impl ThermoOptions {
    pub fn with_cutoff(cutoff: f64) -> Self {
        Self {
            cutoff: Some(cutoff),
            ..Self::default()
        }
    }

    fn quad(&self) -> QuadOptions {
        QuadOptions {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_intervals: self.max_intervals,
        }
    }
}

/// Numerical bookkeeping attached to every energy result.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Which representation produced the numbers.
    pub representation: String,
    /// Summed absolute error estimate of all quadratures.
    pub quad_error: f64,
    pub evals: usize,
    pub intervals: usize,
    /// Bound on the neglected tails (frequency integrals or Matsubara sums).
    pub tail_bound: f64,
    /// Upper integration limit of the thermal integrals.
    pub omega_max: Option<f64>,
    pub cutoff: Option<f64>,
    /// |direct − integrated-by-parts| for the free energy.
    pub by_parts_difference: Option<f64>,
    /// |E − (F + TS)| with E from the direct energy integral.
    pub legendre_difference: Option<f64>,
    pub l_max: Option<usize>,
    pub xi_star: Vec<f64>,
    pub kappa_b: Vec<f64>,
    pub bound_state_form: Option<BoundStateForm>,
    pub critical_box_size: Option<f64>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub(crate) fn new(representation: &str) -> Self {
        Self {
            representation: representation.to_string(),
            ..Self::default()
        }
    }

    pub(crate) fn absorb(&mut self, q: &Quad) {
        self.quad_error += q.error;
        self.evals += q.evals;
        self.intervals += q.intervals;
    }
}

/// Free energy F = F₀ + ΔF, internal energy E and entropy S.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub f: f64,
    pub f0: f64,
    pub dtf: f64,
    pub e: f64,
    pub s: f64,
    pub diagnostics: Diagnostics,
}

/// Internal energy E = E₀ + E_T from the direct (non-integrated) integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyIntegral {
    pub e: f64,
    pub e0: f64,
    pub e_thermal: f64,
    pub error: f64,
    pub evals: usize,
}

/// ∫_W^∞ p(ω) e^{−kω} dω for p(ω) = Σ c_n ωⁿ.
fn poly_exp_tail(coeffs: &[f64], k: f64, w: f64) -> f64 {
    let mut total = 0.0;
    for (n, &c) in coeffs.iter().enumerate() {
        // ∫_W^∞ ωⁿ e^{−kω} = e^{−kW} Σ_{j=0}^{n} n!/j! W^j / k^{n−j+1}
        let mut s = 0.0;
        let mut fact_ratio = 1.0; // n!/j! for j = n down to 0
        for j in (0..=n).rev() {
            s += fact_ratio * w.powi(j as i32) / k.powi((n - j + 1) as i32);
            fact_ratio *= j.max(1) as f64;
        }
        total += c * s;
    }
    total * (-k * w).exp()
}

/// Upper limit W for the Bose-weighted integrals and the bound on what is
/// left beyond it. With 1/(e^x − 1) ≤ 2e^{−x} and e^x/(e^x − 1)² ≤ 4e^{−x}
/// for x ≥ ln 2, and |δ| ≤ a + cω, both the free-energy and the entropy
/// integrands are dominated by polynomials times e^{−βħω}.
fn thermal_window(phase: &PhaseFunction, thermal: &ThermalParams, target: f64) -> (f64, f64) {
    let (a, c) = phase.growth_bound();
    let hbar = thermal.hbar;
    let t = thermal.temperature;
    let k = hbar / t;
    let bound = |w: f64| {
        let free = (hbar / PI) * poly_exp_tail(&[2.0 * a, 2.0 * c], k, w);
        let entropy = (hbar / PI) * poly_exp_tail(&[0.0, 4.0 * a * k / t, 4.0 * c * k / t], k, w);
        free.max(t * entropy)
    };
    let mut w = (30.0 / k).max(2.0f64.ln() / k);
    while bound(w) > target {
        w *= 1.2;
    }
    (w, bound(w))
}

/// Panel edges for integrals over [0, w_max]: the phase's sharp features and,
/// for the line, one point per period π/b of the e^{−2iωb} oscillation.
fn panels(phase: &PhaseFunction, w_max: f64) -> Vec<f64> {
    let mut pts = phase.breakpoints(w_max);
    if matches!(phase.system(), System::Line | System::Scattering) {
        if let Some(g) = phase.geometry() {
            let period = PI / g.b;
            let n = ((w_max / period) as usize).min(20_000);
            let step = w_max / (n.max(1) as f64);
            pts.extend((1..n).map(|i| i as f64 * step));
        }
    }
    pts.retain(|&x| x > 0.0 && x < w_max);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// First panel edge for the log-substituted piece near ω = 0.
fn first_panel(pts: &[f64], w_max: f64, k: f64) -> f64 {
    let first = pts.first().copied().unwrap_or(w_max);
    (0.5 * first).min(1.0 / k).min(0.5 * w_max)
}

fn require(q: Quad, what: &str, d: &mut Diagnostics) -> Result<f64> {
    d.absorb(&q);
    Ok(q.require(what)?.value)
}

/// Like `require`, for a value used only as a cross-check: when the
/// quadrature does not converge a warning is recorded and NaN returned.
fn cross_check(q: Quad, what: &str, d: &mut Diagnostics) -> f64 {
    d.evals += q.evals;
    d.intervals += q.intervals;
    match q.require(what) {
        Ok(q) => q.value,
        Err(e) => {
            d.warnings.push(format!("cross-check skipped: {e}"));
            f64::NAN
        }
    }
}

/// ∫₀^W f with the log substitution on the first panel.
fn integrate_log_start(f: &dyn Fn(f64) -> f64, w: f64, pts: &[f64], k: f64, opts: &QuadOptions) -> Quad {
    let w1 = first_panel(pts, w, k);
    integrate_from_zero_log(f, w1, opts).plus(integrate(f, w1, w, pts, opts))
}

/// Free-energy contribution Σ_k T ln(1 − e^{−βħk}) of the box modes k
/// together with its entropy and energy.
fn free_modes(phase: &PhaseFunction, thermal: &ThermalParams) -> (f64, f64, f64) {
    let poles = match phase.box_poles() {
        Some(p) => p,
        None => return (0.0, 0.0, 0.0),
    };
    if thermal.is_zero() {
        return (0.0, 0.0, 0.0);
    }
    let t = thermal.temperature;
    let k = thermal.hbar / t;
    let (mut f, mut s, mut e) = (0.0, 0.0, 0.0);
    for w in poles.list(0, 80.0 / k) {
        let x = k * w;
        let l = (-(-x).exp_m1()).ln();
        let n = 1.0 / x.exp_m1();
        f += t * l;
        s += -l + x * n;
        e += thermal.hbar * w * n;
    }
    (f, s, e)
}

fn check_agreement(a: f64, b: f64, err: f64, opts: &ThermoOptions, what: &str) -> Result<f64> {
    let diff = (a - b).abs();
    let allowed = 10.0 * err + 1e3 * (opts.rel_tol * a.abs().max(b.abs()) + opts.abs_tol);
    if diff > allowed {
        return Err(Error::Tolerance {
            what: format!("{what}: direct and integrated-by-parts forms disagree by {diff:e}"),
            estimate: a,
            error: diff,
        });
    }
    Ok(diff)
}

/// Zero-temperature part F₀ in both forms; returns (by parts, direct).
fn vacuum_part(phase: &PhaseFunction, opts: &ThermoOptions, hbar: f64, d: &mut Diagnostics) -> Result<(f64, f64)> {
    let qo = opts.quad();
    match phase.system() {
        System::Single | System::Box => {
            let lam = opts.cutoff.ok_or_else(|| {
                Error::param("this phase does not settle at large omega; the zero-temperature part needs a cutoff")
            })?;
            if !(lam > 0.0 && lam.is_finite()) {
                return Err(Error::param(format!("cutoff must be positive (got {lam})")));
            }
            d.cutoff = Some(lam);
            d.warnings
                .push(format!("F0 is regularization dependent: hard cutoff at omega = {lam}"));
            let pts = panels(phase, lam);
            let int_delta = require(
                integrate(&|w| phase.delta(w), 0.0, lam, &pts, &qo),
                "zero-temperature part (integrated form)",
                d,
            )?;
            let by_parts = hbar / (2.0 * PI) * (lam * phase.delta(lam) - int_delta);
            // ω∂δ peaks sharply at every weakly coupled box mode, so this form
            // may not converge for large cutoffs.
            let direct = hbar / (2.0 * PI)
                * cross_check(
                    integrate(&|w| w * phase.d_delta(w), 0.0, lam, &pts, &qo),
                    "zero-temperature part (direct form)",
                    d,
                );
            Ok((by_parts, direct))
        }
        System::Line | System::Scattering => {
            let p = *phase.params();
            let dinf = phase.delta_inf().expect("line phases settle");
            let target = 0.01 * opts.abs_tol;
            // Beyond W: |u| ≤ 2g/ω³ and |arg(1 − u²)| ≤ (π/2)|u|², so the
            // remainder of ∫|δ − δ(∞)| is at most (2π/5) g²/W⁵.
            let bound = |w: f64| hbar / (2.0 * PI) * (2.0 * PI / 5.0) * p.g * p.g / w.powi(5);
            let mut w = (2.0f64.sqrt() * p.omega).max((4.0 * p.g).cbrt()).max(phase.scale()).max(1.0);
            while bound(w) > target {
                w *= 1.2;
            }
            d.tail_bound += bound(w);
            let pts = panels(phase, w);
            let by_parts = -hbar / (2.0 * PI)
                * require(
                    integrate(&|x| phase.delta(x) - dinf, 0.0, w, &pts, &qo),
                    "zero-temperature part (integrated form)",
                    d,
                )?;
            // Near-lossless resonances make ω∂δ spike; a cross-check only.
            let direct = hbar / (2.0 * PI)
                * (cross_check(
                    integrate(&|x| x * phase.d_delta(x), 0.0, w, &pts, &qo),
                    "zero-temperature part (direct form)",
                    d,
                ) - w * (phase.delta(w) - dinf));
            Ok((by_parts, direct))
        }
        System::BoxSeparation => {
            let geom = *phase.geometry().expect("box phase has a geometry");
            let q = box_separation_vacuum_imag(phase.params(), &geom, hbar, opts)?;
            d.absorb(&q);
            Ok((q.value, q.value))
        }
    }
}

struct ThermalParts {
    dtf: f64,
    dtf_direct: f64,
    s: f64,
    e_thermal: f64,
}

fn thermal_part(phase: &PhaseFunction, thermal: &ThermalParams, opts: &ThermoOptions, d: &mut Diagnostics) -> Result<ThermalParts> {
    if thermal.is_zero() {
        return Ok(ThermalParts {
            dtf: 0.0,
            dtf_direct: 0.0,
            s: 0.0,
            e_thermal: 0.0,
        });
    }
    let qo = opts.quad();
    let hbar = thermal.hbar;
    let t = thermal.temperature;
    let k = hbar / t;
    let (w, tail) = thermal_window(phase, thermal, 0.01 * opts.abs_tol);
    d.omega_max = Some(w);
    d.tail_bound += tail;
    let pts = panels(phase, w);

    let bose = |x: f64| 1.0 / x.exp_m1();
    let dtf = -hbar / PI
        * require(
            integrate(&|om| phase.delta(om) * bose(k * om), 0.0, w, &pts, &qo),
            "temperature-dependent free energy",
            d,
        )?;
    let s = hbar / PI
        * require(
            integrate(
                &|om| {
                    let x = k * om;
                    let sh = (0.5 * x).sinh();
                    phase.delta(om) * (x / t) * 0.25 / (sh * sh)
                },
                0.0,
                w,
                &pts,
                &qo,
            ),
            "entropy",
            d,
        )?;
    let direct = |om: f64| t * (-(-k * om).exp_m1()).ln() * phase.d_delta(om) / PI;
    let dtf_direct = require(
        integrate_log_start(&direct, w, &pts, k, &qo),
        "temperature-dependent free energy (direct form)",
        d,
    )?;
    let e_thermal = hbar / PI
        * require(
            integrate(&|om| om * bose(k * om) * phase.d_delta(om), 0.0, w, &pts, &qo),
            "thermal energy",
            d,
        )?;
    let (ff, sf, ef) = free_modes(phase, thermal);
    let correct = phase.system() == System::BoxSeparation;
    let (ff, sf, ef) = if correct { (ff, sf, ef) } else { (0.0, 0.0, 0.0) };
    Ok(ThermalParts {
        dtf: dtf + ff,
        dtf_direct: dtf_direct + ff,
        s: s + sf,
        e_thermal: e_thermal + ef,
    })
}

/// F, F₀, ΔF, E and S from the phase.
pub fn free_energy_real_freq(phase: &PhaseFunction, thermal: &ThermalParams, opts: &ThermoOptions) -> Result<EnergyReport> {
    let mut d = Diagnostics::new("real-frequency");
    let hbar = thermal.hbar;
    let (f0, f0_direct) = vacuum_part(phase, opts, hbar, &mut d)?;
    let th = thermal_part(phase, thermal, opts, &mut d)?;
    let f = f0 + th.dtf;
    if f0_direct.is_finite() {
        let diff = check_agreement(f, f0_direct + th.dtf_direct, d.quad_error, opts, "free energy")?;
        d.by_parts_difference = Some(diff);
    } else {
        let diff = check_agreement(th.dtf, th.dtf_direct, d.quad_error, opts, "temperature-dependent free energy")?;
        d.by_parts_difference = Some(diff);
    }
    let t = thermal.temperature;
    let e = f + t * th.s;
    let e_direct = f0_direct + th.e_thermal;
    d.legendre_difference = e_direct.is_finite().then(|| (e - e_direct).abs());
    Ok(EnergyReport {
        f,
        f0,
        dtf: th.dtf,
        e,
        s: th.s,
        diagnostics: d,
    })
}

/// E = ∫ dω/2π ħω 𝒩_T ∂_ωδ, split into E₀ and the thermal part.
pub fn energy_real_freq(phase: &PhaseFunction, thermal: &ThermalParams, opts: &ThermoOptions) -> Result<EnergyIntegral> {
    let mut d = Diagnostics::new("real-frequency");
    let (_, e0) = vacuum_part(phase, opts, thermal.hbar, &mut d)?;
    if !e0.is_finite() {
        return Err(Error::Tolerance {
            what: d.warnings.pop().unwrap_or_else(|| "zero-temperature energy".into()),
            estimate: e0,
            error: f64::INFINITY,
        });
    }
    let th = thermal_part(phase, thermal, opts, &mut d)?;
    Ok(EnergyIntegral {
        e: e0 + th.e_thermal,
        e0,
        e_thermal: th.e_thermal,
        error: d.quad_error + d.tail_bound,
        evals: d.evals,
    })
}

/// Temperature-dependent energy E_T = ∫ dω/π ħω ∂_ωδ/(e^{βħω} − 1) only;
/// cutoff-free for every system.
pub fn thermal_energy_real_freq(phase: &PhaseFunction, thermal: &ThermalParams, opts: &ThermoOptions) -> Result<Quad> {
    let mut d = Diagnostics::new("real-frequency");
    let th = thermal_part(phase, thermal, opts, &mut d)?;
    Ok(Quad {
        value: th.e_thermal,
        error: d.quad_error + d.tail_bound,
        evals: d.evals,
        intervals: d.intervals,
        converged: true,
    })
}

/// Entropy S = −∂F/∂T by a centred difference with step `dt` (default 10⁻³T).
pub fn entropy<F>(free_energy: F, thermal: &ThermalParams, dt: Option<f64>) -> Result<f64>
where
    F: Fn(&ThermalParams) -> Result<f64>,
{
    let t = thermal.temperature;
    let dt = dt.unwrap_or(1e-3 * t);
    if !(t > dt && dt > 0.0) {
        return Err(Error::param(format!("entropy needs T > dT > 0 (T = {t}, dT = {dt})")));
    }
    let up = free_energy(&ThermalParams::new(t + dt, thermal.hbar)?)?;
    let down = free_energy(&ThermalParams::new(t - dt, thermal.hbar)?)?;
    Ok(-(up - down) / (2.0 * dt))
}

/// (ħ/2π) ∫₀^∞ ln|L(−iξ)| dξ on the line, any γ ≥ 0. Integrable logarithmic
/// singularities at ξ = 0, at the bound states and at the pole ξ_p are
/// placed on panel edges.
pub(crate) fn line_vacuum_imag(p: &OscillatorParams, geom: &Geometry, hbar: f64, opts: &ThermoOptions) -> Result<(Quad, matsubara::BoundStateRoots)> {
    geom.require_line()?;
    let roots = matsubara::find_bound_states(p, geom)?;
    if p.g == 0.0 {
        return Ok((
            Quad {
                converged: true,
                ..Quad::default()
            },
            roots,
        ));
    }
    let b = geom.b;
    let mut sing: Vec<f64> = roots.xi_star.clone();
    sing.push(roots.pole);
    sing.sort_by(f64::total_cmp);
    let top = *sing.last().expect("pole is always present");
    // Beyond X > ξ_p: |u| = g e^{−ξb}/D(ξ) decreases, and for |u| < 1/2,
    // |ln|1 − u²|| ≤ (4/3)u² ≤ (4/3)u(X)² e^{−2b(ξ−X)}.
    let target = 0.01 * opts.abs_tol;
    let u_at = |xi: f64| {
        let d = 2.0 * xi * (xi * xi + p.gamma * xi + p.omega * p.omega) - p.g;
        p.g * (-xi * b).exp() / d
    };
    // Next to a root, 1 − u cancels to rounding noise and may come out as
    // exactly zero; below that noise level L is indistinguishable from 0.
    let f = |xi: f64| {
        let noise = 8.0 * f64::EPSILON * (1.0 + u_at(xi).abs()).powi(2);
        l_factor_imag(p, b, xi).abs().max(noise).ln()
    };
    let tail = |x: f64| {
        let u = u_at(x);
        hbar / (2.0 * PI) * (4.0 / 3.0) * u * u / (2.0 * b)
    };
    let mut x = 2.0 * top + 1.0 / b;
    while u_at(x) >= 0.5 || tail(x) > target {
        x *= 1.2;
    }
    let qo = opts.quad();
    let mut edges = vec![0.0];
    for &s in &sing {
        edges.push(s);
    }
    edges.push(x);
    // Each panel is split at its midpoint and every half is integrated with
    // the logarithmic substitution towards its singular end.
    let mut q = Quad {
        converged: true,
        ..Quad::default()
    };
    for w in edges.windows(2) {
        let (a, c) = (w[0], w[1]);
        let m = 0.5 * (a + c);
        let left = |y: f64| f(a + y);
        let right = |y: f64| f(c - y);
        // The singular points are known to a few ulps only.
        let floor = |x: f64| 16.0 * f64::EPSILON * x.abs();
        q = q.plus(integrate_from_zero_log_floor(&left, m - a, floor(a), &qo));
        q = q.plus(integrate_from_zero_log_floor(&right, c - m, floor(c), &qo));
    }
    let mut q = q.scaled(hbar / (2.0 * PI));
    q.error += tail(x);
    Ok((q, roots))
}

/// Vacuum energy (ħ/2π) ∫₀^∞ ln|t(iξ)^{−1}| dξ of the dissipationless line.
pub fn vacuum_energy_imag_axis(p: &OscillatorParams, geom: &Geometry, hbar: f64, opts: &ThermoOptions) -> Result<Quad> {
    p.validate()?;
    geom.validate()?;
    geom.require_line()?;
    if p.gamma != 0.0 {
        return Err(Error::param("the imaginary-axis vacuum energy uses the dissipationless model (gamma = 0)"));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::param("hbar must be > 0"));
    }
    let (q, _) = line_vacuum_imag(p, geom, hbar, opts)?;
    q.require("imaginary-axis vacuum energy")
}

/// Separation-dependent zero-temperature energy of the box,
/// (ħ/2π) ∫₀^∞ ln[Φ₊Φ₋/Φ_ref²](−iξ) dξ.
pub fn box_separation_vacuum_imag(p: &OscillatorParams, geom: &Geometry, hbar: f64, opts: &ThermoOptions) -> Result<Quad> {
    p.validate()?;
    geom.validate()?;
    geom.require_box()?;
    matsubara::check_box_domain(p, geom)?;
    let b = geom.b;
    let target = 0.01 * opts.abs_tol;
    let mut x = 4.0 / b;
    loop {
        let (bound, ok) = matsubara::box_log_tail(p, geom, x)?;
        if ok && hbar / (2.0 * PI) * bound / (2.0 * b) <= target {
            break;
        }
        x *= 1.2;
    }
    let (bound, _) = matsubara::box_log_tail(p, geom, x)?;
    let f = |xi: f64| matsubara::ln_r_box(p, geom, xi).unwrap_or(f64::NAN);
    let l = geom.box_length.expect("box geometry");
    let pts: Vec<f64> = (1..((x * l) as usize).min(10_000)).map(|i| i as f64 / l).collect();
    let mut q = integrate(&f, 0.0, x, &pts, &opts.quad()).scaled(hbar / (2.0 * PI));
    q.error += hbar / (2.0 * PI) * bound / (2.0 * b);
    q.require("box imaginary-axis vacuum energy")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoxPoles;

    fn osc(omega: f64, gamma: f64, g: f64) -> OscillatorParams {
        OscillatorParams::unit_mass(omega, gamma, g).unwrap()
    }

    #[test]
    fn poly_exp_tail_matches_quadrature() {
        let (k, w) = (1.7, 2.3);
        let c = [0.5, -0.2, 0.3];
        let exact = integrate(
            &|x: f64| (c[0] + c[1] * x + c[2] * x * x) * (-k * x).exp(),
            w,
            80.0,
            &[],
            &QuadOptions::default(),
        );
        assert!((poly_exp_tail(&c, k, w) - exact.value).abs() < 1e-13);
    }

    #[test]
    fn single_oscillator_small_gamma_free_energy() {
        let p = osc(1.0, 1e-3, 0.0);
        let pf = PhaseFunction::single(&p).unwrap();
        let t = ThermalParams::natural(1.0).unwrap();
        let r = free_energy_real_freq(&pf, &t, &ThermoOptions::with_cutoff(1e3)).unwrap();
        let oracle = 0.5 + (1.0 - (-1.0f64).exp()).ln();
        assert!((r.f - oracle).abs() < 3e-3, "{} vs {oracle}", r.f);
        let dtf_oracle = (1.0 - (-1.0f64).exp()).ln();
        assert!((r.dtf - dtf_oracle).abs() < 1e-3, "{}", r.dtf);
    }

    #[test]
    fn single_oscillator_small_gamma_energy() {
        let p = osc(1.0, 1e-3, 0.0);
        let pf = PhaseFunction::single(&p).unwrap();
        let t = ThermalParams::natural(1.0).unwrap();
        let e = energy_real_freq(&pf, &t, &ThermoOptions::with_cutoff(1e3)).unwrap();
        let oracle = 0.5 / (0.5f64).tanh();
        assert!((e.e - oracle).abs() < 3e-3, "{} vs {oracle}", e.e);
    }

    #[test]
    fn classical_limit_equipartition() {
        let p = osc(1.0, 0.05, 0.0);
        let pf = PhaseFunction::single(&p).unwrap();
        let t = ThermalParams::natural(60.0).unwrap();
        let e = thermal_energy_real_freq(&pf, &t, &ThermoOptions::default()).unwrap();
        // E_T = E − ħΩ/2·(1 + O(γ)) → T − ħΩ/2 + O(ħ²Ω²/T)
        assert!(((e.value + 0.5) - 60.0).abs() / 60.0 < 1e-2, "{}", e.value);
    }

    #[test]
    fn decoupled_box_is_twice_single() {
        let p = osc(1.0, 0.2, 0.0);
        let geom = Geometry::boxed(1.0, 3.0).unwrap();
        let t = ThermalParams::natural(0.7).unwrap();
        let o = ThermoOptions::with_cutoff(200.0);
        let rb = free_energy_real_freq(&PhaseFunction::boxed(&p, &geom).unwrap(), &t, &o).unwrap();
        let rs = free_energy_real_freq(&PhaseFunction::single(&p).unwrap(), &t, &o).unwrap();
        assert!((rb.dtf - 2.0 * rs.dtf).abs() < 1e-10);
        assert!((rb.e - 2.0 * rs.e).abs() < 1e-8);
    }

    #[test]
    fn single_requires_cutoff() {
        let pf = PhaseFunction::single(&osc(1.0, 0.1, 0.0)).unwrap();
        let t = ThermalParams::natural(1.0).unwrap();
        let r = free_energy_real_freq(&pf, &t, &ThermoOptions::default());
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn line_direct_and_by_parts_agree_and_legendre_holds() {
        let p = osc(1.0, 0.3, 1.0);
        let geom = Geometry::line(0.5).unwrap();
        let pf = PhaseFunction::line(&p, &geom).unwrap();
        let t = ThermalParams::natural(0.8).unwrap();
        let r = free_energy_real_freq(&pf, &t, &ThermoOptions::default()).unwrap();
        assert!(r.diagnostics.by_parts_difference.unwrap() < 1e-9 * r.f.abs().max(1e-3));
        assert!(r.diagnostics.legendre_difference.unwrap() < 1e-8 * r.e.abs().max(1e-3));
    }

    #[test]
    fn entropy_fd_matches_analytic() {
        let p = osc(0.5, 0.4, 1.0);
        let geom = Geometry::line(1.5).unwrap();
        let pf = PhaseFunction::line(&p, &geom).unwrap();
        let o = ThermoOptions::default();
        let t = ThermalParams::natural(0.6).unwrap();
        let r = free_energy_real_freq(&pf, &t, &o).unwrap();
        let s = entropy(|th| free_energy_real_freq(&pf, th, &o).map(|r| r.f), &t, None).unwrap();
        assert!((s - r.s).abs() < 1e-6 * r.s.abs().max(1e-6), "{s} vs {}", r.s);
    }

    #[test]
    fn zero_temperature_report() {
        let p = osc(1.0, 0.3, 1.0);
        let geom = Geometry::line(1.0).unwrap();
        let pf = PhaseFunction::line(&p, &geom).unwrap();
        let t = ThermalParams::natural(0.0).unwrap();
        let r = free_energy_real_freq(&pf, &t, &ThermoOptions::default()).unwrap();
        assert_eq!(r.dtf, 0.0);
        assert_eq!(r.s, 0.0);
        assert_eq!(r.f, r.f0);
        assert_eq!(r.e, r.f);
    }

    #[test]
    fn vacuum_energy_finite_next_to_a_bound_state() {
        // Here 1 − u rounds to exactly zero a few ulps from the root.
        let p = osc(0.520_335_461_161_399_8, 0.0, 0.430_173_147_088_696_4);
        let g = Geometry::line(1.316_484_298_760_558_3).unwrap();
        let q = vacuum_energy_imag_axis(&p, &g, 1.0, &ThermoOptions::default()).unwrap();
        assert!(q.value.is_finite() && q.value < 0.0, "{q:?}");
    }

    #[test]
    fn line_vacuum_real_axis_matches_imaginary_axis() {
        for &(omega, gamma, b) in &[(1.0, 0.3, 0.5), (0.0, 0.1, 2.0), (1.0, 0.0, 0.5)] {
            let p = osc(omega, gamma, 1.0);
            let geom = Geometry::line(b).unwrap();
            let pf = PhaseFunction::line(&p, &geom).unwrap();
            let t = ThermalParams::natural(0.0).unwrap();
            let real = free_energy_real_freq(&pf, &t, &ThermoOptions::default()).unwrap().f0;
            let (imag, _) = line_vacuum_imag(&p, &geom, 1.0, &ThermoOptions::default()).unwrap();
            assert!((real - imag.value).abs() < 1e-9 * real.abs(), "{real} vs {}", imag.value);
        }
    }

    #[test]
    fn vacuum_energy_scaling_and_decoupling() {
        let o = ThermoOptions::default();
        let p = osc(1.0, 0.0, 1.0);
        let e1 = vacuum_energy_imag_axis(&p, &Geometry::line(1.0).unwrap(), 1.0, &o).unwrap().value;
        let lam = 2.0;
        let ps = osc(1.0 / lam, 0.0, 1.0 / lam.powi(3));
        let e2 = vacuum_energy_imag_axis(&ps, &Geometry::line(lam).unwrap(), 1.0, &o).unwrap().value;
        assert!((e1 * 1.0 - e2 * lam).abs() < 1e-10 * e1.abs());
        let p0 = osc(1.0, 0.0, 0.0);
        assert_eq!(vacuum_energy_imag_axis(&p0, &Geometry::line(1.0).unwrap(), 1.0, &o).unwrap().value, 0.0);
        assert!(vacuum_energy_imag_axis(&osc(1.0, 0.1, 1.0), &Geometry::line(1.0).unwrap(), 1.0, &o).is_err());
    }

    #[test]
    fn strong_coupling_approaches_dirichlet_interval() {
        // Two perfectly reflecting points: −πħ/(24b).
        let p = osc(0.0, 0.0, 1e8);
        let e = vacuum_energy_imag_axis(&p, &Geometry::line(1.0).unwrap(), 1.0, &ThermoOptions::default()).unwrap();
        assert!((e.value + PI / 24.0).abs() < 2e-3 * PI / 24.0, "{}", e.value);
    }

    #[test]
    fn free_mode_sum() {
        let p = osc(1.0, 0.3, 0.5);
        let geom = Geometry::boxed(1.0, 2.0).unwrap();
        let pf = PhaseFunction::box_separation(&p, &geom).unwrap();
        let t = ThermalParams::natural(1.0).unwrap();
        let (f, s, e) = free_modes(&pf, &t);
        let ks = BoxPoles::new(&geom).unwrap().list(0, 100.0);
        let fe: f64 = ks.iter().map(|k| (1.0 - (-k).exp()).ln()).sum();
        assert!((f - fe).abs() < 1e-15);
        assert!((e - (f + s)).abs() < 1e-14);
    }
}
