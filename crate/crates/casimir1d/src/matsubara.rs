//! Matsubara-sum representations of the separation-dependent free energy,
//! bound states of the line and the critical box size.
//!
//! Box (valid while Φ_σ(−iξ) > 0 for all ξ ≥ 0, i.e. L < L_*):
//!
//! ```text
//! F = T Σ'_{l≥0} ln[Φ₊Φ₋/Φ_ref²](−iξ_l),   ξ_l = 2πTl/ħ,
//! ```
//!
//! with the l = 0 term weighted by ½ and Φ_ref built from G₁ alone.
//!
//! Line:
//!
//! ```text
//! F = (T/2) ln|2(b − 2Ω²/g)T/ħ| + T Σ_{l≥1} ln|L(−iξ_l)|
//!     − T Σ_{ξ*} ln|2 sin(βħξ*/2)| + 2T ln|2 sin(βħξ_p/2)|
//! ```
//!
//! The zero mode ln L(0) is replaced by the small-ξ behaviour
//! L(−iξ) ≈ 2ξ(b − 2Ω²/g) at ξ = T/ħ. The last two terms come from the
//! zeros ξ* and the double pole ξ_p of L(−iξ) on the positive imaginary
//! axis; whenever a Matsubara frequency hits one of them the logarithmic
//! singularities cancel between the sum and these terms.
//! [`BoundStateForm::Printed`] instead uses −T Σ_{ξ*} |2 sin(βħξ*/2)| without
//! the pole term; it is kept for comparison only.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::model::{green_sectors_imag, l_factor_imag, transmission_inv, Geometry, OscillatorParams, ThermalParams};
use crate::numeric::roots::bisect;
use crate::phases::line_zero_slope;
use crate::thermo::{self, Diagnostics, EnergyReport, ThermoOptions};

/// Form of the bound-state contribution in the line sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStateForm {
    /// −T Σ ln|2 sin(βħξ*/2)| + 2T ln|2 sin(βħξ_p/2)|.
    #[default]
    Logarithmic,
    /// −T Σ |2 sin(βħξ*/2)|, no pole term.
    Printed,
}

/// Matsubara frequencies ξ_l = 2πTl/ħ, l = 0…l_max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatsubaraGrid {
    pub temperature: f64,
    pub hbar: f64,
    pub l_max: usize,
    pub tail_bound: f64,
}

impl MatsubaraGrid {
    pub fn spacing(&self) -> f64 {
        2.0 * PI * self.temperature / self.hbar
    }

    pub fn xi(&self, l: usize) -> f64 {
        self.spacing() * l as f64
    }
}

/// Positive zeros of L(−iξ) (ξ*) and of t(iκ)^{−1} (κ_b, the
/// dissipationless counterpart), plus the pole ξ_p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStateRoots {
    pub xi_star: Vec<f64>,
    pub kappa_b: Vec<f64>,
    pub pole: f64,
}

impl BoundStateRoots {
    pub fn count(&self) -> usize {
        self.xi_star.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalBoxSize {
    pub l_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatsubaraOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Fixed truncation; `None` extends the sum until the tail bound is met.
    pub l_max: Option<usize>,
    pub max_terms: usize,
    pub form: BoundStateForm,
    pub exec: Exec,
    /// Step of the centred temperature difference for S (default 10⁻³T).
    pub entropy_step: Option<f64>,
}

impl Default for MatsubaraOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            abs_tol: 1e-16,
            l_max: None,
            max_terms: 50_000_000,
            form: BoundStateForm::default(),
            exec: Exec::default(),
            entropy_step: None,
        }
    }
}

/// Positive root ξ_p of 2ξ(ξ² + γξ + Ω²) = g, the pole of the line factor
/// on the imaginary axis. Zero when g = 0.
pub fn pole_xi(p: &OscillatorParams) -> f64 {
    if p.g == 0.0 {
        return 0.0;
    }
    let f = |x: f64| 2.0 * x * (x * x + p.gamma * x + p.omega * p.omega) - p.g;
    let mut hi = p.g.cbrt();
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    bisect(f, 0.0, hi, 0.0).unwrap_or(hi)
}

/// (1 − e^{−ξb})/ξ, continuous at 0.
fn one_minus_exp_over(xi: f64, b: f64) -> f64 {
    if xi == 0.0 {
        b
    } else {
        -(-xi * b).exp_m1() / xi
    }
}

fn line_roots(p: &OscillatorParams, b: f64) -> (Vec<f64>, f64) {
    if p.g == 0.0 {
        return (Vec::new(), 0.0);
    }
    let xp = pole_xi(p);
    let q = |x: f64| x * x + p.gamma * x + p.omega * p.omega;
    let mut roots = Vec::new();
    // 1 + u = 0 ⇔ h(ξ)/ξ = 2q(ξ) − g(1 − e^{−ξb})/ξ = 0. h/ξ increases, starts
    // at 2Ω² − gb and is positive at ξ_p, so a root exists iff b > 2Ω²/g.
    let lower = |x: f64| 2.0 * q(x) - p.g * one_minus_exp_over(x, b);
    if lower(0.0) < 0.0 {
        if let Ok(r) = bisect(lower, 0.0, xp, 0.0) {
            roots.push(r);
        }
    }
    // 1 − u = 0 ⇔ 2ξq(ξ) − g(1 + e^{−ξb}) = 0, increasing, negative at ξ_p.
    let upper = |x: f64| 2.0 * x * q(x) - p.g * (1.0 + (-x * b).exp());
    let mut hi = 2.0 * xp;
    while upper(hi) <= 0.0 {
        hi *= 2.0;
    }
    if let Ok(r) = bisect(upper, xp, hi, 0.0) {
        roots.push(r);
    }
    (roots, xp)
}

/// Bound states of the line: all positive zeros of L(−iξ) and of t(iκ)^{−1}.
///
/// L(−iξ) = (1 − u)(1 + u) with u = g e^{−ξb}/(2ξ(ξ² + γξ + Ω²) − g). Above
/// the pole u falls from +∞ to 0 (exactly one zero of 1 − u); below it u
/// runs from −1 to −∞, and 1 + u vanishes once iff b > 2Ω²/g. Both
/// conditions reduce to monotone functions, so at most two roots exist and
/// none are missed.
pub fn find_bound_states(p: &OscillatorParams, geom: &Geometry) -> Result<BoundStateRoots> {
    p.validate()?;
    geom.validate()?;
    geom.require_line()?;
    let (xi_star, pole) = line_roots(p, geom.b);
    let p0 = OscillatorParams { gamma: 0.0, ..*p };
    let (kappa_b, _) = line_roots(&p0, geom.b);
    Ok(BoundStateRoots { xi_star, kappa_b, pole })
}

/// L_* = b + 2Ω²/g: beyond it Φ₊(0) < 0 and the box acquires a bound state.
pub fn critical_box_size(p: &OscillatorParams, geom: &Geometry) -> Result<CriticalBoxSize> {
    p.validate()?;
    geom.validate()?;
    if p.g <= 0.0 {
        return Err(Error::param("the critical box size needs g > 0"));
    }
    Ok(CriticalBoxSize {
        l_star: geom.b + 2.0 * p.omega * p.omega / p.g,
    })
}

pub(crate) fn check_box_domain(p: &OscillatorParams, geom: &Geometry) -> Result<()> {
    let l = geom.require_box()?;
    if p.g == 0.0 {
        return Ok(());
    }
    let l_star = geom.b + 2.0 * p.omega * p.omega / p.g;
    if l >= l_star {
        return Err(Error::Domain(format!(
            "box length L = {l} is not below the critical size L* = b + 2 Omega^2 / g = {l_star}; \
             Phi_+(-i xi) is no longer positive"
        )));
    }
    Ok(())
}

/// Φ₊, Φ₋ and Φ_ref at ω = −iξ.
pub fn box_phi_imag(p: &OscillatorParams, geom: &Geometry, xi: f64) -> Result<(f64, f64, f64)> {
    let (gp, gm) = green_sectors_imag(geom, xi)?;
    let n = p.omega * p.omega + xi * xi + p.gamma * xi;
    Ok((n - p.g * gp, n - p.g * gm, n - 0.5 * p.g * (gp + gm)))
}

/// ln[Φ₊Φ₋/Φ_ref²](−iξ) = ln(1 − v) + ln(1 + v), v = gG₂/Φ_ref.
pub fn ln_r_box(p: &OscillatorParams, geom: &Geometry, xi: f64) -> Result<f64> {
    let (fp, fm, fref) = box_phi_imag(p, geom, xi)?;
    if !(fp > 0.0 && fm > 0.0) {
        return Err(Error::Domain(format!(
            "Phi_sigma(-i xi) is not positive at xi = {xi} (Phi_+ = {fp}, Phi_- = {fm})"
        )));
    }
    let v = 0.5 * (fm - fp) / fref;
    Ok((-v).ln_1p() + v.ln_1p())
}

/// Majorant ṽ(ξ) = g e^{−ξb}/(2ξ Φ_ref(ξ)) ≥ |v(ξ)|; beyond ξ it decays at
/// least like e^{−bΔξ}·ξ/ξ'. Returns ((4/3)ṽ², ṽ < 1/2), the bound on
/// |ln R| at ξ and whether it is valid.
pub(crate) fn box_log_tail(p: &OscillatorParams, geom: &Geometry, xi: f64) -> Result<(f64, bool)> {
    let (_, _, fref) = box_phi_imag(p, geom, xi)?;
    let v = p.g * (-xi * geom.b).exp() / (2.0 * xi * fref);
    Ok((4.0 / 3.0 * v * v, v < 0.5))
}

/// u(ξ) = g e^{−ξb}/D(ξ) of the line.
fn line_u(p: &OscillatorParams, b: f64, xi: f64) -> f64 {
    let d = 2.0 * xi * (xi * xi + p.gamma * xi + p.omega * p.omega) - p.g;
    p.g * (-xi * b).exp() / d
}

struct SumResult {
    sum: f64,
    l_max: usize,
    tail: f64,
}

/// Σ_{l=first}^{…} term(l), extended in growing blocks until `tail(n)` (a
/// bound on Σ_{l≥n}) drops below tolerance. All terms are kept and summed
/// once with a fixed tree, so the result does not depend on thread count.
fn sum_terms<F, B>(opts: &MatsubaraOptions, first: usize, term: F, tail: B) -> Result<SumResult>
where
    F: Fn(usize) -> f64 + Sync + Send,
    B: Fn(usize) -> Option<f64>,
{
    let mut terms: Vec<f64> = Vec::new();
    let mut next = first;
    let check = |v: &[f64], start: usize| -> Result<()> {
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::Degenerate(format!(
                "Matsubara term l = {} is not finite (frequency on a root or pole)",
                start + i
            )));
        }
        Ok(())
    };
    if let Some(l_max) = opts.l_max {
        if l_max >= first {
            let v = exec::map_range(opts.exec, l_max + 1 - first, |i| term(first + i));
            check(&v, first)?;
            terms = v;
        }
        let sum = exec::tree_sum(&terms);
        return Ok(SumResult {
            sum,
            l_max,
            tail: tail(l_max + 1).unwrap_or(f64::INFINITY),
        });
    }
    let mut block = 64usize;
    loop {
        let v = exec::map_range(opts.exec, block, |i| term(next + i));
        check(&v, next)?;
        terms.extend(v);
        next += block;
        let partial = exec::tree_sum(&terms);
        if let Some(t) = tail(next) {
            if t <= opts.abs_tol.max(opts.rel_tol * partial.abs()) {
                return Ok(SumResult {
                    sum: partial,
                    l_max: next - 1,
                    tail: t,
                });
            }
        }
        if terms.len() >= opts.max_terms {
            return Err(Error::Tolerance {
                what: format!("Matsubara sum did not reach its tail tolerance within {} terms", opts.max_terms),
                estimate: partial,
                error: tail(next).unwrap_or(f64::INFINITY),
            });
        }
        block = (2 * block).min(1 << 16);
    }
}

/// Geometric-or-power tail factor: Σ_{l≥n} ρ^{2(l−n)}(n/l)² ≤ min(1/(1−ρ²), 1 + n).
fn tail_factor(rho: f64, n: usize) -> f64 {
    let geo = if rho < 1.0 { 1.0 / (1.0 - rho * rho) } else { f64::INFINITY };
    geo.min(1.0 + n as f64)
}

fn box_sum(p: &OscillatorParams, geom: &Geometry, thermal: &ThermalParams, opts: &MatsubaraOptions) -> Result<SumResult> {
    let t = thermal.temperature;
    let dxi = 2.0 * PI * t / thermal.hbar;
    let rho = (-geom.b * dxi).exp();
    let term = |l: usize| ln_r_box(p, geom, dxi * l as f64).unwrap_or(f64::NAN);
    let tail = |n: usize| {
        let (bound, ok) = box_log_tail(p, geom, dxi * n as f64).ok()?;
        ok.then(|| t * bound * tail_factor(rho, n))
    };
    let mut r = sum_terms(opts, 1, term, tail)?;
    r.sum = t * (0.5 * ln_r_box(p, geom, 0.0)? + r.sum);
    Ok(r)
}

/// Box free energy (separation-dependent part) from the Matsubara sum.
pub fn free_energy_matsubara_box(
    p: &OscillatorParams,
    geom: &Geometry,
    thermal: &ThermalParams,
    opts: &MatsubaraOptions,
) -> Result<EnergyReport> {
    p.validate()?;
    geom.validate()?;
    geom.require_box()?;
    check_box_domain(p, geom)?;
    let mut d = Diagnostics::new("matsubara");
    if p.g > 0.0 {
        d.critical_box_size = Some(critical_box_size(p, geom)?.l_star);
    }
    let topts = ThermoOptions::default();
    let q0 = thermo::box_separation_vacuum_imag(p, geom, thermal.hbar, &topts)?;
    d.absorb(&q0);
    let f0 = q0.value;
    if thermal.is_zero() {
        return Ok(EnergyReport {
            f: f0,
            f0,
            dtf: 0.0,
            e: f0,
            s: 0.0,
            diagnostics: d,
        });
    }
    let r = box_sum(p, geom, thermal, opts)?;
    d.l_max = Some(r.l_max);
    d.tail_bound = r.tail;
    let s = thermo::entropy(
        |th| box_sum(p, geom, th, opts).map(|r| r.sum),
        thermal,
        opts.entropy_step,
    )?;
    let f = r.sum;
    Ok(EnergyReport {
        f,
        f0,
        dtf: f - f0,
        e: f + thermal.temperature * s,
        s,
        diagnostics: d,
    })
}

/// Which function supplies the Matsubara terms of the line.
#[derive(Clone, Copy, PartialEq)]
enum LineTerms {
    Dissipative,
    Plasma,
}

fn line_sum(
    p: &OscillatorParams,
    geom: &Geometry,
    thermal: &ThermalParams,
    opts: &MatsubaraOptions,
    roots: &[f64],
    pole: f64,
    which: LineTerms,
) -> Result<SumResult> {
    let b = geom.b;
    let t = thermal.temperature;
    let hbar = thermal.hbar;
    let dxi = 2.0 * PI * t / hbar;
    let rho = (-b * dxi).exp();
    let term = |l: usize| {
        let xi = dxi * l as f64;
        let v = match which {
            LineTerms::Dissipative => l_factor_imag(p, b, xi),
            LineTerms::Plasma => transmission_inv(p, geom, xi).unwrap_or(f64::NAN),
        };
        v.abs().ln()
    };
    // For l ≥ n with ξ_n > ξ_p and u_n < 1/2: |ln|1 − u_l²|| ≤ (4/3)u_l²,
    // u_l ≤ u_n ρ^{l−n} ξ_n/ξ_l.
    let tail = |n: usize| {
        let xi = dxi * n as f64;
        if xi <= pole {
            return None;
        }
        let u = line_u(p, b, xi);
        (u < 0.5).then(|| t * 4.0 / 3.0 * u * u * tail_factor(rho, n))
    };
    let mut r = sum_terms(opts, 1, term, tail)?;
    let slope = b - 2.0 * p.omega * p.omega / p.g;
    let zero = 0.5 * t * (2.0 * slope * t / hbar).abs().ln();
    let sin_term = |xi: f64| (2.0 * ((hbar * xi / (2.0 * t)).sin())).abs();
    let bound = match opts.form {
        BoundStateForm::Logarithmic => {
            -t * roots.iter().map(|&x| sin_term(x).ln()).sum::<f64>() + 2.0 * t * sin_term(pole).ln()
        }
        BoundStateForm::Printed => -t * roots.iter().map(|&x| sin_term(x)).sum::<f64>(),
    };
    if !bound.is_finite() {
        return Err(Error::Degenerate(
            "a Matsubara frequency coincides with a bound state or the pole of L(-i xi)".into(),
        ));
    }
    r.sum = zero + t * r.sum + bound;
    Ok(r)
}

fn line_report(
    p: &OscillatorParams,
    geom: &Geometry,
    thermal: &ThermalParams,
    opts: &MatsubaraOptions,
    which: LineTerms,
) -> Result<EnergyReport> {
    p.validate()?;
    geom.validate()?;
    geom.require_line()?;
    let mut d = Diagnostics::new(match which {
        LineTerms::Dissipative => "matsubara",
        LineTerms::Plasma => "matsubara-plasma",
    });
    let zero = || EnergyReport {
        f: 0.0,
        f0: 0.0,
        dtf: 0.0,
        e: 0.0,
        s: 0.0,
        diagnostics: d.clone(),
    };
    if p.g == 0.0 {
        return Ok(zero());
    }
    line_zero_slope(p, geom.b)?;
    let (q0, roots) = thermo::line_vacuum_imag(p, geom, thermal.hbar, &ThermoOptions::default())?;
    d.absorb(&q0);
    let q0 = q0.require("line imaginary-axis vacuum energy")?;
    d.xi_star = roots.xi_star.clone();
    d.kappa_b = roots.kappa_b.clone();
    d.bound_state_form = Some(opts.form);
    let f0 = q0.value;
    if thermal.is_zero() {
        return Ok(EnergyReport {
            f: f0,
            f0,
            dtf: 0.0,
            e: f0,
            s: 0.0,
            diagnostics: d,
        });
    }
    let ks = match which {
        LineTerms::Dissipative => &roots.xi_star,
        LineTerms::Plasma => &roots.kappa_b,
    };
    let r = line_sum(p, geom, thermal, opts, ks, roots.pole, which)?;
    d.l_max = Some(r.l_max);
    d.tail_bound = r.tail;
    let s = thermo::entropy(
        |th| line_sum(p, geom, th, opts, ks, roots.pole, which).map(|r| r.sum),
        thermal,
        opts.entropy_step,
    )?;
    let f = r.sum;
    Ok(EnergyReport {
        f,
        f0,
        dtf: f - f0,
        e: f + thermal.temperature * s,
        s,
        diagnostics: d,
    })
}

/// Line free energy from the Matsubara sum with the zero-mode substitution
/// and bound-state terms.
pub fn free_energy_matsubara_line(
    p: &OscillatorParams,
    geom: &Geometry,
    thermal: &ThermalParams,
    opts: &MatsubaraOptions,
) -> Result<EnergyReport> {
    line_report(p, geom, thermal, opts, LineTerms::Dissipative)
}

/// The same sum for the dissipationless (plasma) model, built from
/// t(iξ)^{−1} and the roots κ_b.
pub fn free_energy_matsubara_plasma(
    p: &OscillatorParams,
    geom: &Geometry,
    thermal: &ThermalParams,
    opts: &MatsubaraOptions,
) -> Result<EnergyReport> {
    if p.gamma != 0.0 {
        return Err(Error::param("the plasma model has gamma = 0"));
    }
    line_report(p, geom, thermal, opts, LineTerms::Plasma)
}
