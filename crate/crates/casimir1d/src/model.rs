//! Closed-form building blocks evaluated at complex frequency: the oscillator
//! response N(ω), Dirichlet-box and infinite-line Green's functions, the
//! sector functions Φ_σ(ω) and the line factor L(ω).
//!
//! Units: ħ = c = k_B = 1 unless [`ThermalParams::hbar`] says otherwise. The
//! coupling enters only through g = e²/m.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::cplx::{e_fn, expm1, s_fn};
use crate::numeric::quad::{integrate, QuadOptions};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Parameters of one oscillator (both oscillators are identical).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub mass: f64,
    /// Intrinsic frequency Ω.
    pub omega: f64,
    /// Dissipation γ.
    pub gamma: f64,
    /// Coupling g = e²/m.
    pub g: f64,
}

impl OscillatorParams {
    pub fn new(mass: f64, omega: f64, gamma: f64, g: f64) -> Result<Self> {
        let p = Self {
            mass,
            omega,
            gamma,
            g,
        };
        p.validate()?;
        Ok(p)
    }

    /// Unit mass; convenient for everything except the bath simulator.
    pub fn unit_mass(omega: f64, gamma: f64, g: f64) -> Result<Self> {
        Self::new(1.0, omega, gamma, g)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.mass, self.omega, self.gamma, self.g]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::param("oscillator parameters must be finite"));
        }
        if self.mass <= 0.0 {
            return Err(Error::param(format!("mass must be > 0 (got {})", self.mass)));
        }
        if self.omega < 0.0 || self.gamma < 0.0 || self.g < 0.0 {
            return Err(Error::param(format!(
                "omega, gamma and g must be >= 0 (got {}, {}, {})",
                self.omega, self.gamma, self.g
            )));
        }
        Ok(())
    }
}

/// Oscillators at a₁,₂ = ∓b/2, optionally inside a Dirichlet box
/// [−L/2, L/2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub b: f64,
    pub box_length: Option<f64>,
}

impl Geometry {
    pub fn line(b: f64) -> Result<Self> {
        let g = Self { b, box_length: None };
        g.validate()?;
        Ok(g)
    }

    pub fn boxed(b: f64, l: f64) -> Result<Self> {
        let g = Self {
            b,
            box_length: Some(l),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(Error::param(format!("separation b must be > 0 (got {})", self.b)));
        }
        if let Some(l) = self.box_length {
            if !(l.is_finite() && l > self.b) {
                return Err(Error::param(format!(
                    "box length L must exceed b (got L = {l}, b = {})",
                    self.b
                )));
            }
        }
        Ok(())
    }

    pub fn a1(&self) -> f64 {
        -0.5 * self.b
    }

    pub fn a2(&self) -> f64 {
        0.5 * self.b
    }

    pub fn position(&self, j: usize) -> f64 {
        if j == 0 {
            self.a1()
        } else {
            self.a2()
        }
    }

    pub(crate) fn require_box(&self) -> Result<f64> {
        self.box_length
            .ok_or_else(|| Error::param("operation needs a box geometry (set L)"))
    }

    pub(crate) fn require_line(&self) -> Result<()> {
        match self.box_length {
            None => Ok(()),
            Some(_) => Err(Error::param("operation needs the infinite-line geometry")),
        }
    }
}

/// Temperature and the quantum scale ħ. `temperature == 0` means the ground
/// state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    pub temperature: f64,
    pub hbar: f64,
}

impl ThermalParams {
    pub fn new(temperature: f64, hbar: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature >= 0.0) {
            return Err(Error::param(format!("temperature must be >= 0 (got {temperature})")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::param(format!("hbar must be > 0 (got {hbar})")));
        }
        Ok(Self { temperature, hbar })
    }

    pub fn natural(temperature: f64) -> Result<Self> {
        Self::new(temperature, 1.0)
    }

    pub fn is_zero(&self) -> bool {
        self.temperature == 0.0
    }

    /// β = 1/T (infinite at T = 0).
    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    /// 1/(e^{βħω} − 1).
    pub fn bose(&self, w: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        1.0 / (self.hbar * w / self.temperature).exp_m1()
    }

    /// 𝒩_T(ω) = coth(βħω/2) = 1 + 2/(e^{βħω} − 1).
    pub fn n_t(&self, w: f64) -> f64 {
        1.0 + 2.0 * self.bose(w)
    }
}

/// Half-plane on which the line Green's function is continued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfPlane {
    Upper,
    Lower,
}

/// N(ω) = −ω² + iγω + Ω².
pub fn response_n(p: &OscillatorParams, w: Complex64) -> Complex64 {
    -w * w + I * p.gamma * w + p.omega * p.omega
}

/// ∂_ω N = −2ω + iγ.
pub fn response_n_prime(p: &OscillatorParams, w: Complex64) -> Complex64 {
    -2.0 * w + I * p.gamma
}

/// α(ω) = g / N(ω).
pub fn polarizability(p: &OscillatorParams, w: Complex64) -> Result<Complex64> {
    let n = response_n(p, w);
    if n == Complex64::new(0.0, 0.0) {
        return Err(Error::Pole(format!("N(omega) = 0 at omega = {w}")));
    }
    Ok(p.g / n)
}

/// Dirichlet Green's function G₀(x, x') of −∂² − ω² on [−L/2, L/2]:
/// sin(ω(x_< + L/2)) sin(ω(L/2 − x_>)) / (ω sin ωL), evaluated in a form
/// that stays finite off the real axis and is regular at ω = 0.
pub fn green_box(geom: &Geometry, w: Complex64, x: f64, xp: f64) -> Result<Complex64> {
    let l = geom.require_box()?;
    let half = 0.5 * l;
    if x.abs() > half || xp.abs() > half {
        return Err(Error::param(format!("points must lie in the box (|x| <= {half})")));
    }
    // G is even in ω; evaluate in the closed lower half-plane.
    let w = if w.im > 0.0 { -w } else { w };
    let lo = x.min(xp);
    let hi = x.max(xp);
    let a = lo + half;
    let c = half - hi;
    let den = s_fn(w, 2.0 * l);
    if den.norm() <= 1e-14 * (2.0 * l) {
        return Err(Error::Resonance { omega: w.re });
    }
    Ok(e_fn(w, l - a - c) * s_fn(w, 2.0 * a) * s_fn(w, 2.0 * c) / (2.0 * den))
}

/// G₁ = G₀(±b/2, ±b/2) and G₂ = G₀(∓b/2, ±b/2).
pub fn green_sym(geom: &Geometry, w: Complex64) -> Result<(Complex64, Complex64)> {
    let (gp, gm) = green_sectors(geom, w)?;
    Ok((0.5 * (gp + gm), 0.5 * (gp - gm)))
}

/// Sector Green's functions G₊ = G₁ + G₂ and G₋ = G₁ − G₂ at complex ω.
///
/// Uses s(x) = (1 − e^{−iωx})/(iω):
/// G₊ = s(L−b)(1 + e^{−iωb}) / (2(1 + e^{−iωL})),
/// G₋ = s(L−b) s(b) / (2 s(L)).
pub fn green_sectors(geom: &Geometry, w: Complex64) -> Result<(Complex64, Complex64)> {
    let l = geom.require_box()?;
    let b = geom.b;
    let w = if w.im > 0.0 { -w } else { w };
    let s_lb = s_fn(w, l - b);
    let den_p = 1.0 + e_fn(w, l);
    let den_m = s_fn(w, l);
    if den_p.norm() < 1e-15 || den_m.norm() < 1e-15 * l {
        return Err(Error::Resonance { omega: w.re });
    }
    let gp = s_lb * (1.0 + e_fn(w, b)) / (2.0 * den_p);
    let gm = s_lb * s_fn(w, b) / (2.0 * den_m);
    Ok((gp, gm))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    } else {
        x.sin() / x
    }
}

fn dsinc(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        -x / 3.0 + x * x2 / 30.0 - x * x2 * x2 / 840.0 + x * x2 * x2 * x2 / 45_360.0
    } else {
        (x * x.cos() - x.sin()) / (x * x)
    }
}

/// Sector Green's functions and their ω-derivatives on the real axis.
///
/// G₊ = sin(αω)cos(βω)/(ω cos(λω)), G₋ = sin(αω)sin(βω)/(ω sin(λω)) with
/// α = (L−b)/2, β = b/2, λ = L/2. At a pole the value is infinite.
#[derive(Debug, Clone, Copy)]
pub struct RealSectors {
    pub gp: f64,
    pub gm: f64,
    pub dgp: f64,
    pub dgm: f64,
}

pub fn green_sectors_real(geom: &Geometry, w: f64) -> Result<RealSectors> {
    let l = geom.require_box()?;
    let (al, be, la) = (0.5 * (l - geom.b), 0.5 * geom.b, 0.5 * l);
    let sa = al * sinc(al * w);
    let dsa = al * al * dsinc(al * w);
    let (cb, sb) = ((be * w).cos(), (be * w).sin());
    let (cl, sl) = ((la * w).cos(), (la * w).sin());

    let rp = cb / cl;
    let drp = (-be * sb * cl + la * cb * sl) / (cl * cl);
    let num = be * sinc(be * w);
    let den = la * sinc(la * w);
    let rm = num / den;
    let drm = (be * be * dsinc(be * w) * den - num * la * la * dsinc(la * w)) / (den * den);
    Ok(RealSectors {
        gp: sa * rp,
        gm: sa * rm,
        dgp: dsa * rp + sa * drp,
        dgm: dsa * rm + sa * drm,
    })
}

/// G₊(−iξ) and G₋(−iξ) for ξ ≥ 0 (real, positive).
pub fn green_sectors_imag(geom: &Geometry, xi: f64) -> Result<(f64, f64)> {
    let l = geom.require_box()?;
    let b = geom.b;
    if xi * l < 1e-8 {
        // Static values; corrections are O(ξL) relative, below 1e-8 here.
        return Ok((0.5 * (l - b), 0.5 * b * (l - b) / l));
    }
    let e = |x: f64| (-xi * x).exp();
    let num = -(-xi * (l - b)).exp_m1();
    let gp = num * (1.0 + e(b)) / (2.0 * xi * (1.0 + e(l)));
    let gm = num * (-(-xi * b).exp_m1()) / (2.0 * xi * (-(-xi * l).exp_m1()));
    Ok((gp, gm))
}

/// Infinite-line Green's functions at x = 0 and x = b on the stated half-plane.
pub fn green_line(geom: &Geometry, w: Complex64, plane: HalfPlane) -> Result<(Complex64, Complex64)> {
    if w == Complex64::new(0.0, 0.0) {
        return Err(Error::param("line Green's function is singular at omega = 0"));
    }
    let b = geom.b;
    Ok(match plane {
        HalfPlane::Lower => {
            let d = 2.0 * I * w;
            (1.0 / d, (-I * w * b).exp() / d)
        }
        HalfPlane::Upper => {
            let d = -2.0 * I * w;
            (1.0 / d, (I * w * b).exp() / d)
        }
    })
}

fn sigma_sign(sigma: i32) -> Result<f64> {
    match sigma {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        _ => Err(Error::param(format!("sector sigma must be +1 or -1 (got {sigma})"))),
    }
}

/// Φ_σ(ω) = N(ω) − g G_σ(ω) in the box.
pub fn phi_sigma(p: &OscillatorParams, geom: &Geometry, w: Complex64, sigma: i32) -> Result<Complex64> {
    let s = sigma_sign(sigma)?;
    let (gp, gm) = green_sectors(geom, w)?;
    let gs = if s > 0.0 { gp } else { gm };
    Ok(response_n(p, w) - p.g * gs)
}

/// Line analogue of [`phi_sigma`], built from [`green_line`].
pub fn phi_sigma_line(
    p: &OscillatorParams,
    geom: &Geometry,
    w: Complex64,
    sigma: i32,
    plane: HalfPlane,
) -> Result<Complex64> {
    let s = sigma_sign(sigma)?;
    let (g1, g2) = green_line(geom, w, plane)?;
    Ok(response_n(p, w) - p.g * (g1 + s * g2))
}

/// The symmetric 2×2 matrix Φ_rs = N δ_rs − g G₀(a_r, a_s) in the box.
pub fn phi_matrix(p: &OscillatorParams, geom: &Geometry, w: Complex64) -> Result<[[Complex64; 2]; 2]> {
    let (g1, g2) = green_sym(geom, w)?;
    let n = response_n(p, w);
    Ok([[n - p.g * g1, -p.g * g2], [-p.g * g2, n - p.g * g1]])
}

/// Stable pieces of L(ω): returns (u, 1 + u, D) with D = 2iωN − g and
/// u = g e^{−iωb}/D.
fn line_pieces(p: &OscillatorParams, b: f64, w: Complex64) -> Result<(Complex64, Complex64, Complex64)> {
    let n = response_n(p, w);
    let d = 2.0 * I * w * n - p.g;
    if d.norm() == 0.0 {
        return Err(Error::Pole(format!("2i omega N(omega) = g at omega = {w}")));
    }
    let u = p.g * (-I * w * b).exp() / d;
    let one_plus_u = (2.0 * I * w * n + p.g * expm1(-I * w * b)) / d;
    Ok((u, one_plus_u, d))
}

/// L(ω) = 1 − (g e^{−iωb} / (2iωN(ω) − g))².
pub fn l_factor(p: &OscillatorParams, geom: &Geometry, w: Complex64) -> Result<Complex64> {
    geom.require_line()?;
    let (u, opu, _) = line_pieces(p, geom.b, w)?;
    Ok((1.0 - u) * opu)
}

/// L(ω) together with ∂_ω L(ω).
pub fn l_factor_with_derivative(p: &OscillatorParams, geom: &Geometry, w: Complex64) -> Result<(Complex64, Complex64)> {
    geom.require_line()?;
    let (u, opu, d) = line_pieces(p, geom.b, w)?;
    let n = response_n(p, w);
    let dd = 2.0 * I * n + 2.0 * I * w * response_n_prime(p, w);
    let du = u * (-I * geom.b - dd / d);
    Ok(((1.0 - u) * opu, -2.0 * u * du))
}

/// L(−iξ) for real ξ ≥ 0 (real valued).
pub fn l_factor_imag(p: &OscillatorParams, b: f64, xi: f64) -> f64 {
    let d = 2.0 * xi * (xi * xi + p.gamma * xi + p.omega * p.omega) - p.g;
    let u = p.g * (-xi * b).exp() / d;
    let opu = (2.0 * xi * (xi * xi + p.gamma * xi + p.omega * p.omega) + p.g * (-xi * b).exp_m1()) / d;
    (1.0 - u) * opu
}

/// t(iξ)^{−1} = 1 − (g e^{−ξb} / (2ξ(ξ² + Ω²) − g))² of the dissipationless
/// (plasma) model.
pub fn transmission_inv(p: &OscillatorParams, geom: &Geometry, xi: f64) -> Result<f64> {
    if p.gamma != 0.0 {
        return Err(Error::param("the transmission coefficient is defined for gamma = 0"));
    }
    if !(xi > 0.0) {
        return Err(Error::param("transmission_inv needs xi > 0"));
    }
    let den = 2.0 * xi * (xi * xi + p.omega * p.omega) - p.g;
    if den == 0.0 {
        return Err(Error::Pole(format!("2 xi (xi^2 + Omega^2) = g at xi = {xi}")));
    }
    let r = p.g * (-xi * geom.b).exp() / den;
    let one_plus_r = (2.0 * xi * (xi * xi + p.omega * p.omega) + p.g * (-xi * geom.b).exp_m1()) / den;
    Ok((1.0 - r) * one_plus_r)
}

/// t(ω)^{−1} = 1 − (α e^{iωb}/(2iω + α))² on the real axis / upper
/// half-plane, α = g/N (plasma model).
pub fn transmission_inv_complex(p: &OscillatorParams, geom: &Geometry, w: Complex64) -> Result<Complex64> {
    let n = response_n(p, w);
    let den = 2.0 * I * w * n + p.g;
    if den.norm() == 0.0 {
        return Err(Error::Pole(format!("2i omega N + g = 0 at omega = {w}")));
    }
    let r = p.g * (I * w * geom.b).exp() / den;
    Ok(1.0 - r * r)
}

/// Pole lattice of the sector Green's functions on the real axis.
///
/// G₊ has poles at k_n = πn/L for odd n, G₋ for even n ≥ 2. A pole is absent
/// when its residue vanishes, which happens exactly when b/L = p/q is
/// rational: G₋ loses the poles with q | n/2, G₊ (for odd p and q) those with
/// q | n. Such field modes have nodes at both oscillators and decouple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxPoles {
    l: f64,
    ratio: Option<(u64, u64)>,
}

impl BoxPoles {
    pub fn new(geom: &Geometry) -> Result<Self> {
        let l = geom.require_box()?;
        Ok(Self {
            l,
            ratio: rational_approx(geom.b / l, 10_000, 1e-12),
        })
    }

    fn spacing(&self) -> f64 {
        std::f64::consts::PI / self.l
    }

    /// Number of integers j ≥ 1 with j < x.
    fn below(x: f64) -> u64 {
        if x <= 1.0 {
            0
        } else {
            x.ceil() as u64 - 1
        }
    }

    fn plus_decoupled(&self) -> Option<u64> {
        match self.ratio {
            Some((p, q)) if p % 2 == 1 && q % 2 == 1 => Some(q),
            _ => None,
        }
    }

    /// Number of actual poles of G_σ in (0, ω).
    pub fn count(&self, sigma: i32, w: f64) -> u64 {
        let x = w / self.spacing();
        if sigma > 0 {
            // odd n = 2j + 1 < x  ⇔  j + 1 < (x + 1)/2
            let all = Self::below(0.5 * (x + 1.0));
            let gone = self
                .plus_decoupled()
                .map_or(0, |q| Self::below(0.5 * (x / q as f64 + 1.0)));
            all - gone
        } else {
            let all = Self::below(0.5 * x);
            let gone = self.ratio.map_or(0, |(_, q)| Self::below(0.5 * x / q as f64));
            all - gone
        }
    }

    /// Actual poles of G₁ (union of both sectors) in (0, ω).
    pub fn count_union(&self, w: f64) -> u64 {
        self.count(1, w) + self.count(-1, w)
    }

    /// Whether k_n is an actual pole (n ≥ 1).
    pub fn is_pole(&self, n: u64) -> bool {
        if n % 2 == 1 {
            !matches!(self.plus_decoupled(), Some(q) if n % q == 0)
        } else {
            !matches!(self.ratio, Some((_, q)) if (n / 2) % q == 0)
        }
    }

    /// Actual poles of G_σ in (0, ω_max]; `sigma == 0` selects the union.
    pub fn list(&self, sigma: i32, w_max: f64) -> Vec<f64> {
        let h = self.spacing();
        let n_max = (w_max / h).floor() as u64;
        (1..=n_max)
            .filter(|&n| match sigma {
                1 => n % 2 == 1,
                -1 => n % 2 == 0,
                _ => true,
            })
            .filter(|&n| self.is_pole(n))
            .map(|n| n as f64 * h)
            .collect()
    }
}

/// Best rational approximation p/q of x ∈ (0, 1) with q ≤ q_max, if it is
/// within `tol`.
fn rational_approx(x: f64, q_max: u64, tol: f64) -> Option<(u64, u64)> {
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a > 1e12 {
            break;
        }
        let a = a as u64;
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > q_max {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            return Some((h1, k1));
        }
        let frac = r - a as f64;
        if frac < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

/// Real Dirichlet Green's function and ∂_x G₀(x, a) for real ω.
fn green_box_real_dx(l: f64, w: f64, x: f64, a: f64) -> (f64, f64) {
    let half = 0.5 * l;
    let s = (w * l).sin();
    if x <= a {
        let g = (w * (x + half)).sin() * (w * (half - a)).sin() / (w * s);
        let dg = (w * (x + half)).cos() * (w * (half - a)).sin() / s;
        (g, dg)
    } else {
        let g = (w * (a + half)).sin() * (w * (half - x)).sin() / (w * s);
        let dg = -(w * (a + half)).sin() * (w * (half - x)).cos() / s;
        (g, dg)
    }
}

fn check_real_resonance(l: f64, w: f64) -> Result<()> {
    if w <= 0.0 || (w * l).sin().abs() < 1e-12 {
        return Err(Error::Resonance { omega: w });
    }
    Ok(())
}

/// m_jk = ∫ dx [ω² G₀(x,a_j) G₀(x,a_k) + ∂_xG₀(x,a_j) ∂_xG₀(x,a_k)] over the
/// box, by direct quadrature. Returns (value, error estimate).
pub fn energy_kernel_m_jk(geom: &Geometry, w: f64, j: usize, k: usize) -> Result<(f64, f64)> {
    let l = geom.require_box()?;
    check_real_resonance(l, w)?;
    let (aj, ak) = (geom.position(j), geom.position(k));
    let f = |x: f64| {
        let (gj, dj) = green_box_real_dx(l, w, x, aj);
        let (gk, dk) = green_box_real_dx(l, w, x, ak);
        w * w * gj * gk + dj * dk
    };
    let q = integrate(&f, -0.5 * l, 0.5 * l, &[aj, ak], &QuadOptions::with_tol(1e-14, 1e-12))
        .require("m_jk quadrature")?;
    Ok((q.value, q.error))
}

/// ∫ dz G₀(x,z) G₀(y,z) over the box, by direct quadrature.
pub fn green_overlap(geom: &Geometry, w: f64, x: f64, y: f64) -> Result<(f64, f64)> {
    let l = geom.require_box()?;
    check_real_resonance(l, w)?;
    let f = |z: f64| green_box_real_dx(l, w, z, x).0 * green_box_real_dx(l, w, z, y).0;
    let q = integrate(&f, -0.5 * l, 0.5 * l, &[x, y], &QuadOptions::with_tol(1e-14, 1e-12))
        .require("Green's-function overlap quadrature")?;
    Ok((q.value, q.error))
}
