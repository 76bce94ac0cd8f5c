//! Numerical building blocks: adaptive quadrature, bracketing root finders,
//! finite differences and a few complex-arithmetic helpers.

pub mod cplx;
pub mod diff;
pub mod quad;
pub mod roots;

/// ζ(2) = π²/6.
pub const ZETA2: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

/// Relative distance |a − b| / max(|a|, |b|, tiny).
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    (a - b).abs() / scale
}
