//! Fourth-order central differences.

use num_complex::Complex64;

/// Default step h = max(10⁻⁵, 10⁻⁵·|x|).
pub fn default_step(x: f64) -> f64 {
    1e-5f64.max(1e-5 * x.abs())
}

/// f'(x) ≈ [f(x−2h) − 8f(x−h) + 8f(x+h) − f(x+2h)] / 12h.
pub fn d1<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Complex-valued variant of [`d1`] for functions of a real argument.
pub fn d1c<F: Fn(f64) -> Complex64>(f: F, x: f64, h: f64) -> Complex64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}
