use num_complex::Complex64;

/// e^z − 1 without cancellation for small |z|.
pub fn expm1(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let s = (0.5 * y).sin();
    Complex64::new(x.exp_m1() * y.cos() - 2.0 * s * s, x.exp() * y.sin())
}

/// s(x) = (1 − e^{−iωx}) / (iω), entire in ω with s → x as ω → 0.
///
/// Well-conditioned for Im ω ≤ 0 where |e^{−iωx}| ≤ 1.
pub fn s_fn(w: Complex64, x: f64) -> Complex64 {
    let z = Complex64::new(0.0, 1.0) * w * x;
    if z.norm() < 1e-4 {
        // x (1 − z/2 + z²/6 − z³/24)
        x * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0)
    } else {
        -expm1(-z) / (Complex64::new(0.0, 1.0) * w)
    }
}

/// e^{−iωx}.
pub fn e_fn(w: Complex64, x: f64) -> Complex64 {
    (Complex64::new(0.0, -1.0) * w * x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm1_small_and_large() {
        let z = Complex64::new(1e-9, -2e-9);
        let e = expm1(z);
        assert!((e - z).norm() < 1e-17);
        let z = Complex64::new(0.3, 1.2);
        assert!((expm1(z) - (z.exp() - 1.0)).norm() < 1e-15);
    }

    #[test]
    fn s_fn_continuous_across_series_switch() {
        let x = 2.0;
        let w = Complex64::new(1.001e-4 / x, -1e-7);
        let direct = -expm1(-Complex64::new(0.0, 1.0) * w * x) / (Complex64::new(0.0, 1.0) * w);
        let series = {
            let z = Complex64::new(0.0, 1.0) * w * x;
            x * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0)
        };
        assert!((s_fn(w, x) - direct).norm() < 1e-15);
        assert!((direct - series).norm() < 1e-15 * x);
        assert!((s_fn(Complex64::new(0.0, 0.0), x) - x).norm() == 0.0);
    }
}
