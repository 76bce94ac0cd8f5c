//! Randomized invariants of the model, phase, thermodynamic and simulator
//! layers.

use casimir1d::asymptotics;
use casimir1d::bathsim::BathDiscretization;
use casimir1d::matsubara::{self, MatsubaraOptions};
use casimir1d::model::{self, l_factor, phi_matrix, phi_sigma, response_n};
use casimir1d::numeric::diff::{d1, default_step};
use casimir1d::phases::{delta_single, PhaseFunction};
use casimir1d::thermo::{self, ThermoOptions};
use casimir1d::{Geometry, OscillatorParams, ThermalParams};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn crel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}

fn osc(omega: f64, gamma: f64, g: f64) -> OscillatorParams {
    OscillatorParams::unit_mass(omega, gamma, g).unwrap()
}

/// Parameters away from the line degeneracy b = 2Ω²/g.
fn line_params() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.0..2.0f64, 0.05..1.0f64, 0.2..3.0f64, 0.2..3.0f64)
        .prop_filter("near b = 2 Omega^2 / g", |&(o, _, g, b)| (b - 2.0 * o * o / g).abs() > 0.05)
}

/// Box with L < L* = b + 2Ω²/g and ω clear of the resonances sin(ωL) = 0.
fn box_point() -> impl Strategy<Value = (f64, f64, f64, f64, f64, f64)> {
    (0.3..2.0f64, 0.05..1.0f64, 0.1..2.0f64, 0.2..2.0f64, 0.05..0.95f64, 0.05..4.0f64)
        .prop_map(|(o, gm, g, b, frac, w)| {
            let l_star = b + 2.0 * o * o / g;
            (o, gm, g, b, b + frac * (l_star - b), w)
        })
        .prop_filter("near a box resonance", |&(.., l, w)| {
            // Distance to the nearest resonance πn/L, well above the
            // difference step so fourth-order differences stay accurate.
            let k = w * l / PI;
            (k - k.round()).abs() * PI / l > 5e-3
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn conjugation_symmetry((o, gm, g, b, l, w) in box_point()) {
        let p = osc(o, gm, g);
        let bx = Geometry::boxed(b, l).unwrap();
        let ln = Geometry::line(b).unwrap();
        let (wp, wm) = (Complex64::new(w, 0.0), Complex64::new(-w, 0.0));
        prop_assert!(crel(response_n(&p, wm), response_n(&p, wp).conj()) < 1e-14);
        for sigma in [1, -1] {
            let a = phi_sigma(&p, &bx, wm, sigma).unwrap();
            let c = phi_sigma(&p, &bx, wp, sigma).unwrap().conj();
            prop_assert!(crel(a, c) < 1e-12, "sigma {}: {} vs {}", sigma, a, c);
        }
        let a = l_factor(&p, &ln, wm).unwrap();
        let c = l_factor(&p, &ln, wp).unwrap().conj();
        prop_assert!(crel(a, c) < 1e-12);
    }

    #[test]
    fn determinant_factorizes((o, gm, g, b, l, w) in box_point(), im in -1.0..1.0f64) {
        let p = osc(o, gm, g);
        let bx = Geometry::boxed(b, l).unwrap();
        let z = Complex64::new(w, im);
        let m = phi_matrix(&p, &bx, z).unwrap();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let prod = phi_sigma(&p, &bx, z, 1).unwrap() * phi_sigma(&p, &bx, z, -1).unwrap();
        prop_assert!(crel(det, prod) < 1e-10, "{} vs {}", det, prod);
    }

    #[test]
    fn green_overlap_is_frequency_derivative((_, _, _, b, l, w) in box_point()) {
        let geom = Geometry::boxed(b, l).unwrap();
        let (x, y) = (geom.a1(), geom.a2());
        let g0 = |v: f64| model::green_box(&geom, Complex64::new(v, 0.0), x, y).unwrap().re;
        let (ov, _) = model::green_overlap(&geom, w, x, y).unwrap();
        let want = d1(g0, w, default_step(w)) / (2.0 * w);
        prop_assert!((ov - want).abs() <= 1e-6 * ov.abs().max(want.abs()).max(1e-6), "{} vs {}", ov, want);
    }

    #[test]
    fn phase_vanishes_at_zero_and_matches_differences((o, gm, g, b) in line_params(), w in 0.05..6.0f64) {
        let p = osc(o, gm, g);
        let ph = PhaseFunction::line(&p, &Geometry::line(b).unwrap()).unwrap();
        prop_assert_eq!(ph.delta(0.0), 0.0);
        prop_assert!(ph.delta(1e-9).abs() < 1e-6);
        let fd = d1(|v| ph.delta(v), w, default_step(w));
        let an = ph.d_delta(w);
        prop_assert!((an - fd).abs() <= 1e-6 * an.abs().max(1e-3), "{} vs {}", an, fd);
        let single = PhaseFunction::single(&p).unwrap();
        let fd = d1(|v| single.delta(v), w, default_step(w));
        prop_assert!(rel(single.d_delta(w), fd) < 1e-6);
    }

    #[test]
    fn line_slope_at_zero_is_c2((o, gm, g, b) in line_params()) {
        let p = osc(o, gm, g);
        let c2 = asymptotics::line_c2(&p, b).unwrap();
        let ph = PhaseFunction::line(&p, &Geometry::line(b).unwrap()).unwrap();
        let h = 1e-5;
        prop_assert!(rel(ph.delta(h) / h, c2) < 1e-6, "{} vs {}", ph.delta(h) / h, c2);
    }

    #[test]
    fn unwrapping_is_grid_independent((o, gm, g, b) in line_params(), w_max in 2.0..30.0f64) {
        let p = osc(o, gm, g);
        let ph = PhaseFunction::line(&p, &Geometry::line(b).unwrap()).unwrap();
        let coarse: Vec<f64> = (0..=40).map(|i| w_max * i as f64 / 40.0).collect();
        let fine: Vec<f64> = (0..=80).map(|i| w_max * i as f64 / 80.0).collect();
        let a = ph.evaluate_grid(&coarse);
        let f = ph.evaluate_grid(&fine);
        for (i, x) in a.iter().enumerate() {
            prop_assert!((x.0 - f[2 * i].0).abs() < 1e-8);
        }
    }

    #[test]
    fn bound_states_are_sorted_roots((o, gm, g, b) in line_params()) {
        let p = osc(o, gm, g);
        let roots = matsubara::find_bound_states(&p, &Geometry::line(b).unwrap()).unwrap();
        prop_assert!(roots.count() <= 2);
        prop_assert!(roots.xi_star.windows(2).all(|x| x[0] < x[1]));
        for &xi in &roots.xi_star {
            prop_assert!(model::l_factor_imag(&p, b, xi).abs() < 1e-10);
        }
    }

    #[test]
    fn critical_box_size_formula(o in 0.0..3.0f64, g in 0.1..5.0f64, b in 0.1..3.0f64) {
        let p = osc(o, 0.1, g);
        let c = matsubara::critical_box_size(&p, &Geometry::line(b).unwrap()).unwrap();
        prop_assert!(rel(c.l_star, b + 2.0 * o * o / g) < 1e-14);
    }

    #[test]
    fn geometry_and_temperature_invariants(b in 1e-3..1e3f64, t in 1e-4..1e4f64, w in 1e-3..1e3f64) {
        let geom = Geometry::line(b).unwrap();
        prop_assert_eq!(geom.a2() - geom.a1(), b);
        let th = ThermalParams::natural(t).unwrap();
        prop_assert!((th.beta() * t - 1.0).abs() < 1e-15);
        let n = th.n_t(w);
        prop_assert!(n >= 1.0);
        prop_assert!(rel(n, 1.0 / (0.5 * w / t).tanh()) < 1e-12);
    }

    #[test]
    fn bath_masses_positive_and_grid_increasing(o in 0.1..3.0f64, gm in 0.01..1.0f64, n in 256usize..2048) {
        let p = OscillatorParams::new(1.0, o, gm, 0.0).unwrap();
        let bath = BathDiscretization::standard(&p, n, 50.0).unwrap();
        prop_assert!(bath.mass.iter().all(|&m| m > 0.0));
        prop_assert!(bath.omega.windows(2).all(|w| w[0] < w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn free_energy_splits_into_parts((o, gm, g, b) in line_params(), t in 0.05..2.0f64) {
        let p = osc(o, gm, g);
        let geom = Geometry::line(b).unwrap();
        let th = ThermalParams::natural(t).unwrap();
        let r = thermo::free_energy_real_freq(&PhaseFunction::line(&p, &geom).unwrap(), &th, &ThermoOptions::default())
            .unwrap();
        prop_assert!((r.f - r.f0 - r.dtf).abs() <= 1e-12 * r.f.abs().max(1.0));
        prop_assert!(rel(r.e, r.f + t * r.s) < 1e-9);
        let m = matsubara::free_energy_matsubara_line(&p, &geom, &th, &MatsubaraOptions::default()).unwrap();
        prop_assert!(rel(r.f, m.f) < 1e-6, "{} vs {}", r.f, m.f);
    }

    #[test]
    fn vacuum_energy_scales_inversely_with_length(o in 0.1..2.0f64, g in 0.2..3.0f64, b in 0.2..3.0f64) {
        let p = osc(o, 0.0, g);
        let e1 = thermo::vacuum_energy_imag_axis(&p, &Geometry::line(b).unwrap(), 1.0, &ThermoOptions::default())
            .unwrap()
            .value;
        let lam = 2.0;
        let q = osc(o / lam, 0.0, g / lam.powi(3));
        let e2 = thermo::vacuum_energy_imag_axis(&q, &Geometry::line(lam * b).unwrap(), 1.0, &ThermoOptions::default())
            .unwrap()
            .value;
        prop_assert!(rel(e1 * b, e2 * lam * b) < 1e-8, "{} vs {}", e1 * b, e2 * lam * b);
    }

    #[test]
    fn entropy_vanishes_at_low_temperature((o, gm, g, b) in line_params()) {
        let p = osc(o, gm, g);
        let ph = PhaseFunction::line(&p, &Geometry::line(b).unwrap()).unwrap();
        let s: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&t| {
                thermo::free_energy_real_freq(&ph, &ThermalParams::natural(t).unwrap(), &ThermoOptions::default())
                    .unwrap()
                    .s
            })
            .collect();
        // Linear vanishing: each decade in T takes S down by about a decade.
        prop_assert!(s[1].abs() < 0.2 * s[0].abs() && s[2].abs() < 0.2 * s[1].abs(), "{:?}", s);
    }
}

#[test]
fn small_loss_single_phase_is_a_narrow_step() {
    let gamma = 1e-4;
    let p = osc(1.0, gamma, 0.0);
    assert_eq!(delta_single(&p, 1.0).unwrap(), PI / 2.0);
    // 10–90% crossing points of δ/π via bisection.
    let cross = |level: f64| {
        let (mut lo, mut hi) = (0.5, 1.5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if delta_single(&p, mid).unwrap() < level * PI {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let width = cross(0.9) - cross(0.1);
    assert!(width > 0.0 && width < 10.0 * gamma, "{width}");
}

#[test]
fn decoupled_line_has_no_separation_energy() {
    let p = osc(1.0, 0.2, 0.0);
    let geom = Geometry::line(1.3).unwrap();
    let th = ThermalParams::natural(0.5).unwrap();
    let r = thermo::free_energy_real_freq(&PhaseFunction::line(&p, &geom).unwrap(), &th, &ThermoOptions::default())
        .unwrap();
    assert_eq!((r.f, r.e, r.s), (0.0, 0.0, 0.0));
    let m = matsubara::free_energy_matsubara_line(&p, &geom, &th, &MatsubaraOptions::default()).unwrap();
    assert_eq!(m.f, 0.0);
}
