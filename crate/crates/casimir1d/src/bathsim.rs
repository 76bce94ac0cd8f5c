//! Classical time-domain simulation of one oscillator coupled to a discretized
//! heat bath.
//!
//! Lagrangian: L = (m/2)(ξ̇² − Ω²ξ²) + Σ_k (μ_k/2)(q̇_k² − ω_k²(q_k − ξ)²),
//! with bath masses μ_k = μ(ω_k)w_k, μ(ω) = 2γm/(πω²(1 + (δω)²)). In the
//! continuum limit the bath exerts the force −γmξ̇ on the oscillator.
//!
//! The integrator splits H into the free harmonic motions (solved exactly for
//! ξ and every q_k) and the coupling Σ_k (μ_kω_k²/2)(ξ − 2q_k)ξ (a pure kick)
//! and composes them with the fourth-order PEFRL scheme. The energy error is
//! bounded and of order (ω_max dt)⁴.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::model::OscillatorParams;

/// Minimum bath size for equilibrium runs.
pub const MIN_EQUILIBRIUM_MODES: usize = 256;
/// Relative energy drift treated as an instability.
pub const INSTABILITY_DRIFT: f64 = 1e-3;

// PEFRL coefficients (Omelyan, Mryglod & Folk).
const PEFRL_XI: f64 = 0.178_617_895_844_809_1;
const PEFRL_LAMBDA: f64 = -0.212_341_831_062_605_4;
const PEFRL_CHI: f64 = -0.066_264_582_669_818_49;

/// Uniform midpoint grid on [ω_min, ω_max] with bath masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathDiscretization {
    pub omega: Vec<f64>,
    pub weight: Vec<f64>,
    /// μ_k = μ(ω_k) w_k.
    pub mass: Vec<f64>,
    pub omega_min: f64,
    pub omega_max: f64,
    pub gamma: f64,
    pub oscillator_mass: f64,
    /// Regulator δ of the mass density.
    pub regulator: f64,
}

impl BathDiscretization {
    pub fn uniform(p: &OscillatorParams, n_modes: usize, omega_min: f64, omega_max: f64, regulator: f64) -> Result<Self> {
        p.validate()?;
        if n_modes == 0 {
            return Err(Error::param("the bath needs at least one mode"));
        }
        if !(omega_min > 0.0 && omega_max > omega_min && omega_max.is_finite()) {
            return Err(Error::param(format!(
                "bath grid needs 0 < omega_min < omega_max (got {omega_min}, {omega_max})"
            )));
        }
        if !(regulator >= 0.0 && regulator.is_finite()) {
            return Err(Error::param("regulator must be >= 0"));
        }
        if p.gamma <= 0.0 {
            return Err(Error::param("a bath with gamma = 0 has no modes"));
        }
        let dw = (omega_max - omega_min) / n_modes as f64;
        let omega: Vec<f64> = (0..n_modes).map(|k| omega_min + (k as f64 + 0.5) * dw).collect();
        let weight = vec![dw; n_modes];
        let mass = omega
            .iter()
            .map(|&w| 2.0 * p.gamma * p.mass / (PI * w * w * (1.0 + (regulator * w).powi(2))) * dw)
            .collect();
        Ok(Self {
            omega,
            weight,
            mass,
            omega_min,
            omega_max,
            gamma: p.gamma,
            oscillator_mass: p.mass,
            regulator,
        })
    }

    /// Grid on [10⁻³Ω̃, 50Ω̃] with Ω̃ = max(Ω, γ, 1/t_end) and δ = 0.
    pub fn standard(p: &OscillatorParams, n_modes: usize, t_end: f64) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::param("t_end must be > 0"));
        }
        let scale = p.omega.max(p.gamma).max(1.0 / t_end);
        Self::uniform(p, n_modes, 1e-3 * scale, 50.0 * scale, 0.0)
    }

    pub fn n_modes(&self) -> usize {
        self.omega.len()
    }

    /// 2πN/(ω_max − ω_min): the discrete bath returns its energy after this.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI * self.n_modes() as f64 / (self.omega_max - self.omega_min)
    }

    /// Σ_k μ_kω_k², the static coupling stiffness.
    pub fn stiffness(&self) -> f64 {
        self.mass.iter().zip(&self.omega).map(|(m, w)| m * w * w).sum()
    }

    /// Response of the bath force to ξ = e^{iνt}, divided by iνm and switched
    /// on as e^{εt}: Σ_k μ_kω_k² ∫₀^∞ cos(ω_k s) e^{−(iν+ε)s} ds / m. Its real
    /// part is the effective damping γ(ν), the imaginary part a reactive shift.
    pub fn friction(&self, nu: f64, eps: f64) -> Complex64 {
        let s: Complex64 = self
            .mass
            .iter()
            .zip(&self.omega)
            .map(|(&mk, &w)| {
                let a = Complex64::new(eps, nu - w).inv();
                let b = Complex64::new(eps, nu + w).inv();
                mk * w * w * 0.5 * (a + b)
            })
            .sum();
        s / self.oscillator_mass
    }

    /// γ(ν)/γ with the switch-on rate ε = 2Δω (wide enough to average over
    /// the grid, narrow compared with the test frequency).
    pub fn damping_ratio(&self, nu: f64) -> f64 {
        let dw = (self.omega_max - self.omega_min) / self.n_modes() as f64;
        self.friction(nu, 2.0 * dw).re / self.gamma
    }
}

/// Oscillator and bath coordinates at time t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub xi: f64,
    pub xi_dot: f64,
    pub q: Vec<f64>,
    pub q_dot: Vec<f64>,
}

impl SimState {
    /// Bath relaxed around the initial displacement (q_k = ξ, q̇_k = 0), so
    /// the coupling exerts no force at t = 0.
    pub fn bath_at_rest(bath: &BathDiscretization, xi: f64, xi_dot: f64) -> Self {
        Self {
            t: 0.0,
            xi,
            xi_dot,
            q: vec![xi; bath.n_modes()],
            q_dot: vec![0.0; bath.n_modes()],
        }
    }
}

/// Energies (H_osc, H_bath, H_int).
pub fn energies(bath: &BathDiscretization, p: &OscillatorParams, s: &SimState) -> (f64, f64, f64) {
    let m = p.mass;
    let h_osc = 0.5 * m * (s.xi_dot * s.xi_dot + p.omega * p.omega * s.xi * s.xi);
    let mut h_bath = 0.0;
    let mut h_int = 0.0;
    for k in 0..bath.n_modes() {
        let (mk, w2) = (bath.mass[k], bath.omega[k] * bath.omega[k]);
        h_bath += 0.5 * mk * (s.q_dot[k] * s.q_dot[k] + w2 * s.q[k] * s.q[k]);
        h_int += 0.5 * mk * w2 * (s.xi - 2.0 * s.q[k]) * s.xi;
    }
    (h_osc, h_bath, h_int)
}

/// (dH_osc/dt, dH_bath/dt) = (Σμ_kω_k²(q_k − ξ)ξ̇, Σμ_kω_k² q̇_k ξ).
pub fn flows(bath: &BathDiscretization, s: &SimState) -> (f64, f64) {
    let mut osc = 0.0;
    let mut b = 0.0;
    for k in 0..bath.n_modes() {
        let c = bath.mass[k] * bath.omega[k] * bath.omega[k];
        osc += c * (s.q[k] - s.xi) * s.xi_dot;
        b += c * s.q_dot[k] * s.xi;
    }
    (osc, b)
}

/// q_k ~ N(0, T/(μ_kω_k²)), q̇_k ~ N(0, T/μ_k); oscillator at rest at 0.
pub fn sample_bath(bath: &BathDiscretization, temperature: f64, seed: u64) -> Result<SimState> {
    sample_bath_stream(bath, temperature, seed, 0)
}

/// As [`sample_bath`], drawing from the independent ChaCha stream `stream`.
pub fn sample_bath_stream(bath: &BathDiscretization, temperature: f64, seed: u64, stream: u64) -> Result<SimState> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::param(format!("sampling needs T > 0 (got {temperature})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut s = SimState::bath_at_rest(bath, 0.0, 0.0);
    for k in 0..bath.n_modes() {
        let mk = bath.mass[k];
        let w = bath.omega[k];
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        s.q[k] = z1 * (temperature / (mk * w * w)).sqrt();
        s.q_dot[k] = z2 * (temperature / mk).sqrt();
    }
    Ok(s)
}

/// One stored point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub xi: f64,
    pub xi_dot: f64,
    pub h_osc: f64,
    pub h_bath: f64,
    pub h_int: f64,
    pub flow_osc: f64,
    pub flow_bath: f64,
}

impl Sample {
    pub fn total(&self) -> f64 {
        self.h_osc + self.h_bath + self.h_int
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Store every n-th step.
    pub sample_every: usize,
}

impl SimOptions {
    /// dt = 0.09/ω_max, the largest step within the stability precondition.
    pub fn for_bath(bath: &BathDiscretization, t_end: f64, sample_every: usize) -> Self {
        Self {
            t_end,
            dt: 0.09 / bath.omega_max,
            sample_every,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: OscillatorParams,
    pub n_modes: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub dt: f64,
    pub samples: Vec<Sample>,
    /// max |H(t) − H(0)|/|H(0)| over the stored samples.
    pub max_relative_drift: f64,
    pub final_state: SimState,
}

impl Trajectory {
    /// Average of `f` over samples with t ≥ `from`.
    pub fn time_average(&self, from: f64, f: impl Fn(&Sample) -> f64) -> f64 {
        let xs: Vec<f64> = self.samples.iter().filter(|s| s.t >= from).map(f).collect();
        xs.iter().sum::<f64>() / xs.len().max(1) as f64
    }

    /// CSV with a parameter-echo comment line and columns
    /// t, xi, xi_dot, H_osc, H_bath, H_int.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let p = &self.params;
        writeln!(
            w,
            "# mass={} omega={} gamma={} n_modes={} omega_min={} omega_max={} dt={} max_relative_drift={:e}",
            p.mass, p.omega, p.gamma, self.n_modes, self.omega_min, self.omega_max, self.dt, self.max_relative_drift
        )?;
        writeln!(w, "t,xi,xi_dot,H_osc,H_bath,H_int")?;
        for s in &self.samples {
            writeln!(w, "{},{},{},{},{},{}", s.t, s.xi, s.xi_dot, s.h_osc, s.h_bath, s.h_int)?;
        }
        Ok(())
    }
}

/// Exact free harmonic flow over τ for one frequency: (cos ωτ, sin(ωτ)/ω, ω sin ωτ).
#[derive(Clone, Copy)]
struct Rot {
    c: f64,
    s_over_w: f64,
    w_s: f64,
}

impl Rot {
    fn new(w: f64, tau: f64) -> Self {
        if w == 0.0 {
            return Self {
                c: 1.0,
                s_over_w: tau,
                w_s: 0.0,
            };
        }
        let (s, c) = (w * tau).sin_cos();
        Self {
            c,
            s_over_w: s / w,
            w_s: w * s,
        }
    }

    #[inline(always)]
    fn apply(self, x: &mut f64, v: &mut f64) {
        let (x0, v0) = (*x, *v);
        *x = self.c * x0 + self.s_over_w * v0;
        *v = -self.w_s * x0 + self.c * v0;
    }
}

struct Stepper<'a> {
    bath: &'a BathDiscretization,
    w2: Vec<f64>,
    /// μ_kω_k²
    coupling: Vec<f64>,
    stiffness: f64,
    m: f64,
    /// Rotation tables for τ = ξh, 2ξh, χh and (1 − 2(χ + ξ))h.
    tables: [Vec<Rot>; 4],
    osc: [Rot; 4],
    kicks: [f64; 2],
}

impl<'a> Stepper<'a> {
    fn new(bath: &'a BathDiscretization, p: &OscillatorParams, h: f64) -> Self {
        let taus = [
            PEFRL_XI * h,
            2.0 * PEFRL_XI * h,
            PEFRL_CHI * h,
            (1.0 - 2.0 * (PEFRL_CHI + PEFRL_XI)) * h,
        ];
        let tables = taus.map(|tau| bath.omega.iter().map(|&w| Rot::new(w, tau)).collect());
        let coupling: Vec<f64> = bath.mass.iter().zip(&bath.omega).map(|(m, w)| m * w * w).collect();
        Self {
            bath,
            w2: bath.omega.iter().map(|w| w * w).collect(),
            stiffness: coupling.iter().sum(),
            coupling,
            m: p.mass,
            tables,
            osc: taus.map(|tau| Rot::new(p.omega, tau)),
            kicks: [0.5 * (1.0 - 2.0 * PEFRL_LAMBDA) * h, PEFRL_LAMBDA * h],
        }
    }

    /// Free flow only; returns the new Σμ_kω_k²q_k.
    fn drift(&self, s: &mut SimState, which: usize) -> f64 {
        let tab = &self.tables[which];
        let mut sum = 0.0;
        for k in 0..s.q.len() {
            tab[k].apply(&mut s.q[k], &mut s.q_dot[k]);
            sum += self.coupling[k] * s.q[k];
        }
        self.osc[which].apply(&mut s.xi, &mut s.xi_dot);
        sum
    }

    /// Coupling kick of length `hb` followed by a free flow; one pass.
    fn kick_drift(&self, s: &mut SimState, sum_q: f64, hb: f64, which: usize) -> f64 {
        s.xi_dot += hb * (sum_q - self.stiffness * s.xi) / self.m;
        let push = hb * s.xi;
        let tab = &self.tables[which];
        let mut sum = 0.0;
        for k in 0..s.q.len() {
            s.q_dot[k] += self.w2[k] * push;
            tab[k].apply(&mut s.q[k], &mut s.q_dot[k]);
            sum += self.coupling[k] * s.q[k];
        }
        self.osc[which].apply(&mut s.xi, &mut s.xi_dot);
        sum
    }

    /// `n` PEFRL steps; consecutive outer half-drifts are merged.
    fn advance(&self, s: &mut SimState, n: usize) {
        let [b1, b2] = self.kicks;
        let mut sum = self.drift(s, 0);
        for i in 0..n {
            sum = self.kick_drift(s, sum, b1, 2);
            sum = self.kick_drift(s, sum, b2, 3);
            sum = self.kick_drift(s, sum, b2, 2);
            sum = self.kick_drift(s, sum, b1, if i + 1 == n { 0 } else { 1 });
        }
        debug_assert_eq!(s.q.len(), self.bath.n_modes());
    }
}

fn sample(bath: &BathDiscretization, p: &OscillatorParams, s: &SimState) -> Sample {
    let (h_osc, h_bath, h_int) = energies(bath, p, s);
    let (flow_osc, flow_bath) = flows(bath, s);
    Sample {
        t: s.t,
        xi: s.xi,
        xi_dot: s.xi_dot,
        h_osc,
        h_bath,
        h_int,
        flow_osc,
        flow_bath,
    }
}

/// Integrates the coupled equations of motion from `initial` to `t_end`.
///
/// Preconditions: dt < 0.1/ω_max and t_end below the recurrence time of the
/// bath. A relative drift of the total energy above 10⁻³ aborts the run.
pub fn simulate(bath: &BathDiscretization, p: &OscillatorParams, initial: SimState, opts: &SimOptions) -> Result<Trajectory> {
    p.validate()?;
    if (p.gamma - bath.gamma).abs() > 1e-12 * bath.gamma || (p.mass - bath.oscillator_mass).abs() > 1e-12 * p.mass {
        return Err(Error::param("bath was discretized for a different gamma or mass"));
    }
    if initial.q.len() != bath.n_modes() || initial.q_dot.len() != bath.n_modes() {
        return Err(Error::param("state and bath have different mode counts"));
    }
    if !(opts.t_end > 0.0 && opts.t_end.is_finite()) {
        return Err(Error::param("t_end must be > 0"));
    }
    if !(opts.dt > 0.0 && opts.dt < 0.1 / bath.omega_max) {
        return Err(Error::param(format!(
            "dt must lie in (0, 0.1/omega_max) = (0, {:e}) (got {})",
            0.1 / bath.omega_max,
            opts.dt
        )));
    }
    let t_rec = bath.recurrence_time();
    if opts.t_end >= t_rec {
        return Err(Error::param(format!(
            "t_end = {} reaches the bath recurrence time {t_rec:.4}; use more modes",
            opts.t_end
        )));
    }
    let every = opts.sample_every.max(1);
    let n_steps = (opts.t_end / opts.dt).ceil() as usize;
    let h = opts.t_end / n_steps as f64;
    let stepper = Stepper::new(bath, p, h);

    let mut s = initial;
    let t0 = s.t;
    let first = sample(bath, p, &s);
    let h0 = first.total();
    let mut samples = vec![first];
    let mut drift: f64 = 0.0;
    let mut done = 0;
    while done < n_steps {
        let n = every.min(n_steps - done);
        stepper.advance(&mut s, n);
        done += n;
        s.t = t0 + done as f64 * h;
        let smp = sample(bath, p, &s);
        if h0 != 0.0 {
            let rel = ((smp.total() - h0) / h0).abs();
            if !(rel <= INSTABILITY_DRIFT) {
                return Err(Error::Unstable(format!(
                    "relative energy drift {rel:e} at t = {}",
                    s.t
                )));
            }
            drift = drift.max(rel);
        }
        samples.push(smp);
    }
    Ok(Trajectory {
        params: *p,
        n_modes: bath.n_modes(),
        omega_min: bath.omega_min,
        omega_max: bath.omega_max,
        dt: h,
        samples,
        max_relative_drift: drift,
        final_state: s,
    })
}

/// Energy bookkeeping of a trajectory; dH_int/dt by centred differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub t: Vec<f64>,
    pub h_osc: Vec<f64>,
    pub h_bath: Vec<f64>,
    pub h_int: Vec<f64>,
    pub flow_osc: Vec<f64>,
    pub flow_bath: Vec<f64>,
    /// NaN at the end points.
    pub flow_int: Vec<f64>,
    /// max |dH_osc/dt + dH_bath/dt + dH_int/dt| over interior samples.
    pub max_flow_residual: f64,
    /// max |dH_osc/dt| + max |dH_bath/dt|, for scaling the residual.
    pub flow_scale: f64,
}

pub fn energy_flows(traj: &Trajectory) -> EnergyLedger {
    let s = &traj.samples;
    let n = s.len();
    let mut flow_int = vec![f64::NAN; n];
    let mut residual: f64 = 0.0;
    for i in 1..n.saturating_sub(1) {
        let d = (s[i + 1].h_int - s[i - 1].h_int) / (s[i + 1].t - s[i - 1].t);
        flow_int[i] = d;
        residual = residual.max((s[i].flow_osc + s[i].flow_bath + d).abs());
    }
    let max_abs = |f: fn(&Sample) -> f64| s.iter().map(|x| f(x).abs()).fold(0.0, f64::max);
    EnergyLedger {
        t: s.iter().map(|x| x.t).collect(),
        h_osc: s.iter().map(|x| x.h_osc).collect(),
        h_bath: s.iter().map(|x| x.h_bath).collect(),
        h_int: s.iter().map(|x| x.h_int).collect(),
        flow_osc: s.iter().map(|x| x.flow_osc).collect(),
        flow_bath: s.iter().map(|x| x.flow_bath).collect(),
        flow_int,
        max_flow_residual: residual,
        flow_scale: max_abs(|x| x.flow_osc) + max_abs(|x| x.flow_bath),
    }
}

/// Envelope decay rate and oscillation frequency of ξ(t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub frequency: f64,
    pub peaks: usize,
    pub crossings: usize,
}

/// Rate from a least-squares line through ln of the (parabolically refined)
/// maxima of ξ; frequency from the mean spacing of zero crossings.
pub fn fit_free_decay(traj: &Trajectory) -> Result<DecayFit> {
    let s = &traj.samples;
    let mut peaks = Vec::new();
    let mut zeros = Vec::new();
    for i in 1..s.len() {
        let (a, b) = (s[i - 1].xi, s[i].xi);
        if a != 0.0 && a.signum() != b.signum() {
            zeros.push(s[i - 1].t + (s[i].t - s[i - 1].t) * a / (a - b));
        }
        if i + 1 < s.len() {
            let c = s[i + 1].xi;
            if b > a && b >= c && b > 0.0 {
                let h = s[i].t - s[i - 1].t;
                let den = a - 2.0 * b + c;
                let off = if den != 0.0 { 0.5 * (a - c) / den } else { 0.0 };
                let val = b - 0.25 * (a - c) * off;
                peaks.push((s[i].t + off * h, val.ln()));
            }
        }
    }
    if peaks.len() < 3 || zeros.len() < 3 {
        return Err(Error::param("trajectory too short to fit a damped oscillation"));
    }
    let n = peaks.len() as f64;
    let mt = peaks.iter().map(|p| p.0).sum::<f64>() / n;
    let my = peaks.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = peaks.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = peaks.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let half = (zeros[zeros.len() - 1] - zeros[0]) / (zeros.len() - 1) as f64;
    Ok(DecayFit {
        rate: -sxy / sxx,
        frequency: PI / half,
        peaks: peaks.len(),
        crossings: zeros.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    pub members: usize,
    pub seed: u64,
    pub t_end: f64,
    /// Time averages use samples with t ≥ this.
    pub average_from: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub exec: Exec,
}

/// Ensemble statistics of time-averaged energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub temperature: f64,
    /// Per-member time averages of H_osc, in member order.
    pub h_osc: Vec<f64>,
    pub mean_h_osc: f64,
    pub std_error_h_osc: f64,
    /// ⟨mξ̇²/2⟩
    pub mean_kinetic: f64,
    pub std_error_kinetic: f64,
    /// Time-averaged dH_osc/dt.
    pub mean_flow_osc: f64,
    pub max_relative_drift: f64,
}

fn mean_and_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs independent members from thermally sampled baths (oscillator
/// initially at rest) and averages over the late part of each trajectory.
/// Members run concurrently; statistics are reduced in member order.
pub fn ensemble(bath: &BathDiscretization, p: &OscillatorParams, temperature: f64, opts: &EnsembleOptions) -> Result<EnsembleResult> {
    if bath.n_modes() < MIN_EQUILIBRIUM_MODES {
        return Err(Error::param(format!(
            "equilibrium runs need at least {MIN_EQUILIBRIUM_MODES} bath modes (got {})",
            bath.n_modes()
        )));
    }
    if opts.members < 2 {
        return Err(Error::param("an ensemble needs at least two members"));
    }
    if !(opts.average_from >= 0.0 && opts.average_from < opts.t_end) {
        return Err(Error::param("average_from must lie in [0, t_end)"));
    }
    let sim = SimOptions {
        t_end: opts.t_end,
        dt: opts.dt,
        sample_every: opts.sample_every,
    };
    let runs = exec::map_range(opts.exec, opts.members, |i| -> Result<(f64, f64, f64, f64)> {
        let init = sample_bath_stream(bath, temperature, opts.seed, i as u64)?;
        let tr = simulate(bath, p, init, &sim)?;
        let from = opts.average_from;
        Ok((
            tr.time_average(from, |s| s.h_osc),
            tr.time_average(from, |s| 0.5 * p.mass * s.xi_dot * s.xi_dot),
            tr.time_average(from, |s| s.flow_osc),
            tr.max_relative_drift,
        ))
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let h: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let k: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let (mean_h_osc, std_error_h_osc) = mean_and_error(&h);
    let (mean_kinetic, std_error_kinetic) = mean_and_error(&k);
    Ok(EnsembleResult {
        temperature,
        h_osc: h,
        mean_h_osc,
        std_error_h_osc,
        mean_kinetic,
        std_error_kinetic,
        mean_flow_osc: runs.iter().map(|r| r.2).sum::<f64>() / runs.len() as f64,
        max_relative_drift: runs.iter().map(|r| r.3).fold(0.0, f64::max),
    })
}
