//! Dispatch from a resolved configuration to the library.

use casimir1d::bathsim::{self, BathDiscretization, EnsembleOptions, SimOptions, SimState};
use casimir1d::matsubara::{self, BoundStateForm, MatsubaraOptions};
use casimir1d::phases::PhaseFunction;
use casimir1d::spectra;
use casimir1d::thermo::{self, EnergyReport, ThermoOptions};
use casimir1d::{Exec, Geometry, OscillatorParams, ThermalParams};
use serde_json::{json, Value};

use crate::args::*;
use crate::config::RunConfig;
use crate::CliError;

/// Default cutoff for the zero-temperature part of the single oscillator and
/// the full box, in units of max(Ω, γ, 1).
const DEFAULT_CUTOFF_SCALE: f64 = 1e3;

pub struct Outcome {
    pub result: Value,
    pub diagnostics: Value,
}

pub fn params(c: &RunConfig) -> Result<OscillatorParams, CliError> {
    Ok(OscillatorParams::new(c.mass, c.omega, c.gamma, c.g)?)
}

fn thermal(c: &RunConfig) -> Result<ThermalParams, CliError> {
    Ok(ThermalParams::new(c.temp, c.hbar)?)
}

fn line_geom(c: &RunConfig) -> Result<Geometry, CliError> {
    Ok(Geometry::line(c.b)?)
}

fn box_geom(c: &RunConfig) -> Result<Geometry, CliError> {
    let l = c.l.ok_or_else(|| CliError::Param("the box needs --L".into()))?;
    Ok(Geometry::boxed(c.b, l)?)
}

fn thermo_opts(c: &RunConfig, needs_cutoff: bool) -> ThermoOptions {
    let mut o = ThermoOptions::default();
    if let Some(t) = c.tol {
        o.rel_tol = t;
    }
    o.cutoff = c.cutoff;
    if needs_cutoff && o.cutoff.is_none() {
        o.cutoff = Some(DEFAULT_CUTOFF_SCALE * c.omega.max(c.gamma).max(1.0));
    }
    o
}

fn matsubara_opts(c: &RunConfig) -> MatsubaraOptions {
    let mut o = MatsubaraOptions::default();
    if let Some(t) = c.tol {
        o.rel_tol = t;
    }
    o.l_max = c.l_max;
    o.form = match c.form {
        Some(Form::Printed) => BoundStateForm::Printed,
        _ => BoundStateForm::Logarithmic,
    };
    o
}

pub fn energy_result(r: &EnergyReport) -> Value {
    json!({ "F": r.f, "F0": r.f0, "dTF": r.dtf, "E": r.e, "S": r.s })
}

fn outcome(r: EnergyReport) -> Result<Outcome, CliError> {
    Ok(Outcome {
        result: energy_result(&r),
        diagnostics: serde_json::to_value(&r.diagnostics)?,
    })
}

/// Energy report for one system and representation.
pub fn energy(c: &RunConfig, system: SystemName, repr: Repr, part: BoxPart) -> Result<EnergyReport, CliError> {
    let p = params(c)?;
    let th = thermal(c)?;
    let r = match (system, repr) {
        (SystemName::Single, Repr::Real) => {
            thermo::free_energy_real_freq(&PhaseFunction::single(&p)?, &th, &thermo_opts(c, true))?
        }
        (SystemName::Single, _) => {
            return Err(CliError::Param("the single oscillator has only the real-frequency form".into()))
        }
        (SystemName::Box, Repr::Real) => {
            let g = box_geom(c)?;
            match part {
                BoxPart::Separation => {
                    thermo::free_energy_real_freq(&PhaseFunction::box_separation(&p, &g)?, &th, &thermo_opts(c, false))?
                }
                BoxPart::Full => thermo::free_energy_real_freq(&PhaseFunction::boxed(&p, &g)?, &th, &thermo_opts(c, true))?,
            }
        }
        (SystemName::Box, Repr::Matsubara) => {
            if part == BoxPart::Full {
                return Err(CliError::Param("the Matsubara sum covers the separation part of the box only".into()));
            }
            matsubara::free_energy_matsubara_box(&p, &box_geom(c)?, &th, &matsubara_opts(c))?
        }
        (SystemName::Box, Repr::Plasma) => return Err(CliError::Param("--repr plasma applies to the line".into())),
        (SystemName::Line, Repr::Real) => {
            thermo::free_energy_real_freq(&PhaseFunction::line(&p, &line_geom(c)?)?, &th, &thermo_opts(c, false))?
        }
        (SystemName::Line, Repr::Matsubara) => {
            matsubara::free_energy_matsubara_line(&p, &line_geom(c)?, &th, &matsubara_opts(c))?
        }
        (SystemName::Line, Repr::Plasma) => {
            matsubara::free_energy_matsubara_plasma(&p, &line_geom(c)?, &th, &matsubara_opts(c))?
        }
    };
    Ok(r)
}

pub fn run(c: &RunConfig) -> Result<Outcome, CliError> {
    match c.command {
        CommandName::Single => outcome(energy(c, SystemName::Single, Repr::Real, BoxPart::Separation)?),
        CommandName::Box => outcome(energy(
            c,
            SystemName::Box,
            c.repr.unwrap_or(Repr::Real),
            c.part.unwrap_or(BoxPart::Separation),
        )?),
        CommandName::Line => outcome(energy(c, SystemName::Line, c.repr.unwrap_or(Repr::Real), BoxPart::Separation)?),
        CommandName::Matsubara => {
            let system = c.system.unwrap_or(SystemName::Line);
            let repr = if c.plasma { Repr::Plasma } else { Repr::Matsubara };
            outcome(energy(c, system, repr, BoxPart::Separation)?)
        }
        CommandName::Spectrum => spectrum(c),
        CommandName::Compare => compare(c),
        CommandName::Simulate => simulate_summary(c),
        CommandName::Sweep => unreachable!("sweeps are written row by row"),
    }
}

fn spectrum(c: &RunConfig) -> Result<Outcome, CliError> {
    let p = params(c)?;
    let g = box_geom(c)?;
    let th = thermal(c)?;
    // Wide enough for the thermal mode sum to converge by default.
    let w_max = c.omega_max.unwrap_or(20.0f64.max(40.0 * c.temp / c.hbar));
    let s = spectra::find_modes(&p, &g, w_max, Exec::Parallel)?;
    let mut result = json!({
        "modes": s.modes.iter().map(|m| json!({
            "omega": m.omega, "sigma": m.sigma, "sign": m.sign, "residual": m.residual,
        })).collect::<Vec<_>>(),
        "omega_max": s.omega_max,
        "box_length": s.box_length,
    });
    let mut diagnostics = json!({ "warnings": s.warnings, "negative_signs": s.negative_signs() });
    if !th.is_zero() {
        let e = spectra::mode_sum_energy(&s, &th)?;
        result["thermal_energy"] = json!(e.thermal);
        result["vacuum_energy_in_window"] = json!(e.vacuum_in_window);
        diagnostics["tail_bound"] = json!(e.tail_bound);
    }
    Ok(Outcome { result, diagnostics })
}

fn compare(c: &RunConfig) -> Result<Outcome, CliError> {
    let system = c.system.unwrap_or(SystemName::Line);
    if system == SystemName::Single {
        return Err(CliError::Param("compare applies to the line and the box".into()));
    }
    let real = energy(c, system, Repr::Real, BoxPart::Separation)?;
    let mats = energy(c, system, Repr::Matsubara, BoxPart::Separation)?;
    let rel = (real.f - mats.f).abs() / real.f.abs().max(mats.f.abs()).max(f64::MIN_POSITIVE);
    Ok(Outcome {
        result: json!({
            "F_realfreq": real.f,
            "F_matsubara": mats.f,
            "relative_difference": rel,
            "realfreq": energy_result(&real),
            "matsubara": energy_result(&mats),
        }),
        diagnostics: json!({
            "realfreq": serde_json::to_value(&real.diagnostics)?,
            "matsubara": serde_json::to_value(&mats.diagnostics)?,
        }),
    })
}

/// Bath, state and options of a `simulate` run.
pub struct SimSetup {
    pub params: OscillatorParams,
    pub bath: BathDiscretization,
    pub opts: SimOptions,
}

pub fn sim_setup(c: &RunConfig) -> Result<SimSetup, CliError> {
    let s = c.simulate.as_ref().expect("simulate settings");
    if !(s.e2 >= 0.0 && s.e2.is_finite()) {
        return Err(CliError::Param("--e2 must be >= 0".into()));
    }
    let p = OscillatorParams::new(c.mass, c.omega, c.gamma, s.e2 / c.mass)?;
    let modes = match s.modes {
        Some(n) => n,
        None => {
            // Smallest power of two keeping t_end below the recurrence time.
            let probe = BathDiscretization::standard(&p, 1, s.t_end)?;
            let need = 1.25 * s.t_end * (probe.omega_max - probe.omega_min) / (2.0 * std::f64::consts::PI);
            (need.ceil() as usize).max(bathsim::MIN_EQUILIBRIUM_MODES).next_power_of_two()
        }
    };
    let bath = BathDiscretization::standard(&p, modes, s.t_end)?;
    let mut opts = SimOptions::for_bath(&bath, s.t_end, s.sample_every);
    if let Some(dt) = s.dt {
        opts.dt = dt;
    }
    Ok(SimSetup { params: p, bath, opts })
}

pub fn simulate_trajectory(c: &RunConfig) -> Result<bathsim::Trajectory, CliError> {
    let s = c.simulate.as_ref().expect("simulate settings");
    let setup = sim_setup(c)?;
    let init = if c.temp > 0.0 {
        bathsim::sample_bath(&setup.bath, c.temp, c.seed)?
    } else {
        SimState::bath_at_rest(&setup.bath, s.xi0, 0.0)
    };
    Ok(bathsim::simulate(&setup.bath, &setup.params, init, &setup.opts)?)
}

fn simulate_summary(c: &RunConfig) -> Result<Outcome, CliError> {
    let s = c.simulate.as_ref().expect("simulate settings");
    let setup = sim_setup(c)?;
    let base = json!({
        "n_modes": setup.bath.n_modes(),
        "omega_min": setup.bath.omega_min,
        "omega_max": setup.bath.omega_max,
        "dt": setup.opts.dt,
        "recurrence_time": setup.bath.recurrence_time(),
    });
    if let Some(members) = s.members {
        if c.temp <= 0.0 {
            return Err(CliError::Param("ensemble runs need --temp > 0".into()));
        }
        let eo = EnsembleOptions {
            members,
            seed: c.seed,
            t_end: s.t_end,
            average_from: s.average_from.unwrap_or(s.t_end / 3.0),
            dt: setup.opts.dt,
            sample_every: s.sample_every,
            exec: Exec::Parallel,
        };
        let r = bathsim::ensemble(&setup.bath, &setup.params, c.temp, &eo)?;
        return Ok(Outcome {
            result: json!({
                "mean_H_osc": r.mean_h_osc,
                "std_error_H_osc": r.std_error_h_osc,
                "mean_kinetic": r.mean_kinetic,
                "std_error_kinetic": r.std_error_kinetic,
                "mean_flow_osc": r.mean_flow_osc,
                "members": members,
            }),
            diagnostics: json!({ "bath": base, "max_relative_drift": r.max_relative_drift }),
        });
    }
    let tr = simulate_trajectory(c)?;
    let last = tr.samples.last().expect("at least the initial sample");
    let mut result = json!({
        "t_end": last.t,
        "xi": last.xi,
        "xi_dot": last.xi_dot,
        "H_osc": last.h_osc,
        "H_bath": last.h_bath,
        "H_int": last.h_int,
        "samples": tr.samples.len(),
    });
    let ledger = bathsim::energy_flows(&tr);
    let mut diagnostics = json!({
        "bath": base,
        "max_relative_drift": tr.max_relative_drift,
        "max_flow_residual": ledger.max_flow_residual,
    });
    if c.temp <= 0.0 {
        match bathsim::fit_free_decay(&tr) {
            Ok(fit) => {
                result["decay_rate"] = json!(fit.rate);
                result["frequency"] = json!(fit.frequency);
            }
            Err(e) => diagnostics["warnings"] = json!([format!("no decay fit: {e}")]),
        }
    }
    Ok(Outcome { result, diagnostics })
}
