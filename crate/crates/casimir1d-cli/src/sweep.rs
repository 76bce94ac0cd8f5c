//! Parameter sweeps: independent points, CSV rows in axis order.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::args::{BoxPart, Repr, SystemName};
use crate::commands::energy;
use crate::config::RunConfig;
use crate::CliError;

/// Minimum fraction of successful points for a zero exit code.
pub const MIN_SUCCESS_FRACTION: f64 = 0.9;

pub struct Row {
    pub value: f64,
    pub fields: Result<[f64; 6], String>,
    pub xi_star: Vec<f64>,
    pub runtime_ms: f64,
}

fn point(c: &RunConfig, system: SystemName, repr: Repr) -> Result<([f64; 6], Vec<f64>), CliError> {
    let r = energy(c, system, repr, BoxPart::Separation)?;
    let err = r.diagnostics.quad_error + r.diagnostics.tail_bound;
    let fields = [r.f, r.f0, r.dtf, r.e, r.s, err];
    if fields.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Numeric("non-finite result".into()));
    }
    Ok((fields, r.diagnostics.xi_star))
}

pub fn compute(c: &RunConfig) -> Result<Vec<Row>, CliError> {
    let axis = c.sweep.as_ref().expect("sweep axis");
    let system = c.system.unwrap_or(SystemName::Line);
    let repr = c.repr.unwrap_or(Repr::Real);
    let values = axis.values();
    let eval = |&v: &f64| {
        let t0 = Instant::now();
        let res = point(&c.with_axis(&axis.name, v), system, repr);
        let runtime_ms = t0.elapsed().as_secs_f64() * 1e3;
        match res {
            Ok((fields, xi_star)) => Row {
                value: v,
                fields: Ok(fields),
                xi_star,
                runtime_ms,
            },
            Err(e) => Row {
                value: v,
                fields: Err(e.to_string()),
                xi_star: Vec::new(),
                runtime_ms,
            },
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(c.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Numeric(format!("thread pool: {e}")))?;
    Ok(pool.install(|| values.par_iter().map(eval).collect()))
}

pub fn write_csv<W: Write>(c: &RunConfig, rows: &[Row], mut w: W) -> std::io::Result<()> {
    let axis = &c.sweep.as_ref().expect("sweep axis").name;
    writeln!(w, "{axis},F,F0,dTF,E,S,err_estimate,xi_star,runtime_ms")?;
    for r in rows {
        let f = r.fields.as_ref().copied().unwrap_or([f64::NAN; 6]);
        let xs: Vec<String> = r.xi_star.iter().map(|x| x.to_string()).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{:.3}",
            r.value,
            f[0],
            f[1],
            f[2],
            f[3],
            f[4],
            f[5],
            xs.join(";"),
            r.runtime_ms
        )?;
    }
    Ok(())
}

/// Fraction of rows without errors.
pub fn success_fraction(rows: &[Row]) -> f64 {
    rows.iter().filter(|r| r.fields.is_ok()).count() as f64 / rows.len().max(1) as f64
}
