mod args;
mod commands;
mod config;
mod sweep;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, CommandName, Format};
use config::{ConfigFile, RunConfig, CONFIG_ENV};

/// Exit status for invalid input.
const EXIT_PARAM: u8 = 2;
/// Exit status for numerical failures (tolerance not met, degeneracy, ...).
const EXIT_NUMERIC: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Param(String),
    Numeric(String),
    Io(io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Param(m) => write!(f, "invalid input: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<casimir1d::Error> for CliError {
    fn from(e: casimir1d::Error) -> Self {
        if e.is_parameter_error() {
            CliError::Param(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Numeric(format!("serialization: {e}"))
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Param(_) => EXIT_PARAM,
            CliError::Numeric(_) | CliError::Io(_) => EXIT_NUMERIC,
        }
    }
}

fn output(c: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &c.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Path of the first null inside `v`, if any (NaN and ±inf serialize to null).
fn first_null(v: &Value, path: &str) -> Option<String> {
    match v {
        Value::Null => Some(path.to_string()),
        Value::Array(xs) => xs.iter().enumerate().find_map(|(i, x)| first_null(x, &format!("{path}[{i}]"))),
        Value::Object(m) => m.iter().find_map(|(k, x)| first_null(x, &format!("{path}.{k}"))),
        _ => None,
    }
}

fn record(c: &RunConfig, out: commands::Outcome, started: Instant) -> Result<Value, CliError> {
    if let Some(p) = first_null(&out.result, "result") {
        return Err(CliError::Numeric(format!("non-finite value at {p}")));
    }
    let mut diagnostics = out.diagnostics;
    diagnostics["runtime_ms"] = json!(started.elapsed().as_secs_f64() * 1e3);
    Ok(json!({
        "config": serde_json::to_value(c)?,
        "result": out.result,
        "diagnostics": diagnostics,
        "version": env!("CARGO_PKG_VERSION"),
    }))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = ConfigFile::load(cli.common.config.as_deref(), std::env::var(CONFIG_ENV).ok())?;
    let c = RunConfig::resolve(&cli.command, &cli.common, &cfg)?;
    match (c.command, c.format) {
        (CommandName::Sweep, Format::Csv) => {
            let rows = sweep::compute(&c)?;
            for r in &rows {
                if let Err(e) = &r.fields {
                    eprintln!("warning: {} = {}: {e}", c.sweep.as_ref().unwrap().name, r.value);
                }
            }
            let mut w = output(&c)?;
            sweep::write_csv(&c, &rows, &mut w)?;
            w.flush()?;
            let ok = sweep::success_fraction(&rows);
            if ok < sweep::MIN_SUCCESS_FRACTION {
                return Err(CliError::Numeric(format!(
                    "only {:.0}% of sweep points succeeded",
                    100.0 * ok
                )));
            }
        }
        (CommandName::Sweep, Format::Json) => return Err(CliError::Param("sweeps are written as CSV".into())),
        (CommandName::Simulate, Format::Csv) => {
            if c.simulate.as_ref().is_some_and(|s| s.members.is_some()) {
                return Err(CliError::Param("ensemble results are written as JSON".into()));
            }
            let tr = commands::simulate_trajectory(&c)?;
            let mut w = output(&c)?;
            tr.write_csv(&mut w)?;
            w.flush()?;
        }
        (_, Format::Csv) => return Err(CliError::Param("CSV output is available for sweep and simulate".into())),
        (_, Format::Json) => {
            let out = commands::run(&c)?;
            let rec = record(&c, out, started)?;
            let mut w = output(&c)?;
            serde_json::to_writer_pretty(&mut w, &rec)?;
            writeln!(w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed downstream pipe (e.g. `| head`) is not a failure.
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
