//! Flat `key = value` config files and the flag > file > default merge.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use serde::Serialize;

use crate::args::*;
use crate::CliError;

pub const CONFIG_ENV: &str = "CASIMIR1D_CONFIG";

const KEYS: &[&str] = &[
    "mass", "omega", "gamma", "g", "b", "L", "temp", "hbar", "tol", "l-max", "omega-max", "cutoff", "seed", "format",
    "out", "part", "repr", "system", "form", "plasma", "axis", "start", "stop", "count", "scale", "jobs", "e2", "modes",
    "t-end", "dt", "sample-every", "xi0", "members", "average-from",
];

/// Sweep parameter names.
pub const AXES: &[&str] = &["mass", "omega", "gamma", "g", "b", "L", "temp", "hbar"];

#[derive(Debug, Default)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str, path: Option<&Path>) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Param(format!("config line {}: expected key = value", n + 1)))?;
            let k = k.trim().trim_start_matches("--").to_string();
            if !KEYS.contains(&k.as_str()) {
                return Err(CliError::Param(format!("config line {}: unknown key '{k}'", n + 1)));
            }
            values.insert(k, v.trim().to_string());
        }
        Ok(Self {
            path: path.map(Path::to_path_buf),
            values,
        })
    }

    /// Loads --config, else $CASIMIR1D_CONFIG, else nothing.
    pub fn load(flag: Option<&Path>, env: Option<String>) -> Result<Self, CliError> {
        let path = flag.map(Path::to_path_buf).or_else(|| env.filter(|s| !s.is_empty()).map(PathBuf::from));
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| CliError::Param(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text, Some(&p))
            }
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                let src = self.path.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
                CliError::Param(format!("config {src}: invalid value '{v}' for '{key}'"))
            }),
        }
    }

    fn get_enum<T: ValueEnum>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => T::from_str(v, true)
                .map(Some)
                .map_err(|_| CliError::Param(format!("config: invalid value '{v}' for '{key}'"))),
        }
    }
}

fn pick<T: FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>, CliError> {
    Ok(match flag {
        Some(v) => Some(v),
        None => cfg.get(key)?,
    })
}

fn pick_enum<T: ValueEnum>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>, CliError> {
    Ok(match flag {
        Some(v) => Some(v),
        None => cfg.get_enum(key)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepAxis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub scale: Scale,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| {
                let u = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                match self.scale {
                    Scale::Linear => self.start + u * (self.stop - self.start),
                    Scale::Log => (self.start.ln() + u * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimSettings {
    pub e2: f64,
    pub modes: Option<usize>,
    pub t_end: f64,
    pub dt: Option<f64>,
    pub sample_every: usize,
    pub xi0: f64,
    pub members: Option<usize>,
    pub average_from: Option<f64>,
}

/// Fully resolved run configuration, echoed in every record.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: CommandName,
    pub mass: f64,
    pub omega: f64,
    pub gamma: f64,
    pub g: f64,
    pub b: f64,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub temp: f64,
    pub hbar: f64,
    pub tol: Option<f64>,
    pub l_max: Option<usize>,
    pub omega_max: Option<f64>,
    pub cutoff: Option<f64>,
    pub seed: u64,
    pub system: Option<SystemName>,
    pub repr: Option<Repr>,
    pub part: Option<BoxPart>,
    pub form: Option<Form>,
    pub plasma: bool,
    pub sweep: Option<SweepAxis>,
    pub jobs: Option<usize>,
    pub simulate: Option<SimSettings>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(command: &Command, c: &Common, cfg: &ConfigFile) -> Result<Self, CliError> {
        let name = command.name();
        let mut rc = RunConfig {
            command: name,
            mass: pick(c.mass, cfg, "mass")?.unwrap_or(1.0),
            omega: pick(c.omega, cfg, "omega")?.unwrap_or(1.0),
            gamma: pick(c.gamma, cfg, "gamma")?.unwrap_or(0.1),
            g: pick(c.g, cfg, "g")?.unwrap_or(1.0),
            b: pick(c.b, cfg, "b")?.unwrap_or(1.0),
            l: pick(c.l, cfg, "L")?,
            temp: pick(c.temp, cfg, "temp")?.unwrap_or(0.0),
            hbar: pick(c.hbar, cfg, "hbar")?.unwrap_or(1.0),
            tol: pick(c.tol, cfg, "tol")?,
            l_max: pick(c.l_max, cfg, "l-max")?,
            omega_max: pick(c.omega_max, cfg, "omega-max")?,
            cutoff: pick(c.cutoff, cfg, "cutoff")?,
            seed: pick(c.seed, cfg, "seed")?.unwrap_or(0),
            system: None,
            repr: None,
            part: None,
            form: None,
            plasma: false,
            sweep: None,
            jobs: None,
            simulate: None,
            format: pick_enum(c.format, cfg, "format")?.unwrap_or(match name {
                CommandName::Sweep => Format::Csv,
                _ => Format::Json,
            }),
            out: pick(c.out.clone(), cfg, "out")?,
        };
        match command {
            Command::Box(a) => {
                rc.part = Some(pick_enum(a.part, cfg, "part")?.unwrap_or(BoxPart::Separation));
                rc.repr = Some(pick_enum(a.repr, cfg, "repr")?.unwrap_or(Repr::Real));
            }
            Command::Line(a) => rc.repr = Some(pick_enum(a.repr, cfg, "repr")?.unwrap_or(Repr::Real)),
            Command::Matsubara(a) => {
                rc.system = Some(pick_enum(a.system, cfg, "system")?.unwrap_or(SystemName::Line));
                rc.form = Some(pick_enum(a.form, cfg, "form")?.unwrap_or(Form::Logarithmic));
                rc.plasma = a.plasma || pick(None, cfg, "plasma")?.unwrap_or(false);
            }
            Command::Compare(a) => {
                let default = if rc.l.is_some() { SystemName::Box } else { SystemName::Line };
                rc.system = Some(pick_enum(a.system, cfg, "system")?.unwrap_or(default));
            }
            Command::Sweep(a) => {
                let axis: String = pick(a.axis.clone(), cfg, "axis")?
                    .ok_or_else(|| CliError::Param("sweep needs --axis".into()))?;
                if !AXES.contains(&axis.as_str()) {
                    return Err(CliError::Param(format!(
                        "unknown sweep axis '{axis}' (expected one of {})",
                        AXES.join(", ")
                    )));
                }
                let start: f64 = pick(a.start, cfg, "start")?.ok_or_else(|| CliError::Param("sweep needs --start".into()))?;
                let stop: f64 = pick(a.stop, cfg, "stop")?.ok_or_else(|| CliError::Param("sweep needs --stop".into()))?;
                let count = pick(a.count, cfg, "count")?.unwrap_or(11);
                let scale = pick_enum(a.scale, cfg, "scale")?.unwrap_or(Scale::Linear);
                if count == 0 || !start.is_finite() || !stop.is_finite() {
                    return Err(CliError::Param("sweep needs finite --start/--stop and --count >= 1".into()));
                }
                if scale == Scale::Log && !(start > 0.0 && stop > 0.0) {
                    return Err(CliError::Param("log sweeps need positive --start and --stop".into()));
                }
                rc.sweep = Some(SweepAxis {
                    name: axis,
                    start,
                    stop,
                    count,
                    scale,
                });
                let default = if rc.l.is_some() { SystemName::Box } else { SystemName::Line };
                rc.system = Some(pick_enum(a.system, cfg, "system")?.unwrap_or(default));
                rc.repr = Some(pick_enum(a.repr, cfg, "repr")?.unwrap_or(Repr::Real));
                rc.jobs = pick(a.jobs, cfg, "jobs")?;
                if rc.jobs == Some(0) {
                    return Err(CliError::Param("--jobs must be >= 1".into()));
                }
            }
            Command::Simulate(a) => {
                let t_end = pick(a.t_end, cfg, "t-end")?.unwrap_or(100.0);
                rc.simulate = Some(SimSettings {
                    e2: pick(a.e2, cfg, "e2")?.unwrap_or(rc.g * rc.mass),
                    modes: pick(a.modes, cfg, "modes")?,
                    t_end,
                    dt: pick(a.dt, cfg, "dt")?,
                    sample_every: pick(a.sample_every, cfg, "sample-every")?.unwrap_or(10),
                    xi0: pick(a.xi0, cfg, "xi0")?.unwrap_or(1.0),
                    members: pick(a.members, cfg, "members")?,
                    average_from: pick(a.average_from, cfg, "average-from")?,
                });
            }
            Command::Single | Command::Spectrum => {}
        }
        Ok(rc)
    }

    /// Applies a sweep value to the named parameter.
    pub fn with_axis(&self, axis: &str, v: f64) -> RunConfig {
        let mut c = self.clone();
        match axis {
            "mass" => c.mass = v,
            "omega" => c.omega = v,
            "gamma" => c.gamma = v,
            "g" => c.g = v,
            "b" => c.b = v,
            "L" => c.l = Some(v),
            "temp" => c.temp = v,
            "hbar" => c.hbar = v,
            _ => unreachable!("axis validated on resolve"),
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let c = ConfigFile::parse("# comment\nomega = 2\n--gamma=0.3  # trailing\n\nL = 4\n", None).unwrap();
        assert_eq!(c.get::<f64>("omega").unwrap(), Some(2.0));
        assert_eq!(c.get::<f64>("gamma").unwrap(), Some(0.3));
        assert_eq!(c.get::<f64>("L").unwrap(), Some(4.0));
        assert!(ConfigFile::parse("bogus = 1", None).is_err());
        assert!(ConfigFile::parse("omega 1", None).is_err());
        let bad = ConfigFile::parse("omega = x", None).unwrap();
        assert!(bad.get::<f64>("omega").is_err());
    }

    #[test]
    fn precedence() {
        let cfg = ConfigFile::parse("omega = 2\ngamma = 0.3\nrepr = matsubara", None).unwrap();
        let common = Common {
            omega: Some(5.0),
            ..Common::default()
        };
        let rc = RunConfig::resolve(&Command::Line(LineArgs::default()), &common, &cfg).unwrap();
        assert_eq!(rc.omega, 5.0);
        assert_eq!(rc.gamma, 0.3);
        assert_eq!(rc.g, 1.0);
        assert_eq!(rc.repr, Some(Repr::Matsubara));
    }

    #[test]
    fn sweep_values() {
        let ax = SweepAxis {
            name: "b".into(),
            start: 1e-3,
            stop: 1e-1,
            count: 3,
            scale: Scale::Log,
        };
        let v = ax.values();
        assert!((v[1] - 1e-2).abs() < 1e-15);
        let lin = SweepAxis {
            scale: Scale::Linear,
            start: 0.5,
            stop: 5.0,
            count: 10,
            ..ax
        };
        assert_eq!(lin.values()[9], 5.0);
    }

    #[test]
    fn unknown_axis_rejected() {
        let cfg = ConfigFile::default();
        let a = SweepArgs {
            axis: Some("zeta".into()),
            start: Some(0.0),
            stop: Some(1.0),
            ..SweepArgs::default()
        };
        assert!(RunConfig::resolve(&Command::Sweep(a), &Common::default(), &cfg).is_err());
    }
}
