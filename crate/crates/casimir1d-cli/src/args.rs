use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Free energies of two dissipative oscillators coupled to a 1+1-dimensional
/// scalar field.
///
/// Every value option can also be given in a config file (flat `key = value`
/// lines, keys = long flag names); the file is taken from --config or the
/// CASIMIR1D_CONFIG environment variable. Flags win over the file, the file
/// over built-in defaults.
#[derive(Debug, Parser)]
#[command(name = "casimir1d", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Single,
    Box,
    Line,
    Matsubara,
    Spectrum,
    Compare,
    Sweep,
    Simulate,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One oscillator coupled to its heat bath.
    Single,
    /// Two oscillators in a Dirichlet box of length L.
    Box(BoxArgs),
    /// Two oscillators on the infinite line.
    Line(LineArgs),
    /// Matsubara-sum free energy of the line or the box.
    Matsubara(MatsubaraArgs),
    /// Normal modes of the dissipationless box.
    Spectrum,
    /// Real-frequency and Matsubara free energies side by side.
    Compare(CompareArgs),
    /// Scan one parameter and write CSV rows.
    Sweep(SweepArgs),
    /// Classical heat-bath simulation of one oscillator.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn name(&self) -> CommandName {
        match self {
            Command::Single => CommandName::Single,
            Command::Box(_) => CommandName::Box,
            Command::Line(_) => CommandName::Line,
            Command::Matsubara(_) => CommandName::Matsubara,
            Command::Spectrum => CommandName::Spectrum,
            Command::Compare(_) => CommandName::Compare,
            Command::Sweep(_) => CommandName::Sweep,
            Command::Simulate(_) => CommandName::Simulate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Repr {
    Real,
    Matsubara,
    Plasma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoxPart {
    /// Separation-dependent part (cutoff free).
    Separation,
    /// Full box phase; needs --cutoff.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SystemName {
    Single,
    Box,
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Logarithmic,
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Options shared by all commands.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Oscillator mass m
    #[arg(long, global = true)]
    pub mass: Option<f64>,
    /// Intrinsic frequency Ω.
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    /// Dissipation γ.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Coupling g = e²/m.
    #[arg(long, global = true)]
    pub g: Option<f64>,
    /// Oscillator separation.
    #[arg(long, global = true)]
    pub b: Option<f64>,
    /// Box length.
    #[arg(long = "L", global = true)]
    pub l: Option<f64>,
    /// Temperature.
    #[arg(long, global = true)]
    pub temp: Option<f64>,
    /// Reduced Planck constant ħ
    #[arg(long, global = true)]
    pub hbar: Option<f64>,
    /// Relative tolerance of quadratures and sums.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Fixed Matsubara truncation.
    #[arg(long = "l-max", global = true)]
    pub l_max: Option<usize>,
    /// Upper frequency of mode searches.
    #[arg(long = "omega-max", global = true)]
    pub omega_max: Option<f64>,
    /// Frequency cutoff for zero-temperature parts that need one.
    #[arg(long, global = true)]
    pub cutoff: Option<f64>,
    /// Random seed of thermal simulations
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format (default: csv for sweep, json otherwise)
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Config file (defaults to $CASIMIR1D_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BoxArgs {
    #[arg(long, value_enum)]
    pub part: Option<BoxPart>,
    #[arg(long, value_enum)]
    pub repr: Option<Repr>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LineArgs {
    #[arg(long, value_enum)]
    pub repr: Option<Repr>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MatsubaraArgs {
    /// line (default) or box; line with γ = 0 may use --plasma.
    #[arg(long, value_enum)]
    pub system: Option<SystemName>,
    /// Bound-state term of the line sum.
    #[arg(long, value_enum)]
    pub form: Option<Form>,
    /// Dissipationless line from the transmission coefficient.
    #[arg(long)]
    pub plasma: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CompareArgs {
    /// line or box (default: box if --L is given, else line).
    #[arg(long, value_enum)]
    pub system: Option<SystemName>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    /// Parameter to scan: mass, omega, gamma, g, b, L, temp or hbar.
    #[arg(long)]
    pub axis: Option<String>,
    /// First value of the axis
    #[arg(long)]
    pub start: Option<f64>,
    /// Last value of the axis (inclusive)
    #[arg(long)]
    pub stop: Option<f64>,
    /// Number of points (default 11)
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum)]
    pub scale: Option<Scale>,
    #[arg(long, value_enum)]
    pub system: Option<SystemName>,
    #[arg(long, value_enum)]
    pub repr: Option<Repr>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    /// Charge squared e² (the coupling to the field is not simulated; it is
    /// echoed as g = e²/m).
    #[arg(long)]
    pub e2: Option<f64>,
    /// Number of bath modes.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Simulated time span (default 100)
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    /// Time step (default 0.09/ω_max of the bath)
    #[arg(long)]
    pub dt: Option<f64>,
    /// Record every n-th step (default 10)
    #[arg(long = "sample-every")]
    pub sample_every: Option<usize>,
    /// Initial displacement when the bath starts at rest.
    #[arg(long)]
    pub xi0: Option<f64>,
    /// Ensemble size for thermal runs (needs --temp > 0).
    #[arg(long)]
    pub members: Option<usize>,
    /// Start of the averaging window of ensemble runs.
    #[arg(long = "average-from")]
    pub average_from: Option<f64>,
}
