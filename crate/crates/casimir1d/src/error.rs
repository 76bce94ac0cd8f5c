use thiserror::Error;

/// Failure modes of the numerical routines.
///
/// Parameter errors are caller mistakes (bad inputs); every other variant is a
/// numerical failure or a degenerate point of the physics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("box resonance at omega = {omega}: sin(omega L) vanishes")]
    Resonance { omega: f64 },

    #[error("pole: {0}")]
    Pole(String),

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("outside the domain of validity: {0}")]
    Domain(String),

    #[error("{what}: tolerance not met (estimate {estimate:e}, error bound {error:e})")]
    Tolerance {
        what: String,
        estimate: f64,
        error: f64,
    },

    #[error("phase branch undefined near omega = {omega}: {reason}")]
    Branch { omega: f64, reason: String },

    #[error("simulation unstable: {0}")]
    Unstable(String),
}

impl Error {
    /// True for errors caused by invalid caller input rather than numerics.
    pub fn is_parameter_error(&self) -> bool {
        matches!(self, Error::InvalidParameter(_))
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
