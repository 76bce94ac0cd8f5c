//! Thermodynamics of two dissipative harmonic oscillators coupled to a
//! (1+1)-dimensional massless scalar field, on the infinite line or inside a
//! Dirichlet box.
//!
//! Free energies are available in two equivalent forms — real-frequency
//! integrals over a scattering-type phase, and Matsubara sums over imaginary
//! frequencies — which the test suite cross-validates. Supporting pieces cover
//! bound states of the line, the dissipationless box spectrum, closed-form
//! low-temperature coefficients and a classical heat-bath simulator.

pub mod asymptotics;
pub mod bathsim;
pub mod error;
pub mod exec;
pub mod matsubara;
pub mod model;
pub mod numeric;
pub mod phases;
pub mod spectra;
pub mod thermo;

pub use error::{Error, Result};
pub use exec::Exec;
pub use model::{Geometry, HalfPlane, OscillatorParams, ThermalParams};
