//! Steady-state and dynamical response of a four-level atomic ensemble
//! coupled to three optical cavity fields: EIT and cross-Kerr optical
//! switching spectra, probe buildup dynamics, and a nonlinear mean-field
//! simulation for cross-checks and strong-probe regimes.

pub mod error;
pub mod fullsim;
pub mod ode;
pub mod params;
pub mod quad;
pub mod spectra;
pub mod susceptibility;

#[cfg(test)]
pub(crate) mod test_params;

pub use error::{Error, Result};
pub use params::SystemParams;
