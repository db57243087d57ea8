//! Free-photon wavefunctionals on a one-dimensional momentum lattice.
//!
//! Natural units throughout (`ħ = c = 1`), one polarization, momenta along one axis.
//!
//! - [`lattice`]: grids, real and spectral fields, transforms, Parseval and
//!   autocorrelation.
//! - [`wavefunctional`]: exact photon-number polynomials built by the creation
//!   operator, two-momentum expressions, and the vacuum Gaussian.
//! - [`optimizer`]: most likely spectral density, closed form and by ascent.
//! - [`sampler`]: Monte Carlo ensembles drawn from `|Ψ|²` and their estimators.
//! - [`verify`]: the acceptance checks, runnable from tests and the CLI.

pub mod error;
pub mod lattice;
pub mod optimizer;
pub mod sampler;
pub mod verify;
pub mod wavefunctional;

pub use error::{Error, Result};
