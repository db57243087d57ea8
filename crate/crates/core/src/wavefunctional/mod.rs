//! Photon wavefunctionals as exact polynomial prefactors of the vacuum Gaussian.

mod oscillator;
mod polynomial;
mod two_mode;
mod vacuum;

pub use oscillator::{
    mode_eigenvalue_check, mode_eigenvalue_residual, mode_energy, ModeEigenCheck, MAX_PHOTONS,
};
pub use polynomial::{nphoton_polynomial, Monomial, PhotonPolynomial};
pub use two_mode::{
    two_photon_expression, MomentumCase, MultiModeExpression, MultiMonomial, Symbol,
    TwoPhotonExpression,
};
pub use vacuum::{evaluate_log_density, VacuumGaussian};
