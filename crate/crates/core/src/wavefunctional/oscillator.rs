//! Single-mode check of the functional Schrödinger equation.
//!
//! Restricted to one pair `(k, -k)`, the functional Hamiltonian is a two-dimensional
//! isotropic oscillator in the real and imaginary parts of `q = sqrt(2 dp) Ã(p_k)`,
//! the rescaling that turns `Ψ₀ ∝ exp(-ω dp |Ã|²)` into `exp(-ω|q|²/2)`. The
//! `n`-photon prefactor `Ã(-p_k)^n` carries angular momentum `n`, so the reduced
//! wavefunction is `f(r) = r^n exp(-ω r²/2)` with
//!
//! ```text
//! H f = ½ (-f'' - f'/r + n² f / r² + ω² r² f),   E_n = ω (n + 1)
//! ```
//!
//! i.e. `n` quanta of `ω` on top of the zero-point energy of both quadratures.

use crate::error::{Error, Result};

pub const MAX_PHOTONS: u32 = 12;
const CHECKPOINTS: usize = 200;
const R_MIN: f64 = 0.25;
const R_MAX: f64 = 5.0;

#[derive(Clone, Debug, serde::Serialize)]
pub struct ModeEigenCheck {
    pub photons: u32,
    pub omega: f64,
    pub eigenvalue: f64,
    pub step: f64,
    pub residual: f64,
    pub residual_half_step: f64,
    /// `log2(residual / residual_half_step)`; 2 for a second-order stencil.
    pub observed_order: f64,
}

/// Analytic per-mode energy `ω (n + 1)`.
pub fn mode_energy(photons: u32, omega: f64) -> f64 {
    omega * (photons as f64 + 1.0)
}

/// Max-norm of `(H_h f - E_n f) / max|f|` over fixed radial checkpoints, with the
/// derivatives in `H_h` taken by central differences of step `h`.
pub fn mode_eigenvalue_residual(photons: u32, omega: f64, step: f64) -> Result<f64> {
    if photons > MAX_PHOTONS {
        return Err(Error::InvalidArgument(format!(
            "photon number {photons} exceeds {MAX_PHOTONS}"
        )));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "omega must be positive, got {omega}"
        )));
    }
    if !(step > 0.0 && step < R_MIN / omega.sqrt()) {
        return Err(Error::InvalidArgument(format!("step {step} out of range")));
    }
    let n = photons as i32;
    let nf = photons as f64;
    let f = |r: f64| r.powi(n) * (-0.5 * omega * r * r).exp();
    let energy = mode_energy(photons, omega);
    let scale = 1.0 / omega.sqrt();
    let (lo, hi) = (R_MIN * scale, R_MAX * scale);

    let mut peak: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for i in 0..CHECKPOINTS {
        let r = lo + (hi - lo) * i as f64 / (CHECKPOINTS - 1) as f64;
        let (fm, f0, fp) = (f(r - step), f(r), f(r + step));
        let d2 = (fp - 2.0 * f0 + fm) / (step * step);
        let d1 = (fp - fm) / (2.0 * step);
        let h = 0.5 * (-d2 - d1 / r + nf * nf * f0 / (r * r) + omega * omega * r * r * f0);
        worst = worst.max((h - energy * f0).abs());
        peak = peak.max(f0.abs());
    }
    Ok(worst / peak)
}

/// Residual at `step` and `step / 2` plus the observed convergence order.
pub fn mode_eigenvalue_check(photons: u32, omega: f64, step: f64) -> Result<ModeEigenCheck> {
    let residual = mode_eigenvalue_residual(photons, omega, step)?;
    let residual_half_step = mode_eigenvalue_residual(photons, omega, 0.5 * step)?;
    Ok(ModeEigenCheck {
        photons,
        omega,
        eigenvalue: mode_energy(photons, omega),
        step,
        residual,
        residual_half_step,
        observed_order: (residual / residual_half_step).log2(),
    })
}
