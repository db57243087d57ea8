use crate::error::Result;
use crate::lattice::{GridSpec, SpectralField};

use super::polynomial::PhotonPolynomial;

/// Unnormalized vacuum functional `Ψ₀ = exp(-½ Σ_k ω_k |Ã(p_k)|² dp)`.
#[derive(Clone, Debug)]
pub struct VacuumGaussian {
    grid: GridSpec,
    omegas: Vec<f64>,
}

impl VacuumGaussian {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            omegas: grid.omegas(),
            grid,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Dispersion per slot.
    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// `log Ψ₀[Ã]`.
    pub fn log_weight(&self, field: &SpectralField) -> f64 {
        let dp = self.grid.dp();
        -0.5 * field
            .amplitudes()
            .iter()
            .zip(&self.omegas)
            .map(|(z, w)| w * z.norm_sqr())
            .sum::<f64>()
            * dp
    }
}

/// `log |Q_n(Ã(-p̄)) Ψ₀[Ã]|²` up to an additive constant. `|p̄|` in the prefactor is
/// the mode energy `ω_k̄`, which is `|p̄|` on a massless grid.
pub fn evaluate_log_density(
    poly: &PhotonPolynomial,
    field: &SpectralField,
    kbar: i64,
    vac: &VacuumGaussian,
) -> Result<f64> {
    if !poly.is_contact_free() {
        return Err(crate::Error::ContactTerms);
    }
    vac.grid.check_photon_mode(kbar)?;
    let q = poly.evaluate(field.at(-kbar), vac.grid.omega(kbar))?;
    Ok(q.norm_sqr().ln() + 2.0 * vac.log_weight(field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefunctional::nphoton_polynomial;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    fn grid() -> GridSpec {
        GridSpec::new(128, 20.0 * std::f64::consts::PI).unwrap()
    }

    fn random_field(seed: u64, g: GridSpec) -> SpectralField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<Complex64> = (0..=g.nyquist())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SpectralField::from_nonnegative_modes(g, |k| vals[k as usize])
    }

    #[test]
    fn vacuum_at_zero_field() {
        let g = grid();
        let vac = VacuumGaussian::new(g);
        let v = evaluate_log_density(&nphoton_polynomial(0), &SpectralField::zeros(g), 10, &vac)
            .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn single_photon_prefactor() {
        let g = grid();
        let vac = VacuumGaussian::new(g);
        let kbar = 10; // |p̄| = 1
        let field = SpectralField::from_nonnegative_modes(g, |k| {
            if k == kbar {
                Complex64::new(0.5, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let v = evaluate_log_density(&nphoton_polynomial(1), &field, kbar, &vac).unwrap();
        // prefactor 2·1·0.5 = 1; exponent 2·(1·0.25·0.1)
        let expected = 1.0f64.ln() - 2.0 * 0.25 * 0.1;
        assert!((v - expected).abs() < 1e-14);
    }

    #[test]
    fn contact_terms_rejected() {
        let g = grid();
        let vac = VacuumGaussian::new(g);
        let r = evaluate_log_density(&nphoton_polynomial(2), &SpectralField::zeros(g), 10, &vac);
        assert!(matches!(r, Err(crate::Error::ContactTerms)));
    }

    /// Ratio against the peak-only configuration, checked by direct summation of
    /// `n log|Ã(k̄)|² - Σ ω |Ã|² dp` over every slot.
    #[test]
    fn log_density_differences_match_direct_sum() {
        let g = grid();
        let vac = VacuumGaussian::new(g);
        let kbar = 17;
        for n in 1..5u32 {
            let q = nphoton_polynomial(n).drop_contact_terms();
            for seed in 0..10 {
                let field = random_field(seed, g);
                let peak_only = SpectralField::from_nonnegative_modes(g, |k| {
                    if k == kbar {
                        field.at(kbar)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                let got = evaluate_log_density(&q, &field, kbar, &vac).unwrap()
                    - evaluate_log_density(&q, &peak_only, kbar, &vac).unwrap();
                let mut direct = 0.0;
                for s in 0..g.n_modes() {
                    let k = g.mode(s);
                    if k.abs() != kbar {
                        direct -= g.omega(k) * field.amplitudes()[s].norm_sqr() * g.dp();
                    }
                }
                assert!((got - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn phase_rotation_invariance() {
        let g = grid();
        let vac = VacuumGaussian::new(g);
        let q = nphoton_polynomial(3).drop_contact_terms();
        let field = random_field(3, g);
        let base = evaluate_log_density(&q, &field, 12, &vac).unwrap();
        for theta in [0.3, 1.7, -2.9] {
            let rotated = field.rotate_phase(12, theta).rotate_phase(5, -theta);
            let v = evaluate_log_density(&q, &rotated, 12, &vac).unwrap();
            assert!((v - base).abs() < 1e-12 * base.abs().max(1.0));
        }
    }
}
