//! Acceptance checks, each comparing a library result against an independent
//! oracle or a closed form.

use std::f64::consts::PI;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Gamma as GammaLaw};

use crate::error::{Error, Result};
use crate::lattice::{
    autocorrelation, circular_autocorrelation, parseval_energy, spectral_density, spectral_energy,
    GridSpec, RealField, Transformer,
};
use crate::optimizer::{
    ascent_maximize, counter_propagating_extremum, most_likely_autocorrelation,
    most_likely_density, AscentOptions, PhotonContent,
};
use crate::sampler::{
    expected_density, moment_summary, run_ensemble, EnsembleOptions, EnsembleSpec, Execution,
    Sampler,
};
use crate::wavefunctional::{
    mode_eigenvalue_check, mode_eigenvalue_residual, nphoton_polynomial, two_photon_expression,
    Monomial, PhotonPolynomial,
};

/// `(id, description)` of every criterion, in run order.
pub const CRITERIA: [(&str, &str); 10] = [
    (
        "contact_polynomials",
        "Q_0..Q_4 match the explicit forms term for term",
    ),
    (
        "hermite_closed_form",
        "Q_n equals the mapped Hermite polynomial H_n for n <= 20",
    ),
    (
        "single_photon_maximizer",
        "ascent from a flat start reaches the single-pair spike",
    ),
    (
        "photon_number_scaling",
        "peak ratio between n-photon and 1-photon content is n",
    ),
    (
        "sinusoidal_autocorrelation",
        "most likely autocorrelation is cos(p x)/|p|",
    ),
    (
        "counter_propagating_null",
        "counter-propagating pair gives D = 0 with sign certificate",
    ),
    (
        "sampling_moments",
        "ensemble mean densities match vacuum level and photon excess",
    ),
    (
        "radial_distribution_ks",
        "|A(k)|^2 passes KS against Gamma(n+1, 2 w dp)",
    ),
    (
        "mode_eigenvalue_order",
        "per-mode eigenvalue residual converges at second order",
    ),
    (
        "lattice_identities",
        "Parseval and Wiener-Khinchin on random fields",
    ),
];

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub grid: GridSpec,
    /// `|p̄|` of the photon mode; must lie on the grid.
    pub photon_momentum: f64,
    pub samples: u64,
    pub ks_samples: u64,
    pub batches: u64,
    pub seed: u64,
    pub random_fields: usize,
    pub hermite_max: u32,
    pub fd_step: f64,
    pub execution: Execution,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::new(128, 20.0 * PI).expect("default grid"),
            photon_momentum: 1.0,
            samples: 100_000,
            ks_samples: 10_000,
            batches: crate::sampler::DEFAULT_BATCHES,
            seed: 20_240_601,
            random_fields: 1000,
            hermite_max: 20,
            fd_step: 1e-2,
            execution: Execution::Parallel,
        }
    }
}

impl VerifyConfig {
    fn photon_mode(&self) -> Result<i64> {
        let k = self.grid.mode_for_momentum(self.photon_momentum)?;
        self.grid.check_photon_mode(k)?;
        Ok(k.abs())
    }

    /// A second distinct, non-opposite photon mode for the two-momentum checks.
    fn second_mode(&self, k: i64) -> Result<i64> {
        let h = self.grid.nyquist();
        [2 * k, k + 1, k - 1]
            .into_iter()
            .find(|&m| m > 0 && m < h && m != k)
            .map(|m| -m)
            .ok_or_else(|| Error::InvalidGrid("grid too small for two photon modes".into()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Runs one criterion by id. Errors inside a criterion count as a failure.
pub fn run_criterion(id: &str, cfg: &VerifyConfig) -> Result<CriterionResult> {
    let (id, _) = CRITERIA
        .iter()
        .find(|(c, _)| *c == id)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown criterion {id}")))?;
    let start = Instant::now();
    let outcome = match *id {
        "contact_polynomials" => contact_polynomials(),
        "hermite_closed_form" => hermite_closed_form(cfg),
        "single_photon_maximizer" => single_photon_maximizer(cfg),
        "photon_number_scaling" => photon_number_scaling(cfg),
        "sinusoidal_autocorrelation" => sinusoidal_autocorrelation(cfg),
        "counter_propagating_null" => counter_propagating_null(cfg),
        "sampling_moments" => sampling_moments(cfg),
        "radial_distribution_ks" => radial_distribution_ks(cfg),
        "mode_eigenvalue_order" => mode_eigenvalue_order(cfg),
        "lattice_identities" => lattice_identities(cfg),
        _ => unreachable!("id taken from CRITERIA"),
    };
    let (passed, detail) = match outcome {
        Ok(pair) => pair,
        Err(e) => (false, format!("error: {e}")),
    };
    Ok(CriterionResult {
        id,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_all(cfg: &VerifyConfig) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|(id, _)| run_criterion(id, cfg).expect("known id"))
        .collect()
}

type Outcome = Result<(bool, String)>;

/// The explicit forms of `Q_0..Q_4`, typed in rather than generated.
pub fn explicit_polynomial(n: u32) -> Option<PhotonPolynomial> {
    let m = Monomial::new;
    let terms = match n {
        0 => vec![m(1, 0, 0, 0)],
        1 => vec![m(2, 1, 0, 1)],
        2 => vec![m(4, 2, 0, 2), m(-2, 0, 1, 1)],
        3 => vec![m(8, 3, 0, 3), m(-12, 1, 1, 2)],
        4 => vec![m(16, 4, 0, 4), m(-48, 2, 1, 3), m(12, 0, 2, 2)],
        _ => return None,
    };
    Some(PhotonPolynomial::new(n, terms).expect("homogeneous"))
}

fn contact_polynomials() -> Outcome {
    let texts = [
        "1",
        "2|p|a",
        "2|p|(2|p|a^2 - d)",
        "4|p|^2(2|p|a^3 - 3ad)",
        "4|p|^2(4|p|^2a^4 - 12|p|a^2d + 3d^2)",
    ];
    let mut bad = vec![];
    for n in 0..=4u32 {
        let q = nphoton_polynomial(n);
        if Some(&q) != explicit_polynomial(n).as_ref() || q.to_string() != texts[n as usize] {
            bad.push(format!("Q_{n} = {q}"));
        }
        let leading =
            PhotonPolynomial::new(n, vec![Monomial::new(BigInt::from(2).pow(n), n, 0, n)])?;
        if q.drop_contact_terms() != leading {
            bad.push(format!("contact-free Q_{n}"));
        }
    }
    Ok(if bad.is_empty() {
        (true, "Q_0..Q_4 exact".into())
    } else {
        (false, format!("mismatch: {}", bad.join("; ")))
    })
}

/// Coefficients of the physicists' Hermite polynomial, `c[j]` of `x^j`, from
/// `H_n = 2x H_{n-1} - H'_{n-1}`.
pub fn hermite_coefficients(n: u32) -> Vec<BigInt> {
    let mut h = vec![BigInt::from(1)];
    for _ in 0..n {
        let mut next = vec![BigInt::zero(); h.len() + 1];
        for (j, c) in h.iter().enumerate() {
            next[j + 1] += c * 2;
            if j > 0 {
                next[j - 1] -= c * j;
            }
        }
        h = next;
    }
    h
}

/// `(|p| d)^{n/2} H_n(a sqrt(|p|/d))`: `x^{n-2k}` becomes `a^{n-2k} d^k |p|^{n-k}`.
pub fn hermite_image(n: u32) -> Result<PhotonPolynomial> {
    let terms = hermite_coefficients(n)
        .into_iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(j, c)| {
            let j = j as u32;
            let k = (n - j) / 2;
            Monomial::new(c, j, k, n - k)
        })
        .collect();
    PhotonPolynomial::new(n, terms)
}

fn hermite_closed_form(cfg: &VerifyConfig) -> Outcome {
    let mut bad = vec![];
    for n in 0..=cfg.hermite_max {
        if nphoton_polynomial(n) != hermite_image(n)? {
            bad.push(n.to_string());
        }
    }
    Ok(if bad.is_empty() {
        (true, format!("exact for n = 0..{}", cfg.hermite_max))
    } else {
        (false, format!("differs at n = {}", bad.join(",")))
    })
}

fn single_photon_maximizer(cfg: &VerifyConfig) -> Outcome {
    let g = cfg.grid;
    let k = cfg.photon_mode()?;
    let content = PhotonContent::single(k, 1);
    let closed = most_likely_density(&g, &content)?;
    let target = 1.0 / (2.0 * g.omega(k) * g.dp());
    let flat = crate::lattice::DensityField::flat(g, 1.0)?;
    let ascent = ascent_maximize(&content, &flat, AscentOptions::default())?;
    let peak = ascent.density.at(k);
    let peak_err = (peak - target).abs() / target;
    let off_peak = g
        .modes()
        .filter(|m| m.abs() != k)
        .map(|m| ascent.density.at(m))
        .fold(0.0, f64::max);
    let closed_err = (closed.density.at(k) - target).abs() / target;
    let passed =
        ascent.converged && peak_err < 1e-6 && off_peak < 1e-6 * peak && closed_err < 1e-12;
    Ok((
        passed,
        format!(
            "peak {peak:.12} target {target:.12} rel {peak_err:.2e}; max off-peak/peak {:.2e}; {} iterations",
            off_peak / peak,
            ascent.iterations
        ),
    ))
}

fn photon_number_scaling(cfg: &VerifyConfig) -> Outcome {
    let g = cfg.grid;
    let k = cfg.photon_mode()?;
    let flat = crate::lattice::DensityField::flat(g, 1.0)?;
    let one = most_likely_density(&g, &PhotonContent::single(k, 1))?
        .density
        .at(k);
    let one_ascent = ascent_maximize(
        &PhotonContent::single(k, 1),
        &flat,
        AscentOptions::default(),
    )?;
    let mut passed = one_ascent.converged;
    let mut parts = vec![];
    for n in 2..=4u32 {
        let content = PhotonContent::single(k, n);
        let closed = most_likely_density(&g, &content)?.density.at(k) / one;
        let ascent = ascent_maximize(&content, &flat, AscentOptions::default())?;
        let ratio = ascent.density.at(k) / one_ascent.density.at(k);
        passed &= closed == n as f64 && (ratio - n as f64).abs() < 1e-4 && ascent.converged;
        parts.push(format!("n={n}: closed {closed} ascent {ratio:.9}"));
    }
    Ok((passed, parts.join("; ")))
}

fn max_deviation(field: &RealField, f: impl Fn(f64) -> f64) -> f64 {
    let g = field.grid();
    field
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| (v - f(g.position(j))).abs())
        .fold(0.0, f64::max)
}

fn sinusoidal_autocorrelation(cfg: &VerifyConfig) -> Outcome {
    let g = cfg.grid;
    let k = cfg.photon_mode()?;
    let k2 = cfg.second_mode(k)?;
    let (p1, p2) = (g.momentum(k), g.momentum(k2));
    let single = most_likely_autocorrelation(&g, &PhotonContent::single(k, 1))?;
    let e1 = max_deviation(&single, |x| (p1 * x).cos() / p1.abs());
    let pair = most_likely_autocorrelation(&g, &PhotonContent::pair(k, k2))?;
    let e2 = max_deviation(&pair, |x| {
        (p1 * x).cos() / p1.abs() + (p2 * x).cos() / p2.abs()
    });
    Ok((
        e1 < 1e-9 && e2 < 1e-9,
        format!("single max error {e1:.2e}; modes ({k},{k2}) max error {e2:.2e}"),
    ))
}

fn counter_propagating_null(cfg: &VerifyConfig) -> Outcome {
    let g = cfg.grid;
    let k = cfg.photon_mode()?;
    let cert = counter_propagating_extremum(&g, k)?;
    let all_zero = cert.report.density.values().iter().all(|&v| v == 0.0);
    let signs = cert.certificate.derivatives.iter().all(|&(_, d)| d <= 0.0);
    let expr = two_photon_expression(&g, k, -k)?;
    let dominant = expr.reduced();
    let density_free = dominant.to_string().find('D').is_none();
    let flat = crate::lattice::DensityField::flat(g, 1.0)?;
    let ascent = ascent_maximize(&PhotonContent::pair(k, -k), &flat, AscentOptions::default())?;
    let ascent_zero = ascent.density.values().iter().all(|&v| v == 0.0);
    Ok((
        all_zero && signs && cert.certificate.passed && density_free && ascent_zero,
        format!(
            "D = 0: {all_zero}; {} nonpositive derivatives: {signs}; dominant term {dominant}; ascent reaches 0: {ascent_zero}",
            cert.certificate.derivatives.len()
        ),
    ))
}

fn sampling_moments(cfg: &VerifyConfig) -> Outcome {
    let g = cfg.grid;
    let k = cfg.photon_mode()?;
    let options = EnsembleOptions {
        autocorrelation: false,
        execution: cfg.execution,
    };
    let vacuum = PhotonContent::vacuum();
    let spec = EnsembleSpec::with_batches(g, vacuum.clone(), cfg.samples, cfg.seed, cfg.batches)?;
    let stats = run_ensemble(&spec, options)?;
    let fraction = moment_summary(&stats, &vacuum)?.fraction_within_3se;
    let mut passed = fraction >= 0.95;
    let mut parts = vec![format!(
        "vacuum {:.1}% of modes within 3 se",
        100.0 * fraction
    )];
    for (i, n) in [1u32, 4].into_iter().enumerate() {
        let content = PhotonContent::single(k, n);
        let spec = EnsembleSpec::with_batches(
            g,
            content.clone(),
            cfg.samples,
            cfg.seed.wrapping_add(1 + i as u64),
            cfg.batches,
        )?;
        let stats = run_ensemble(&spec, options)?;
        let vacuum_level = expected_density(&g, &vacuum, k)?;
        let excess = stats.mean_density.at(k) - vacuum_level;
        let target = n as f64 / (2.0 * g.omega(k) * g.dp());
        let z = (excess - target) / stats.density_stderr[g.slot(k)];
        passed &= z.abs() < 3.0;
        parts.push(format!(
            "n={n} excess {excess:.4} vs {target:.4} (z {z:.2})"
        ));
    }
    Ok((passed, parts.join("; ")))
}

/// Two-sided Kolmogorov-Smirnov statistic of `values` against `cdf`.
pub fn ks_statistic(mut values: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic.
pub fn ks_critical_1pct(n: u64) -> f64 {
    1.6276 / (n as f64).sqrt()
}

fn radial_distribution_ks(cfg: &VerifyConfig) -> Outcome {
    let g = cfg.grid;
    let k = cfg.photon_mode()?;
    let critical = ks_critical_1pct(cfg.ks_samples);
    let mut passed = true;
    let mut parts = vec![];
    for (i, n) in [0u32, 1, 3].into_iter().enumerate() {
        let content = if n == 0 {
            PhotonContent::vacuum()
        } else {
            PhotonContent::single(k, n)
        };
        let sampler = Sampler::new(g, &content, cfg.seed.wrapping_add(100 + i as u64))?;
        let values: Vec<f64> = sampler
            .stream(cfg.ks_samples)
            .map(|f| f.at(k).norm_sqr())
            .collect();
        let law = GammaLaw::new(n as f64 + 1.0, 2.0 * g.omega(k) * g.dp())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let d = ks_statistic(values, |x| law.cdf(x));
        passed &= d < critical;
        parts.push(format!("n={n} D={d:.4}"));
    }
    Ok((
        passed,
        format!("{} (critical {critical:.4})", parts.join(", ")),
    ))
}

fn mode_eigenvalue_order(cfg: &VerifyConfig) -> Outcome {
    let k = cfg.photon_mode()?;
    let omega = cfg.grid.omega(k);
    let mut passed = true;
    let mut parts = vec![];
    for n in 0..=2u32 {
        let c = mode_eigenvalue_check(n, omega, cfg.fd_step)?;
        passed &= c.observed_order >= 1.9;
        parts.push(format!("n={n} order {:.3}", c.observed_order));
    }
    let fine = mode_eigenvalue_residual(0, omega, 1e-3)?;
    parts.push(format!("n=0 residual {fine:.2e} at h=1e-3"));
    Ok((passed && fine < 1e-6, parts.join("; ")))
}

fn lattice_identities(cfg: &VerifyConfig) -> Outcome {
    let g = cfg.grid;
    let t = Transformer::new(g);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut parseval, mut wk): (f64, f64) = (0.0, 0.0);
    for _ in 0..cfg.random_fields {
        let mut v: Vec<f64> = (0..g.n_modes()).map(|_| normal.sample(&mut rng)).collect();
        if !g.include_zero_mode() {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter_mut().for_each(|x| *x -= mean);
        }
        let field = RealField::new(g, v)?;
        let spec = t.forward(&field)?;
        let e = parseval_energy(&field);
        parseval = parseval.max((e - spectral_energy(&spec)).abs() / e);
        let direct = circular_autocorrelation(&field);
        let via_density = autocorrelation(&spectral_density(&spec))?;
        let scale = direct.values()[0];
        for (a, b) in direct.values().iter().zip(via_density.values()) {
            wk = wk.max((a - b).abs() / scale);
        }
    }
    Ok((
        parseval < 1e-12 && wk < 1e-10,
        format!(
            "{} fields: Parseval rel {parseval:.2e}, Wiener-Khinchin rel {wk:.2e}",
            cfg.random_fields
        ),
    ))
}
