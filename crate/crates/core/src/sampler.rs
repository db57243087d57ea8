//! Exact Monte Carlo sampling of `|Ψ|²` on the lattice.
//!
//! `|Ψ|²` factorizes over mode pairs, so each pair is drawn independently:
//! the complex amplitude `z = Ã(p_k)` of a vacuum pair has density
//! `∝ exp(-2 ω_k dp |z|²)`, and a pair holding `n` photons picks up `|z|^{2n}`,
//! which makes `|z|²` Gamma distributed with shape `n + 1` and rate `2 ω_k dp`
//! and leaves the phase uniform. Self-conjugate modes (Nyquist, and the zero mode
//! when retained) are real Gaussians of variance `1 / (2 ω_k dp)`.
//!
//! Sample `i` of a run is drawn from ChaCha stream `i` under the run seed, so a
//! stream does not depend on how it is cut into batches or threads.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{
    circular_autocorrelation, DensityField, GridSpec, RealField, SpectralField, Transformer,
};
use crate::optimizer::{ContentShape, PhotonContent};

pub const DEFAULT_BATCHES: u64 = 16;

#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    pub grid: GridSpec,
    pub content: PhotonContent,
    pub sample_count: u64,
    pub seed: u64,
    pub batch_size: u64,
}

impl EnsembleSpec {
    /// Spec split into [`DEFAULT_BATCHES`] batches.
    pub fn new(
        grid: GridSpec,
        content: PhotonContent,
        sample_count: u64,
        seed: u64,
    ) -> Result<Self> {
        Self::with_batches(grid, content, sample_count, seed, DEFAULT_BATCHES)
    }

    /// `batches` batches of (nearly) equal size.
    pub fn with_batches(
        grid: GridSpec,
        content: PhotonContent,
        sample_count: u64,
        seed: u64,
        batches: u64,
    ) -> Result<Self> {
        if batches == 0 {
            return Err(Error::InvalidArgument("batches must be positive".into()));
        }
        let spec = Self {
            grid,
            content,
            sample_count,
            seed,
            batch_size: sample_count.div_ceil(batches).max(1),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::InvalidArgument(
                "sample_count must be positive".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        self.content.validate(&self.grid)?;
        Ok(())
    }

    pub fn batch_count(&self) -> u64 {
        self.sample_count.div_ceil(self.batch_size)
    }

    fn batch_range(&self, b: u64) -> std::ops::Range<u64> {
        let start = b * self.batch_size;
        start..(start + self.batch_size).min(self.sample_count)
    }
}

#[derive(Clone, Copy, Debug)]
enum ModeLaw {
    Pinned,
    /// Real amplitude, `N(0, variance)`.
    Real {
        sd: f64,
    },
    /// Complex pair amplitude with i.i.d. real and imaginary parts.
    Pair {
        sd: f64,
    },
    /// `|z|² ~ Gamma(shape, 1/rate)`, uniform phase.
    Photon {
        shape: f64,
        rate: f64,
    },
}

/// Per-mode laws for one grid and photon content.
#[derive(Clone, Debug)]
pub struct Sampler {
    grid: GridSpec,
    seed: u64,
    laws: Vec<ModeLaw>,
}

impl Sampler {
    pub fn new(grid: GridSpec, content: &PhotonContent, seed: u64) -> Result<Self> {
        let photons: Vec<(i64, u32)> =
            match content.validate(&grid)? {
                ContentShape::CounterPropagating { .. } => return Err(Error::UnsupportedContent(
                    "a counter-propagating pair is dominated by a squared contact term and has \
                     no normalizable lattice density; see counter_propagating_extremum"
                        .into(),
                )),
                ContentShape::Vacuum => vec![],
                ContentShape::Single { mode, count } => vec![(mode.abs(), count)],
                ContentShape::Distinct { k1, k2 } => vec![(k1.abs(), 1), (k2.abs(), 1)],
            };
        let dp = grid.dp();
        let h = grid.nyquist();
        let laws = (0..=h)
            .map(|k| {
                let omega = grid.omega(k);
                if !grid.is_retained(k) {
                    ModeLaw::Pinned
                } else if k == 0 || k == h {
                    ModeLaw::Real {
                        sd: (1.0 / (2.0 * omega * dp)).sqrt(),
                    }
                } else if let Some(&(_, n)) = photons.iter().find(|(m, _)| *m == k) {
                    ModeLaw::Photon {
                        shape: n as f64 + 1.0,
                        rate: 2.0 * omega * dp,
                    }
                } else {
                    ModeLaw::Pair {
                        sd: (1.0 / (4.0 * omega * dp)).sqrt(),
                    }
                }
            })
            .collect();
        Ok(Self { grid, seed, laws })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Sample number `id` of the run.
    pub fn sample(&self, id: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        let grid = &self.grid;
        let mut amps = vec![Complex64::new(0.0, 0.0); grid.n_modes()];
        let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
        for (k, law) in self.laws.iter().enumerate() {
            let k = k as i64;
            let z = match *law {
                ModeLaw::Pinned => continue,
                ModeLaw::Real { sd } => Complex64::new(sd * std_normal.sample(&mut rng), 0.0),
                ModeLaw::Pair { sd } => Complex64::new(
                    sd * std_normal.sample(&mut rng),
                    sd * std_normal.sample(&mut rng),
                ),
                ModeLaw::Photon { shape, rate } => {
                    let s: f64 = Gamma::new(shape, 1.0 / rate)
                        .expect("positive gamma parameters")
                        .sample(&mut rng);
                    let phase = rng.random_range(0.0..2.0 * PI);
                    Complex64::from_polar(s.sqrt(), phase)
                }
            };
            amps[grid.slot(k)] = z;
            amps[grid.slot(-k)] = z.conj();
        }
        SpectralField::symmetrized(*grid, amps)
    }

    pub fn stream(&self, count: u64) -> impl Iterator<Item = SpectralField> + '_ {
        (0..count).map(move |id| self.sample(id))
    }
}

/// Vacuum samples for a spec whose content is the vacuum.
pub fn sample_vacuum(spec: &EnsembleSpec) -> Result<impl Iterator<Item = SpectralField>> {
    if spec.content.total_photons() != 0 {
        return Err(Error::InvalidArgument(
            "sample_vacuum needs vacuum content".into(),
        ));
    }
    sample_photons(spec)
}

/// Samples of the spec's photon content (vacuum included).
pub fn sample_photons(spec: &EnsembleSpec) -> Result<impl Iterator<Item = SpectralField>> {
    spec.validate()?;
    let sampler = Sampler::new(spec.grid, &spec.content, spec.seed)?;
    Ok((0..spec.sample_count).map(move |id| sampler.sample(id)))
}

/// Expected `E[D(p_k)]`: `(n_k + 1) / (2 ω_k dp)` on a pair holding `n_k` photons.
pub fn expected_density(grid: &GridSpec, content: &PhotonContent, k: i64) -> Result<f64> {
    if !grid.is_retained(k) {
        return Ok(0.0);
    }
    let n: u32 = content
        .log_weights(grid)?
        .iter()
        .filter(|(m, _)| *m == k.abs())
        .map(|(_, n)| n)
        .sum();
    Ok((n as f64 + 1.0) / (2.0 * grid.omega(k) * grid.dp()))
}

#[derive(Clone, Debug)]
struct BatchAccumulator {
    count: u64,
    sum_d: Vec<f64>,
    sum_d2: Vec<f64>,
    sum_r: Vec<f64>,
    sum_r2: Vec<f64>,
}

impl BatchAccumulator {
    fn new(n: usize, with_autocorr: bool) -> Self {
        let m = if with_autocorr { n } else { 0 };
        Self {
            count: 0,
            sum_d: vec![0.0; n],
            sum_d2: vec![0.0; n],
            sum_r: vec![0.0; m],
            sum_r2: vec![0.0; m],
        }
    }

    fn push(&mut self, field: &SpectralField, transformer: Option<&Transformer>) -> Result<()> {
        self.count += 1;
        for (s, z) in field.amplitudes().iter().enumerate() {
            let d = z.norm_sqr();
            self.sum_d[s] += d;
            self.sum_d2[s] += d * d;
        }
        if let Some(t) = transformer {
            let r = circular_autocorrelation(&t.inverse(field)?);
            for (j, v) in r.values().iter().enumerate() {
                self.sum_r[j] += v;
                self.sum_r2[j] += v * v;
            }
        }
        Ok(())
    }
}

/// Ensemble means with batch-means standard errors (per-sample errors when the
/// run has a single batch).
#[derive(Clone, Debug)]
pub struct EnsembleStats {
    pub mean_density: DensityField,
    pub density_stderr: Vec<f64>,
    pub mean_autocorr: Option<RealField>,
    pub autocorr_stderr: Option<Vec<f64>>,
    pub n_samples: u64,
    pub n_batches: usize,
}

fn mean_and_stderr(
    batches: &[BatchAccumulator],
    sum: impl Fn(&BatchAccumulator) -> &[f64],
    sum2: impl Fn(&BatchAccumulator) -> &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let total: u64 = batches.iter().map(|b| b.count).sum();
    let nt = total as f64;
    let len = sum(&batches[0]).len();
    let mut mean = vec![0.0; len];
    for b in batches {
        for (m, s) in mean.iter_mut().zip(sum(b)) {
            *m += s;
        }
    }
    mean.iter_mut().for_each(|m| *m /= nt);

    let nb = batches.len();
    let stderr = if nb >= 2 {
        let mut acc = vec![0.0; len];
        for b in batches {
            let w = b.count as f64 / nt;
            for ((a, s), m) in acc.iter_mut().zip(sum(b)).zip(&mean) {
                let bm = s / b.count as f64;
                *a += w * w * (bm - m) * (bm - m);
            }
        }
        let factor = nb as f64 / (nb as f64 - 1.0);
        acc.into_iter().map(|a| (factor * a).sqrt()).collect()
    } else {
        let mut sq = vec![0.0; len];
        for b in batches {
            for (q, s) in sq.iter_mut().zip(sum2(b)) {
                *q += s;
            }
        }
        sq.iter()
            .zip(&mean)
            .map(|(q, m)| {
                let var = (q / nt - m * m).max(0.0) * nt / (nt - 1.0);
                (var / nt).sqrt()
            })
            .collect()
    };
    (mean, stderr)
}

fn finish(
    grid: GridSpec,
    batches: Vec<BatchAccumulator>,
    with_autocorr: bool,
) -> Result<EnsembleStats> {
    let batches: Vec<BatchAccumulator> = batches.into_iter().filter(|b| b.count > 0).collect();
    let n_samples: u64 = batches.iter().map(|b| b.count).sum();
    if n_samples < 2 {
        return Err(Error::InvalidArgument(
            "estimators need at least 2 samples".into(),
        ));
    }
    let (mean_d, density_stderr) = mean_and_stderr(&batches, |b| &b.sum_d, |b| &b.sum_d2);
    let (mean_autocorr, autocorr_stderr) = if with_autocorr {
        let (mean_r, se_r) = mean_and_stderr(&batches, |b| &b.sum_r, |b| &b.sum_r2);
        (Some(RealField::new(grid, mean_r)?), Some(se_r))
    } else {
        (None, None)
    };
    Ok(EnsembleStats {
        mean_density: DensityField::new(grid, mean_d)?,
        density_stderr,
        mean_autocorr,
        autocorr_stderr,
        n_samples,
        n_batches: batches.len(),
    })
}

fn estimate(
    stream: impl IntoIterator<Item = SpectralField>,
    spec: &EnsembleSpec,
    with_autocorr: bool,
) -> Result<EnsembleStats> {
    let n = spec.grid.n_modes();
    let transformer = with_autocorr.then(|| Transformer::new(spec.grid));
    let mut batches = vec![BatchAccumulator::new(n, with_autocorr)];
    for field in stream {
        if field.grid() != &spec.grid {
            return Err(Error::InvalidArgument(
                "sample grid differs from spec".into(),
            ));
        }
        if batches.last().is_some_and(|b| b.count == spec.batch_size) {
            batches.push(BatchAccumulator::new(n, with_autocorr));
        }
        batches
            .last_mut()
            .expect("at least one batch")
            .push(&field, transformer.as_ref())?;
    }
    finish(spec.grid, batches, with_autocorr)
}

/// Per-mode mean and standard error of `D = |Ã|²` over a stream, batched by
/// `spec.batch_size`.
pub fn estimate_density(
    stream: impl IntoIterator<Item = SpectralField>,
    spec: &EnsembleSpec,
) -> Result<EnsembleStats> {
    estimate(stream, spec, false)
}

/// As [`estimate_density`], plus `R̂(x) = Σ_j A(x_j) A(x_j + x) dx` summed directly
/// in real space for every sample.
pub fn estimate_autocorrelation(
    stream: impl IntoIterator<Item = SpectralField>,
    spec: &EnsembleSpec,
) -> Result<EnsembleStats> {
    estimate(stream, spec, true)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Batches on the rayon pool; sequential when built without `parallel`.
    #[default]
    Parallel,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EnsembleOptions {
    pub autocorrelation: bool,
    pub execution: Execution,
}

/// Draws and reduces the whole ensemble, batch by batch. Batches are reduced in
/// index order, so results do not depend on the execution mode or thread count.
pub fn run_ensemble(spec: &EnsembleSpec, options: EnsembleOptions) -> Result<EnsembleStats> {
    spec.validate()?;
    let sampler = Sampler::new(spec.grid, &spec.content, spec.seed)?;
    let n = spec.grid.n_modes();
    let with_autocorr = options.autocorrelation;
    let run_batch = |b: u64| -> Result<BatchAccumulator> {
        let transformer = with_autocorr.then(|| Transformer::new(spec.grid));
        let mut acc = BatchAccumulator::new(n, with_autocorr);
        for id in spec.batch_range(b) {
            acc.push(&sampler.sample(id), transformer.as_ref())?;
        }
        Ok(acc)
    };
    let batches: Result<Vec<BatchAccumulator>> = match options.execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..spec.batch_count())
                .into_par_iter()
                .map(run_batch)
                .collect()
        }
        _ => (0..spec.batch_count()).map(run_batch).collect(),
    };
    finish(spec.grid, batches?, with_autocorr)
}

impl EnsembleStats {
    pub fn to_json(&self) -> serde_json::Value {
        let grid = self.mean_density.grid();
        let by_mode = |v: &[f64]| -> Vec<f64> { grid.modes().map(|k| v[grid.slot(k)]).collect() };
        serde_json::json!({
            "grid": grid,
            "n_samples": self.n_samples,
            "n_batches": self.n_batches,
            "mean_density": by_mode(self.mean_density.values()),
            "density_stderr": by_mode(&self.density_stderr),
            "mean_autocorr": self.mean_autocorr.as_ref().map(|r| r.values().to_vec()),
            "autocorr_stderr": self.autocorr_stderr,
        })
    }

    /// `index,coordinate,mean,stderr` in ascending mode order.
    pub fn write_density_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let grid = self.mean_density.grid();
        writeln!(out, "index,coordinate,mean,stderr")?;
        for k in grid.modes() {
            writeln!(
                out,
                "{},{},{},{}",
                k,
                grid.momentum(k),
                self.mean_density.at(k),
                self.density_stderr[grid.slot(k)]
            )?;
        }
        Ok(())
    }

    /// `index,coordinate,mean,stderr` over lattice lags; nothing when the run did
    /// not estimate the autocorrelation.
    pub fn write_autocorr_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let (Some(r), Some(se)) = (&self.mean_autocorr, &self.autocorr_stderr) else {
            return Ok(());
        };
        writeln!(out, "index,coordinate,mean,stderr")?;
        for (j, (v, e)) in r.values().iter().zip(se).enumerate() {
            writeln!(out, "{},{},{},{}", j, r.grid().position(j), v, e)?;
        }
        Ok(())
    }
}

/// Writes every sample as `sample_id,k,re,im` rows.
pub fn write_samples_csv<W: Write>(spec: &EnsembleSpec, mut out: W) -> Result<()> {
    writeln!(out, "sample_id,k,re,im")?;
    for (id, field) in sample_photons(spec)?.enumerate() {
        for k in spec.grid.modes() {
            let z = field.at(k);
            writeln!(out, "{},{},{},{}", id, k, z.re, z.im)?;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentSummary {
    /// Fraction of retained modes whose mean density lies within 3 standard
    /// errors of its expectation.
    pub fraction_within_3se: f64,
    /// `(k, z-score)` for photon modes: (mean - expected) / stderr.
    pub worst_photon_z: Option<(i64, f64)>,
}

/// Compares an ensemble's mean density with [`expected_density`] mode by mode.
pub fn moment_summary(stats: &EnsembleStats, content: &PhotonContent) -> Result<MomentSummary> {
    let grid = *stats.mean_density.grid();
    let photon_modes: Vec<i64> = content
        .log_weights(&grid)?
        .iter()
        .map(|(k, _)| *k)
        .collect();
    let (mut inside, mut total) = (0usize, 0usize);
    let mut worst: Option<(i64, f64)> = None;
    for k in grid.modes().filter(|&k| grid.is_retained(k)) {
        let z = (stats.mean_density.at(k) - expected_density(&grid, content, k)?)
            / stats.density_stderr[grid.slot(k)];
        total += 1;
        if z.abs() <= 3.0 {
            inside += 1;
        }
        if photon_modes.contains(&k.abs()) && worst.is_none_or(|(_, w)| z.abs() > w.abs()) {
            worst = Some((k, z));
        }
    }
    Ok(MomentSummary {
        fraction_within_3se: inside as f64 / total as f64,
        worst_photon_z: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(128, 20.0 * PI).unwrap()
    }

    #[test]
    fn samples_are_hermitian_and_deterministic() {
        let g = grid();
        let s = Sampler::new(g, &PhotonContent::single(10, 2), 7).unwrap();
        let a = s.sample(3);
        assert_eq!(a, s.sample(3));
        assert_ne!(a, s.sample(4));
        for k in 1..g.nyquist() {
            assert_eq!(a.at(-k), a.at(k).conj());
        }
        assert_eq!(a.at(0), Complex64::new(0.0, 0.0));
        assert_eq!(a.at(g.nyquist()).im, 0.0);
    }

    #[test]
    fn counter_propagating_sampling_refused() {
        let g = grid();
        let spec = EnsembleSpec::new(g, PhotonContent::pair(10, -10), 10, 1).unwrap();
        assert!(matches!(
            sample_photons(&spec).map(|_| ()),
            Err(Error::UnsupportedContent(_))
        ));
        assert!(
            sample_vacuum(&EnsembleSpec::new(g, PhotonContent::single(3, 1), 10, 1).unwrap())
                .is_err()
        );
    }

    #[test]
    fn vacuum_moments() {
        let g = grid();
        let spec = EnsembleSpec::new(g, PhotonContent::vacuum(), 100_000, 11).unwrap();
        let stats = run_ensemble(&spec, EnsembleOptions::default()).unwrap();
        let summary = moment_summary(&stats, &spec.content).unwrap();
        assert!(summary.fraction_within_3se >= 0.95, "{summary:?}");
        // ω = 1 at k = 10, dp = 0.1
        assert!((expected_density(&g, &spec.content, 10).unwrap() - 5.0).abs() < 1e-12);
        assert!((stats.mean_density.at(10) - 5.0).abs() < 3.0 * stats.density_stderr[10]);
    }

    #[test]
    fn vacuum_mean_amplitude_and_mode_correlation() {
        let g = grid();
        let n = 100_000u64;
        let s = Sampler::new(g, &PhotonContent::vacuum(), 5).unwrap();
        let (mut sum_z, mut sum_z2) = (Complex64::new(0.0, 0.0), 0.0);
        let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for id in 0..n {
            let f = s.sample(id);
            let z = f.at(10);
            sum_z += z;
            sum_z2 += z.norm_sqr();
            let (x, y) = (f.at(10).norm_sqr(), f.at(11).norm_sqr());
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
        let nf = n as f64;
        let se = (sum_z2 / nf / nf).sqrt();
        assert!((sum_z / nf).norm() < 3.0 * se);
        let cov = sxy / nf - sx * sy / nf / nf;
        let corr = cov / ((sxx / nf - (sx / nf).powi(2)) * (syy / nf - (sy / nf).powi(2))).sqrt();
        assert!(corr.abs() < 3.0 / nf.sqrt(), "corr {corr}");
    }

    #[test]
    fn photon_excess_density() {
        let g = grid();
        for n in [1u32, 4] {
            let content = PhotonContent::single(10, n);
            let spec = EnsembleSpec::new(g, content.clone(), 100_000, 99).unwrap();
            let stats = run_ensemble(&spec, EnsembleOptions::default()).unwrap();
            let expected = (n as f64 + 1.0) / (2.0 * 0.1);
            let se = stats.density_stderr[g.slot(10)];
            assert!((stats.mean_density.at(10) - expected).abs() < 3.0 * se);
            assert_eq!(stats.mean_density.at(10), stats.mean_density.at(-10));
            let off = expected_density(&g, &content, 30).unwrap();
            assert!(
                (stats.mean_density.at(30) - off).abs() < 3.0 * stats.density_stderr[g.slot(30)]
            );
        }
    }

    #[test]
    fn partition_and_execution_independence() {
        let g = GridSpec::new(32, 10.0).unwrap();
        let content = PhotonContent::pair(3, -7);
        let a = EnsembleSpec::with_batches(g, content.clone(), 5000, 42, 16).unwrap();
        let b = EnsembleSpec::with_batches(g, content.clone(), 5000, 42, 7).unwrap();
        let opts = EnsembleOptions {
            autocorrelation: true,
            ..Default::default()
        };
        let sa = run_ensemble(&a, opts).unwrap();
        let sb = run_ensemble(&b, opts).unwrap();
        let seq = run_ensemble(
            &a,
            EnsembleOptions {
                autocorrelation: true,
                execution: Execution::Sequential,
            },
        )
        .unwrap();
        assert_eq!(sa.mean_density, seq.mean_density);
        assert_eq!(sa.density_stderr, seq.density_stderr);
        for (x, y) in sa
            .mean_density
            .values()
            .iter()
            .zip(sb.mean_density.values())
        {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
        let stream = estimate_autocorrelation(sample_photons(&a).unwrap(), &a).unwrap();
        assert_eq!(stream.mean_density, sa.mean_density);
        assert_eq!(stream.mean_autocorr, sa.mean_autocorr);
    }

    #[test]
    fn autocorrelation_identities() {
        let g = GridSpec::new(64, 20.0).unwrap();
        let spec = EnsembleSpec::new(g, PhotonContent::single(5, 1), 400, 3).unwrap();
        let stats = estimate_autocorrelation(sample_photons(&spec).unwrap(), &spec).unwrap();
        let r = stats.mean_autocorr.as_ref().unwrap();
        // R̂(0) is the mean Parseval energy of the samples.
        let t = Transformer::new(g);
        let energy: f64 = sample_photons(&spec)
            .unwrap()
            .map(|f| crate::lattice::parseval_energy(&t.inverse(&f).unwrap()))
            .sum::<f64>()
            / 400.0;
        assert!((r.values()[0] - energy).abs() <= 1e-10 * energy);
        for j in 1..64 {
            assert_eq!(r.values()[j], r.values()[64 - j]);
        }
        // and the transform of the mean density, up to rounding
        let wk = t.autocorrelation(&stats.mean_density).unwrap();
        for (x, y) in r.values().iter().zip(wk.values()) {
            assert!((x - y).abs() <= 1e-10 * energy);
        }
        assert!(stats.autocorr_stderr.unwrap().iter().all(|&e| e >= 0.0));
    }

    #[test]
    fn single_batch_falls_back_to_sample_errors() {
        let g = GridSpec::new(16, 10.0).unwrap();
        let spec = EnsembleSpec::with_batches(g, PhotonContent::vacuum(), 1000, 1, 1).unwrap();
        let stats = estimate_density(sample_photons(&spec).unwrap(), &spec).unwrap();
        assert_eq!(stats.n_batches, 1);
        assert!(stats.density_stderr[1] > 0.0);
        let one = EnsembleSpec::new(g, PhotonContent::vacuum(), 1, 1).unwrap();
        assert!(estimate_density(sample_photons(&one).unwrap(), &one).is_err());
    }

    #[test]
    fn dump_layout() {
        let g = GridSpec::new(8, 10.0).unwrap();
        let spec = EnsembleSpec::new(g, PhotonContent::vacuum(), 3, 1).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&spec, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "sample_id,k,re,im");
        assert_eq!(text.lines().count(), 1 + 3 * 8);
    }
}
