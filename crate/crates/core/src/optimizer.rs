//! Most-likely spectral densities of photon states.
//!
//! For content with photon counts `n_i` at modes `k_i`, the lattice log-probability
//! of an even density `D` is
//!
//! ```text
//! log P(D) = Σ_i n_i log D̄(p_i) - Σ_k ω_k D(p_k) dp
//! ```
//!
//! which is concave on `D ≥ 0`. Its maximizer puts `D(±k_i) = n_i / (2 ω_i dp)` on
//! each photon pair and zero elsewhere: a single-pair spike whose integrated
//! weight `n_i / ω_i` is the lattice form of a delta pair of weight `n_i / (2|p_i|)`
//! each.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{autocorrelation, DensityField, GridSpec, RealField};
use crate::wavefunctional::MomentumCase;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PhotonEntry {
    pub mode: i64,
    pub count: u32,
}

/// Which modes hold photons. Supported: vacuum, one mode with any count, or two
/// modes with one photon each.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhotonContent {
    entries: Vec<PhotonEntry>,
}

/// Normalized form of a [`PhotonContent`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContentShape {
    Vacuum,
    Single { mode: i64, count: u32 },
    Distinct { k1: i64, k2: i64 },
    CounterPropagating { mode: i64 },
}

impl PhotonContent {
    pub fn vacuum() -> Self {
        Self { entries: vec![] }
    }

    pub fn single(mode: i64, count: u32) -> Self {
        if count == 0 {
            return Self::vacuum();
        }
        Self {
            entries: vec![PhotonEntry { mode, count }],
        }
    }

    /// One photon at `k1` and one at `k2`.
    pub fn pair(k1: i64, k2: i64) -> Self {
        Self {
            entries: vec![
                PhotonEntry { mode: k1, count: 1 },
                PhotonEntry { mode: k2, count: 1 },
            ],
        }
    }

    pub fn from_entries(entries: Vec<PhotonEntry>) -> Result<Self> {
        let content = Self {
            entries: entries.into_iter().filter(|e| e.count > 0).collect(),
        };
        content.shape()?;
        Ok(content)
    }

    pub fn entries(&self) -> &[PhotonEntry] {
        &self.entries
    }

    pub fn total_photons(&self) -> u32 {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn shape(&self) -> Result<ContentShape> {
        match self.entries.as_slice() {
            [] => Ok(ContentShape::Vacuum),
            [e] => Ok(ContentShape::Single {
                mode: e.mode,
                count: e.count,
            }),
            [a, b] if a.count == 1 && b.count == 1 => {
                Ok(match MomentumCase::classify(a.mode, b.mode) {
                    MomentumCase::Coincident => ContentShape::Single {
                        mode: a.mode,
                        count: 2,
                    },
                    MomentumCase::CounterPropagating => {
                        ContentShape::CounterPropagating { mode: a.mode.abs() }
                    }
                    MomentumCase::Distinct => ContentShape::Distinct {
                        k1: a.mode,
                        k2: b.mode,
                    },
                })
            }
            _ => Err(Error::UnsupportedContent(
                "only one mode with any count, or two modes with one photon each".into(),
            )),
        }
    }

    /// Checks every photon mode against the grid and returns the shape.
    pub fn validate(&self, grid: &GridSpec) -> Result<ContentShape> {
        for e in &self.entries {
            grid.check_photon_mode(e.mode)?;
        }
        self.shape()
    }

    /// `(|k_i|, n_i)` for the log terms of the probability; empty for the vacuum and
    /// for the counter-propagating pair, whose dominant term has no density factor.
    pub fn log_weights(&self, grid: &GridSpec) -> Result<Vec<(i64, u32)>> {
        Ok(match self.validate(grid)? {
            ContentShape::Vacuum | ContentShape::CounterPropagating { .. } => vec![],
            ContentShape::Single { mode, count } => vec![(mode.abs(), count)],
            ContentShape::Distinct { k1, k2 } => vec![(k1.abs(), 1), (k2.abs(), 1)],
        })
    }
}

/// `Σ_i n_i log D̄(p_i) - Σ_k ω_k D(p_k) dp`, `-∞` when a photon mode is empty.
pub fn log_probability(density: &DensityField, content: &PhotonContent) -> Result<f64> {
    let grid = density.grid();
    let mut total = 0.0;
    for (k, n) in content.log_weights(grid)? {
        let bar = density.bar(k);
        if bar <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += n as f64 * bar.ln();
    }
    let dp = grid.dp();
    let exponent: f64 = density
        .values()
        .iter()
        .enumerate()
        .map(|(s, d)| grid.omega(grid.mode(s)) * d)
        .sum::<f64>()
        * dp;
    Ok(total - exponent)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Ascent,
}

#[derive(Clone, Debug)]
pub struct MaximizerReport {
    pub density: DensityField,
    pub log_prob: f64,
    pub method: Method,
    pub iterations: usize,
    /// Largest projected-gradient component at the returned density.
    pub residual: f64,
    pub converged: bool,
}

impl MaximizerReport {
    /// `{content, method, density_csv_ref, log_prob, iterations, residual}`;
    /// a `-∞` log-probability is written as `null`.
    pub fn to_json(
        &self,
        content: &PhotonContent,
        density_csv_ref: Option<&str>,
    ) -> serde_json::Value {
        let log_prob = if self.log_prob.is_finite() {
            serde_json::json!(self.log_prob)
        } else {
            serde_json::Value::Null
        };
        serde_json::json!({
            "content": content,
            "method": self.method,
            "density_csv_ref": density_csv_ref,
            "log_prob": log_prob,
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
        })
    }
}

/// Closed-form maximizer: `D(±k_i) = n_i / (2 ω_i dp)`, zero elsewhere.
pub fn most_likely_density(grid: &GridSpec, content: &PhotonContent) -> Result<MaximizerReport> {
    if let ContentShape::CounterPropagating { .. } = content.validate(grid)? {
        return Err(Error::UnsupportedContent(
            "counter-propagating pair has no density factor; use counter_propagating_extremum"
                .into(),
        ));
    }
    let weights = content.log_weights(grid)?;
    let dp = grid.dp();
    let density = DensityField::from_magnitude_fn(*grid, |k| {
        weights
            .iter()
            .find(|(m, _)| *m == k)
            .map_or(0.0, |&(_, n)| n as f64 / (2.0 * grid.omega(k) * dp))
    })?;
    let problem = Problem::new(grid, &weights);
    let y = problem.restrict(&density);
    Ok(MaximizerReport {
        log_prob: log_probability(&density, content)?,
        residual: problem.projected_residual(&y),
        density,
        method: Method::ClosedForm,
        iterations: 0,
        converged: true,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct AscentOptions {
    /// Initial step length; later steps follow Barzilai-Borwein estimates.
    pub step: f64,
    /// Stop once every projected-gradient component is below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

/// Independent coordinates of an even density: one per pair `(k, -k)`, plus the
/// self-conjugate Nyquist mode and, when retained, the zero mode.
struct Problem {
    grid: GridSpec,
    modes: Vec<i64>,
    cost: Vec<f64>,
    logs: Vec<(usize, f64)>,
}

impl Problem {
    fn new(grid: &GridSpec, weights: &[(i64, u32)]) -> Self {
        let h = grid.nyquist();
        let first = if grid.include_zero_mode() { 0 } else { 1 };
        let modes: Vec<i64> = (first..=h).collect();
        let dp = grid.dp();
        let cost = modes
            .iter()
            .map(|&k| {
                let multiplicity = if k == 0 || k == h { 1.0 } else { 2.0 };
                multiplicity * grid.omega(k) * dp
            })
            .collect();
        let logs = weights
            .iter()
            .map(|&(k, n)| ((k - first) as usize, n as f64))
            .collect();
        Self {
            grid: *grid,
            modes,
            cost,
            logs,
        }
    }

    fn restrict(&self, density: &DensityField) -> Vec<f64> {
        self.modes.iter().map(|&k| density.at(k)).collect()
    }

    fn expand(&self, y: &[f64]) -> Result<DensityField> {
        let mut values = vec![0.0; self.grid.n_modes()];
        for (&k, &v) in self.modes.iter().zip(y) {
            values[self.grid.slot(k)] = v;
            values[self.grid.slot(-k)] = v;
        }
        DensityField::new(self.grid, values)
    }

    fn value(&self, y: &[f64]) -> f64 {
        let mut f = -self.cost.iter().zip(y).map(|(c, v)| c * v).sum::<f64>();
        for &(i, n) in &self.logs {
            if y[i] <= 0.0 {
                return f64::NEG_INFINITY;
            }
            f += n * y[i].ln();
        }
        f
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = self.cost.iter().map(|c| -c).collect();
        for &(i, n) in &self.logs {
            g[i] += n / y[i];
        }
        g
    }

    fn projected_residual(&self, y: &[f64]) -> f64 {
        self.gradient(y)
            .iter()
            .zip(y)
            .map(|(&g, &v)| if v <= 0.0 { g.max(0.0) } else { g.abs() })
            .fold(0.0, f64::max)
    }
}

/// Projected gradient ascent of the log-probability over even `D ≥ 0`, with
/// Barzilai-Borwein step proposals and Armijo backtracking by step halving.
///
/// Counter-propagating content is accepted and ascends the dominant functional,
/// which has no density factor.
pub fn ascent_maximize(
    content: &PhotonContent,
    init: &DensityField,
    options: AscentOptions,
) -> Result<MaximizerReport> {
    let grid = init.grid();
    let weights = content.log_weights(grid)?;
    let problem = Problem::new(grid, &weights);
    let mut y = problem.restrict(init);
    for &(i, _) in &problem.logs {
        if y[i] <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "initial density must be positive at photon mode {}",
                problem.modes[i]
            )));
        }
    }

    let mut f = problem.value(&y);
    let mut g = problem.gradient(&y);
    let mut step = options.step;
    let mut iterations = 0;
    let mut residual = problem.projected_residual(&y);

    while residual >= options.tol && iterations < options.max_iter {
        let mut accepted = None;
        let mut trial_step = step;
        for _ in 0..200 {
            let trial: Vec<f64> = y
                .iter()
                .zip(&g)
                .map(|(v, d)| (v + trial_step * d).max(0.0))
                .collect();
            let ft = problem.value(&trial);
            let ascent: f64 = trial
                .iter()
                .zip(&y)
                .zip(&g)
                .map(|((t, v), d)| (t - v) * d)
                .sum();
            // Slack of a few ulps of |f| so rounding alone cannot stall the search.
            if ft.is_finite() && ft >= f + 1e-4 * ascent - 4.0 * f64::EPSILON * f.abs() {
                accepted = Some((trial, ft));
                break;
            }
            trial_step *= 0.5;
        }
        let Some((next, f_next)) = accepted else {
            break;
        };
        let g_next = problem.gradient(&next);
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..y.len() {
            let s = next[i] - y[i];
            ss += s * s;
            sy += s * (g_next[i] - g[i]);
        }
        step = if sy < 0.0 { ss / -sy } else { trial_step * 2.0 };
        step = step.clamp(1e-12, 1e12);

        y = next;
        f = f_next;
        g = g_next;
        iterations += 1;
        residual = problem.projected_residual(&y);
    }

    Ok(MaximizerReport {
        density: problem.expand(&y)?,
        log_prob: f,
        method: Method::Ascent,
        iterations,
        residual,
        converged: residual < options.tol,
    })
}

/// Sign certificate for the counter-propagating extremum at `D ≡ 0`.
#[derive(Clone, Debug, Serialize)]
pub struct NullCertificate {
    /// `(k, ∂/∂D(k) of the dominant log-functional at D = 0)` for each retained mode.
    pub derivatives: Vec<(i64, f64)>,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct CounterPropagatingReport {
    pub report: MaximizerReport,
    pub certificate: NullCertificate,
}

/// For one photon at `k̄` and one at `-k̄` the dominant term of the density carries
/// no factor of `D`, leaving `-Σ ω_k D(p_k) dp`; its maximum on `D ≥ 0` is `D ≡ 0`,
/// certified by a nonpositive derivative along every mode.
pub fn counter_propagating_extremum(
    grid: &GridSpec,
    kbar: i64,
) -> Result<CounterPropagatingReport> {
    grid.check_photon_mode(kbar)?;
    let dp = grid.dp();
    let derivatives: Vec<(i64, f64)> = grid
        .modes()
        .filter(|&k| grid.is_retained(k))
        .map(|k| (k, -grid.omega(k) * dp))
        .collect();
    let passed = derivatives.iter().all(|&(_, d)| d <= 0.0);
    let density = DensityField::zeros(*grid);
    let content = PhotonContent::pair(kbar, -kbar);
    let problem = Problem::new(grid, &[]);
    Ok(CounterPropagatingReport {
        report: MaximizerReport {
            log_prob: log_probability(&density, &content)?,
            residual: problem.projected_residual(&problem.restrict(&density)),
            density,
            method: Method::ClosedForm,
            iterations: 0,
            converged: true,
        },
        certificate: NullCertificate {
            derivatives,
            passed,
        },
    })
}

/// Autocorrelation of the most likely density, `Σ_i n_i cos(p_i x) / ω_i`.
pub fn most_likely_autocorrelation(grid: &GridSpec, content: &PhotonContent) -> Result<RealField> {
    let density = match content.validate(grid)? {
        ContentShape::CounterPropagating { mode } => {
            counter_propagating_extremum(grid, mode)?.report.density
        }
        _ => most_likely_density(grid, content)?.density,
    };
    autocorrelation(&density)
}

/// Agreement between two densities for the same content.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Agreement {
    /// Largest relative difference over the photon peaks.
    pub peak_relative_difference: f64,
    /// `Σ D dp` of `candidate` over modes that should be empty.
    pub off_peak_mass: f64,
}

pub fn compare_to_reference(
    reference: &DensityField,
    candidate: &DensityField,
    content: &PhotonContent,
) -> Result<Agreement> {
    let grid = reference.grid();
    let peaks: Vec<i64> = content
        .log_weights(grid)?
        .into_iter()
        .map(|(k, _)| k)
        .collect();
    let mut peak_relative_difference: f64 = 0.0;
    let mut off_peak_mass = 0.0;
    for k in grid.modes() {
        if peaks.contains(&k.abs()) {
            let r = reference.at(k);
            peak_relative_difference =
                peak_relative_difference.max((candidate.at(k) - r).abs() / r);
        } else {
            off_peak_mass += candidate.at(k) * grid.dp();
        }
    }
    Ok(Agreement {
        peak_relative_difference,
        off_peak_mass,
    })
}
