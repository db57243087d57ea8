//! One-dimensional periodic lattice for a single polarization component of the
//! vector potential.
//!
//! Positions are `x_j = j * dx` for `j = 0..N`; momenta are `p_k = k * dp` with the
//! signed mode index `k` running over `-N/2+1 ..= N/2`. Storage is in FFT slot order
//! (`slot = k mod N`). The Nyquist mode `k = N/2` is its own partner and carries a
//! real amplitude.
//!
//! The transform pair is the unitary convention with explicit measures:
//!
//! ```text
//! Ã(p_k) = (2π)^{-1/2} Σ_j A(x_j) e^{-i p_k x_j} dx
//! A(x_j) = (2π)^{-1/2} Σ_k Ã(p_k) e^{+i p_k x_j} dp
//! ```
//!
//! so that `Σ |A|² dx = Σ |Ã|² dp` holds without stray factors, and the
//! autocorrelation `R(x_j) = Σ_k D(p_k) e^{i p_k x_j} dp` equals the circular
//! self-correlation `Σ_j A(x_j) A(x_j + x) dx`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative Hermitian-symmetry tolerance for spectral input.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative tolerance on the imaginary residue of inverse transforms.
pub const REALNESS_TOL: f64 = 1e-10;
/// How far (in units of `dp`) a requested momentum may sit from a lattice momentum.
const ON_GRID_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridSpec {
    n_modes: usize,
    box_length: f64,
    include_zero_mode: bool,
    mass: f64,
}

#[derive(Deserialize)]
struct RawGrid {
    n_modes: usize,
    box_length: f64,
    #[serde(default)]
    include_zero_mode: bool,
    #[serde(default)]
    mass: f64,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        let grid = GridSpec::new(raw.n_modes, raw.box_length)?.with_mass(raw.mass)?;
        if raw.include_zero_mode {
            grid.with_zero_mode()
        } else {
            Ok(grid)
        }
    }
}

impl GridSpec {
    /// Massless grid with the zero mode excluded.
    pub fn new(n_modes: usize, box_length: f64) -> Result<Self> {
        if n_modes < 4 || !n_modes.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_modes must be an even integer >= 4, got {n_modes}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box_length must be positive and finite, got {box_length}"
            )));
        }
        Ok(Self {
            n_modes,
            box_length,
            include_zero_mode: false,
            mass: 0.0,
        })
    }

    /// Sets the infrared regulator `m` in `ω_k = sqrt(p_k² + m²)`.
    pub fn with_mass(mut self, mass: f64) -> Result<Self> {
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::InvalidGrid(format!("mass must be >= 0, got {mass}")));
        }
        if self.include_zero_mode && mass == 0.0 {
            return Err(Error::InvalidGrid(
                "a retained zero mode needs a positive mass".into(),
            ));
        }
        self.mass = mass;
        Ok(self)
    }

    /// Retains the `k = 0` mode. Only allowed with a positive mass, otherwise the
    /// vacuum Gaussian has infinite width there.
    pub fn with_zero_mode(mut self) -> Result<Self> {
        if self.mass <= 0.0 {
            return Err(Error::InvalidGrid(
                "a retained zero mode needs a positive mass".into(),
            ));
        }
        self.include_zero_mode = true;
        Ok(self)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn include_zero_mode(&self) -> bool {
        self.include_zero_mode
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn dx(&self) -> f64 {
        self.box_length / self.n_modes as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Highest mode index, `N/2`.
    pub fn nyquist(&self) -> i64 {
        (self.n_modes / 2) as i64
    }

    /// Storage slot of signed mode `k`.
    pub fn slot(&self, k: i64) -> usize {
        k.rem_euclid(self.n_modes as i64) as usize
    }

    /// Signed mode index stored at `slot`.
    pub fn mode(&self, slot: usize) -> i64 {
        let n = self.n_modes as i64;
        let s = slot as i64;
        if s <= n / 2 {
            s
        } else {
            s - n
        }
    }

    /// Signed mode indices in ascending order, `-N/2+1 ..= N/2`.
    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let h = self.nyquist();
        (-h + 1)..=h
    }

    pub fn momentum(&self, k: i64) -> f64 {
        k as f64 * self.dp()
    }

    pub fn position(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn omega(&self, k: i64) -> f64 {
        self.momentum(k).hypot(self.mass)
    }

    /// Dispersion for every slot.
    pub fn omegas(&self) -> Vec<f64> {
        (0..self.n_modes)
            .map(|s| self.omega(self.mode(s)))
            .collect()
    }

    /// Whether mode `k` carries a degree of freedom on this grid.
    pub fn is_retained(&self, k: i64) -> bool {
        k != 0 || self.include_zero_mode
    }

    /// Modes that pair with a distinct partner `-k` and can therefore host photons.
    pub fn check_photon_mode(&self, k: i64) -> Result<()> {
        if k == 0 {
            return Err(Error::InvalidMode {
                k,
                reason: "photon momentum must be nonzero",
            });
        }
        if k.abs() >= self.nyquist() {
            return Err(Error::InvalidMode {
                k,
                reason: "mode must satisfy 0 < |k| < N/2",
            });
        }
        Ok(())
    }

    /// Exact lattice mode for a physical momentum; off-grid values are rejected.
    pub fn mode_for_momentum(&self, momentum: f64) -> Result<i64> {
        let ratio = momentum / self.dp();
        let k = ratio.round();
        if !ratio.is_finite() || (ratio - k).abs() > ON_GRID_TOL || k.abs() > self.nyquist() as f64
        {
            return Err(Error::OffGrid {
                momentum,
                dp: self.dp(),
            });
        }
        Ok(k as i64)
    }
}

/// Real-space field values `A(x_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_modes {
            return Err(Error::LengthMismatch {
                expected: grid.n_modes,
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            values: vec![0.0; grid.n_modes],
            grid,
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n_modes).map(|j| f(grid.position(j))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,coordinate,value")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{},{}", j, self.grid.position(j), v)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "grid": self.grid, "data": self.values })
    }

    pub fn from_json(doc: &serde_json::Value) -> Result<Self> {
        let parsed: FieldDocument<f64> = serde_json::from_value(doc.clone())?;
        Self::new(parsed.grid, parsed.data)
    }
}

#[derive(Deserialize)]
struct FieldDocument<T> {
    grid: GridSpec,
    data: Vec<T>,
}

/// Fourier amplitudes `Ã(p_k)` of a real field. Hermitian symmetry
/// `Ã(-k) = Ã(k)*` is exact after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    amplitudes: Vec<Complex64>,
}

impl SpectralField {
    /// Validates Hermitian symmetry (relative [`HERMITIAN_TOL`]) and the zero-mode
    /// pin, then stores the exactly symmetrized amplitudes.
    pub fn new(grid: GridSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_modes {
            return Err(Error::LengthMismatch {
                expected: grid.n_modes,
                found: amplitudes.len(),
            });
        }
        let scale = amplitudes.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tol = HERMITIAN_TOL * scale;
        let residual = hermitian_residual(&grid, &amplitudes);
        if residual > tol {
            return Err(Error::SymmetryViolation {
                what: "spectral field",
                residual: residual / scale,
            });
        }
        if !grid.include_zero_mode && amplitudes[0].norm() > tol {
            return Err(Error::SymmetryViolation {
                what: "excluded zero mode",
                residual: amplitudes[0].norm(),
            });
        }
        Ok(Self::symmetrized(grid, amplitudes))
    }

    /// Builds the field from amplitudes on `0 <= k <= N/2`; negative modes are
    /// filled by conjugation. Self-conjugate modes keep only their real part.
    pub fn from_nonnegative_modes(grid: GridSpec, f: impl Fn(i64) -> Complex64) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); grid.n_modes];
        for k in 0..=grid.nyquist() {
            let z = f(k);
            amplitudes[grid.slot(k)] = z;
            amplitudes[grid.slot(-k)] = z.conj();
        }
        Self::symmetrized(grid, amplitudes)
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            amplitudes: vec![Complex64::new(0.0, 0.0); grid.n_modes],
            grid,
        }
    }

    pub(crate) fn symmetrized(grid: GridSpec, mut amplitudes: Vec<Complex64>) -> Self {
        let h = grid.nyquist();
        for k in 1..h {
            let (p, m) = (grid.slot(k), grid.slot(-k));
            let z = (amplitudes[p] + amplitudes[m].conj()) * 0.5;
            amplitudes[p] = z;
            amplitudes[m] = z.conj();
        }
        let ny = grid.slot(h);
        amplitudes[ny] = Complex64::new(amplitudes[ny].re, 0.0);
        amplitudes[0] = if grid.include_zero_mode {
            Complex64::new(amplitudes[0].re, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        Self { grid, amplitudes }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Amplitudes in slot order.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn at(&self, k: i64) -> Complex64 {
        self.amplitudes[self.grid.slot(k)]
    }

    /// Multiplies the pair `(k, -k)` by `e^{±iθ}`, preserving Hermitian symmetry.
    pub fn rotate_phase(&self, k: i64, theta: f64) -> Self {
        let mut out = self.clone();
        if k == 0 || k.abs() >= self.grid.nyquist() {
            return out;
        }
        let rot = Complex64::from_polar(1.0, theta);
        out.amplitudes[self.grid.slot(k)] *= rot;
        out.amplitudes[self.grid.slot(-k)] *= rot.conj();
        out
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,coordinate,re,im")?;
        for k in self.grid.modes() {
            let z = self.at(k);
            writeln!(out, "{},{},{},{}", k, self.grid.momentum(k), z.re, z.im)?;
        }
        Ok(())
    }

    /// JSON document with `data` in ascending mode order as `[re, im]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        let data: Vec<[f64; 2]> = self
            .grid
            .modes()
            .map(|k| {
                let z = self.at(k);
                [z.re, z.im]
            })
            .collect();
        serde_json::json!({ "grid": self.grid, "data": data })
    }

    pub fn from_json(doc: &serde_json::Value) -> Result<Self> {
        let parsed: FieldDocument<[f64; 2]> = serde_json::from_value(doc.clone())?;
        let grid = parsed.grid;
        if parsed.data.len() != grid.n_modes {
            return Err(Error::LengthMismatch {
                expected: grid.n_modes,
                found: parsed.data.len(),
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); grid.n_modes];
        for (k, [re, im]) in grid.modes().zip(parsed.data) {
            amplitudes[grid.slot(k)] = Complex64::new(re, im);
        }
        Self::new(grid, amplitudes)
    }
}

fn hermitian_residual(grid: &GridSpec, amplitudes: &[Complex64]) -> f64 {
    let h = grid.nyquist();
    let mut residual: f64 = 0.0;
    for k in 1..h {
        let d = amplitudes[grid.slot(k)] - amplitudes[grid.slot(-k)].conj();
        residual = residual.max(d.norm());
    }
    residual
        .max(amplitudes[grid.slot(h)].im.abs())
        .max(amplitudes[0].im.abs())
}

/// Nonnegative, exactly even spectral density `D(p_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl DensityField {
    /// Values in slot order. Rejects negative entries, any odd component, and a
    /// nonzero excluded zero mode.
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_modes {
            return Err(Error::LengthMismatch {
                expected: grid.n_modes,
                found: values.len(),
            });
        }
        for (s, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidDensity {
                    k: grid.mode(s),
                    value: v,
                });
            }
        }
        let odd = (1..grid.nyquist())
            .map(|k| (values[grid.slot(k)] - values[grid.slot(-k)]).abs())
            .fold(0.0, f64::max);
        if odd > 0.0 {
            return Err(Error::SymmetryViolation {
                what: "spectral density",
                residual: odd,
            });
        }
        if !grid.include_zero_mode && values[0] != 0.0 {
            return Err(Error::InvalidDensity {
                k: 0,
                value: values[0],
            });
        }
        Ok(Self { grid, values })
    }

    /// Replaces `D` by its even part `(D(k) + D(-k)) / 2` and pins an excluded
    /// zero mode to 0.
    pub fn symmetrize(grid: GridSpec, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_modes {
            return Err(Error::LengthMismatch {
                expected: grid.n_modes,
                found: values.len(),
            });
        }
        for k in 1..grid.nyquist() {
            let (p, m) = (grid.slot(k), grid.slot(-k));
            let bar = 0.5 * (values[p] + values[m]);
            values[p] = bar;
            values[m] = bar;
        }
        if !grid.include_zero_mode {
            values[0] = 0.0;
        }
        Self::new(grid, values)
    }

    /// Density with value `f(|k|)` on every retained mode.
    pub fn from_magnitude_fn(grid: GridSpec, f: impl Fn(i64) -> f64) -> Result<Self> {
        let values = (0..grid.n_modes)
            .map(|s| {
                let k = grid.mode(s);
                if grid.is_retained(k) {
                    f(k.abs())
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn flat(grid: GridSpec, value: f64) -> Result<Self> {
        Self::from_magnitude_fn(grid, |_| value)
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            values: vec![0.0; grid.n_modes],
            grid,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Values in slot order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, k: i64) -> f64 {
        self.values[self.grid.slot(k)]
    }

    /// Symmetrized value `(D(k) + D(-k)) / 2`; equals `D(k)` for a valid field.
    pub fn bar(&self, k: i64) -> f64 {
        0.5 * (self.at(k) + self.at(-k))
    }

    pub fn max_evenness_residual(&self) -> f64 {
        self.grid
            .modes()
            .map(|k| (self.at(k) - self.at(-k)).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,coordinate,value")?;
        for k in self.grid.modes() {
            writeln!(out, "{},{},{}", k, self.grid.momentum(k), self.at(k))?;
        }
        Ok(())
    }

    /// JSON document with `data` in ascending mode order.
    pub fn to_json(&self) -> serde_json::Value {
        let data: Vec<f64> = self.grid.modes().map(|k| self.at(k)).collect();
        serde_json::json!({ "grid": self.grid, "data": data })
    }

    pub fn from_json(doc: &serde_json::Value) -> Result<Self> {
        let parsed: FieldDocument<f64> = serde_json::from_value(doc.clone())?;
        let grid = parsed.grid;
        if parsed.data.len() != grid.n_modes {
            return Err(Error::LengthMismatch {
                expected: grid.n_modes,
                found: parsed.data.len(),
            });
        }
        let mut values = vec![0.0; grid.n_modes];
        for (k, v) in grid.modes().zip(parsed.data) {
            values[grid.slot(k)] = v;
        }
        Self::new(grid, values)
    }
}

/// Planned FFTs for one grid. Reuse across many fields; creating one is the
/// expensive part of a transform.
#[derive(Clone)]
pub struct Transformer {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Transformer {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n_modes),
            inverse: planner.plan_fft_inverse(grid.n_modes),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn check_grid(&self, other: &GridSpec) -> Result<()> {
        if other.n_modes != self.grid.n_modes {
            return Err(Error::LengthMismatch {
                expected: self.grid.n_modes,
                found: other.n_modes,
            });
        }
        Ok(())
    }

    /// `Ã(p_k)`; the zero mode is projected out when the grid excludes it.
    pub fn forward(&self, field: &RealField) -> Result<SpectralField> {
        self.check_grid(&field.grid)?;
        let norm = self.grid.dx() / (2.0 * PI).sqrt();
        let mut buf: Vec<Complex64> = field
            .values
            .iter()
            .map(|&v| Complex64::new(v * norm, 0.0))
            .collect();
        self.forward.process(&mut buf);
        Ok(SpectralField::symmetrized(self.grid, buf))
    }

    pub fn inverse(&self, spec: &SpectralField) -> Result<RealField> {
        self.check_grid(&spec.grid)?;
        let norm = self.grid.dp() / (2.0 * PI).sqrt();
        let mut buf: Vec<Complex64> = spec.amplitudes.iter().map(|z| z * norm).collect();
        self.inverse.process(&mut buf);
        let values = take_real(buf, "inverse transform")?;
        Ok(RealField {
            grid: self.grid,
            values,
        })
    }

    /// `R(x_j) = Σ_k D(p_k) e^{i p_k x_j} dp`, made exactly even in `x`.
    pub fn autocorrelation(&self, density: &DensityField) -> Result<RealField> {
        self.check_grid(&density.grid)?;
        let dp = self.grid.dp();
        let mut buf: Vec<Complex64> = density
            .values
            .iter()
            .map(|&d| Complex64::new(d * dp, 0.0))
            .collect();
        self.inverse.process(&mut buf);
        let mut values = take_real(buf, "autocorrelation")?;
        mirror_even(&mut values);
        Ok(RealField {
            grid: self.grid,
            values,
        })
    }
}

fn take_real(buf: Vec<Complex64>, what: &'static str) -> Result<Vec<f64>> {
    let scale = buf.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let residue = buf.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if residue > REALNESS_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SymmetryViolation {
            what,
            residual: residue,
        });
    }
    Ok(buf.into_iter().map(|z| z.re).collect())
}

fn mirror_even(values: &mut [f64]) {
    let n = values.len();
    for j in 1..n / 2 {
        let avg = 0.5 * (values[j] + values[n - j]);
        values[j] = avg;
        values[n - j] = avg;
    }
}

pub fn forward_transform(field: &RealField) -> Result<SpectralField> {
    Transformer::new(field.grid).forward(field)
}

pub fn inverse_transform(spec: &SpectralField) -> Result<RealField> {
    Transformer::new(spec.grid).inverse(spec)
}

pub fn autocorrelation(density: &DensityField) -> Result<RealField> {
    Transformer::new(density.grid).autocorrelation(density)
}

/// `Σ_j |A(x_j)|² dx`.
pub fn parseval_energy(field: &RealField) -> f64 {
    field.values.iter().map(|v| v * v).sum::<f64>() * field.grid.dx()
}

/// `Σ_k |Ã(p_k)|² dp`.
pub fn spectral_energy(spec: &SpectralField) -> f64 {
    spec.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * spec.grid.dp()
}

/// `D(p_k) = |Ã(p_k)|²`.
pub fn spectral_density(spec: &SpectralField) -> DensityField {
    DensityField {
        grid: spec.grid,
        values: spec.amplitudes.iter().map(|z| z.norm_sqr()).collect(),
    }
}

/// Circular self-correlation `Σ_j A(x_j) A(x_j + x_m) dx` summed directly in real
/// space. Lags past `N/2` are mirrored so the result is exactly even.
pub fn circular_autocorrelation(field: &RealField) -> RealField {
    let n = field.values.len();
    let a = &field.values;
    let dx = field.grid.dx();
    let mut values = vec![0.0; n];
    for m in 0..=n / 2 {
        let mut acc = 0.0;
        for j in 0..n {
            acc += a[j] * a[(j + m) % n];
        }
        values[m] = acc * dx;
    }
    for m in n / 2 + 1..n {
        values[m] = values[n - m];
    }
    RealField {
        grid: field.grid,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid() -> GridSpec {
        GridSpec::new(128, 20.0 * PI).unwrap()
    }

    /// Direct O(N²) sums of the transform definitions.
    fn dft_forward(g: &GridSpec, a: &[f64]) -> Vec<Complex64> {
        let norm = g.dx() / (2.0 * PI).sqrt();
        (0..g.n_modes())
            .map(|s| {
                let p = g.momentum(g.mode(s));
                a.iter()
                    .enumerate()
                    .map(|(j, &v)| v * Complex64::from_polar(1.0, -p * g.position(j)))
                    .sum::<Complex64>()
                    * norm
            })
            .collect()
    }

    fn dft_inverse(g: &GridSpec, amps: &[Complex64]) -> Vec<f64> {
        let norm = g.dp() / (2.0 * PI).sqrt();
        (0..g.n_modes())
            .map(|j| {
                let x = g.position(j);
                amps.iter()
                    .enumerate()
                    .map(|(s, z)| z * Complex64::from_polar(1.0, g.momentum(g.mode(s)) * x))
                    .sum::<Complex64>()
                    .re
                    * norm
            })
            .collect()
    }

    #[test]
    fn grid_measures() {
        let g = grid();
        assert_relative_eq!(
            g.dx() * g.dp() * g.n_modes() as f64,
            2.0 * PI,
            epsilon = 1e-14
        );
        assert_relative_eq!(g.dp(), 0.1, epsilon = 1e-15);
        assert_eq!(g.mode_for_momentum(1.0).unwrap(), 10);
        assert_eq!(g.mode_for_momentum(-2.0).unwrap(), -20);
        assert!(matches!(
            g.mode_for_momentum(1.05),
            Err(Error::OffGrid { .. })
        ));
        for s in 0..g.n_modes() {
            assert_eq!(g.slot(g.mode(s)), s);
        }
        assert!(g.check_photon_mode(0).is_err());
        assert!(g.check_photon_mode(64).is_err());
        assert!(g.check_photon_mode(-63).is_ok());
    }

    #[test]
    fn zero_mode_needs_mass() {
        let g = grid();
        assert!(g.with_zero_mode().is_err());
        let massive = g.with_mass(0.01).unwrap().with_zero_mode().unwrap();
        assert!(massive.is_retained(0));
        assert_relative_eq!(massive.omega(0), 0.01);
        assert!(GridSpec::new(7, 1.0).is_err());
        assert!(GridSpec::new(8, -1.0).is_err());
    }

    #[test]
    fn zero_field_transforms_to_zero() {
        let g = grid();
        let spec = forward_transform(&RealField::zeros(g)).unwrap();
        assert!(spec.amplitudes().iter().all(|z| z.norm() == 0.0));
        let back = inverse_transform(&SpectralField::zeros(g)).unwrap();
        assert!(back.values().iter().all(|&v| v == 0.0));
        assert_eq!(parseval_energy(&back), 0.0);
        assert_eq!(spectral_energy(&spec), 0.0);
    }

    #[test]
    fn cosine_has_single_pair_support() {
        let g = grid();
        let kbar = 10;
        let p = g.momentum(kbar);
        let spec = forward_transform(&RealField::from_fn(g, |x| (p * x).cos())).unwrap();
        let peak = spec.at(kbar);
        for k in g.modes() {
            let z = spec.at(k);
            if k.abs() == kbar {
                assert_relative_eq!(z.re, peak.re, epsilon = 1e-12);
                assert!(z.im.abs() < 1e-12);
            } else {
                assert!(z.norm() < 1e-12, "leak at {k}: {z}");
            }
        }
        // A = cos(p x) has Ã(±k̄) = L / (2 sqrt(2π)).
        assert_relative_eq!(
            peak.re,
            g.box_length() / (2.0 * (2.0 * PI).sqrt()),
            epsilon = 1e-12
        );
    }

    #[test]
    fn two_mode_inverse_is_cosine() {
        let g = grid();
        let (kbar, r) = (7, 3.0);
        let spec = SpectralField::from_nonnegative_modes(g, |k| {
            if k == kbar {
                Complex64::new(r / 2.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let a = inverse_transform(&spec).unwrap();
        let p = g.momentum(kbar);
        let norm = g.dp() / (2.0 * PI).sqrt();
        for (j, &v) in a.values().iter().enumerate() {
            assert_relative_eq!(v, norm * r * (p * g.position(j)).cos(), epsilon = 1e-13);
        }
        assert_relative_eq!(
            spectral_energy(&spec),
            2.0 * (r / 2.0).powi(2) * g.dp(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn density_squares_amplitudes() {
        let g = grid();
        let spec = SpectralField::from_nonnegative_modes(g, |k| {
            if k == 5 {
                Complex64::new(0.0, 2.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let d = spectral_density(&spec);
        assert_relative_eq!(d.at(5), 4.0);
        assert_relative_eq!(d.at(-5), 4.0);
        assert_eq!(d.values().iter().filter(|&&v| v != 0.0).count(), 2);
        let zero = spectral_density(&SpectralField::zeros(g));
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn autocorrelation_of_discretized_delta_pair() {
        let g = grid();
        let kbar = 10;
        let p = g.momentum(kbar);
        let d = DensityField::from_magnitude_fn(g, |k| {
            if k == kbar {
                1.0 / (2.0 * p * g.dp())
            } else {
                0.0
            }
        })
        .unwrap();
        let r = autocorrelation(&d).unwrap();
        for (j, &v) in r.values().iter().enumerate() {
            assert!((v - (p * g.position(j)).cos() / p).abs() < 1e-9);
        }
        let zero = autocorrelation(&DensityField::zeros(g)).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = grid();
        assert!(matches!(
            RealField::new(g, vec![0.0; 10]),
            Err(Error::LengthMismatch { .. })
        ));
        let mut amps = vec![Complex64::new(0.0, 0.0); 128];
        amps[3] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            SpectralField::new(g, amps),
            Err(Error::SymmetryViolation { .. })
        ));
        let mut vals = vec![0.0; 128];
        vals[3] = 1.0;
        assert!(matches!(
            DensityField::new(g, vals.clone()),
            Err(Error::SymmetryViolation { .. })
        ));
        vals[3] = -1.0;
        vals[125] = -1.0;
        assert!(matches!(
            DensityField::new(g, vals),
            Err(Error::InvalidDensity { .. })
        ));
        let mut vals = vec![0.0; 128];
        vals[0] = 1.0;
        assert!(DensityField::new(g, vals).is_err());
    }

    #[test]
    fn symmetrize_takes_even_part() {
        let g = GridSpec::new(8, 8.0).unwrap();
        let mut vals = vec![0.0; 8];
        vals[g.slot(1)] = 2.0;
        vals[g.slot(-1)] = 4.0;
        vals[0] = 9.0;
        let d = DensityField::symmetrize(g, vals).unwrap();
        assert_eq!(d.at(1), 3.0);
        assert_eq!(d.at(-1), 3.0);
        assert_eq!(d.at(0), 0.0);
    }

    #[test]
    fn csv_layout() {
        let g = GridSpec::new(4, 4.0).unwrap();
        let d = DensityField::from_magnitude_fn(g, |k| k as f64).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,coordinate,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("-1,"));
        assert!(lines[4].starts_with("2,"));
    }

    fn random_real(seed: u64, g: &GridSpec) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..g.n_modes())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|x| *x -= mean);
        v
    }

    #[test]
    fn fft_matches_direct_sums() {
        let g = grid();
        for seed in 0..20 {
            let a = random_real(seed, &g);
            let spec = forward_transform(&RealField::new(g, a.clone()).unwrap()).unwrap();
            let direct = dft_forward(&g, &a);
            let scale = direct.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for (x, y) in spec.amplitudes().iter().zip(&direct) {
                assert!((x - y).norm() <= 1e-12 * scale);
            }
            let back = inverse_transform(&spec).unwrap();
            let direct_back = dft_inverse(&g, spec.amplitudes());
            for (x, y) in back.values().iter().zip(&direct_back) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn round_trip_and_parseval(seed in any::<u64>(), half_n in 2usize..40) {
            let g = GridSpec::new(2 * half_n, 5.0 + half_n as f64).unwrap();
            let a = random_real(seed, &g);
            let field = RealField::new(g, a.clone()).unwrap();
            let spec = forward_transform(&field).unwrap();
            let back = inverse_transform(&spec).unwrap();
            let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for (x, y) in back.values().iter().zip(&a) {
                prop_assert!((x - y).abs() <= 1e-12 * scale);
            }
            let e = parseval_energy(&field);
            prop_assert!((e - spectral_energy(&spec)).abs() <= 1e-12 * e);
            let d = spectral_density(&spec);
            prop_assert_eq!(d.max_evenness_residual(), 0.0);
        }

        #[test]
        fn wiener_khinchin(seed in any::<u64>()) {
            let g = GridSpec::new(64, 13.0).unwrap();
            let field = RealField::new(g, random_real(seed, &g)).unwrap();
            let spec = forward_transform(&field).unwrap();
            let r = autocorrelation(&spectral_density(&spec)).unwrap();
            let direct = circular_autocorrelation(&inverse_transform(&spec).unwrap());
            let r0 = r.values()[0];
            prop_assert!((r0 - spectral_energy(&spec)).abs() <= 1e-12 * r0);
            for (j, (x, y)) in r.values().iter().zip(direct.values()).enumerate() {
                prop_assert!((x - y).abs() <= 1e-10 * r0);
                prop_assert!(x.abs() <= r0 * (1.0 + 1e-12));
                prop_assert_eq!(*x, r.values()[(64 - j) % 64]);
            }
        }

        #[test]
        fn json_round_trip(seed in any::<u64>()) {
            let g = GridSpec::new(16, 3.0).unwrap();
            let spec = forward_transform(&RealField::new(g, random_real(seed, &g)).unwrap()).unwrap();
            let text = serde_json::to_string(&spec.to_json()).unwrap();
            let back = SpectralField::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
