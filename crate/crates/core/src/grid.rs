//! Periodic torus discretization and the Fourier machinery built on it.
//!
//! A [`Grid`] samples the torus `[-L/2, L/2)^N` with `M` points per axis.
//! Fields are stored row-major (last axis fastest). The discrete Fourier
//! coefficients are normalized so that a field is the trigonometric
//! polynomial
//!
//! ```text
//! f(x) = Σ_k c_k e^{i k·x},   k = 2π j / L,  j ∈ [-M/2, M/2)^N
//! ```
//!
//! With this convention `∫|f|² = L^N Σ |c_k|²` holds exactly, so every
//! Fourier-multiplier norm reduces to a weighted coefficient sum.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("dimension must be 1, 2 or 3 (got {0})")]
    Dimension(usize),
    #[error("points per axis must be a power of two and at least 8 (got {0})")]
    Points(usize),
    #[error("period must be finite and positive (got {0})")]
    Period(f64),
    #[error("field has {got} samples but the grid holds {expected}")]
    Length { expected: usize, got: usize },
    #[error("field sample {0} is not finite")]
    NonFinite(usize),
    #[error("Lebesgue exponent must be positive (got {0})")]
    Exponent(f64),
    #[error("fields live on different grids")]
    Mismatch,
    #[error("translation vector must have {expected} finite components")]
    Shift { expected: usize },
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// |k| for every flat index.
    kabs: Vec<f64>,
    /// Integer wavenumber index j per axis, per flat index.
    modes: Vec<[i64; 3]>,
}

/// Uniform periodic lattice on the torus of edge `period`.
#[derive(Clone)]
pub struct Grid {
    dim: usize,
    points: usize,
    period: f64,
    plans: Arc<Plans>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .field("period", &self.period)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points && self.period == other.period
    }
}

impl Grid {
    pub fn new(dim: usize, points: usize, period: f64) -> Result<Self, GridError> {
        if !(1..=3).contains(&dim) {
            return Err(GridError::Dimension(dim));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(GridError::Points(points));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(GridError::Period(period));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);

        let len = points.pow(dim as u32);
        let unit = 2.0 * std::f64::consts::PI / period;
        let mut kabs = Vec::with_capacity(len);
        let mut modes = Vec::with_capacity(len);
        for flat in 0..len {
            let idx = unflatten(flat, dim, points);
            let mut j = [0i64; 3];
            let mut ksq = 0.0;
            for a in 0..dim {
                j[a] = mode_index(idx[a], points);
                let k = unit * j[a] as f64;
                ksq += k * k;
            }
            kabs.push(ksq.sqrt());
            modes.push(j);
        }
        Ok(Self {
            dim,
            points,
            period,
            plans: Arc::new(Plans {
                forward,
                inverse,
                kabs,
                modes,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.points as f64
    }

    /// Total sample count `M^N`.
    pub fn len(&self) -> usize {
        self.plans.kabs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^N` of one sample.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Torus volume `L^N`.
    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    /// Fundamental wavenumber `2π/L`.
    pub fn k_min(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }

    /// Largest resolved |k| (corner of the Nyquist cube).
    pub fn k_max(&self) -> f64 {
        self.k_min() * (self.points / 2) as f64 * (self.dim as f64).sqrt()
    }

    /// Largest per-axis Nyquist wavenumber `π M / L`.
    pub fn k_nyquist(&self) -> f64 {
        self.k_min() * (self.points / 2) as f64
    }

    /// |k| for each flat spectral index.
    pub fn wavenumber_norms(&self) -> &[f64] {
        &self.plans.kabs
    }

    /// Wave vector of a flat spectral index (unused axes are zero).
    pub fn wavevector(&self, flat: usize) -> [f64; 3] {
        let j = self.plans.modes[flat];
        let unit = self.k_min();
        [unit * j[0] as f64, unit * j[1] as f64, unit * j[2] as f64]
    }

    /// Integer mode index `j` per axis of a flat spectral index.
    pub fn mode(&self, flat: usize) -> [i64; 3] {
        self.plans.modes[flat]
    }

    /// Physical coordinates of a flat sample index on `[-L/2, L/2)^N`.
    pub fn coordinate(&self, flat: usize) -> [f64; 3] {
        let idx = unflatten(flat, self.dim, self.points);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = -0.5 * self.period + h * idx[a] as f64;
        }
        x
    }

    /// Flat index of a per-axis index triple (unused axes ignored).
    pub fn flatten(&self, idx: [usize; 3]) -> usize {
        idx[..self.dim]
            .iter()
            .fold(0, |flat, &i| flat * self.points + i)
    }

    pub fn unflatten(&self, flat: usize) -> [usize; 3] {
        unflatten(flat, self.dim, self.points)
    }

    fn transform_in_place(&self, data: &mut [Complex64], inverse: bool) {
        let m = self.points;
        let plan = if inverse {
            &self.plans.inverse
        } else {
            &self.plans.forward
        };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        if self.dim == 1 {
            plan.process_with_scratch(data, &mut scratch);
            return;
        }
        let len = data.len();
        let mut lines = vec![Complex64::new(0.0, 0.0); len];
        for axis in 0..self.dim {
            let stride = m.pow((self.dim - 1 - axis) as u32);
            let outer = len / (m * stride);
            // gather every line along `axis` into a contiguous buffer
            let mut line = 0;
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * m * stride + inner;
                    let dst = &mut lines[line * m..(line + 1) * m];
                    for (t, d) in dst.iter_mut().enumerate() {
                        *d = data[base + t * stride];
                    }
                    line += 1;
                }
            }
            plan.process_with_scratch(&mut lines, &mut scratch);
            let mut line = 0;
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * m * stride + inner;
                    let src = &lines[line * m..(line + 1) * m];
                    for (t, s) in src.iter().enumerate() {
                        data[base + t * stride] = *s;
                    }
                    line += 1;
                }
            }
        }
    }

    /// Sign `(-1)^{Σ j}` that accounts for the grid starting at `-L/2`.
    fn origin_sign(&self, flat: usize) -> f64 {
        let j = self.plans.modes[flat];
        if (j[0] + j[1] + j[2]).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

fn mode_index(i: usize, m: usize) -> i64 {
    if i < m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

fn unflatten(mut flat: usize, dim: usize, m: usize) -> [usize; 3] {
    let mut idx = [0usize; 3];
    for a in (0..dim).rev() {
        idx[a] = flat % m;
        flat /= m;
    }
    idx
}

/// Complex samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<Complex64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Length {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `f` at every grid point; unused coordinates are zero.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coordinate(i))).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// Builds a field without the finiteness scan. Callers guarantee length.
    pub(crate) fn from_raw(grid: &Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field::from_raw(&self.grid, self.values.iter().map(|&z| f(z)).collect())
    }

    pub fn zip_map(
        &self,
        other: &Field,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Field, GridError> {
        if self.grid != other.grid {
            return Err(GridError::Mismatch);
        }
        Ok(Field::from_raw(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Field) -> Result<Field, GridError> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Field, GridError> {
        self.zip_map(other, |a, b| a + b)
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: Complex64, other: &Field) -> Result<Field, GridError> {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|z| c * z)
    }

    /// L² inner product `∫ f conj(g)`.
    pub fn inner(&self, other: &Field) -> Result<Complex64, GridError> {
        if self.grid != other.grid {
            return Err(GridError::Mismatch);
        }
        let sum: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(sum * self.grid.cell_volume())
    }
}

/// Fourier coefficients `c_k` of a field, same layout as [`Field`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self, GridError> {
        if coeffs.len() != grid.len() {
            return Err(GridError::Length {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Multiplies coefficient `k` by `m(flat index)`.
    pub fn multiplied(&self, m: impl Fn(usize) -> Complex64) -> Spectrum {
        Spectrum {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c * m(i))
                .collect(),
        }
    }

    /// Weighted Plancherel sum `L^N Σ w(|k|)² |c_k|²`, square-rooted.
    pub fn weighted_l2(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let kabs = self.grid.wavenumber_norms();
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(kabs)
            .map(|(c, &k)| {
                let w = weight(k);
                w * w * c.norm_sqr()
            })
            .sum();
        (self.grid.volume() * sum).sqrt()
    }

    /// Phase factor `e^{-ik·y}`: the spectrum of `f(· - y)`.
    pub fn translated(&self, y: &[f64]) -> Spectrum {
        let grid = &self.grid;
        self.multiplied(|i| {
            let k = grid.wavevector(i);
            let phase: f64 = k.iter().zip(y).map(|(k, y)| k * y).sum();
            Complex64::from_polar(1.0, -phase)
        })
    }

    pub fn to_field(&self) -> Field {
        inverse_transform(self)
    }
}

/// Fourier coefficients normalized so that `f = Σ c_k e^{ik·x}`.
pub fn forward_transform(f: &Field) -> Spectrum {
    let grid = f.grid();
    let mut data = f.values.clone();
    grid.transform_in_place(&mut data, false);
    let norm = 1.0 / grid.len() as f64;
    for (i, c) in data.iter_mut().enumerate() {
        *c *= norm * grid.origin_sign(i);
    }
    Spectrum {
        grid: grid.clone(),
        coeffs: data,
    }
}

pub fn inverse_transform(s: &Spectrum) -> Field {
    let grid = s.grid();
    let mut data: Vec<Complex64> = s
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| c * grid.origin_sign(i))
        .collect();
    grid.transform_in_place(&mut data, true);
    Field::from_raw(grid, data)
}

/// Applies a Fourier multiplier `m(k)` (given per flat index).
pub fn apply_multiplier(f: &Field, m: impl Fn(usize) -> Complex64) -> Field {
    inverse_transform(&forward_transform(f).multiplied(m))
}

/// Multiplier of the free Schrödinger group `e^{itΔ}` on one mode.
pub fn propagator_symbol(kabs: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, -t * kabs * kabs)
}

/// Free Schrödinger evolution `e^{itΔ} f`, solving `i u_t + Δu = 0`.
pub fn free_propagate(f: &Field, t: f64) -> Field {
    if t == 0.0 {
        return f.clone();
    }
    let kabs = f.grid().wavenumber_norms();
    apply_multiplier(f, |i| propagator_symbol(kabs[i], t))
}

/// `τ_y f = f(· - y)` with periodic wrap, exact for trigonometric polynomials.
pub fn translate(f: &Field, y: &[f64]) -> Result<Field, GridError> {
    let dim = f.grid().dim();
    if y.len() != dim || y.iter().any(|v| !v.is_finite()) {
        return Err(GridError::Shift { expected: dim });
    }
    if y.iter().all(|&v| v == 0.0) {
        return Ok(f.clone());
    }
    Ok(forward_transform(f).translated(y).to_field())
}

/// `(h^N Σ |f_i|^p)^{1/p}`; `p = ∞` gives the sup. Values of `p < 1`
/// produce the quasi-norm with the same formula.
pub fn lebesgue_norm(f: &Field, p: f64) -> Result<f64, GridError> {
    lebesgue_norm_values(f.values(), f.grid().cell_volume(), p)
}

pub(crate) fn lebesgue_norm_values(
    values: &[Complex64],
    cell: f64,
    p: f64,
) -> Result<f64, GridError> {
    if p.is_nan() || p <= 0.0 {
        return Err(GridError::Exponent(p));
    }
    if p == f64::INFINITY {
        return Ok(values.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let sum: f64 = if p == 2.0 {
        values.iter().map(|z| z.norm_sqr()).sum()
    } else {
        values.iter().map(|z| z.norm().powf(p)).sum()
    };
    Ok((cell * sum).powf(1.0 / p))
}

/// `true` for modes with every `|j_a| < M/3`, the standard 2/3 rule.
pub fn dealias_mask(grid: &Grid) -> Vec<bool> {
    let cut = (grid.points() / 3) as i64;
    (0..grid.len())
        .map(|i| grid.mode(i)[..grid.dim()].iter().all(|&ja| ja.abs() < cut))
        .collect()
}

/// Zeroes every mode outside [`dealias_mask`].
pub fn dealias(f: &Field) -> Field {
    let mask = dealias_mask(f.grid());
    apply_multiplier(f, |i| {
        if mask[i] {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}
