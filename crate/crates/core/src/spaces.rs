//! Fractional Sobolev and Besov norms on the torus.
//!
//! Three independent realizations are provided:
//!
//! * Fourier multipliers `|k|^s` / `(1+|k|²)^{s/2}` for `H^s` and `Ḣ^s`;
//! * a smooth Littlewood–Paley partition for `B^s_{p,q}` and `Ḃ^s_{p,q}`;
//! * the first-difference integral
//!   `(∫ ‖τ_y f − f‖_{L^p}^q |y|^{-N-sq} dy)^{1/q}`, valid for `0 < s < 1`.
//!
//! The last two agree only up to equivalence constants, which depend on the
//! partition and the dimension and are measured rather than assumed.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{
    forward_transform, lebesgue_norm, lebesgue_norm_values, Field, Grid, GridError, Spectrum,
};
use crate::quadrature::{gauss_legendre, time_norm};
use crate::trajectory::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("dyadic band [{jmin}, {jmax}] is outside the resolvable band [{lo}, {hi}]")]
    Band {
        jmin: i32,
        jmax: i32,
        lo: i32,
        hi: i32,
    },
    #[error("invalid norm specification: {0}")]
    Spec(String),
    #[error("quadrature needs at least one node per axis")]
    Quadrature,
    #[error("empty trajectory")]
    EmptyTrajectory,
}

/// Which realization of a norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    SobolevMultiplier,
    BesovLp,
    BesovFd,
    Lebesgue,
}

/// Label of a function space: `H^s`, `B^s_{p,q}`, `L^p`, and homogeneous variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub kind: NormKind,
    #[serde(default)]
    pub s: f64,
    #[serde(default = "two", with = "crate::serde_exponent")]
    pub p: f64,
    #[serde(default = "two", with = "crate::serde_exponent")]
    pub q: f64,
    #[serde(default)]
    pub homogeneous: bool,
}

fn two() -> f64 {
    2.0
}

impl NormSpec {
    pub fn sobolev(s: f64, homogeneous: bool) -> Self {
        Self {
            kind: NormKind::SobolevMultiplier,
            s,
            p: 2.0,
            q: 2.0,
            homogeneous,
        }
    }

    pub fn besov_lp(s: f64, p: f64, q: f64, homogeneous: bool) -> Self {
        Self {
            kind: NormKind::BesovLp,
            s,
            p,
            q,
            homogeneous,
        }
    }

    pub fn besov_fd(s: f64, p: f64, q: f64, homogeneous: bool) -> Self {
        Self {
            kind: NormKind::BesovFd,
            s,
            p,
            q,
            homogeneous,
        }
    }

    pub fn lebesgue(p: f64) -> Self {
        Self {
            kind: NormKind::Lebesgue,
            s: 0.0,
            p,
            q: p,
            homogeneous: false,
        }
    }

    /// `true` when the triangle inequality is not available (`p < 1` or `q < 1`).
    pub fn is_quasi_norm(&self) -> bool {
        self.p < 1.0 || (self.kind != NormKind::Lebesgue && self.q < 1.0)
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        let bad = |m: &str| Err(SpaceError::Spec(m.to_string()));
        if self.p.is_nan() || self.p <= 0.0 {
            return bad("p must be positive");
        }
        if !self.s.is_finite() {
            return bad("s must be finite");
        }
        match self.kind {
            NormKind::SobolevMultiplier => {
                if self.p != 2.0 || self.q != 2.0 {
                    return bad("multiplier Sobolev norms need p = q = 2");
                }
            }
            NormKind::BesovLp => {
                if self.q.is_nan() || self.q <= 0.0 {
                    return bad("q must be positive");
                }
            }
            NormKind::BesovFd => {
                if !(self.s > 0.0 && self.s < 1.0) {
                    return bad("finite-difference Besov norms need 0 < s < 1");
                }
                if !(self.q.is_finite() && self.q > 0.0) {
                    return bad("finite-difference Besov norms need 0 < q < inf");
                }
            }
            NormKind::Lebesgue => {}
        }
        Ok(())
    }
}

/// C^∞ cutoff: 1 on `[0, 1/2]`, 0 on `[1, ∞)`, monotone in between.
pub fn smooth_cutoff(t: f64) -> f64 {
    if t <= 0.5 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let u = 2.0 * (t - 0.5);
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    b / (a + b)
}

/// Derivative of [`smooth_cutoff`].
pub fn smooth_cutoff_derivative(t: f64) -> f64 {
    if t <= 0.5 || t >= 1.0 {
        return 0.0;
    }
    let u = 2.0 * (t - 0.5);
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    let da = a / (u * u);
    let db = -b / ((1.0 - u) * (1.0 - u));
    // d/du [b/(a+b)] times du/dt = 2
    2.0 * (db * (a + b) - b * (da + db)) / ((a + b) * (a + b))
}

/// Smooth dyadic partition of unity built from [`smooth_cutoff`].
///
/// Block `j` has symbol `χ(|k|/2^{j+1}) − χ(|k|/2^j)`, supported in
/// `2^{j-1} ≤ |k| ≤ 2^{j+1}`; the blocks telescope to one.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Partition {
    /// Relative gain error injected into every block (0 for the true partition).
    pub gain_error: f64,
}

impl Partition {
    pub fn standard() -> Self {
        Self::default()
    }

    pub fn block_symbol(&self, j: i32, kabs: f64) -> f64 {
        let hi = smooth_cutoff(kabs / 2f64.powi(j + 1));
        let lo = smooth_cutoff(kabs / 2f64.powi(j));
        (hi - lo) * (1.0 + self.gain_error)
    }

    pub fn low_symbol(&self, jmin: i32, kabs: f64) -> f64 {
        smooth_cutoff(kabs / 2f64.powi(jmin))
    }
}

/// Dyadic index range `[jmin, jmax]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicBand {
    pub jmin: i32,
    pub jmax: i32,
}

impl DyadicBand {
    /// Smallest and largest block indices that see any grid frequency.
    pub fn resolvable(grid: &Grid) -> (i32, i32) {
        let lo = grid.k_min().log2().floor() as i32;
        let hi = grid.k_max().log2().ceil() as i32;
        (lo, hi)
    }

    /// Full band: only the zero mode is left in the low block.
    pub fn homogeneous(grid: &Grid) -> Self {
        let (lo, hi) = Self::resolvable(grid);
        Self { jmin: lo, jmax: hi }
    }

    /// Band starting at `j = 0`, so the low block carries `|k| ≲ 1`.
    pub fn inhomogeneous(grid: &Grid) -> Self {
        let (lo, hi) = Self::resolvable(grid);
        Self {
            jmin: lo.max(0).min(hi - 1),
            jmax: hi,
        }
    }

    fn check(&self, grid: &Grid) -> Result<(), SpaceError> {
        let (lo, hi) = Self::resolvable(grid);
        if self.jmin >= self.jmax || self.jmin < lo || self.jmax > hi {
            return Err(SpaceError::Band {
                jmin: self.jmin,
                jmax: self.jmax,
                lo,
                hi,
            });
        }
        Ok(())
    }
}

/// Littlewood–Paley pieces of a field.
#[derive(Debug, Clone)]
pub struct DyadicBlocks {
    pub jmin: i32,
    pub jmax: i32,
    pub blocks: Vec<Field>,
    pub low_block: Option<Field>,
}

impl DyadicBlocks {
    pub fn block(&self, j: i32) -> Option<&Field> {
        if j < self.jmin || j > self.jmax {
            return None;
        }
        self.blocks.get((j - self.jmin) as usize)
    }

    /// `low + Σ_j block_j`.
    pub fn reconstruct(&self) -> Field {
        let grid = self.blocks[0].grid();
        let mut acc = match &self.low_block {
            Some(low) => low.values().to_vec(),
            None => vec![Complex64::new(0.0, 0.0); grid.len()],
        };
        for b in &self.blocks {
            for (a, v) in acc.iter_mut().zip(b.values()) {
                *a += v;
            }
        }
        Field::from_raw(grid, acc)
    }
}

pub fn decompose(f: &Field, jmin: i32, jmax: i32) -> Result<DyadicBlocks, SpaceError> {
    decompose_with(f, DyadicBand { jmin, jmax }, &Partition::standard())
}

pub fn decompose_with(
    f: &Field,
    band: DyadicBand,
    partition: &Partition,
) -> Result<DyadicBlocks, SpaceError> {
    let grid = f.grid();
    band.check(grid)?;
    let spec = forward_transform(f);
    let kabs = grid.wavenumber_norms();
    let blocks = (band.jmin..=band.jmax)
        .into_par_iter()
        .map(|j| {
            spec.multiplied(|i| Complex64::new(partition.block_symbol(j, kabs[i]), 0.0))
                .to_field()
        })
        .collect();
    let low = spec
        .multiplied(|i| Complex64::new(partition.low_symbol(band.jmin, kabs[i]), 0.0))
        .to_field();
    Ok(DyadicBlocks {
        jmin: band.jmin,
        jmax: band.jmax,
        blocks,
        low_block: Some(low),
    })
}

fn lq_sum(terms: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q == f64::INFINITY {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// `(Σ_j (2^{js} ‖Δ_j f‖_{L^p})^q)^{1/q}`, plus `‖S_{jmin} f‖_{L^p}` when inhomogeneous.
pub fn besov_norm_lp(f: &Field, spec: &NormSpec) -> Result<f64, SpaceError> {
    besov_norm_lp_with(f, spec, &Partition::standard())
}

pub fn besov_norm_lp_with(
    f: &Field,
    spec: &NormSpec,
    partition: &Partition,
) -> Result<f64, SpaceError> {
    spec.validate()?;
    let grid = f.grid();
    let band = if spec.homogeneous {
        DyadicBand::homogeneous(grid)
    } else {
        DyadicBand::inhomogeneous(grid)
    };
    let blocks = decompose_with(f, band, partition)?;
    let mut terms = Vec::with_capacity(blocks.blocks.len() + 1);
    if !spec.homogeneous {
        if let Some(low) = &blocks.low_block {
            terms.push(lebesgue_norm(low, spec.p)?);
        }
    }
    for (idx, b) in blocks.blocks.iter().enumerate() {
        let j = blocks.jmin + idx as i32;
        terms.push(2f64.powf(j as f64 * spec.s) * lebesgue_norm(b, spec.p)?);
    }
    Ok(lq_sum(terms.into_iter(), spec.q))
}

/// Multiplier norm: `|k|^s` when homogeneous, `(1+|k|²)^{s/2}` otherwise.
pub fn sobolev_norm(f: &Field, s: f64, homogeneous: bool) -> f64 {
    sobolev_norm_spectrum(&forward_transform(f), s, homogeneous)
}

pub fn sobolev_norm_spectrum(spec: &Spectrum, s: f64, homogeneous: bool) -> f64 {
    if homogeneous {
        if s == 0.0 {
            return spec.weighted_l2(|_| 1.0);
        }
        spec.weighted_l2(|k| if k == 0.0 { 0.0 } else { k.powf(s) })
    } else {
        spec.weighted_l2(|k| (1.0 + k * k).powf(0.5 * s))
    }
}

/// Polar quadrature for integrals over translations `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Log-spaced radii between `h/2` and `L/2`.
    pub shells: usize,
    /// Uniform azimuthal angles (N ≥ 2).
    pub angles: usize,
    /// Gauss–Legendre nodes in the polar cosine (N = 3).
    pub polar: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            shells: 32,
            angles: 16,
            polar: 8,
        }
    }
}

/// One translation node: the vector `y` and its weight in `∫ F(y)^q |y|^{-N-sq} dy`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct YNode {
    pub y: [f64; 3],
    pub radius: f64,
    pub weight: f64,
    /// Surface weight of this node's direction.
    pub dir_weight: f64,
    /// `true` for the innermost shell, where the small-|y| tail is attached.
    pub innermost: bool,
}

impl QuadratureSpec {
    fn directions(&self, dim: usize) -> Result<Vec<([f64; 3], f64)>, SpaceError> {
        use std::f64::consts::PI;
        match dim {
            1 => Ok(vec![([1.0, 0.0, 0.0], 1.0), ([-1.0, 0.0, 0.0], 1.0)]),
            2 => {
                if self.angles == 0 {
                    return Err(SpaceError::Quadrature);
                }
                let w = 2.0 * PI / self.angles as f64;
                Ok((0..self.angles)
                    .map(|a| {
                        let th = w * a as f64;
                        ([th.cos(), th.sin(), 0.0], w)
                    })
                    .collect())
            }
            _ => {
                if self.angles == 0 || self.polar == 0 {
                    return Err(SpaceError::Quadrature);
                }
                let (ct, wt) = gauss_legendre(self.polar);
                let wphi = 2.0 * PI / self.angles as f64;
                let mut dirs = Vec::with_capacity(self.angles * self.polar);
                for (c, w) in ct.iter().zip(&wt) {
                    let st = (1.0 - c * c).sqrt();
                    for a in 0..self.angles {
                        let ph = wphi * a as f64;
                        dirs.push(([st * ph.cos(), st * ph.sin(), *c], w * wphi));
                    }
                }
                Ok(dirs)
            }
        }
    }

    /// Nodes for exponent `s·q` on `grid`. Weights already include `r^{-sq}`
    /// and the log-radius Jacobian.
    pub(crate) fn nodes(&self, grid: &Grid, sq: f64) -> Result<Vec<YNode>, SpaceError> {
        if self.shells < 2 {
            return Err(SpaceError::Quadrature);
        }
        let dirs = self.directions(grid.dim())?;
        let rmin = 0.5 * grid.spacing();
        let rmax = 0.5 * grid.period();
        let (t0, t1) = (rmin.ln(), rmax.ln());
        let dt = (t1 - t0) / (self.shells - 1) as f64;
        let mut nodes = Vec::with_capacity(dirs.len() * self.shells);
        for (dir, wdir) in &dirs {
            for i in 0..self.shells {
                let r = (t0 + dt * i as f64).exp();
                let wt = if i == 0 || i == self.shells - 1 {
                    0.5 * dt
                } else {
                    dt
                };
                nodes.push(YNode {
                    y: [r * dir[0], r * dir[1], r * dir[2]],
                    radius: r,
                    weight: wdir * wt * r.powf(-sq),
                    dir_weight: *wdir,
                    innermost: i == 0,
                });
            }
        }
        Ok(nodes)
    }
}

/// `(∫ F(y)^q |y|^{-N-sq} dy)^{1/q}` over `h/2 ≤ |y| ≤ L/2`, plus the
/// `|y| < h/2` part extrapolated with `F(y) ∝ |y|`.
///
/// `eval` receives each translation vector; its results are reduced in a
/// fixed order, so the value does not depend on the thread count.
pub(crate) fn translation_integral<F>(
    grid: &Grid,
    s: f64,
    q: f64,
    quad: &QuadratureSpec,
    eval: F,
) -> Result<f64, SpaceError>
where
    F: Fn(&[f64]) -> Result<f64, SpaceError> + Sync,
{
    let sq = s * q;
    let nodes = quad.nodes(grid, sq)?;
    let dim = grid.dim();
    let values: Vec<f64> = nodes
        .par_iter()
        .map(|n| eval(&n.y[..dim]))
        .collect::<Result<_, _>>()?;
    let mut sum = 0.0;
    for (n, v) in nodes.iter().zip(&values) {
        let fq = v.powf(q);
        sum += n.weight * fq;
        if n.innermost {
            // ∫_0^{r0} (F0 r/r0)^q r^{-1-sq} dr = F0^q r0^{-sq} / (q(1-s))
            sum += n.dir_weight * fq * n.radius.powf(-sq) / (q * (1.0 - s));
        }
    }
    Ok(sum.powf(1.0 / q))
}

/// Finite-difference Besov norm with its truncation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdNorm {
    pub value: f64,
    /// Upper bound of the omitted `|y| > L/2` contribution, `(2‖f‖_p)` majorant.
    pub tail_bound: f64,
}

/// `(∫ ‖τ_y f − f‖_{L^p}^q |y|^{-N-sq} dy)^{1/q}`; the inhomogeneous
/// variant adds `‖f‖_{L^p}`.
pub fn besov_norm_fd(f: &Field, spec: &NormSpec, quad: &QuadratureSpec) -> Result<f64, SpaceError> {
    Ok(besov_norm_fd_report(f, spec, quad)?.value)
}

pub fn besov_norm_fd_report(
    f: &Field,
    spec: &NormSpec,
    quad: &QuadratureSpec,
) -> Result<FdNorm, SpaceError> {
    spec.validate()?;
    if spec.kind != NormKind::BesovFd {
        return Err(SpaceError::Spec("expected kind besov_fd".into()));
    }
    let grid = f.grid();
    let spectrum = forward_transform(f);
    let cell = grid.cell_volume();
    let p = spec.p;
    let value = translation_integral(grid, spec.s, spec.q, quad, |y| {
        let shifted = spectrum.translated(y).to_field();
        let diff: Vec<Complex64> = shifted
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| a - b)
            .collect();
        Ok(lebesgue_norm_values(&diff, cell, p)?)
    })?;
    let lp = lebesgue_norm(f, p)?;
    let tail_bound = fd_tail_bound(grid, spec.s, spec.q, 2.0 * lp);
    let value = if spec.homogeneous { value } else { value + lp };
    Ok(FdNorm { value, tail_bound })
}

/// `(|S^{N-1}| · F^q (L/2)^{-sq} / (sq))^{1/q}`.
fn fd_tail_bound(grid: &Grid, s: f64, q: f64, majorant: f64) -> f64 {
    use std::f64::consts::PI;
    let sphere = match grid.dim() {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    };
    let r = 0.5 * grid.period();
    (sphere * majorant.powf(q) * r.powf(-s * q) / (s * q)).powf(1.0 / q)
}

/// Dispatches on `spec.kind`; finite-difference norms use the default quadrature.
pub fn norm(f: &Field, spec: &NormSpec) -> Result<f64, SpaceError> {
    spec.validate()?;
    match spec.kind {
        NormKind::SobolevMultiplier => Ok(sobolev_norm(f, spec.s, spec.homogeneous)),
        NormKind::BesovLp => besov_norm_lp(f, spec),
        NormKind::BesovFd => besov_norm_fd(f, spec, &QuadratureSpec::default()),
        NormKind::Lebesgue => Ok(lebesgue_norm(f, spec.p)?),
    }
}

/// `(Σ_m w_m ‖u(t_m)‖_X^q)^{1/q}` with trapezoid weights; `q = ∞` is the max.
pub fn spacetime_norm(
    traj: &Trajectory,
    q_time: f64,
    spatial: &NormSpec,
) -> Result<f64, SpaceError> {
    if traj.slices().is_empty() {
        return Err(SpaceError::EmptyTrajectory);
    }
    if q_time.is_nan() || q_time <= 0.0 {
        return Err(SpaceError::Spec("time exponent must be positive".into()));
    }
    let per_slice = slice_norms(traj, spatial)?;
    Ok(time_norm(&per_slice, traj.timegrid().dt(), q_time))
}

/// Spatial norm of every slice, computed in parallel and returned in order.
pub fn slice_norms(traj: &Trajectory, spatial: &NormSpec) -> Result<Vec<f64>, SpaceError> {
    traj.slices().par_iter().map(|u| norm(u, spatial)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{free_propagate, translate};
    use std::f64::consts::PI;

    fn gaussian(grid: &Grid, w: f64) -> Field {
        Field::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::new((-r2 / (w * w)).exp(), 0.0)
        })
    }

    #[test]
    fn cutoff_is_smooth_step() {
        assert_eq!(smooth_cutoff(0.3), 1.0);
        assert_eq!(smooth_cutoff(1.2), 0.0);
        assert!((smooth_cutoff(0.75) - 0.5).abs() < 1e-15);
        // derivative against central differences
        for t in [0.55, 0.7, 0.75, 0.9, 0.97] {
            let h = 1e-6;
            let fd = (smooth_cutoff(t + h) - smooth_cutoff(t - h)) / (2.0 * h);
            assert!((fd - smooth_cutoff_derivative(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn partition_sums_to_one_on_band() {
        let p = Partition::standard();
        for k in [0.3, 1.0, 2.7, 13.0, 100.0] {
            let sum: f64 =
                (-4..=8).map(|j| p.block_symbol(j, k)).sum::<f64>() + p.low_symbol(-4, k);
            assert!((sum - 1.0).abs() < 1e-14, "k={k} sum={sum}");
        }
    }

    #[test]
    fn plane_wave_lands_in_neighbouring_blocks() {
        let g = Grid::new(1, 256, 2.0 * PI).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::from_polar(1.0, 16.0 * x[0]));
        let (lo, hi) = DyadicBand::resolvable(&g);
        let blocks = decompose(&f, lo, hi).unwrap();
        for j in lo..=hi {
            let e = lebesgue_norm(blocks.block(j).unwrap(), 2.0).unwrap();
            if !(3..=5).contains(&j) {
                assert!(e < 1e-12, "block {j} has {e}");
            }
        }
        let total: f64 = (3..=5)
            .map(|j| lebesgue_norm(blocks.block(j).unwrap(), 2.0).unwrap())
            .sum();
        assert!(total > 0.5);
    }

    #[test]
    fn decompose_zero_and_reconstruct() {
        let g = Grid::new(2, 32, 10.0).unwrap();
        let band = DyadicBand::homogeneous(&g);
        let z = decompose(&Field::zeros(&g), band.jmin, band.jmax).unwrap();
        assert!(z
            .blocks
            .iter()
            .all(|b| lebesgue_norm(b, 2.0).unwrap() == 0.0));
        let f = gaussian(&g, 1.3);
        let rec = decompose(&f, band.jmin, band.jmax).unwrap().reconstruct();
        let err = lebesgue_norm(&rec.sub(&f).unwrap(), f64::INFINITY).unwrap();
        assert!(err < 1e-12);
    }

    #[test]
    fn decompose_rejects_band_outside_grid() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let (lo, hi) = DyadicBand::resolvable(&g);
        assert!(matches!(
            decompose(&Field::zeros(&g), lo, hi + 1),
            Err(SpaceError::Band { .. })
        ));
        assert!(matches!(
            decompose(&Field::zeros(&g), lo - 1, hi),
            Err(SpaceError::Band { .. })
        ));
        assert!(matches!(
            decompose(&Field::zeros(&g), 2, 2),
            Err(SpaceError::Band { .. })
        ));
    }

    #[test]
    fn sobolev_plane_wave_value() {
        let l = 2.0 * PI;
        let g = Grid::new(2, 16, l).unwrap();
        let c = Complex64::new(0.3, 0.4);
        let f = Field::from_fn(&g, |x| {
            c * Complex64::from_polar(1.0, 3.0 * x[0] - 4.0 * x[1])
        });
        let s = 0.7;
        let expected = 0.5 * l * 5f64.powf(s);
        assert!((sobolev_norm(&f, s, true) - expected).abs() < 1e-12 * expected);
        let l2 = lebesgue_norm(&f, 2.0).unwrap();
        assert!((sobolev_norm(&f, 0.0, true) - l2).abs() < 1e-12 * l2);
    }

    #[test]
    fn sobolev_gaussian_matches_spectral_quadrature() {
        // e^{-x²} has Fourier transform √π e^{-k²/4}; with the 2π convention
        // ‖f‖²_{Ḣ^s} = (1/2π)∫ |k|^{2s} π e^{-k²/2} dk.
        // The torus sums over the lattice k = j/20 rather than integrating; the
        // kink of |k| at 0 costs about Δk²/12 relative, hence the 1e-3 tolerance.
        let g = Grid::new(1, 4096, 40.0 * PI).unwrap();
        let f = gaussian(&g, 1.0);
        let s = 0.5;
        let (x, w) = gauss_legendre(200);
        let kmax = 40.0;
        let integral: f64 = x
            .iter()
            .zip(&w)
            .map(|(x, w)| {
                let k = 0.5 * kmax * (x + 1.0);
                0.5 * kmax * w * k.powf(2.0 * s) * PI * (-k * k / 2.0).exp()
            })
            .sum::<f64>()
            * 2.0
            / (2.0 * PI);
        let expected = integral.sqrt();
        let got = sobolev_norm(&f, s, true);
        assert!((got / expected - 1.0).abs() < 1e-3, "{got} {expected}");
    }

    #[test]
    fn besov_lp_of_zero_is_zero_and_constants_are_invisible() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let spec = NormSpec::besov_lp(0.5, 2.0, 2.0, true);
        assert_eq!(besov_norm_lp(&Field::zeros(&g), &spec).unwrap(), 0.0);
        let c = Field::from_fn(&g, |_| Complex64::new(2.0, 0.0));
        assert!(besov_norm_lp(&c, &spec).unwrap() < 1e-12);
        let inh = NormSpec::besov_lp(0.5, 2.0, 2.0, false);
        assert!(besov_norm_lp(&c, &inh).unwrap() > 1.0);
    }

    #[test]
    fn besov_lp_dilation_scaling() {
        let g = Grid::new(1, 2048, 64.0).unwrap();
        let s = 0.6;
        let spec = NormSpec::besov_lp(s, 2.0, 2.0, true);
        let f = gaussian(&g, 2.0);
        let f2 = Field::from_fn(&g, |x| {
            Complex64::new((-(2.0 * x[0]).powi(2) / 4.0).exp(), 0.0)
        });
        let ratio = besov_norm_lp(&f2, &spec).unwrap() / besov_norm_lp(&f, &spec).unwrap();
        let expected = 2f64.powf(s - 0.5);
        assert!(
            (ratio / expected - 1.0).abs() < 0.02,
            "{ratio} vs {expected}"
        );
    }

    #[test]
    fn fd_norm_zero_homogeneity_and_translation() {
        let g = Grid::new(1, 256, 40.0).unwrap();
        let quad = QuadratureSpec::default();
        let f = gaussian(&g, 1.5);
        // even p keeps |τ_y f - f|^p a trigonometric polynomial, so the sample
        // sum is exact under off-grid shifts
        for p in [2.0, 4.0] {
            let spec = NormSpec::besov_fd(0.5, p, 2.0, true);
            assert_eq!(besov_norm_fd(&Field::zeros(&g), &spec, &quad).unwrap(), 0.0);
            let a = besov_norm_fd(&f, &spec, &quad).unwrap();
            let b = besov_norm_fd(&translate(&f, &[0.731]).unwrap(), &spec, &quad).unwrap();
            assert!((a - b).abs() < 1e-8 * a, "p={p}: {a} vs {b}");
            let c = besov_norm_fd(&f.scale(Complex64::new(0.0, -3.0)), &spec, &quad).unwrap();
            assert!((c - 3.0 * a).abs() < 1e-12 * c);
        }
    }

    #[test]
    fn fd_norm_at_p2_matches_multiplier_constant() {
        // For p = q = 2 on R: ∫|e^{-iky}-1|² |y|^{-1-2s} dy = C_s |k|^{2s}
        // with C_s = 2·4·∫_0^∞ sin²(t/2) t^{-1-2s} dt. For s = 1/2 this is 2π.
        let g = Grid::new(1, 1024, 64.0).unwrap();
        let f = gaussian(&g, 1.0);
        let fd = besov_norm_fd(
            &f,
            &NormSpec::besov_fd(0.5, 2.0, 2.0, true),
            &QuadratureSpec::default(),
        )
        .unwrap();
        let mult = sobolev_norm(&f, 0.5, true);
        let ratio = fd / mult;
        assert!(
            (ratio / (2.0 * PI).sqrt() - 1.0).abs() < 0.02,
            "ratio {ratio}"
        );
    }

    #[test]
    fn fd_norm_rejects_bad_specs() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let f = Field::zeros(&g);
        let quad = QuadratureSpec::default();
        assert!(besov_norm_fd(&f, &NormSpec::besov_fd(1.2, 2.0, 2.0, true), &quad).is_err());
        assert!(besov_norm_fd(
            &f,
            &NormSpec::besov_fd(0.5, 2.0, f64::INFINITY, true),
            &quad
        )
        .is_err());
        let zero = QuadratureSpec {
            shells: 0,
            angles: 16,
            polar: 8,
        };
        assert_eq!(
            besov_norm_fd(&f, &NormSpec::besov_fd(0.5, 2.0, 2.0, true), &zero),
            Err(SpaceError::Quadrature)
        );
    }

    #[test]
    fn fd_norm_runs_in_two_and_three_dimensions() {
        for dim in [2usize, 3] {
            let g = Grid::new(dim, 32, 16.0).unwrap();
            let f = gaussian(&g, 1.5);
            let quad = QuadratureSpec {
                shells: 16,
                angles: 8,
                polar: 4,
            };
            let fd = besov_norm_fd(&f, &NormSpec::besov_fd(0.5, 2.0, 2.0, true), &quad).unwrap();
            let mult = sobolev_norm(&f, 0.5, true);
            assert!(fd.is_finite() && fd > 0.0);
            // equivalence, not equality
            let r = fd / mult;
            assert!(r > 0.5 && r < 10.0, "dim {dim} ratio {r}");
        }
    }

    #[test]
    fn spacetime_norm_of_free_evolution() {
        use crate::trajectory::{TimeGrid, Trajectory};
        let g = Grid::new(1, 256, 40.0).unwrap();
        let phi = gaussian(&g, 1.0);
        let tg = TimeGrid::new(0.5, 10).unwrap();
        let slices = tg
            .times()
            .iter()
            .map(|&t| free_propagate(&phi, t))
            .collect();
        let traj = Trajectory::new(tg, slices).unwrap();
        let spatial = NormSpec::sobolev(0.4, true);
        let hs = sobolev_norm(&phi, 0.4, true);
        for q in [1.0, 2.0, 8.0] {
            let got = spacetime_norm(&traj, q, &spatial).unwrap();
            let expected = 0.5f64.powf(1.0 / q) * hs;
            assert!((got - expected).abs() < 1e-8 * expected);
        }
        let sup = spacetime_norm(&traj, f64::INFINITY, &spatial).unwrap();
        assert!((sup - hs).abs() < 1e-10 * hs);
        let zero = Trajectory::new(tg, vec![Field::zeros(&g); 11]).unwrap();
        assert_eq!(spacetime_norm(&zero, 2.0, &spatial).unwrap(), 0.0);
    }

    #[test]
    fn norm_spec_json_round_trip() {
        let spec: NormSpec = serde_json::from_str(
            r#"{"kind":"besov_lp","s":0.4,"p":"inf","q":2,"homogeneous":true}"#,
        )
        .unwrap();
        assert_eq!(spec.p, f64::INFINITY);
        assert_eq!(spec.kind, NormKind::BesovLp);
        let text = serde_json::to_string(&spec).unwrap();
        let back: NormSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn validation_rules() {
        assert!(NormSpec {
            kind: NormKind::SobolevMultiplier,
            s: 0.5,
            p: 3.0,
            q: 2.0,
            homogeneous: true
        }
        .validate()
        .is_err());
        assert!(NormSpec::lebesgue(0.5).is_quasi_norm());
        assert!(!NormSpec::besov_lp(0.5, 2.0, 2.0, true).is_quasi_norm());
    }
}
