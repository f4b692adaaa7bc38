//! Time integrators for `i u_t + Δu + g(u) = 0` on the torus.
//!
//! [`picard_duhamel`] iterates the Duhamel map
//! `u ↦ e^{itΔ}φ + i∫₀ᵗ e^{i(t−s)Δ} g(u(s)) ds` on a fixed time grid, measuring
//! successive iterates in `L^γ((0,T), L^ρ)`. In Fourier variables the integral
//! is `e^{−i|k|²t} ∫₀ᵗ e^{i|k|²s} ĝ(s) ds`, so the trapezoid rule over all
//! stored slices is a single running sum per mode.
//!
//! [`split_step`] is the Strang splitting used as an independent reference.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponents::{is_admissible, ExponentSet};
use crate::grid::{
    dealias_mask, forward_transform, inverse_transform, lebesgue_norm_values, propagator_symbol,
    Field, GridError, Spectrum,
};
use crate::nonlinearity::{Nonlinearity, PowerNonlinearity};
use crate::quadrature::time_norm;
use crate::spaces::{slice_norms, spacetime_norm, NormSpec, SpaceError};
use crate::trajectory::{TimeGrid, TimeGridError, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("Picard iteration did not converge in {iterations} iterations on [0, {horizon}] (last distance {last_distance:e})")]
    NonConvergence {
        iterations: usize,
        last_distance: f64,
        horizon: f64,
    },
    #[error("non-finite values in iterate {iteration}")]
    NonFinite { iteration: usize },
    #[error("modulus blow-up inside the step ending at t = {time}")]
    BlowUp { time: f64 },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    TimeGrid(#[from] TimeGridError),
}

/// Settings of the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// `(γ, ρ)` of the distance `‖u − v‖_{L^γ((0,T), L^ρ)}`.
    pub metric_pair: (f64, f64),
    pub smallness_delta: f64,
    /// Apply the 2/3 filter to `g(u)` before propagation.
    pub dealias: bool,
}

impl PicardConfig {
    pub fn for_exponents(exps: &ExponentSet) -> Self {
        Self {
            tol: 1e-10,
            max_iter: 60,
            metric_pair: (exps.gamma, exps.rho),
            smallness_delta: 0.1,
            dealias: true,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), SolverError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(SolverError::Config(format!(
                "tol must be positive (got {})",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(SolverError::Config("max_iter must be at least 1".into()));
        }
        let (q, r) = self.metric_pair;
        if !is_admissible(q, r, dim) {
            return Err(SolverError::Config(format!(
                "metric pair ({q}, {r}) is not admissible in dimension {dim}"
            )));
        }
        if !(self.smallness_delta > 0.0) {
            return Err(SolverError::Config(
                "smallness_delta must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Convergence history of one Picard run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iterations: usize,
    pub converged: bool,
    /// `d(u^{k+1}, u^k)` in the contraction metric, one entry per iteration.
    pub distances: Vec<f64>,
    /// `sup_t ‖u^{k+1}(t) − u^k(t)‖_{L²}` alongside.
    pub l2_distances: Vec<f64>,
    pub horizon: f64,
    pub intervals: usize,
    /// Times the horizon was halved by [`picard_with_backoff`].
    pub halvings: usize,
    pub smallness_delta: f64,
}

impl IterationReport {
    /// `d_{k+1}/d_k` for consecutive nonzero distances.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.distances
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// Slices `e^{it_mΔ}φ` on `tg`; slice 0 is `φ` itself.
pub fn free_trajectory(phi: &Field, tg: &TimeGrid) -> Trajectory {
    let spec = forward_transform(phi);
    let kabs = phi.grid().wavenumber_norms();
    let times = tg.times();
    let slices: Vec<Field> = times
        .par_iter()
        .enumerate()
        .map(|(m, &t)| {
            if m == 0 {
                phi.clone()
            } else {
                inverse_transform(&spec.multiplied(|i| propagator_symbol(kabs[i], t)))
            }
        })
        .collect();
    Trajectory::new(*tg, slices).expect("one slice per time")
}

fn metric_distance(
    a: &[Field],
    b: &[Field],
    dt: f64,
    q: f64,
    r: f64,
) -> Result<(f64, f64), GridError> {
    let per: Vec<(f64, f64)> = a
        .par_iter()
        .zip(b)
        .map(|(x, y)| {
            let diff: Vec<Complex64> = x
                .values()
                .iter()
                .zip(y.values())
                .map(|(p, q)| p - q)
                .collect();
            let cell = x.grid().cell_volume();
            Ok((
                lebesgue_norm_values(&diff, cell, r)?,
                lebesgue_norm_values(&diff, cell, 2.0)?,
            ))
        })
        .collect::<Result<_, GridError>>()?;
    let lr: Vec<f64> = per.iter().map(|p| p.0).collect();
    let l2 = per.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok((time_norm(&lr, dt, q), l2))
}

/// Fixed-point iteration of the Duhamel map with trapezoid quadrature in `s`.
///
/// Starts from the free evolution and stops once
/// `d(u^{k+1}, u^k) ≤ tol · max(1, d(u¹, u⁰))`.
pub fn picard_duhamel(
    phi: &Field,
    nl: &dyn Nonlinearity,
    tg: &TimeGrid,
    cfg: &PicardConfig,
) -> Result<(Trajectory, IterationReport), SolverError> {
    let grid = phi.grid();
    cfg.validate(grid.dim())?;
    if !phi.is_finite() {
        return Err(SolverError::NonFinite { iteration: 0 });
    }
    let free = free_trajectory(phi, tg);
    let mut report = IterationReport {
        iterations: 0,
        converged: false,
        distances: Vec::new(),
        l2_distances: Vec::new(),
        horizon: tg.horizon(),
        intervals: tg.intervals(),
        halvings: 0,
        smallness_delta: cfg.smallness_delta,
    };
    if nl.is_zero() {
        report.iterations = 1;
        report.converged = true;
        report.distances.push(0.0);
        report.l2_distances.push(0.0);
        return Ok((free, report));
    }

    let kabs = grid.wavenumber_norms();
    let mask = if cfg.dealias {
        Some(dealias_mask(grid))
    } else {
        None
    };
    let phi_hat = forward_transform(phi);
    let times = tg.times();
    let dt = tg.dt();
    let (q, r) = cfg.metric_pair;
    let mut current: Vec<Field> = free.slices().to_vec();
    let mut first = None;

    for iteration in 1..=cfg.max_iter {
        // H_m = e^{i|k|²t_m} ĝ(u(t_m)), filtered
        let h: Vec<Vec<Complex64>> = current
            .par_iter()
            .zip(&times)
            .map(|(u, &t)| {
                let gu = Field::new(grid, u.values().iter().map(|&z| nl.value(z)).collect())
                    .map_err(|_| SolverError::NonFinite { iteration })?;
                let spec = forward_transform(&gu);
                Ok(spec
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| match &mask {
                        Some(m) if !m[i] => Complex64::new(0.0, 0.0),
                        _ => c * propagator_symbol(kabs[i], -t),
                    })
                    .collect())
            })
            .collect::<Result<_, SolverError>>()?;

        // running trapezoid sums I_m = ∫₀^{t_m} H
        let mut integrals: Vec<Vec<Complex64>> = Vec::with_capacity(h.len());
        let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
        integrals.push(acc.clone());
        for m in 1..h.len() {
            for (i, a) in acc.iter_mut().enumerate() {
                *a += (h[m - 1][i] + h[m][i]) * (0.5 * dt);
            }
            integrals.push(acc.clone());
        }

        let i_unit = Complex64::new(0.0, 1.0);
        let next: Vec<Field> = integrals
            .par_iter()
            .zip(&times)
            .enumerate()
            .map(|(m, (integral, &t))| {
                if m == 0 {
                    return phi.clone();
                }
                let coeffs: Vec<Complex64> = phi_hat
                    .coeffs()
                    .iter()
                    .zip(integral)
                    .enumerate()
                    .map(|(i, (&p, &s))| propagator_symbol(kabs[i], t) * (p + i_unit * s))
                    .collect();
                inverse_transform(&Spectrum::from_coeffs(grid, coeffs).expect("grid length"))
            })
            .collect();

        if next.iter().any(|f| !f.is_finite()) {
            return Err(SolverError::NonFinite { iteration });
        }
        let (d, l2) = metric_distance(&next, &current, dt, q, r)?;
        report.iterations = iteration;
        report.distances.push(d);
        report.l2_distances.push(l2);
        current = next;
        let scale = *first.get_or_insert(d);
        if !d.is_finite() {
            return Err(SolverError::NonFinite { iteration });
        }
        if d <= cfg.tol * scale.max(1.0) {
            report.converged = true;
            return Ok((Trajectory::new(*tg, current)?, report));
        }
    }
    Err(SolverError::NonConvergence {
        iterations: cfg.max_iter,
        last_distance: *report.distances.last().unwrap_or(&f64::NAN),
        horizon: tg.horizon(),
    })
}

/// [`picard_duhamel`] that halves `T` (keeping the step) and `smallness_delta`
/// after each non-convergent or non-finite run, up to `max_halvings` times.
pub fn picard_with_backoff(
    phi: &Field,
    nl: &dyn Nonlinearity,
    tg: &TimeGrid,
    cfg: &PicardConfig,
    max_halvings: usize,
) -> Result<(Trajectory, IterationReport), SolverError> {
    let mut tg = *tg;
    let mut cfg = *cfg;
    let mut halvings = 0;
    loop {
        match picard_duhamel(phi, nl, &tg, &cfg) {
            Ok((traj, mut rep)) => {
                rep.halvings = halvings;
                return Ok((traj, rep));
            }
            Err(SolverError::NonConvergence { .. } | SolverError::NonFinite { .. })
                if halvings < max_halvings && tg.intervals() >= 4 =>
            {
                tg = TimeGrid::new(0.5 * tg.horizon(), tg.intervals() / 2)?;
                cfg.smallness_delta *= 0.5;
                halvings += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Exact flow of `u_t = iλ|u|^α u` over time `dt` at one point.
///
/// With `λ = a + ib` and `m = |u|^α`, the modulus obeys `m' = −αb m²` and the
/// phase `θ' = a m`. Returns `None` when the modulus blows up within `dt`.
pub fn nonlinear_flow(z: Complex64, lambda: Complex64, alpha: f64, dt: f64) -> Option<Complex64> {
    let r = z.norm();
    if r == 0.0 {
        return Some(z);
    }
    let m0 = r.powf(alpha);
    let (a, b) = (lambda.re, lambda.im);
    let x = alpha * b * m0 * dt;
    if x <= -1.0 {
        return None;
    }
    let phase = if x == 0.0 {
        a * m0 * dt
    } else {
        a * m0 * dt * x.ln_1p() / x
    };
    let modulus = if b == 0.0 {
        1.0
    } else {
        (-x.ln_1p() / alpha).exp()
    };
    Some(z * Complex64::from_polar(modulus, phase))
}

fn strang_step(
    u: &mut Field,
    half: &[Complex64],
    nl: &PowerNonlinearity,
    dt: f64,
) -> Result<(), ()> {
    let grid = u.grid().clone();
    let kick = |f: &Field| inverse_transform(&forward_transform(f).multiplied(|i| half[i]));
    let mut w = kick(u);
    if nl.lambda != Complex64::new(0.0, 0.0) {
        let ok = w
            .values_mut()
            .par_iter_mut()
            .map(|z| match nonlinear_flow(*z, nl.lambda, nl.alpha, dt) {
                Some(v) => {
                    *z = v;
                    true
                }
                None => false,
            })
            .reduce(|| true, |a, b| a && b);
        if !ok {
            return Err(());
        }
    }
    *u = kick(&w);
    debug_assert_eq!(u.grid(), &grid);
    Ok(())
}

/// Strang splitting (half free step, exact nonlinear step, half free step)
/// sampled on `tg` with `substeps` steps per output interval.
pub fn split_step_sampled(
    phi: &Field,
    nl: &PowerNonlinearity,
    tg: &TimeGrid,
    substeps: usize,
) -> Result<Trajectory, SolverError> {
    if substeps == 0 {
        return Err(SolverError::Config("substeps must be at least 1".into()));
    }
    let dt = tg.dt() / substeps as f64;
    let kabs = phi.grid().wavenumber_norms();
    let half: Vec<Complex64> = kabs
        .iter()
        .map(|&k| propagator_symbol(k, 0.5 * dt))
        .collect();
    let mut slices = Vec::with_capacity(tg.intervals() + 1);
    slices.push(phi.clone());
    let mut u = phi.clone();
    for m in 1..=tg.intervals() {
        for j in 0..substeps {
            if strang_step(&mut u, &half, nl, dt).is_err() {
                let time = tg.time(m - 1) + (j + 1) as f64 * dt;
                return Err(SolverError::BlowUp { time });
            }
        }
        if !u.is_finite() {
            return Err(SolverError::NonFinite { iteration: m });
        }
        slices.push(u.clone());
    }
    Ok(Trajectory::new(*tg, slices)?)
}

/// Strang splitting with step at most `dt`, every step stored.
pub fn split_step(
    phi: &Field,
    nl: &PowerNonlinearity,
    horizon: f64,
    dt: f64,
) -> Result<Trajectory, SolverError> {
    let tg = TimeGrid::with_step(horizon, dt)?;
    split_step_sampled(phi, nl, &tg, 1)
}

/// `‖e^{itΔ}φ‖_{L^γ((0,T), B^s_{ρ,2})}` with Littlewood–Paley blocks.
pub fn smallness_check(phi: &Field, tg: &TimeGrid, exps: &ExponentSet) -> Result<f64, SolverError> {
    let free = free_trajectory(phi, tg);
    let spec = NormSpec::besov_lp(exps.s, exps.rho, 2.0, false);
    Ok(spacetime_norm(&free, exps.gamma, &spec)?)
}

/// First `t_m` with `‖u(t_m)‖_{H^s} > threshold`.
pub fn detect_blowup(
    traj: &Trajectory,
    threshold: f64,
    s: f64,
) -> Result<Option<f64>, SolverError> {
    let norms = slice_norms(traj, &NormSpec::sobolev(s, false))?;
    Ok(norms
        .iter()
        .position(|&n| !(n <= threshold))
        .map(|m| traj.timegrid().time(m)))
}
