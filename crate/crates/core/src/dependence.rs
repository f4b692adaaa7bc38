//! Measuring continuous and Lipschitz dependence of the discrete flow map.
//!
//! A [`PerturbationFamily`] fixes data `φ_k = φ + ε_k ψ` with `ε_k = ε₀ 2^{−k}`.
//! Each datum is solved on a shared time grid and compared with the base
//! solution in three norms: `L^∞((0,T), H^s)`, `L^γ((0,T), B^s_{ρ,2})` and
//! `L^γ((0,T), L^σ)`.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponents::{ExponentError, ExponentSet, ProblemParams};
use crate::grid::{Field, GridError};
use crate::nonlinearity::{
    remainder_k, LemmaExponents, NonlinearityError, PowerNonlinearity, RemainderConfig,
};
use crate::quadrature::time_norm;
use crate::rng::gaussian;
use crate::snapshot::sci;
use crate::solver::{
    picard_duhamel, smallness_check, split_step_sampled, PicardConfig, SolverError,
};
use crate::spaces::{sobolev_norm, spacetime_norm, NormSpec, QuadratureSpec, SpaceError};
use crate::trajectory::{TimeGrid, TimeGridError, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DependenceError {
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    TimeGrid(#[from] TimeGridError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error("slope fit needs at least 4 valid rows (got {0})")]
    TooFewRows(usize),
    #[error("invalid perturbation family: {0}")]
    Family(String),
}

/// Data `φ + ε₀ 2^{−k} ψ`, `k = 0..=levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationFamily {
    pub base: Field,
    pub direction: Field,
    pub eps0: f64,
    pub levels: usize,
}

impl PerturbationFamily {
    pub fn new(
        base: Field,
        direction: Field,
        eps0: f64,
        levels: usize,
    ) -> Result<Self, DependenceError> {
        if base.grid() != direction.grid() {
            return Err(GridError::Mismatch.into());
        }
        if !(eps0.is_finite() && eps0 >= 0.0) {
            return Err(DependenceError::Family(format!(
                "eps0 must be finite and ≥ 0 (got {eps0})"
            )));
        }
        Ok(Self {
            base,
            direction,
            eps0,
            levels,
        })
    }

    /// Direction: a Gaussian of width `width` centred at `shift`, made
    /// L²-orthogonal to `base` and scaled to `‖ψ‖_{H^s} = 1`.
    pub fn with_default_direction(
        base: Field,
        s: f64,
        shift: [f64; 3],
        width: f64,
        eps0: f64,
        levels: usize,
    ) -> Result<Self, DependenceError> {
        let raw = gaussian(base.grid(), shift, width, Complex64::new(1.0, 0.0));
        let bb = base.inner(&base)?.re;
        let psi = if bb > 0.0 {
            let proj = raw.inner(&base)? / bb;
            raw.axpy(-proj, &base)?
        } else {
            raw
        };
        let n = sobolev_norm(&psi, s, false);
        if !(n > 0.0) {
            return Err(DependenceError::Family(
                "direction collapses after orthogonalization".into(),
            ));
        }
        Self::new(base, psi.scale(Complex64::new(1.0 / n, 0.0)), eps0, levels)
    }

    pub fn scales(&self) -> Vec<f64> {
        (0..=self.levels)
            .map(|k| self.eps0 * 0.5f64.powi(k as i32))
            .collect()
    }

    pub fn datum(&self, k: usize) -> Field {
        let eps = self.eps0 * 0.5f64.powi(k as i32);
        self.base
            .axpy(Complex64::new(eps, 0.0), &self.direction)
            .expect("family fields share a grid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Picard,
    SplitStep,
}

/// Solver settings shared by every row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceConfig {
    pub horizon: f64,
    pub intervals: usize,
    pub integrator: Integrator,
    /// Overrides the Picard defaults derived from the exponents.
    #[serde(default)]
    pub picard: Option<PicardConfig>,
    /// Split-step substeps per stored interval.
    #[serde(default = "one")]
    pub substeps: usize,
    /// Also run the other integrator and flag rows that disagree.
    #[serde(default)]
    pub cross_check: bool,
    #[serde(default = "default_cross_tol")]
    pub cross_tol: f64,
}

fn one() -> usize {
    1
}

fn default_cross_tol() -> f64 {
    1e-5
}

impl DependenceConfig {
    pub fn picard(horizon: f64, intervals: usize) -> Self {
        Self {
            horizon,
            intervals,
            integrator: Integrator::Picard,
            picard: None,
            substeps: 1,
            cross_check: false,
            cross_tol: default_cross_tol(),
        }
    }
}

/// One scale of the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceRow {
    pub k: usize,
    pub eps: f64,
    pub in_hs: f64,
    pub out_sup_hs: f64,
    pub out_lgamma_besov: f64,
    pub out_lgamma_lsigma: f64,
    /// Slope of `log out_sup_hs` against `log in_hs` over rows `0..=k`.
    pub slope_running: f64,
    pub picard_iterations: Option<usize>,
    /// `sup_t ‖·‖_{L²}` gap between the two integrators when cross-checked.
    pub integrator_gap: Option<f64>,
    pub flags: Vec<String>,
}

/// Least-squares fit of `log y = slope·log x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub rows: usize,
}

/// Ratios `out/in` of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSummary {
    pub constant: f64,
    pub first_half_max: f64,
    pub second_half_max: f64,
    /// `second_half_max ≤ 1.25 · first_half_max`.
    pub bounded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    SupHs,
    LgammaBesov,
    LgammaLsigma,
}

impl Column {
    pub const ALL: [Column; 3] = [Column::SupHs, Column::LgammaBesov, Column::LgammaLsigma];

    pub fn of(self, row: &DependenceRow) -> f64 {
        match self {
            Column::SupHs => row.out_sup_hs,
            Column::LgammaBesov => row.out_lgamma_besov,
            Column::LgammaLsigma => row.out_lgamma_lsigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub exponents: ExponentSet,
    pub horizon: f64,
    pub intervals: usize,
    /// `‖e^{itΔ}φ₀‖_{L^γ B^s_{ρ,2}}` for the largest perturbation.
    pub smallness: f64,
    pub smallness_delta: f64,
    pub base_iterations: Option<usize>,
    pub rows: Vec<DependenceRow>,
    pub flags: Vec<String>,
}

impl DependenceReport {
    pub fn fit(&self, column: Column) -> Result<SlopeFit, DependenceError> {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.in_hs, column.of(r))).collect();
        fit_slope(&pts)
    }

    pub fn lipschitz(&self, column: Column) -> LipschitzSummary {
        lipschitz_constant(
            &self
                .rows
                .iter()
                .map(|r| (r.in_hs, column.of(r)))
                .collect::<Vec<_>>(),
        )
    }

    /// `true` when every output column is nonincreasing in `k` up to `slack`.
    pub fn monotone(&self, slack: f64) -> bool {
        Column::ALL.iter().all(|&c| {
            self.rows
                .windows(2)
                .all(|w| c.of(&w[1]) <= c.of(&w[0]) + slack)
        })
    }

    /// CSV with columns `k, eps, in_Hs, out_sup_Hs, out_Lgamma_Besov,
    /// out_Lgamma_Lsigma, slope_running`, preceded by a hash comment line.
    pub fn write_csv<W: Write>(&self, mut w: W, config_hash: &str) -> io::Result<()> {
        writeln!(w, "# config_hash={config_hash}")?;
        writeln!(
            w,
            "k,eps,in_Hs,out_sup_Hs,out_Lgamma_Besov,out_Lgamma_Lsigma,slope_running"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.k,
                sci(r.eps),
                sci(r.in_hs),
                sci(r.out_sup_hs),
                sci(r.out_lgamma_besov),
                sci(r.out_lgamma_lsigma),
                sci(r.slope_running)
            )?;
        }
        Ok(())
    }
}

/// Least squares on `(log x, log y)` over rows with finite positive entries.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit, DependenceError> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 4 {
        return Err(DependenceError::TooFewRows(logs.len()));
    }
    let (slope, intercept, r_squared) = least_squares(&logs);
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        rows: logs.len(),
    })
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, intercept, r2)
}

/// Largest `out/in`, and the maxima over the first and second half of the rows.
pub fn lipschitz_constant(points: &[(f64, f64)]) -> LipschitzSummary {
    let ratios: Vec<f64> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && y.is_finite())
        .map(|(x, y)| y / x)
        .collect();
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let mid = ratios.len() / 2;
    let (first, second) = ratios.split_at(mid);
    let first_half_max = max(first);
    let second_half_max = max(second);
    LipschitzSummary {
        constant: max(&ratios),
        first_half_max,
        second_half_max,
        bounded: second_half_max <= 1.25 * first_half_max,
    }
}

struct Solved {
    traj: Trajectory,
    iterations: Option<usize>,
    gap: Option<f64>,
}

fn solve(
    phi: &Field,
    nl: &PowerNonlinearity,
    tg: &TimeGrid,
    cfg: &DependenceConfig,
    picard: &PicardConfig,
) -> Result<Solved, SolverError> {
    let split = || split_step_sampled(phi, nl, tg, cfg.substeps);
    let (traj, iterations, other) = match cfg.integrator {
        Integrator::Picard => {
            let (traj, rep) = picard_duhamel(phi, nl, tg, picard)?;
            let other = if cfg.cross_check {
                Some(split()?)
            } else {
                None
            };
            (traj, Some(rep.iterations), other)
        }
        Integrator::SplitStep => {
            let traj = split()?;
            let other = if cfg.cross_check {
                Some(picard_duhamel(phi, nl, tg, picard)?.0)
            } else {
                None
            };
            (traj, None, other)
        }
    };
    let gap = other.map(|o| sup_l2(&traj, &o));
    Ok(Solved {
        traj,
        iterations,
        gap,
    })
}

fn sup_l2(a: &Trajectory, b: &Trajectory) -> f64 {
    a.slices()
        .iter()
        .zip(b.slices())
        .map(|(x, y)| {
            crate::grid::lebesgue_norm(&x.sub(y).expect("same grid"), 2.0).unwrap_or(f64::NAN)
        })
        .fold(0.0, f64::max)
}

fn running_slopes(rows: &mut [DependenceRow]) {
    for k in 0..rows.len() {
        let pts: Vec<(f64, f64)> = rows[..=k]
            .iter()
            .filter(|r| r.in_hs > 0.0 && r.out_sup_hs > 0.0 && r.out_sup_hs.is_finite())
            .map(|r| (r.in_hs.ln(), r.out_sup_hs.ln()))
            .collect();
        rows[k].slope_running = if pts.len() >= 2 {
            least_squares(&pts).0
        } else {
            f64::NAN
        };
    }
}

/// Solves the base datum and every member of the family on one time grid
/// and tabulates the three output distances per scale.
///
/// A failed row is flagged and filled with NaN; the experiment continues.
pub fn run_dependence(
    params: &ProblemParams,
    family: &PerturbationFamily,
    cfg: &DependenceConfig,
) -> Result<DependenceReport, DependenceError> {
    let exps = ExponentSet::new(params)?;
    let nl = PowerNonlinearity::new(params.lambda, params.alpha)?;
    let tg = TimeGrid::new(cfg.horizon, cfg.intervals)?;
    let picard = cfg
        .picard
        .unwrap_or_else(|| PicardConfig::for_exponents(&exps));

    let mut flags = Vec::new();
    let smallness = smallness_check(&family.datum(0), &tg, &exps)?;
    if smallness > picard.smallness_delta {
        flags.push(format!(
            "smallness {} exceeds delta {}; convergence of the iteration is checked instead",
            sci(smallness),
            sci(picard.smallness_delta)
        ));
    }
    let base = solve(&family.base, &nl, &tg, cfg, &picard)?;

    let besov = NormSpec::besov_lp(exps.s, exps.rho, 2.0, false);
    let lsigma = NormSpec::lebesgue(exps.sigma);
    let hs = NormSpec::sobolev(exps.s, false);
    let scales = family.scales();

    let mut rows: Vec<DependenceRow> = scales
        .par_iter()
        .enumerate()
        .map(|(k, &eps)| {
            let phi = family.datum(k);
            let in_hs = sobolev_norm(&phi.sub(&family.base).expect("same grid"), exps.s, false);
            let mut row = DependenceRow {
                k,
                eps,
                in_hs,
                out_sup_hs: f64::NAN,
                out_lgamma_besov: f64::NAN,
                out_lgamma_lsigma: f64::NAN,
                slope_running: f64::NAN,
                picard_iterations: None,
                integrator_gap: None,
                flags: Vec::new(),
            };
            let solved = match solve(&phi, &nl, &tg, cfg, &picard) {
                Ok(s) => s,
                Err(e) => {
                    row.flags.push(format!("solve failed: {e}"));
                    return row;
                }
            };
            row.picard_iterations = solved.iterations;
            row.integrator_gap = solved.gap;
            if let Some(gap) = solved.gap {
                if !(gap <= cfg.cross_tol) {
                    row.flags
                        .push(format!("integrators disagree by {}", sci(gap)));
                }
            }
            let diff = match solved.traj.difference(&base.traj) {
                Ok(d) => d,
                Err(e) => {
                    row.flags.push(format!("trajectory mismatch: {e}"));
                    return row;
                }
            };
            let norms = (|| -> Result<(f64, f64, f64), SpaceError> {
                Ok((
                    spacetime_norm(&diff, f64::INFINITY, &hs)?,
                    spacetime_norm(&diff, exps.gamma, &besov)?,
                    spacetime_norm(&diff, exps.gamma, &lsigma)?,
                ))
            })();
            match norms {
                Ok((a, b, c)) => {
                    row.out_sup_hs = a;
                    row.out_lgamma_besov = b;
                    row.out_lgamma_lsigma = c;
                }
                Err(e) => row.flags.push(format!("norm failed: {e}")),
            }
            row
        })
        .collect();
    running_slopes(&mut rows);
    for r in &rows {
        for f in &r.flags {
            flags.push(format!("row {}: {f}", r.k));
        }
    }

    Ok(DependenceReport {
        exponents: exps,
        horizon: tg.horizon(),
        intervals: tg.intervals(),
        smallness,
        smallness_delta: picard.smallness_delta,
        base_iterations: base.iterations,
        rows,
        flags,
    })
}

/// Options of [`remainder_decay_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderDecayConfig {
    pub theta_nodes: usize,
    /// Number of time slices at which `K` is evaluated; must divide the
    /// interval count of the solve.
    pub time_samples: usize,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    /// Coupling of the `g` inside `K`, when it should differ from the one
    /// driving the flow (for instance `K` along free evolutions).
    #[serde(default)]
    pub k_coupling: Option<Complex64>,
}

impl Default for RemainderDecayConfig {
    fn default() -> Self {
        Self {
            theta_nodes: 16,
            time_samples: 16,
            quadrature: QuadratureSpec::default(),
            k_coupling: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderRow {
    pub k: usize,
    pub eps: f64,
    /// `‖K(u(t), u_k(t))‖_{L^{γ'}(0,T)}`.
    pub k_norm: f64,
}

/// `‖K(u, u_k)‖_{L^{γ'}(0,T)}` per scale, with `K` taken in the exponents
/// `p = ρ'`, `r = ρ`, `q = 2` on solved trajectories.
pub fn remainder_decay_experiment(
    params: &ProblemParams,
    family: &PerturbationFamily,
    cfg: &DependenceConfig,
    rcfg: &RemainderDecayConfig,
) -> Result<Vec<RemainderRow>, DependenceError> {
    let exps = ExponentSet::new(params)?;
    let nl = PowerNonlinearity::new(params.lambda, params.alpha)?;
    let tg = TimeGrid::new(cfg.horizon, cfg.intervals)?;
    if rcfg.time_samples == 0 || !tg.intervals().is_multiple_of(rcfg.time_samples) {
        return Err(DependenceError::Family(format!(
            "time_samples {} must divide the interval count {}",
            rcfg.time_samples,
            tg.intervals()
        )));
    }
    let stride = tg.intervals() / rcfg.time_samples;
    let picard = cfg
        .picard
        .unwrap_or_else(|| PicardConfig::for_exponents(&exps));
    let lem = LemmaExponents::canonical(&exps);
    let kcfg = RemainderConfig {
        theta_nodes: rcfg.theta_nodes,
        quadrature: rcfg.quadrature,
    };
    let k_nl = PowerNonlinearity::new(rcfg.k_coupling.unwrap_or(params.lambda), params.alpha)?;
    let base = solve(&family.base, &nl, &tg, cfg, &picard)?
        .traj
        .subsample(stride)?;
    let dt = base.timegrid().dt();
    family
        .scales()
        .par_iter()
        .enumerate()
        .map(|(k, &eps)| {
            let traj = solve(&family.datum(k), &nl, &tg, cfg, &picard)?
                .traj
                .subsample(stride)?;
            let per_slice: Vec<f64> = base
                .slices()
                .iter()
                .zip(traj.slices())
                .map(|(u, v)| remainder_k(u, v, &k_nl, params.alpha, &lem, &kcfg))
                .collect::<Result<_, _>>()?;
            Ok(RemainderRow {
                k,
                eps,
                k_norm: time_norm(&per_slice, dt, exps.gamma_dual),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn setup(lambda: f64) -> (ProblemParams, PerturbationFamily) {
        let grid = Grid::new(1, 128, 30.0).unwrap();
        let params = ProblemParams::power(1, 0.4, 2.0, Complex64::new(lambda, 0.0));
        let base = gaussian(&grid, [0.0; 3], 1.5, Complex64::new(0.5, 0.0));
        let fam =
            PerturbationFamily::with_default_direction(base, 0.4, [1.0, 0.0, 0.0], 1.0, 0.1, 6)
                .unwrap();
        (params, fam)
    }

    #[test]
    fn direction_is_normalized_and_orthogonal() {
        let (_, fam) = setup(1.0);
        assert!((sobolev_norm(&fam.direction, 0.4, false) - 1.0).abs() < 1e-12);
        assert!(fam.direction.inner(&fam.base).unwrap().norm() < 1e-12);
        assert_eq!(fam.scales().len(), 7);
        assert_eq!(fam.scales()[3], 0.1 / 8.0);
    }

    #[test]
    fn zero_family_has_zero_distances() {
        let (params, mut fam) = setup(1.0);
        fam.eps0 = 0.0;
        let rep = run_dependence(&params, &fam, &DependenceConfig::picard(0.1, 32)).unwrap();
        for r in &rep.rows {
            assert_eq!(
                (
                    r.in_hs,
                    r.out_sup_hs,
                    r.out_lgamma_besov,
                    r.out_lgamma_lsigma
                ),
                (0.0, 0.0, 0.0, 0.0)
            );
        }
    }

    #[test]
    fn linear_flow_is_an_isometry() {
        let (params, fam) = setup(0.0);
        let rep = run_dependence(&params, &fam, &DependenceConfig::picard(0.25, 32)).unwrap();
        for r in &rep.rows {
            assert!((r.out_sup_hs / r.in_hs - 1.0).abs() < 1e-10);
        }
        let fit = rep.fit(Column::SupHs).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-10 && (fit.r_squared - 1.0).abs() < 1e-10);
        assert!((rep.lipschitz(Column::SupHs).constant - 1.0).abs() < 1e-10);
    }

    #[test]
    fn nonlinear_run_is_monotone_and_lipschitz() {
        let (params, fam) = setup(1.0);
        let rep = run_dependence(&params, &fam, &DependenceConfig::picard(0.25, 64)).unwrap();
        assert_eq!(rep.rows.len(), 7);
        assert!(rep.monotone(1e-12));
        let fit = rep.fit(Column::SupHs).unwrap();
        assert!((0.85..=1.15).contains(&fit.slope), "{fit:?}");
        assert!(rep.lipschitz(Column::SupHs).bounded);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf, "h").unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2 + 7);
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = (0..8)
            .map(|k| {
                let x = 0.5f64.powi(k);
                (x, 3.0 * x.sqrt())
            })
            .collect();
        let fit = fit_slope(&pts).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-10);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
        assert!(matches!(
            fit_slope(&pts[..3]),
            Err(DependenceError::TooFewRows(3))
        ));
    }

    #[test]
    fn lipschitz_summary_halves() {
        let pts = [(1.0, 1.0), (0.5, 0.6), (0.25, 0.3), (0.125, 0.2)];
        let l = lipschitz_constant(&pts);
        assert_eq!(l.first_half_max, 1.2);
        assert_eq!(l.second_half_max, 1.6);
        assert!(!l.bounded);
    }

    #[test]
    fn remainder_decays_along_solutions() {
        let (params, fam) = setup(1.0);
        let cfg = DependenceConfig::picard(0.25, 64);
        let rows = remainder_decay_experiment(
            &params,
            &fam,
            &cfg,
            &RemainderDecayConfig {
                time_samples: 8,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(
            rows.windows(2).all(|w| w[1].k_norm < w[0].k_norm),
            "{rows:?}"
        );
    }

    #[test]
    fn remainder_along_free_evolutions() {
        let (params, fam) = setup(0.0);
        let cfg = DependenceConfig::picard(0.25, 32);
        let mut rcfg = RemainderDecayConfig {
            time_samples: 4,
            ..Default::default()
        };
        let zero = remainder_decay_experiment(&params, &fam, &cfg, &rcfg).unwrap();
        assert!(zero.iter().all(|r| r.k_norm == 0.0));
        rcfg.k_coupling = Some(Complex64::new(1.0, 0.0));
        let rows = remainder_decay_experiment(&params, &fam, &cfg, &rcfg).unwrap();
        assert!(
            rows.windows(2).all(|w| w[1].k_norm < w[0].k_norm),
            "{rows:?}"
        );
    }
}
