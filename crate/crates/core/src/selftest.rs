//! Built-in invariant suites, runnable from the command line.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::exponents::{ExponentSet, ProblemParams};
use crate::grid::{free_propagate, lebesgue_norm, translate, Field, Grid};
use crate::nonlinearity::{numeric_wirtinger, pointwise_sweep, Nonlinearity, PowerNonlinearity};
use crate::rng::{band_limited_field, gaussian, seeded};
use crate::solver::{picard_duhamel, split_step, PicardConfig};
use crate::spaces::{
    besov_norm_fd, decompose_with, sobolev_norm, DyadicBand, NormSpec, Partition, QuadratureSpec,
};
use crate::trajectory::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelftestOptions {
    /// Relative gain error injected into every Littlewood–Paley block.
    pub partition_gain_error: f64,
    pub pointwise_samples: usize,
    pub seed: u64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            partition_gain_error: 0.0,
            pointwise_samples: 100_000,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub checks: Vec<CheckResult>,
}

impl SuiteResult {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub suites: Vec<SuiteResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.failed() == 0)
    }
}

fn check(name: &str, value: f64, tol: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: value <= tol,
        detail: format!("{value:.3e} (tolerance {tol:.1e})"),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn norms_suite(opts: &SelftestOptions) -> SuiteResult {
    let partition = Partition {
        gain_error: opts.partition_gain_error,
    };
    let grid = Grid::new(1, 256, 2.0 * std::f64::consts::PI).expect("valid grid");
    let f = band_limited_field(&mut seeded(opts.seed), &grid, 40.0, 0.5);
    let mut checks = Vec::new();

    let l2 = lebesgue_norm(&f, 2.0).unwrap_or(f64::NAN);
    checks.push(check(
        "plancherel",
        rel(sobolev_norm(&f, 0.0, true), l2),
        1e-12,
    ));

    let recon = decompose_with(&f, DyadicBand::homogeneous(&grid), &partition)
        .map(|b| max_diff(&b.reconstruct(), &f) / l2)
        .unwrap_or(f64::INFINITY);
    checks.push(check("partition_of_unity", recon, 1e-12));

    let plane = Field::from_fn(&grid, |x| Complex64::from_polar(1.0, 16.0 * x[0]));
    let in_block = decompose_with(&plane, DyadicBand::homogeneous(&grid), &partition)
        .ok()
        .and_then(|b| {
            b.block(4).map(|blk| {
                rel(
                    lebesgue_norm(blk, 2.0).unwrap_or(0.0),
                    lebesgue_norm(&plane, 2.0).unwrap_or(1.0),
                )
            })
        })
        .unwrap_or(f64::INFINITY);
    checks.push(check("plane_wave_single_block", in_block, 1e-12));

    let quad = QuadratureSpec::default();
    let spec = NormSpec::besov_fd(0.5, 2.0, 2.0, true);
    let shifted = translate(&f, &[0.37]).expect("1-d shift");
    let fd = besov_norm_fd(&f, &spec, &quad).unwrap_or(f64::NAN);
    let fd_shift = besov_norm_fd(&shifted, &spec, &quad).unwrap_or(f64::NAN);
    checks.push(check("fd_translation_invariance", rel(fd_shift, fd), 1e-8));

    SuiteResult {
        name: "norms".into(),
        checks,
    }
}

fn propagator_suite(opts: &SelftestOptions) -> SuiteResult {
    let grid = Grid::new(2, 32, 10.0).expect("valid grid");
    let f = band_limited_field(&mut seeded(opts.seed + 1), &grid, 6.0, 1.0);
    let mut checks = Vec::new();
    let a = free_propagate(&free_propagate(&f, 0.3), 0.45);
    let b = free_propagate(&f, 0.75);
    checks.push(check("group_law", max_diff(&a, &b), 1e-12));
    let hs = sobolev_norm(&f, 0.7, false);
    checks.push(check(
        "hs_invariance",
        rel(sobolev_norm(&b, 0.7, false), hs),
        1e-12,
    ));
    let l2 = lebesgue_norm(&f, 2.0).unwrap_or(f64::NAN);
    checks.push(check(
        "unitarity",
        rel(lebesgue_norm(&b, 2.0).unwrap_or(f64::NAN), l2),
        1e-12,
    ));
    let y = [0.8, -1.1];
    let ty = translate(&free_propagate(&f, 0.5), &y).expect("2-d shift");
    let yt = free_propagate(&translate(&f, &y).expect("2-d shift"), 0.5);
    checks.push(check("translation_commutes", max_diff(&ty, &yt), 1e-12));
    SuiteResult {
        name: "propagator".into(),
        checks,
    }
}

fn pointwise_suite(opts: &SelftestOptions) -> SuiteResult {
    let mut checks = Vec::new();
    for alpha in [0.5, 1.0, 2.0, 3.0] {
        let sw = pointwise_sweep(alpha, opts.pointwise_samples, opts.seed);
        checks.push(CheckResult {
            name: format!("pointwise_alpha_{alpha}"),
            passed: sw.modulus_violations == 0 && sw.phase_violations == 0,
            detail: format!(
                "{} samples, violations {}/{}",
                sw.samples, sw.modulus_violations, sw.phase_violations
            ),
        });
        let nl = PowerNonlinearity {
            lambda: Complex64::new(1.0, 0.5),
            alpha,
        };
        let z = Complex64::new(0.6, -0.9);
        let (a, b) = nl.wirtinger(z);
        let (fa, fb) = numeric_wirtinger(&|w| nl.value(w), z, 1e-7);
        checks.push(check(
            &format!("wirtinger_alpha_{alpha}"),
            (a - fa).norm().max((b - fb).norm()),
            1e-6,
        ));
    }
    SuiteResult {
        name: "pointwise".into(),
        checks,
    }
}

fn plane_wave_suite() -> SuiteResult {
    let grid = Grid::new(1, 64, 2.0 * std::f64::consts::PI).expect("valid grid");
    let (amp, k0, alpha) = (0.5, 3.0, 2.0);
    let nl = PowerNonlinearity {
        lambda: Complex64::new(1.0, 0.0),
        alpha,
    };
    let phi = Field::from_fn(&grid, |x| Complex64::from_polar(amp, k0 * x[0]));
    let w = -k0 * k0 + amp.powf(alpha);
    let exact = Field::from_fn(&grid, |x| Complex64::from_polar(amp, k0 * x[0] + w));
    let mut checks = Vec::new();
    let ss = split_step(&phi, &nl, 1.0, 1e-3)
        .map(|t| max_diff(t.last(), &exact))
        .unwrap_or(f64::INFINITY);
    checks.push(check("split_step_plane_wave", ss, 1e-8));
    let exps =
        ExponentSet::new(&ProblemParams::power(1, 0.4, alpha, nl.lambda)).expect("valid exponents");
    let tg = TimeGrid::new(1.0, 256).expect("valid time grid");
    let pc = picard_duhamel(&phi, &nl, &tg, &PicardConfig::for_exponents(&exps))
        .map(|(t, _)| max_diff(t.last(), &exact))
        .unwrap_or(f64::INFINITY);
    checks.push(check("picard_plane_wave", pc, 1e-6));
    let mass = split_step(
        &gaussian(&grid, [0.0; 3], 0.7, Complex64::new(1.0, 0.0)),
        &nl,
        1.0,
        1e-2,
    )
    .map(|t| {
        rel(
            lebesgue_norm(t.last(), 2.0).unwrap_or(0.0),
            lebesgue_norm(t.initial(), 2.0).unwrap_or(1.0),
        )
    })
    .unwrap_or(f64::INFINITY);
    checks.push(check("mass_conservation", mass, 1e-7));
    SuiteResult {
        name: "plane_wave".into(),
        checks,
    }
}

pub fn run_selftest(opts: &SelftestOptions) -> SelftestReport {
    SelftestReport {
        suites: vec![
            norms_suite(opts),
            propagator_suite(opts),
            pointwise_suite(opts),
            plane_wave_suite(),
        ],
    }
}
