//! The nonlinear term `g` and the estimates built on it.
//!
//! A nonlinearity is a `C¹` map `g: ℂ → ℂ` with `g(0) = 0`, handled through
//! its two Wirtinger derivatives `∂_z g` and `∂_z̄ g`. Its real derivative acts
//! on an increment `ζ` as `∂_z g·ζ + ∂_z̄ g·ζ̄`, and its operator norm is
//! `|∂_z g| + |∂_z̄ g|`, which is what the growth bound `A + B|u|^α` controls.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponents::ExponentSet;
use crate::grid::{forward_transform, lebesgue_norm, lebesgue_norm_values, Field, GridError};
use crate::quadrature::gauss_legendre_unit;
use crate::rng::{log_uniform_complex, substream};
use crate::spaces::{
    besov_norm_fd, smooth_cutoff, smooth_cutoff_derivative, translation_integral, NormSpec,
    QuadratureSpec, SpaceError,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("g(0) must vanish, got |g(0)| = {0:e}")]
    NonzeroAtOrigin(f64),
    #[error("growth constants need A ≥ 0, B ≥ 0, α > 0 (got A = {a}, B = {b}, α = {alpha})")]
    Growth { a: f64, b: f64, alpha: f64 },
    #[error("split cutoff must be finite and positive (got {0})")]
    Cutoff(f64),
    #[error("invalid exponents: {0}")]
    Exponents(String),
    #[error("exponent relation α/σ = 1/p − 1/r violated: {lhs} vs {rhs}")]
    Relation { lhs: f64, rhs: f64 },
    #[error("θ-quadrature needs at least 2 nodes (got {0})")]
    ThetaNodes(usize),
}

/// `|g'(u)| ≤ A + B|u|^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub alpha: f64,
}

impl GrowthBound {
    pub fn at(&self, modulus: f64) -> f64 {
        self.a + self.b * modulus.powf(self.alpha)
    }
}

pub trait Nonlinearity: Send + Sync {
    fn value(&self, z: Complex64) -> Complex64;

    /// `(∂_z g(z), ∂_z̄ g(z))`.
    fn wirtinger(&self, z: Complex64) -> (Complex64, Complex64);

    fn growth(&self) -> GrowthBound;

    /// `Some(α)` when `g(u) = λ|u|^α u` exactly.
    fn power_exponent(&self) -> Option<f64> {
        None
    }

    /// `true` when `g ≡ 0`, which lets integrators skip the nonlinear stage.
    fn is_zero(&self) -> bool {
        false
    }
}

/// `g(u) = λ|u|^α u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerNonlinearity {
    pub lambda: Complex64,
    pub alpha: f64,
}

impl PowerNonlinearity {
    pub fn new(lambda: Complex64, alpha: f64) -> Result<Self, NonlinearityError> {
        if !(alpha.is_finite() && alpha > 0.0) || !(lambda.re.is_finite() && lambda.im.is_finite())
        {
            return Err(NonlinearityError::Growth {
                a: 0.0,
                b: lambda.norm(),
                alpha,
            });
        }
        Ok(Self { lambda, alpha })
    }
}

impl Nonlinearity for PowerNonlinearity {
    fn value(&self, z: Complex64) -> Complex64 {
        self.lambda * z * z.norm().powf(self.alpha)
    }

    fn wirtinger(&self, z: Complex64) -> (Complex64, Complex64) {
        let r = z.norm();
        if r == 0.0 {
            return (ZERO, ZERO);
        }
        let m = r.powf(self.alpha);
        let unit = z / r;
        let dz = self.lambda * (1.0 + 0.5 * self.alpha) * m;
        let dzbar = self.lambda * (0.5 * self.alpha) * m * unit * unit;
        (dz, dzbar)
    }

    fn growth(&self) -> GrowthBound {
        GrowthBound {
            a: 0.0,
            b: self.lambda.norm() * (1.0 + self.alpha),
            alpha: self.alpha,
        }
    }

    fn power_exponent(&self) -> Option<f64> {
        Some(self.alpha)
    }

    fn is_zero(&self) -> bool {
        self.lambda == ZERO
    }
}

pub type ScalarMap = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;
pub type WirtingerMap = Arc<dyn Fn(Complex64) -> (Complex64, Complex64) + Send + Sync>;

/// User-supplied `g` and `(∂_z g, ∂_z̄ g)` with declared growth constants.
#[derive(Clone)]
pub struct GeneralNonlinearity {
    gfun: ScalarMap,
    dfun: WirtingerMap,
    growth: GrowthBound,
}

impl fmt::Debug for GeneralNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralNonlinearity")
            .field("growth", &self.growth)
            .finish_non_exhaustive()
    }
}

impl GeneralNonlinearity {
    pub fn new(
        gfun: ScalarMap,
        dfun: WirtingerMap,
        a: f64,
        b: f64,
        alpha: f64,
    ) -> Result<Self, NonlinearityError> {
        if !(a >= 0.0
            && b >= 0.0
            && alpha > 0.0
            && a.is_finite()
            && b.is_finite()
            && alpha.is_finite())
        {
            return Err(NonlinearityError::Growth { a, b, alpha });
        }
        let g0 = gfun(ZERO).norm();
        if g0 > 1e-14 {
            return Err(NonlinearityError::NonzeroAtOrigin(g0));
        }
        Ok(Self {
            gfun,
            dfun,
            growth: GrowthBound { a, b, alpha },
        })
    }

    /// Derivatives by central differences with step `1e-6·max(1, |z|)`.
    pub fn with_numeric_derivative(
        gfun: ScalarMap,
        a: f64,
        b: f64,
        alpha: f64,
    ) -> Result<Self, NonlinearityError> {
        let g = gfun.clone();
        let dfun: WirtingerMap = Arc::new(move |z: Complex64| numeric_wirtinger(&*g, z, 1e-6));
        Self::new(gfun, dfun, a, b, alpha)
    }

    pub fn from_power(p: &PowerNonlinearity) -> Self {
        let (pv, pd) = (*p, *p);
        Self {
            gfun: Arc::new(move |z| pv.value(z)),
            dfun: Arc::new(move |z| pd.wirtinger(z)),
            growth: p.growth(),
        }
    }

    /// `g(u) = μu + λ|u|^α u`, with `A = |μ|` and `B = |λ|(1+α)`.
    pub fn linear_plus_power(
        mu: Complex64,
        lambda: Complex64,
        alpha: f64,
    ) -> Result<Self, NonlinearityError> {
        let p = PowerNonlinearity::new(lambda, alpha)?;
        let (pv, pd) = (p, p);
        Self::new(
            Arc::new(move |z| mu * z + pv.value(z)),
            Arc::new(move |z| {
                let (dz, dzbar) = pd.wirtinger(z);
                (dz + mu, dzbar)
            }),
            mu.norm(),
            p.growth().b,
            alpha,
        )
    }

    /// Largest `|g'(z)| / (A + B|z|^α)` over `samples`; at most 1 when the
    /// declared growth bound holds there.
    pub fn growth_ratio(&self, samples: &[Complex64]) -> f64 {
        samples
            .par_iter()
            .map(|&z| {
                let (dz, dzbar) = self.wirtinger(z);
                let bound = self.growth.at(z.norm());
                let d = dz.norm() + dzbar.norm();
                if bound > 0.0 {
                    d / bound
                } else if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .reduce(|| 0.0, f64::max)
    }
}

impl Nonlinearity for GeneralNonlinearity {
    fn value(&self, z: Complex64) -> Complex64 {
        (self.gfun)(z)
    }

    fn wirtinger(&self, z: Complex64) -> (Complex64, Complex64) {
        (self.dfun)(z)
    }

    fn growth(&self) -> GrowthBound {
        self.growth
    }
}

/// `∂_z g = (g_x − i g_y)/2`, `∂_z̄ g = (g_x + i g_y)/2` with central differences.
pub fn numeric_wirtinger(
    g: &dyn Fn(Complex64) -> Complex64,
    z: Complex64,
    rel_step: f64,
) -> (Complex64, Complex64) {
    let h = rel_step * z.norm().max(1.0);
    let i = Complex64::new(0.0, 1.0);
    let gx = (g(z + h) - g(z - h)) / (2.0 * h);
    let gy = (g(z + i * h) - g(z - i * h)) / (2.0 * h);
    ((gx - i * gy) * 0.5, (gx + i * gy) * 0.5)
}

/// Real-linear action `D1·ζ + D2·ζ̄` of a Wirtinger pair.
#[inline]
pub fn apply_derivative(d: (Complex64, Complex64), zeta: Complex64) -> Complex64 {
    d.0 * zeta + d.1 * zeta.conj()
}

/// Pointwise image `x ↦ g(f(x))`.
pub fn apply_g(f: &Field, nl: &dyn Nonlinearity) -> Field {
    let values: Vec<Complex64> = f.values().par_iter().map(|&z| nl.value(z)).collect();
    Field::new(f.grid(), values).unwrap_or_else(|_| f.map(|z| nl.value(z)))
}

/// Wirtinger pair of `λ|z|^α z`; `z = 0` returns the continuous extension `(0, 0)`.
pub fn wirtinger(z: Complex64, nl: &PowerNonlinearity) -> (Complex64, Complex64) {
    nl.wirtinger(z)
}

const GRADING_LEVELS: usize = 8;

/// `|g(z1) − g(z2) − [(z1−z2)∫∂_z g + conj(z1−z2)∫∂_z̄ g]|` with the θ-integral
/// over the segment `z2 + θ(z1 − z2)` done by composite Gauss–Legendre using
/// about `n_theta` nodes in total.
pub fn difference_identity_residual(
    z1: Complex64,
    z2: Complex64,
    nl: &dyn Nonlinearity,
    n_theta: usize,
) -> Result<f64, NonlinearityError> {
    if n_theta < 2 {
        return Err(NonlinearityError::ThetaNodes(n_theta));
    }
    let d = z1 - z2;
    // The derivative is only Hölder at 0, so the nodes are spread over pieces
    // shrinking geometrically toward the point of the segment closest to 0.
    let dd = d.norm_sqr();
    let closest = if dd > 0.0 {
        (-(z2 * d.conj()).re / dd).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let sides: Vec<(f64, f64)> = [(closest, 1.0 - closest), (closest, -closest)]
        .into_iter()
        .filter(|(_, len)| len.abs() > 0.0)
        .collect();
    let per_piece = (n_theta / (GRADING_LEVELS * sides.len())).max(2);
    let (nodes, weights) = gauss_legendre_unit(per_piece);
    let mut d1 = ZERO;
    let mut d2 = ZERO;
    for (anchor, len) in sides {
        for j in 0..GRADING_LEVELS {
            let outer = len * 0.25f64.powi(j as i32);
            let inner = if j + 1 == GRADING_LEVELS {
                0.0
            } else {
                0.25 * outer
            };
            let (lo, width) = (anchor + inner, outer - inner);
            for (t, w) in nodes.iter().zip(&weights) {
                let (a, b) = nl.wirtinger(z2 + d * (lo + width * t));
                let scale = w * width.abs();
                d1 += a * scale;
                d2 += b * scale;
            }
        }
    }
    let lhs = nl.value(z1) - nl.value(z2);
    Ok((lhs - apply_derivative((d1, d2), d)).norm())
}

/// Constant in the `||z1|^α − |z2|^α|` bound: 1 for `α ≤ 1`, `α` above.
pub fn modulus_constant(alpha: f64) -> f64 {
    if alpha <= 1.0 {
        1.0
    } else {
        alpha
    }
}

/// Constant in the `||z1|^{α−2}z1² − |z2|^{α−2}z2²|` bound: 9 for `α ≤ 1`,
/// `max(5, α)` above.
pub fn phase_constant(alpha: f64) -> f64 {
    if alpha <= 1.0 {
        9.0
    } else {
        alpha.max(5.0)
    }
}

/// `|z|^{α−2} z²`, zero at the origin.
pub fn phase_map(z: Complex64, alpha: f64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return ZERO;
    }
    let u = z / r;
    u * u * r.powf(alpha)
}

/// Both sides of the two pointwise inequalities for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub alpha: f64,
    pub modulus_lhs: f64,
    pub modulus_rhs: f64,
    pub modulus_holds: bool,
    pub phase_lhs: f64,
    pub phase_rhs: f64,
    pub phase_holds: bool,
}

impl PointwiseReport {
    pub fn holds(&self) -> bool {
        self.modulus_holds && self.phase_holds
    }
}

/// Evaluates both inequalities for `(z1, z2)`.
///
/// A violation must exceed the rounding noise of the left-hand side, taken as
/// `8ε(|z1|^α + |z2|^α)`.
pub fn check_pointwise_power(z1: Complex64, z2: Complex64, alpha: f64) -> PointwiseReport {
    let (r1, r2) = (z1.norm(), z2.norm());
    let d = (z1 - z2).norm();
    let (m1, m2) = (r1.powf(alpha), r2.powf(alpha));
    let slack = 8.0 * f64::EPSILON * (m1 + m2);
    let modulus_lhs = (m1 - m2).abs();
    let phase_lhs = (phase_map(z1, alpha) - phase_map(z2, alpha)).norm();
    let (modulus_rhs, phase_rhs) = if alpha <= 1.0 {
        let da = d.powf(alpha);
        (modulus_constant(alpha) * da, phase_constant(alpha) * da)
    } else {
        let w = (r1.powf(alpha - 1.0) + r2.powf(alpha - 1.0)) * d;
        (modulus_constant(alpha) * w, phase_constant(alpha) * w)
    };
    PointwiseReport {
        alpha,
        modulus_lhs,
        modulus_rhs,
        modulus_holds: modulus_lhs <= modulus_rhs + slack,
        phase_lhs,
        phase_rhs,
        phase_holds: phase_lhs <= phase_rhs + slack,
    }
}

/// Aggregate of a random sweep of [`check_pointwise_power`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointwiseSweep {
    pub alpha: f64,
    pub samples: usize,
    pub modulus_violations: usize,
    pub phase_violations: usize,
    /// Largest observed `lhs/rhs` for each inequality.
    pub modulus_max_ratio: f64,
    pub phase_max_ratio: f64,
}

const SWEEP_CHUNK: usize = 1 << 14;

/// Random pairs mixing four regimes: independent log-uniform moduli over
/// eight decades, near-coincident pairs, equal-modulus pairs with arbitrary
/// phase, and one point much smaller than the other. Chunks use independent
/// seeded streams so the result is independent of the thread count.
pub fn pointwise_sweep(alpha: f64, samples: usize, seed: u64) -> PointwiseSweep {
    use rand::Rng;
    let chunks = samples.div_ceil(SWEEP_CHUNK);
    let partial: Vec<(usize, usize, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let count = SWEEP_CHUNK.min(samples - c * SWEEP_CHUNK);
            let mut acc = (0usize, 0usize, 0.0f64, 0.0f64);
            for i in 0..count {
                let z1 = log_uniform_complex(&mut rng, -4.0, 4.0);
                let z2 = match i % 4 {
                    0 => log_uniform_complex(&mut rng, -4.0, 4.0),
                    1 => z1 + log_uniform_complex(&mut rng, -8.0, 0.0) * z1.norm(),
                    2 => {
                        let scale = 1.0 + rng.random_range(-0.1..=0.1);
                        Complex64::from_polar(
                            z1.norm() * scale,
                            rng.random_range(0.0..std::f64::consts::TAU),
                        )
                    }
                    _ => log_uniform_complex(&mut rng, -12.0, -2.0) * z1.norm(),
                };
                let rep = check_pointwise_power(z1, z2, alpha);
                acc.0 += usize::from(!rep.modulus_holds);
                acc.1 += usize::from(!rep.phase_holds);
                if rep.modulus_rhs > 0.0 {
                    acc.2 = acc.2.max(rep.modulus_lhs / rep.modulus_rhs);
                }
                if rep.phase_rhs > 0.0 {
                    acc.3 = acc.3.max(rep.phase_lhs / rep.phase_rhs);
                }
            }
            acc
        })
        .collect();
    let mut out = PointwiseSweep {
        alpha,
        samples,
        modulus_violations: 0,
        phase_violations: 0,
        modulus_max_ratio: 0.0,
        phase_max_ratio: 0.0,
    };
    for (mv, pv, mr, pr) in partial {
        out.modulus_violations += mv;
        out.phase_violations += pv;
        out.modulus_max_ratio = out.modulus_max_ratio.max(mr);
        out.phase_max_ratio = out.phase_max_ratio.max(pr);
    }
    out
}

/// `g = g₁ + g₂` with `g₁' ` bounded and `|g₂'(u)| ≤ C|u|^α`.
#[derive(Debug, Clone)]
pub struct SplitNonlinearity {
    pub g1: GeneralNonlinearity,
    pub g2: GeneralNonlinearity,
    pub cutoff: f64,
}

impl Nonlinearity for SplitNonlinearity {
    fn value(&self, z: Complex64) -> Complex64 {
        self.g1.value(z) + self.g2.value(z)
    }

    fn wirtinger(&self, z: Complex64) -> (Complex64, Complex64) {
        let (a, b) = self.g1.wirtinger(z);
        let (c, d) = self.g2.wirtinger(z);
        (a + c, b + d)
    }

    fn growth(&self) -> GrowthBound {
        let (a, b) = (self.g1.growth(), self.g2.growth());
        GrowthBound {
            a: a.a + b.a,
            b: a.b + b.b,
            alpha: b.alpha,
        }
    }
}

fn cutoff_derivative_sup() -> f64 {
    (0..=4096)
        .map(|i| smooth_cutoff_derivative(0.5 + 0.5 * i as f64 / 4096.0).abs())
        .fold(0.0, f64::max)
        * 1.01
}

/// `g₁ = χ(|u|/c)·g`, `g₂ = g − g₁`, with `χ` the Littlewood–Paley cutoff
/// (1 on `[0, 1/2]`, 0 on `[1, ∞)`).
///
/// `g₂` vanishes on `|u| ≤ c/2` and `g₁` is supported in `|u| ≤ c`. A
/// nonlinearity with `A = 0` is already of the second kind and is returned as
/// `g₁ = 0`, `g₂ = g`.
pub fn split(
    nl: &GeneralNonlinearity,
    cutoff: f64,
) -> Result<SplitNonlinearity, NonlinearityError> {
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(NonlinearityError::Cutoff(cutoff));
    }
    let GrowthBound { a, b, alpha } = nl.growth();
    if a == 0.0 {
        let zero = GeneralNonlinearity {
            gfun: Arc::new(|_| ZERO),
            dfun: Arc::new(|_| (ZERO, ZERO)),
            growth: GrowthBound {
                a: 0.0,
                b: 0.0,
                alpha,
            },
        };
        return Ok(SplitNonlinearity {
            g1: zero,
            g2: nl.clone(),
            cutoff,
        });
    }

    // |g(u)| ≤ A|u| + B|u|^{α+1}/(α+1) by integrating the growth bound along the ray.
    let gsup = a * cutoff + b * cutoff.powf(alpha + 1.0) / (alpha + 1.0);
    let a1 = a + b * cutoff.powf(alpha) + cutoff_derivative_sup() * gsup / cutoff;
    let b2 = b + (a + a1) * (2.0 / cutoff).powf(alpha);

    let g = nl.clone();
    let g1fun: ScalarMap = Arc::new(move |z| g.value(z) * smooth_cutoff(z.norm() / cutoff));
    let g = nl.clone();
    let g1d: WirtingerMap = Arc::new(move |z| g1_wirtinger(&g, cutoff, z));
    let g = nl.clone();
    let g2fun: ScalarMap = Arc::new(move |z| g.value(z) * (1.0 - smooth_cutoff(z.norm() / cutoff)));
    let g = nl.clone();
    let g2d: WirtingerMap = Arc::new(move |z| {
        let (a, b) = g.wirtinger(z);
        let (c, d) = g1_wirtinger(&g, cutoff, z);
        (a - c, b - d)
    });

    Ok(SplitNonlinearity {
        g1: GeneralNonlinearity {
            gfun: g1fun,
            dfun: g1d,
            growth: GrowthBound {
                a: a1,
                b: 0.0,
                alpha,
            },
        },
        g2: GeneralNonlinearity {
            gfun: g2fun,
            dfun: g2d,
            growth: GrowthBound {
                a: 0.0,
                b: b2,
                alpha,
            },
        },
        cutoff,
    })
}

fn g1_wirtinger(g: &GeneralNonlinearity, cutoff: f64, z: Complex64) -> (Complex64, Complex64) {
    let r = z.norm();
    let t = r / cutoff;
    let chi = smooth_cutoff(t);
    let (dz, dzbar) = g.wirtinger(z);
    let dchi = smooth_cutoff_derivative(t);
    if dchi == 0.0 || r == 0.0 {
        return (dz * chi, dzbar * chi);
    }
    // ∂_z |z| = z̄/(2|z|), ∂_z̄ |z| = z/(2|z|)
    let gv = g.value(z) * (dchi / cutoff);
    (
        dz * chi + gv * z.conj() / (2.0 * r),
        dzbar * chi + gv * z / (2.0 * r),
    )
}

/// Exponents `(s, p, q, r, σ)` tied by `α/σ = 1/p − 1/r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaExponents {
    pub s: f64,
    #[serde(with = "crate::serde_exponent")]
    pub p: f64,
    pub q: f64,
    #[serde(with = "crate::serde_exponent")]
    pub r: f64,
    pub sigma: f64,
}

impl LemmaExponents {
    /// Derives `σ` from the other four.
    pub fn new(alpha: f64, s: f64, p: f64, q: f64, r: f64) -> Result<Self, NonlinearityError> {
        let gap = 1.0 / p - 1.0 / r;
        if !(gap > 0.0) {
            return Err(NonlinearityError::Exponents(format!(
                "need p < r (got p = {p}, r = {r})"
            )));
        }
        let out = Self {
            s,
            p,
            q,
            r,
            sigma: alpha / gap,
        };
        out.check(alpha)?;
        Ok(out)
    }

    /// Checks a user-supplied `σ` against the relation to `1e-12`.
    pub fn with_sigma(
        alpha: f64,
        s: f64,
        p: f64,
        q: f64,
        r: f64,
        sigma: f64,
    ) -> Result<Self, NonlinearityError> {
        let out = Self { s, p, q, r, sigma };
        out.check(alpha)?;
        Ok(out)
    }

    /// `p = ρ'`, `r = ρ`, `q = 2`, `σ = N(α+2)/(N−2s)`.
    pub fn canonical(exps: &ExponentSet) -> Self {
        Self {
            s: exps.s,
            p: exps.rho_dual,
            q: 2.0,
            r: exps.rho,
            sigma: exps.sigma,
        }
    }

    pub fn check(&self, alpha: f64) -> Result<(), NonlinearityError> {
        let Self { s, p, q, r, sigma } = *self;
        if !(s > 0.0 && s < 1.0) {
            return Err(NonlinearityError::Exponents(format!(
                "need 0 < s < 1 (got {s})"
            )));
        }
        if !(q >= 1.0 && q.is_finite()) {
            return Err(NonlinearityError::Exponents(format!(
                "need 1 ≤ q < ∞ (got {q})"
            )));
        }
        if !(p >= 1.0 && r > p) {
            return Err(NonlinearityError::Exponents(format!(
                "need 1 ≤ p < r ≤ ∞ (got p = {p}, r = {r})"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(NonlinearityError::Exponents(format!(
                "need 0 < σ < ∞ (got {sigma})"
            )));
        }
        let lhs = alpha / sigma;
        let rhs = 1.0 / p - 1.0 / r;
        if (lhs - rhs).abs() > 1e-12 * lhs.abs().max(1.0) {
            return Err(NonlinearityError::Relation { lhs, rhs });
        }
        Ok(())
    }
}

/// Discretization of the remainder functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderConfig {
    pub theta_nodes: usize,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
}

impl Default for RemainderConfig {
    fn default() -> Self {
        Self {
            theta_nodes: 64,
            quadrature: QuadratureSpec::default(),
        }
    }
}

/// `K(u,v) = (∫ ‖A₂(u,v,y)‖_{L^p}^q |y|^{−N−sq} dy)^{1/q}` where
/// `A₂ = (τ_y u − u) ⋄ ∫₀¹ [g'(v+θ(τ_y v−v)) − g'(u+θ(τ_y u−u))] dθ`.
pub fn remainder_k(
    u: &Field,
    v: &Field,
    nl: &dyn Nonlinearity,
    alpha: f64,
    lem: &LemmaExponents,
    cfg: &RemainderConfig,
) -> Result<f64, NonlinearityError> {
    lem.check(alpha)?;
    if cfg.theta_nodes < 2 {
        return Err(NonlinearityError::ThetaNodes(cfg.theta_nodes));
    }
    if u.grid() != v.grid() {
        return Err(GridError::Mismatch.into());
    }
    let grid = u.grid();
    let (su, sv) = (forward_transform(u), forward_transform(v));
    let (nodes, weights) = gauss_legendre_unit(cfg.theta_nodes);
    let cell = grid.cell_volume();
    let k = translation_integral(grid, lem.s, lem.q, &cfg.quadrature, |y| {
        let tu = su.translated(y).to_field();
        let tv = sv.translated(y).to_field();
        let a2: Vec<Complex64> = u
            .values()
            .iter()
            .zip(v.values())
            .zip(tu.values().iter().zip(tv.values()))
            .map(|((&u0, &v0), (&u1, &v1))| {
                let (du, dv) = (u1 - u0, v1 - v0);
                let mut d1 = ZERO;
                let mut d2 = ZERO;
                for (t, w) in nodes.iter().zip(&weights) {
                    let (a, b) = nl.wirtinger(v0 + dv * *t);
                    let (c, d) = nl.wirtinger(u0 + du * *t);
                    d1 += (a - c) * *w;
                    d2 += (b - d) * *w;
                }
                apply_derivative((d1, d2), du)
            })
            .collect();
        Ok(lebesgue_norm_values(&a2, cell, lem.p)?)
    })?;
    Ok(k)
}

/// Terms of `‖g(v)−g(u)‖_{Ḃ^s_{p,q}} ≤ C‖v‖_{L^σ}^α‖v−u‖_{Ḃ^s_{r,q}} + K(u,v)`,
/// all Besov norms by finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovDifferenceReport {
    pub lhs: f64,
    pub lipschitz_term: f64,
    pub k_term: f64,
    pub diff_besov_r: f64,
    pub u_besov_r: f64,
    pub u_lsigma: f64,
    pub v_lsigma: f64,
    pub diff_lsigma: f64,
    /// Power case: second term of the refined bound, `‖u‖_{Ḃ^s_{r,q}}‖u−v‖_{L^σ}^α`
    /// for `α ≤ 1` and `‖u‖_{Ḃ^s_{r,q}}(‖u‖_{L^σ}^{α−1}+‖v‖_{L^σ}^{α−1})‖u−v‖_{L^σ}` above.
    pub refined_term: Option<f64>,
}

pub fn besov_difference_report(
    u: &Field,
    v: &Field,
    nl: &dyn Nonlinearity,
    alpha: f64,
    lem: &LemmaExponents,
    cfg: &RemainderConfig,
) -> Result<BesovDifferenceReport, NonlinearityError> {
    lem.check(alpha)?;
    let quad = &cfg.quadrature;
    let spec_p = NormSpec::besov_fd(lem.s, lem.p, lem.q, true);
    let spec_r = NormSpec::besov_fd(lem.s, lem.r, lem.q, true);
    let gdiff = apply_g(v, nl).sub(&apply_g(u, nl))?;
    let diff = v.sub(u)?;
    let lhs = besov_norm_fd(&gdiff, &spec_p, quad)?;
    let diff_besov_r = besov_norm_fd(&diff, &spec_r, quad)?;
    let u_besov_r = besov_norm_fd(u, &spec_r, quad)?;
    let u_lsigma = lebesgue_norm(u, lem.sigma)?;
    let v_lsigma = lebesgue_norm(v, lem.sigma)?;
    let diff_lsigma = lebesgue_norm(&diff, lem.sigma)?;
    let k_term = remainder_k(u, v, nl, alpha, lem, cfg)?;
    let refined_term = nl.power_exponent().map(|a| {
        if a <= 1.0 {
            u_besov_r * diff_lsigma.powf(a)
        } else {
            u_besov_r * (u_lsigma.powf(a - 1.0) + v_lsigma.powf(a - 1.0)) * diff_lsigma
        }
    });
    Ok(BesovDifferenceReport {
        lhs,
        lipschitz_term: v_lsigma.powf(alpha) * diff_besov_r,
        k_term,
        diff_besov_r,
        u_besov_r,
        u_lsigma,
        v_lsigma,
        diff_lsigma,
        refined_term,
    })
}

/// Constant fitted on one half of a family and checked on the other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub constant: f64,
    pub margin: f64,
    pub held_out_max_ratio: f64,
    pub violations: usize,
}

impl Calibration {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// `constant = max(fit)`; a held-out ratio above `margin·constant` is a violation.
pub fn calibrate(fit: &[f64], held_out: &[f64], margin: f64) -> Calibration {
    let constant = fit.iter().copied().fold(0.0, f64::max);
    let held_out_max_ratio = held_out.iter().copied().fold(0.0, f64::max);
    let violations = held_out
        .iter()
        .filter(|&&r| !(r <= margin * constant))
        .count();
    Calibration {
        constant,
        margin,
        held_out_max_ratio,
        violations,
    }
}

/// Ratio that `C` must dominate in the difference bound, `(lhs − K)₊ / lipschitz_term`.
pub fn difference_bound_ratio(rep: &BesovDifferenceReport) -> f64 {
    let excess = (rep.lhs - rep.k_term).max(0.0);
    if rep.lipschitz_term > 0.0 {
        excess / rep.lipschitz_term
    } else if excess == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::ProblemParams;
    use crate::grid::Grid;
    use crate::rng::{gaussian, seeded};
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cubic() -> PowerNonlinearity {
        PowerNonlinearity::new(c(1.0, 0.0), 2.0).unwrap()
    }

    #[test]
    fn apply_g_examples() {
        let grid = Grid::new(1, 16, 10.0).unwrap();
        let nl = PowerNonlinearity::new(c(0.5, -1.0), 1.5).unwrap();
        let zero = apply_g(&Field::zeros(&grid), &nl);
        assert!(zero.values().iter().all(|z| *z == ZERO));

        let k = c(0.3, 0.7);
        let constant = Field::from_fn(&grid, |_| k);
        let expect = nl.lambda * k.norm().powf(1.5) * k;
        assert!(apply_g(&constant, &nl)
            .values()
            .iter()
            .all(|z| (z - expect).norm() < 1e-15));

        let f = gaussian(&grid, [1.0, 0.0, 0.0], 1.3, c(1.0, 2.0));
        for (g, z) in apply_g(&f, &nl).values().iter().zip(f.values()) {
            let want = nl.lambda.norm() * z.norm().powf(2.5);
            assert!((g.norm() - want).abs() <= 1e-14 * want.max(1e-300));
        }
    }

    #[test]
    fn wirtinger_examples_and_bound() {
        let (dz, dzbar) = wirtinger(c(1.0, 0.0), &cubic());
        assert_eq!((dz, dzbar), (c(2.0, 0.0), c(1.0, 0.0)));
        assert_eq!(wirtinger(ZERO, &cubic()), (ZERO, ZERO));
        let nl = PowerNonlinearity::new(c(0.3, 1.1), 0.7).unwrap();
        assert_eq!(wirtinger(ZERO, &nl), (ZERO, ZERO));
        let mut rng = seeded(5);
        for _ in 0..200 {
            let z = log_uniform_complex(&mut rng, -2.0, 1.0);
            let (a, b) = nl.wirtinger(z);
            assert!(a.norm() + b.norm() <= nl.growth().at(z.norm()) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn wirtinger_matches_finite_differences() {
        let mut rng = seeded(9);
        for alpha in [0.5, 1.0, 2.0, 3.0] {
            let nl = PowerNonlinearity::new(c(0.8, -0.4), alpha).unwrap();
            for _ in 0..100 {
                let z = log_uniform_complex(&mut rng, -0.5, 0.5);
                let (a, b) = nl.wirtinger(z);
                let (fa, fb) = numeric_wirtinger(&|w| nl.value(w), z, 1e-7);
                assert!(
                    (a - fa).norm() < 1e-6 && (b - fb).norm() < 1e-6,
                    "α={alpha} z={z}"
                );
            }
        }
    }

    #[test]
    fn difference_identity_examples() {
        let nl = cubic();
        assert_eq!(
            difference_identity_residual(c(0.3, 0.2), c(0.3, 0.2), &nl, 8).unwrap(),
            0.0
        );
        assert!(difference_identity_residual(c(1.0, 0.0), ZERO, &nl, 64).unwrap() < 1e-10);
        assert!(difference_identity_residual(c(1.0, 0.0), ZERO, &nl, 1).is_err());
        let mut rng = seeded(13);
        for alpha in [0.5, 1.0, 2.0, 3.0] {
            let nl = PowerNonlinearity::new(c(1.0, 0.5), alpha).unwrap();
            for _ in 0..200 {
                let z1 = log_uniform_complex(&mut rng, -1.0, 0.5);
                let z2 = log_uniform_complex(&mut rng, -1.0, 0.5);
                let res = difference_identity_residual(z1, z2, &nl, 128).unwrap();
                assert!(res < 1e-8, "α={alpha} z1={z1} z2={z2} res={res}");
            }
        }
    }

    #[test]
    fn difference_identity_converges_with_nodes() {
        let nl = PowerNonlinearity::new(c(1.0, 0.0), 0.5).unwrap();
        let (z1, z2) = (c(1.0, 0.3), c(-0.2, 0.05));
        let coarse = difference_identity_residual(z1, z2, &nl, 4).unwrap();
        let fine = difference_identity_residual(z1, z2, &nl, 64).unwrap();
        assert!(fine < coarse);
    }

    #[test]
    fn pointwise_examples() {
        let r = check_pointwise_power(c(1.0, 0.0), ZERO, 0.5);
        assert_eq!((r.modulus_lhs, r.modulus_rhs), (1.0, 1.0));
        assert!(r.holds());
        let r = check_pointwise_power(c(2.0, 0.0), c(1.0, 0.0), 2.0);
        assert_eq!((r.modulus_lhs, r.modulus_rhs), (3.0, 6.0));
        assert!(r.holds());
    }

    #[test]
    fn pointwise_sweep_has_no_violations() {
        for alpha in [0.5, 1.0, 2.0, 3.0] {
            let sw = pointwise_sweep(alpha, 100_000, 17);
            assert_eq!(sw.samples, 100_000);
            assert_eq!(
                (sw.modulus_violations, sw.phase_violations),
                (0, 0),
                "{sw:?}"
            );
            assert!(sw.modulus_max_ratio > 0.1);
        }
    }

    #[test]
    fn pointwise_sweep_is_deterministic_and_catches_a_bad_constant() {
        let a = pointwise_sweep(0.5, 50_000, 3);
        let b = pointwise_sweep(0.5, 50_000, 3);
        assert_eq!(a, b);
        // the α ≤ 1 phase bound needs a constant well above 1
        assert!(a.phase_max_ratio * phase_constant(0.5) > 1.0);
    }

    #[test]
    fn general_from_power_agrees() {
        let p = PowerNonlinearity::new(c(0.2, 0.9), 2.5).unwrap();
        let g = GeneralNonlinearity::from_power(&p);
        let z = c(0.4, -1.2);
        assert_eq!(g.value(z), p.value(z));
        assert_eq!(g.wirtinger(z), p.wirtinger(z));
        assert!(GeneralNonlinearity::new(
            Arc::new(|z| z + 1.0),
            Arc::new(|_| (ZERO, ZERO)),
            1.0,
            0.0,
            1.0
        )
        .is_err());
    }

    #[test]
    fn numeric_derivative_nonlinearity() {
        let g = GeneralNonlinearity::with_numeric_derivative(
            Arc::new(|z: Complex64| z * z.norm_sqr()),
            0.0,
            3.0,
            2.0,
        )
        .unwrap();
        let (a, b) = g.wirtinger(c(1.0, 1.0));
        let (ea, eb) = cubic().wirtinger(c(1.0, 1.0));
        assert!((a - ea).norm() < 1e-8 && (b - eb).norm() < 1e-8);
    }

    #[test]
    fn split_of_pure_power_is_trivial() {
        let g = GeneralNonlinearity::from_power(&cubic());
        let sp = split(&g, 1.0).unwrap();
        assert_eq!(sp.g1.value(c(3.0, 1.0)), ZERO);
        assert_eq!(sp.g2.value(c(3.0, 1.0)), g.value(c(3.0, 1.0)));
        assert!(split(&g, 0.0).is_err());
    }

    #[test]
    fn split_of_linear_plus_cubic() {
        let g = GeneralNonlinearity::linear_plus_power(c(1.0, 0.0), c(1.0, 0.0), 2.0).unwrap();
        let sp = split(&g, 1.0).unwrap();
        assert_eq!(sp.g1.value(ZERO), ZERO);
        assert_eq!(sp.g2.value(ZERO), ZERO);
        let mut rng = seeded(21);
        let mut sup_g1 = 0.0f64;
        for _ in 0..100_000 {
            let r = 10f64.powf(rng.random_range(-3.0..=3.0));
            let z = Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU));
            let sum = sp.g1.value(z) + sp.g2.value(z);
            let gz = g.value(z);
            assert!((sum - gz).norm() <= 1e-12 * gz.norm().max(1.0));
            let (a, b) = sp.g1.wirtinger(z);
            sup_g1 = sup_g1.max(a.norm() + b.norm());
            let (a2, b2) = sp.g2.wirtinger(z);
            if r <= 0.5 {
                assert_eq!(a2.norm() + b2.norm(), 0.0);
            }
            assert!(a2.norm() + b2.norm() <= sp.g2.growth().at(r) * (1.0 + 1e-12));
        }
        assert!(sup_g1 <= 10.0, "sup |g1'| = {sup_g1}");
        assert!(sup_g1 <= sp.g1.growth().a);
    }

    #[test]
    fn split_derivatives_match_finite_differences() {
        let g = GeneralNonlinearity::linear_plus_power(c(0.5, 0.5), c(1.0, -0.3), 1.5).unwrap();
        let sp = split(&g, 2.0).unwrap();
        for z in [c(0.7, 0.4), c(-1.2, 0.9), c(0.1, -1.9)] {
            let (a, b) = sp.g1.wirtinger(z);
            let (fa, fb) = numeric_wirtinger(&|w| sp.g1.value(w), z, 1e-7);
            assert!((a - fa).norm() < 1e-6 && (b - fb).norm() < 1e-6);
        }
    }

    fn lemma_setup() -> (Grid, PowerNonlinearity, LemmaExponents) {
        let grid = Grid::new(1, 128, 16.0).unwrap();
        let params = ProblemParams::power(1, 0.4, 2.0, c(1.0, 0.0));
        let exps = ExponentSet::new(&params).unwrap();
        (grid, cubic(), LemmaExponents::canonical(&exps))
    }

    #[test]
    fn lemma_exponents_relation() {
        let (_, _, lem) = lemma_setup();
        lem.check(2.0).unwrap();
        let derived = LemmaExponents::new(2.0, lem.s, lem.p, lem.q, lem.r).unwrap();
        assert!((derived.sigma - lem.sigma).abs() < 1e-12 * lem.sigma);
        assert!(matches!(
            LemmaExponents::with_sigma(2.0, 0.4, lem.p, 2.0, lem.r, lem.sigma * 1.001),
            Err(NonlinearityError::Relation { .. })
        ));
        assert!(LemmaExponents::new(2.0, 0.4, 3.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn remainder_vanishes_on_the_diagonal_and_at_zero() {
        let (grid, nl, lem) = lemma_setup();
        let cfg = RemainderConfig {
            theta_nodes: 16,
            ..Default::default()
        };
        let u = gaussian(&grid, [0.0; 3], 1.0, c(1.0, 0.0));
        assert_eq!(remainder_k(&u, &u, &nl, 2.0, &lem, &cfg).unwrap(), 0.0);
        let v = gaussian(&grid, [0.5, 0.0, 0.0], 1.2, c(0.3, 0.4));
        let zero = Field::zeros(&grid);
        assert_eq!(remainder_k(&zero, &v, &nl, 2.0, &lem, &cfg).unwrap(), 0.0);
        assert!(remainder_k(&u, &v, &nl, 2.0, &lem, &cfg).unwrap() > 0.0);
    }

    #[test]
    fn remainder_decays_along_a_perturbation_family() {
        let (grid, nl, lem) = lemma_setup();
        let cfg = RemainderConfig {
            theta_nodes: 16,
            ..Default::default()
        };
        let u = gaussian(&grid, [0.0; 3], 1.0, c(1.0, 0.0)).scale(Complex64::from_polar(1.0, 0.3));
        let psi = gaussian(&grid, [1.0, 0.0, 0.0], 0.8, c(0.5, 0.0));
        let ks: Vec<f64> = (0..=10)
            .map(|k| {
                let v = u.axpy(c(2f64.powi(-k), 0.0), &psi).unwrap();
                remainder_k(&u, &v, &nl, 2.0, &lem, &cfg).unwrap()
            })
            .collect();
        assert!(ks.windows(2).all(|w| w[1] < w[0]), "{ks:?}");
        assert!(ks[10] < 1e-3 * ks[0], "{ks:?}");
    }

    #[test]
    fn remainder_self_converges() {
        let (grid, nl, lem) = lemma_setup();
        let u = gaussian(&grid, [0.0; 3], 1.0, c(1.0, 0.0));
        let v = u
            .add(&gaussian(&grid, [1.5, 0.0, 0.0], 1.0, c(0.5, 0.0)))
            .unwrap();
        let base = RemainderConfig::default();
        let fine = RemainderConfig {
            theta_nodes: 128,
            quadrature: QuadratureSpec {
                shells: 64,
                ..Default::default()
            },
        };
        let a = remainder_k(&u, &v, &nl, 2.0, &lem, &base).unwrap();
        let b = remainder_k(&u, &v, &nl, 2.0, &lem, &fine).unwrap();
        assert!(((a - b) / b).abs() < 0.01, "{a} vs {b}");
    }

    #[test]
    fn difference_report_structure() {
        let (grid, nl, lem) = lemma_setup();
        let cfg = RemainderConfig {
            theta_nodes: 16,
            ..Default::default()
        };
        let u = gaussian(&grid, [0.0; 3], 1.0, c(1.0, 0.0));
        let same = besov_difference_report(&u, &u, &nl, 2.0, &lem, &cfg).unwrap();
        assert_eq!((same.lhs, same.k_term), (0.0, 0.0));

        let zero = Field::zeros(&grid);
        let rep = besov_difference_report(&zero, &u, &nl, 2.0, &lem, &cfg).unwrap();
        assert_eq!(rep.k_term, 0.0);
        let gv = besov_norm_fd(
            &apply_g(&u, &nl),
            &NormSpec::besov_fd(lem.s, lem.p, lem.q, true),
            &cfg.quadrature,
        )
        .unwrap();
        assert!((rep.lhs - gv).abs() < 1e-12 * gv);
        assert!(
            (rep.lipschitz_term - rep.v_lsigma.powi(2) * rep.diff_besov_r).abs()
                < 1e-12 * rep.lipschitz_term
        );
        assert!(rep.refined_term.is_some());
    }

    #[test]
    fn calibration_protocol() {
        let cal = calibrate(&[1.0, 2.0, 1.5], &[1.9, 2.3], 1.2);
        assert_eq!(cal.constant, 2.0);
        assert!(cal.passed());
        let cal = calibrate(&[1.0], &[1.3], 1.2);
        assert_eq!(cal.violations, 1);
    }
}
