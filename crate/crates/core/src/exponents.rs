//! Exponent bookkeeping for the local theory in `H^s`.
//!
//! Everything here is closed-form arithmetic on `(N, s, α)`: admissible
//! Strichartz pairs, the canonical pair `(γ, ρ)`, the Sobolev exponent `σ`,
//! the embedding exponent `ν(r)` and the auxiliary pair `(q₀, r₀)` used in
//! the energy-critical case.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for exponent identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// A rejected parameter set, naming the hypothesis that fails.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypothesisViolation {
    #[error("dimension must be at least 1 (got {0})")]
    Dimension(usize),
    #[error("regularity hypothesis 0 < s < min(1, N/2) fails: s = {s}, bound = {bound}")]
    Regularity { s: f64, bound: f64 },
    #[error(
        "growth hypothesis |g'(u)| <= A + B|u|^alpha needs finite A, B >= 0 (got A = {a}, B = {b})"
    )]
    Growth { a: f64, b: f64 },
    #[error("power hypothesis 0 < alpha <= 4/(N-2s) fails: alpha = {alpha}, bound = {bound}")]
    Power { alpha: f64, bound: f64 },
    #[error("critical power alpha = 4/(N-2s) requires A = 0 (got A = {a})")]
    CriticalLinearPart { a: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExponentError {
    #[error(transparent)]
    Hypothesis(#[from] HypothesisViolation),
    #[error("nu(r) needs 2 <= r < N/s (got r = {r}, N/s = {bound})")]
    NuRange { r: f64, bound: f64 },
    #[error("the auxiliary pair (q0, r0) exists only at the critical power")]
    NotCritical,
    #[error("Holder conjugate needs 1 <= e <= inf (got {0})")]
    DualRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Subcritical,
    Critical,
}

/// `(N, s, α, λ, A, B)` for `i u_t + Δu + g(u) = 0` with `|g'(u)| ≤ A + B|u|^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    #[serde(rename = "N", alias = "dim")]
    pub dim: usize,
    pub s: f64,
    pub alpha: f64,
    #[serde(default = "unit_lambda")]
    pub lambda: Complex64,
    #[serde(default, rename = "A", alias = "a")]
    pub a: f64,
    #[serde(default = "unit", rename = "B", alias = "b")]
    pub b: f64,
}

fn unit_lambda() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn unit() -> f64 {
    1.0
}

impl ProblemParams {
    /// Pure power `λ|u|^α u`: `A = 0`, `B = |λ|(1+α)`.
    pub fn power(dim: usize, s: f64, alpha: f64, lambda: Complex64) -> Self {
        Self {
            dim,
            s,
            alpha,
            lambda,
            a: 0.0,
            b: lambda.norm() * (1.0 + alpha),
        }
    }

    /// `4/(N - 2s)`, the largest admissible power.
    pub fn critical_power(&self) -> f64 {
        4.0 / (self.dim as f64 - 2.0 * self.s)
    }

    pub fn validate(&self) -> Result<Criticality, HypothesisViolation> {
        validate(self)
    }
}

/// Checks the hypotheses on `(N, s, α, A, B)` and classifies the power.
pub fn validate(params: &ProblemParams) -> Result<Criticality, HypothesisViolation> {
    if params.dim == 0 {
        return Err(HypothesisViolation::Dimension(params.dim));
    }
    let n = params.dim as f64;
    let bound = (n / 2.0).min(1.0);
    if !(params.s > 0.0 && params.s < bound) {
        return Err(HypothesisViolation::Regularity { s: params.s, bound });
    }
    if !(params.a.is_finite() && params.b.is_finite() && params.a >= 0.0 && params.b >= 0.0) {
        return Err(HypothesisViolation::Growth {
            a: params.a,
            b: params.b,
        });
    }
    let crit = params.critical_power();
    let alpha = params.alpha;
    let at_critical = (alpha - crit).abs() <= IDENTITY_TOL * crit.max(1.0);
    if !(alpha > 0.0 && (alpha < crit || at_critical)) {
        return Err(HypothesisViolation::Power { alpha, bound: crit });
    }
    if at_critical {
        if params.a != 0.0 {
            return Err(HypothesisViolation::CriticalLinearPart { a: params.a });
        }
        Ok(Criticality::Critical)
    } else {
        Ok(Criticality::Subcritical)
    }
}

/// Strichartz admissibility: `2/q = N(1/2 − 1/r)` with `2 ≤ r < 2N/(N−2)`
/// (`r < ∞` when `N ≤ 2`).
pub fn is_admissible(q: f64, r: f64, dim: usize) -> bool {
    admissibility_residual(q, r, dim).is_some_and(|res| res <= IDENTITY_TOL)
}

/// `|2/q − N(1/2 − 1/r)|` when `r` is in range, `None` otherwise.
pub fn admissibility_residual(q: f64, r: f64, dim: usize) -> Option<f64> {
    if dim == 0 || q.is_nan() || r.is_nan() || q < 2.0 || r < 2.0 || r.is_infinite() {
        return None;
    }
    let n = dim as f64;
    if dim >= 3 && r >= 2.0 * n / (n - 2.0) {
        return None;
    }
    Some((2.0 / q - n * (0.5 - 1.0 / r)).abs())
}

/// `ρ = N(α+2)/(N+sα)`, `γ = 4(α+2)/(α(N−2s))`, returned as `(γ, ρ)`.
pub fn canonical_pair(params: &ProblemParams) -> Result<(f64, f64), HypothesisViolation> {
    validate(params)?;
    let (n, s, a) = (params.dim as f64, params.s, params.alpha);
    let rho = n * (a + 2.0) / (n + s * a);
    let gamma = 4.0 * (a + 2.0) / (a * (n - 2.0 * s));
    Ok((gamma, rho))
}

/// `σ = N(α+2)/(N−2s)`, the Lebesgue exponent of `Ḃ^s_{ρ,2} ↪ L^σ`.
pub fn sigma(params: &ProblemParams) -> Result<f64, HypothesisViolation> {
    validate(params)?;
    let (n, s, a) = (params.dim as f64, params.s, params.alpha);
    Ok(n * (a + 2.0) / (n - 2.0 * s))
}

/// `1/ν = 1/r − s/N`, defined for `2 ≤ r < N/s`.
pub fn nu(r: f64, dim: usize, s: f64) -> Result<f64, ExponentError> {
    let bound = dim as f64 / s;
    if !(r >= 2.0 && r < bound) {
        return Err(ExponentError::NuRange { r, bound });
    }
    Ok(1.0 / (1.0 / r - s / dim as f64))
}

/// `q₀ = 2α(α+2)/(4−(N−2)α)`, `r₀ = N(α+2)/(N+s(α+2))`; critical power only.
pub fn critical_pair(params: &ProblemParams) -> Result<(f64, f64), ExponentError> {
    if validate(params)? != Criticality::Critical {
        return Err(ExponentError::NotCritical);
    }
    let (n, s, a) = (params.dim as f64, params.s, params.alpha);
    let q0 = 2.0 * a * (a + 2.0) / (4.0 - (n - 2.0) * a);
    let r0 = n * (a + 2.0) / (n + s * (a + 2.0));
    Ok((q0, r0))
}

/// Hölder conjugate `1/e' = 1 − 1/e`.
pub fn dual(e: f64) -> Result<f64, ExponentError> {
    if e.is_nan() || e < 1.0 {
        return Err(ExponentError::DualRange(e));
    }
    if e == 1.0 {
        return Ok(f64::INFINITY);
    }
    if e.is_infinite() {
        return Ok(1.0);
    }
    Ok(e / (e - 1.0))
}

/// Every derived exponent of a validated parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    #[serde(rename = "N")]
    pub dim: usize,
    pub s: f64,
    pub alpha: f64,
    pub criticality: Criticality,
    pub critical_power: f64,
    pub gamma: f64,
    pub rho: f64,
    pub sigma: f64,
    /// `ν(ρ)`, equal to `σ`.
    pub nu_rho: f64,
    pub gamma_dual: f64,
    pub rho_dual: f64,
    /// Power of `T` gained in the subcritical contraction, `(4 − α(N−2s))/4`.
    pub time_gain: f64,
    pub q0: Option<f64>,
    pub r0: Option<f64>,
    pub nu_r0: Option<f64>,
}

impl ExponentSet {
    pub fn new(params: &ProblemParams) -> Result<Self, ExponentError> {
        let criticality = validate(params)?;
        let (gamma, rho) = canonical_pair(params)?;
        let sigma = sigma(params)?;
        let nu_rho = nu(rho, params.dim, params.s)?;
        let (q0, r0, nu_r0) = if criticality == Criticality::Critical {
            let (q0, r0) = critical_pair(params)?;
            (Some(q0), Some(r0), Some(nu(r0, params.dim, params.s)?))
        } else {
            (None, None, None)
        };
        let n = params.dim as f64;
        Ok(Self {
            dim: params.dim,
            s: params.s,
            alpha: params.alpha,
            criticality,
            critical_power: params.critical_power(),
            gamma,
            rho,
            sigma,
            nu_rho,
            gamma_dual: dual(gamma)?,
            rho_dual: dual(rho)?,
            time_gain: (4.0 - params.alpha * (n - 2.0 * params.s)) / 4.0,
            q0,
            r0,
            nu_r0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(dim: usize, s: f64, alpha: f64) -> ProblemParams {
        ProblemParams::power(dim, s, alpha, Complex64::new(1.0, 0.0))
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn classification_examples() {
        assert_eq!(validate(&params(2, 0.5, 2.0)), Ok(Criticality::Subcritical));
        assert_eq!(validate(&params(3, 0.5, 2.0)), Ok(Criticality::Critical));
        assert!(matches!(
            validate(&params(1, 0.6, 1.0)),
            Err(HypothesisViolation::Regularity { bound, .. }) if bound == 0.5
        ));
    }

    #[test]
    fn each_hypothesis_is_named() {
        assert!(matches!(
            validate(&params(0, 0.5, 1.0)),
            Err(HypothesisViolation::Dimension(0))
        ));
        assert!(matches!(
            validate(&params(2, 0.0, 1.0)),
            Err(HypothesisViolation::Regularity { .. })
        ));
        assert!(matches!(
            validate(&params(2, 0.5, 4.5)),
            Err(HypothesisViolation::Power { .. })
        ));
        assert!(matches!(
            validate(&params(2, 0.5, -1.0)),
            Err(HypothesisViolation::Power { .. })
        ));
        let mut p = params(2, 0.5, 1.0);
        p.a = -1.0;
        assert!(matches!(
            validate(&p),
            Err(HypothesisViolation::Growth { .. })
        ));
        let mut p = params(3, 0.5, 2.0);
        p.a = 0.5;
        assert!(matches!(
            validate(&p),
            Err(HypothesisViolation::CriticalLinearPart { .. })
        ));
        // A > 0 is fine below the critical power
        let mut p = params(3, 0.5, 1.0);
        p.a = 0.5;
        assert_eq!(validate(&p), Ok(Criticality::Subcritical));
    }

    #[test]
    fn admissibility_examples() {
        for n in 1..=4 {
            assert!(is_admissible(f64::INFINITY, 2.0, n));
        }
        assert!(is_admissible(8.0, 8.0 / 3.0, 2));
        assert!(!is_admissible(2.0, 6.0, 3));
        assert!(!is_admissible(4.0, 3.0, 2));
    }

    #[test]
    fn canonical_pair_examples() {
        let (g, r) = canonical_pair(&params(2, 0.5, 2.0)).unwrap();
        assert!(close(r, 8.0 / 3.0) && close(g, 8.0));
        let (g, r) = canonical_pair(&params(3, 0.5, 2.0)).unwrap();
        assert!(close(r, 3.0) && close(g, 4.0));
    }

    #[test]
    fn sigma_and_nu_examples() {
        assert!(close(sigma(&params(2, 0.5, 2.0)).unwrap(), 8.0));
        assert!(close(sigma(&params(3, 0.5, 2.0)).unwrap(), 6.0));
        assert!(close(nu(2.0, 2, 0.5).unwrap(), 4.0));
        assert!(close(nu(3.0, 3, 0.5).unwrap(), 6.0));
        assert!(matches!(
            nu(4.0, 2, 0.5),
            Err(ExponentError::NuRange { .. })
        ));
        assert!(matches!(
            nu(1.5, 2, 0.5),
            Err(ExponentError::NuRange { .. })
        ));
    }

    #[test]
    fn nu_blows_up_monotonically_near_n_over_s() {
        let (n, s) = (2usize, 0.5);
        let bound = n as f64 / s;
        let mut prev = 0.0;
        for k in 0..40 {
            let r = 2.0 + (bound - 2.0) * (1.0 - 0.7f64.powi(k));
            let v = nu(r, n, s).unwrap();
            assert!(v > r && v >= prev);
            prev = v;
        }
        assert!(prev > 1e5);
    }

    #[test]
    fn critical_pair_examples() {
        let (q0, r0) = critical_pair(&params(3, 0.5, 2.0)).unwrap();
        assert!(close(q0, 8.0) && close(r0, 12.0 / 5.0));
        assert!(close(nu(r0, 3, 0.5).unwrap(), 4.0));
        let (q0, r0) = critical_pair(&params(2, 0.5, 4.0)).unwrap();
        assert!(close(q0, 12.0) && close(r0, 12.0 / 5.0));
        assert!(close(nu(r0, 2, 0.5).unwrap(), 6.0));
        assert_eq!(
            critical_pair(&params(2, 0.5, 2.0)),
            Err(ExponentError::NotCritical)
        );
    }

    #[test]
    fn dual_examples() {
        assert_eq!(dual(2.0).unwrap(), 2.0);
        assert_eq!(dual(f64::INFINITY).unwrap(), 1.0);
        assert_eq!(dual(1.0).unwrap(), f64::INFINITY);
        assert!(close(dual(8.0 / 3.0).unwrap(), 8.0 / 5.0));
        assert!(dual(0.5).is_err());
    }

    #[test]
    fn exponent_set_json() {
        let set = ExponentSet::new(&params(3, 0.5, 2.0)).unwrap();
        let json = serde_json::to_value(set).unwrap();
        assert_eq!(json["criticality"], "critical");
        assert!(close(json["q0"].as_f64().unwrap(), 8.0));
        let sub = ExponentSet::new(&params(2, 0.5, 2.0)).unwrap();
        assert!(sub.q0.is_none() && sub.time_gain > 0.0);
        assert!(set.time_gain.abs() < 1e-12);
    }

    fn valid_params() -> impl Strategy<Value = ProblemParams> {
        (1usize..=3, 0.001f64..0.999, 0.001f64..1.0).prop_map(|(n, su, au)| {
            let s = su * (n as f64 / 2.0).min(1.0);
            let crit = 4.0 / (n as f64 - 2.0 * s);
            params(n, s, au * crit)
        })
    }

    proptest! {
        #[test]
        fn canonical_pair_is_admissible(p in valid_params()) {
            let (g, r) = canonical_pair(&p).unwrap();
            prop_assert!(admissibility_residual(g, r, p.dim).unwrap() < 1e-12);
            let sig = sigma(&p).unwrap();
            prop_assert!(sig > r);
            // 1/ρ − s/N cancels to (N−2s)/(N(α+2)); the identity holds to 1e-12
            // times the condition number N/(N−2s) of that subtraction
            let cond = (p.dim as f64 / (p.dim as f64 - 2.0 * p.s)).max(1.0);
            prop_assert!((nu(r, p.dim, p.s).unwrap() - sig).abs() <= 1e-12 * cond * sig);
        }

        #[test]
        fn time_gain_positive_iff_subcritical(p in valid_params()) {
            let set = ExponentSet::new(&p).unwrap();
            prop_assert_eq!(set.time_gain > 0.0, set.criticality == Criticality::Subcritical);
        }

        #[test]
        fn dual_is_an_involution(e in 1.0001f64..1e6) {
            let back = dual(dual(e).unwrap()).unwrap();
            prop_assert!((back - e).abs() <= 1e-9 * e);
        }
    }
}
