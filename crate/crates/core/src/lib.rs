//! Pseudospectral toolkit for `i u_t + Δu + g(u) = 0` on the torus, measured
//! in fractional Sobolev and Besov norms.
//!
//! The crate is organized bottom-up:
//!
//! * [`grid`]: lattice, Fourier transforms, free propagator, translations;
//! * [`spaces`]: `H^s`, `B^s_{p,q}` (Littlewood–Paley and finite-difference) and space-time norms;
//! * [`exponents`]: hypothesis checks and Strichartz exponent arithmetic;
//! * [`nonlinearity`]: `g(u)`, Wirtinger derivatives, pointwise bounds, the Besov remainder `K(u, v)`;
//! * [`solver`]: Picard iteration on the Duhamel formula and a Strang split-step integrator;
//! * [`dependence`]: perturbation experiments on the discrete flow map.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dependence;
pub mod exponents;
pub mod grid;
pub mod nonlinearity;
pub mod quadrature;
pub mod rng;
pub mod selftest;
pub mod serde_exponent;
pub mod snapshot;
pub mod solver;
pub mod spaces;
pub mod trajectory;

pub use dependence::{DependenceConfig, DependenceReport, PerturbationFamily};
pub use exponents::{Criticality, ExponentSet, HypothesisViolation, ProblemParams};
pub use grid::{Field, Grid, GridError, Spectrum};
pub use nonlinearity::{GeneralNonlinearity, Nonlinearity, PowerNonlinearity, SplitNonlinearity};
pub use solver::{IterationReport, PicardConfig, SolverError};
pub use spaces::{NormKind, NormSpec, QuadratureSpec};
pub use trajectory::{TimeGrid, Trajectory};
