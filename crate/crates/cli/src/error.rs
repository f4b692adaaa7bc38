use std::io;

use fracnls_core::dependence::DependenceError;
use fracnls_core::exponents::ExponentError;
use fracnls_core::nonlinearity::NonlinearityError;
use fracnls_core::{HypothesisViolation, SolverError};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(HypothesisViolation),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("check failed: {0}")]
    Failure(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failure(_) | CliError::Io { .. } => 1,
            CliError::Config(_) | CliError::Hypothesis(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// One-line JSON description for stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self {
            CliError::Config(_) => "config",
            CliError::Hypothesis(_) => "hypothesis",
            CliError::NonConvergence(_) => "non_convergence",
            CliError::Failure(_) => "failure",
            CliError::Io { .. } => "io",
        };
        let mut v = json!({
            "error": kind,
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Hypothesis(h) = self {
            v["hypothesis"] = json!(hypothesis_name(h));
        }
        v
    }
}

pub fn hypothesis_name(h: &HypothesisViolation) -> &'static str {
    match h {
        HypothesisViolation::Dimension(_) => "dimension",
        HypothesisViolation::Regularity { .. } => "regularity",
        HypothesisViolation::Growth { .. } => "growth",
        HypothesisViolation::Power { .. } => "power",
        HypothesisViolation::CriticalLinearPart { .. } => "critical_linear_part",
    }
}

impl From<HypothesisViolation> for CliError {
    fn from(h: HypothesisViolation) -> Self {
        CliError::Hypothesis(h)
    }
}

impl From<ExponentError> for CliError {
    fn from(e: ExponentError) -> Self {
        match e {
            ExponentError::Hypothesis(h) => CliError::Hypothesis(h),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NonConvergence { .. }
            | SolverError::NonFinite { .. }
            | SolverError::BlowUp { .. } => CliError::NonConvergence(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<NonlinearityError> for CliError {
    fn from(e: NonlinearityError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DependenceError> for CliError {
    fn from(e: DependenceError) -> Self {
        match e {
            DependenceError::Exponent(e) => e.into(),
            DependenceError::Solver(e) => e.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}
