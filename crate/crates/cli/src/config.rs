//! JSON run configurations and their hashes.

use std::path::{Path, PathBuf};

use fracnls_core::dependence::{DependenceConfig, RemainderDecayConfig};
use fracnls_core::rng::{band_limited_field, gaussian, substream};
use fracnls_core::{Field, Grid, PicardConfig, ProblemParams, QuadratureSpec};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// A parsed config together with the SHA-256 of its canonical JSON form.
pub struct Loaded<T> {
    pub config: T,
    pub hash: String,
}

/// Reads `path`, rejects empty files and hashes the key-sorted JSON so that
/// whitespace and key order do not change the hash.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<Loaded<T>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Err(CliError::Config(format!(
            "{} is empty; see the README for the expected fields",
            path.display()
        )));
    }
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let hash = hash_value(&value);
    let config = serde_json::from_value(value)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(Loaded { config, hash })
}

pub fn hash_value(value: &serde_json::Value) -> String {
    let canonical = value.to_string();
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "N", alias = "dim")]
    pub dim: usize,
    #[serde(rename = "M", alias = "points")]
    pub points: usize,
    #[serde(rename = "L", alias = "period")]
    pub period: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, CliError> {
        Grid::new(self.dim, self.points, self.period).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn unit_amplitude() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn unit() -> f64 {
    1.0
}

/// Initial data and perturbation directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Datum {
    /// `amplitude·exp(−|x−center|²/(2·width²))`.
    Gaussian {
        #[serde(default)]
        center: Vec<f64>,
        width: f64,
        #[serde(default = "unit_amplitude")]
        amplitude: Complex64,
    },
    /// `amplitude·e^{ik·x}` with `k = 2π·modes/L`.
    PlaneWave {
        #[serde(default = "unit_amplitude")]
        amplitude: Complex64,
        modes: Vec<i64>,
    },
    /// Random band-limited field drawn from substream `stream` of the run seed.
    Random {
        #[serde(default)]
        stream: u64,
        kmax: f64,
        #[serde(default)]
        decay: f64,
        #[serde(default = "unit")]
        scale: f64,
    },
    Zero,
}

impl Datum {
    pub fn build(&self, grid: &Grid, seed: u64) -> Result<Field, CliError> {
        let dim = grid.dim();
        match self {
            Datum::Gaussian {
                center,
                width,
                amplitude,
            } => {
                if width.is_nan() || *width <= 0.0 {
                    return Err(CliError::Config(format!(
                        "gaussian width must be positive (got {width})"
                    )));
                }
                if center.len() > dim {
                    return Err(CliError::Config(format!(
                        "gaussian center has {} coordinates in dimension {dim}",
                        center.len()
                    )));
                }
                let mut c = [0.0; 3];
                c[..center.len()].copy_from_slice(center);
                Ok(gaussian(grid, c, *width, *amplitude))
            }
            Datum::PlaneWave { amplitude, modes } => {
                if modes.len() != dim {
                    return Err(CliError::Config(format!(
                        "plane wave needs {dim} mode numbers (got {})",
                        modes.len()
                    )));
                }
                let k0 = grid.k_min();
                let amp = *amplitude;
                Ok(Field::from_fn(grid, |x| {
                    let phase: f64 = modes.iter().zip(x).map(|(&m, xa)| k0 * m as f64 * xa).sum();
                    amp * Complex64::from_polar(1.0, phase)
                }))
            }
            Datum::Random {
                stream,
                kmax,
                decay,
                scale,
            } => {
                let f = band_limited_field(&mut substream(seed, *stream), grid, *kmax, *decay);
                Ok(f.scale(Complex64::new(*scale, 0.0)))
            }
            Datum::Zero => Ok(Field::zeros(grid)),
        }
    }
}

fn default_seed() -> u64 {
    0
}

/// Where the outputs go: `--out` on the command line, else `output_dir`, else `.`.
pub fn output_dir(flag: Option<&Path>, config: Option<&str>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorChoice {
    Picard,
    SplitStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotMode {
    #[default]
    None,
    Final,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFormat {
    #[default]
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub grid: GridSpec,
    #[serde(alias = "params")]
    pub problem: ProblemParams,
    pub integrator: IntegratorChoice,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub nt: Option<usize>,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Picard stopping tolerance; the exponent-derived default otherwise.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    /// Horizon halvings allowed when Picard fails to converge.
    #[serde(default)]
    pub max_halvings: usize,
    /// Split-step substeps per stored slice.
    #[serde(default = "one")]
    pub substeps: usize,
    pub initial: Datum,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Flag slices whose `H^s` norm exceeds this value.
    #[serde(default)]
    pub blowup_threshold: Option<f64>,
    #[serde(default)]
    pub snapshots: SnapshotMode,
    #[serde(default)]
    pub snapshot_format: SnapshotFormat,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn one() -> usize {
    1
}

impl SolveConfig {
    pub fn intervals(&self) -> Result<usize, CliError> {
        match (self.nt, self.dt) {
            (Some(nt), None) if nt > 0 => Ok(nt),
            (None, Some(dt)) if dt > 0.0 && self.horizon > 0.0 => {
                Ok((self.horizon / dt).ceil().max(1.0) as usize)
            }
            (Some(_), Some(_)) => Err(CliError::Config("give either nt or dt, not both".into())),
            _ => Err(CliError::Config("a positive nt or dt is required".into())),
        }
    }

    pub fn picard(&self, defaults: PicardConfig) -> PicardConfig {
        PicardConfig {
            tol: self.tol.unwrap_or(defaults.tol),
            max_iter: self.max_iter.unwrap_or(defaults.max_iter),
            ..defaults
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub base: Datum,
    /// Custom direction, rescaled to unit `H^s` norm. Without it a shifted
    /// Gaussian orthogonal to the base is used.
    #[serde(default)]
    pub direction: Option<Datum>,
    #[serde(default = "default_shift")]
    pub shift: Vec<f64>,
    #[serde(default = "unit")]
    pub width: f64,
    pub eps0: f64,
    pub levels: usize,
}

fn default_shift() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DependenceRunConfig {
    pub grid: GridSpec,
    #[serde(alias = "params")]
    pub problem: ProblemParams,
    pub family: FamilySpec,
    pub solver: DependenceConfig,
    /// Also tabulate `‖K(u, u_k)‖_{L^{γ'}}` along the solved trajectories.
    #[serde(default)]
    pub remainder: Option<RemainderDecayConfig>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_theta_nodes() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemainderRunConfig {
    pub grid: GridSpec,
    #[serde(alias = "params")]
    pub problem: ProblemParams,
    pub u: Datum,
    pub psi: Datum,
    /// Rows `k = 0..=levels` with `v = u + 2^{−k}ψ`.
    pub levels: usize,
    #[serde(default = "default_theta_nodes")]
    pub theta_nodes: usize,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_alphas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 3.0]
}

fn default_samples() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointwiseConfig {
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
}

/// The grid dimension and the problem dimension must agree.
pub fn check_dims(grid: &GridSpec, problem: &ProblemParams) -> Result<(), CliError> {
    if grid.dim != problem.dim {
        return Err(CliError::Config(format!(
            "grid has N = {} but the problem has N = {}",
            grid.dim, problem.dim
        )));
    }
    Ok(())
}
