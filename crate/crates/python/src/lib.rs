//! Python module `fracnls`: grids, fields, norms, exponents, the two
//! integrators and the dependence experiment.

use fracnls_core::dependence::{run_dependence, Column, DependenceConfig, PerturbationFamily};
use fracnls_core::exponents::ExponentSet;
use fracnls_core::grid::{self, lebesgue_norm};
use fracnls_core::nonlinearity::{
    self, pointwise_sweep, LemmaExponents, Nonlinearity, RemainderConfig,
};
use fracnls_core::rng::gaussian;
use fracnls_core::selftest::{run_selftest, SelftestOptions};
use fracnls_core::solver::{picard_duhamel, split_step_sampled, PicardConfig};
use fracnls_core::spaces::{self, NormSpec, QuadratureSpec};
use fracnls_core::{ProblemParams, TimeGrid, Trajectory};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Periodic grid `[-L/2, L/2)^N` with `M` points per axis.
#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: grid::Grid,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(dim: usize, points: usize, period: f64) -> PyResult<Self> {
        grid::Grid::new(dim, points, period)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn points(&self) -> usize {
        self.inner.points()
    }

    #[getter]
    fn period(&self) -> f64 {
        self.inner.period()
    }

    /// Sample coordinates along the first axis.
    fn axis(&self) -> Vec<f64> {
        let h = self.inner.spacing();
        let half = 0.5 * self.inner.period();
        (0..self.inner.points())
            .map(|i| -half + i as f64 * h)
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(dim={}, points={}, period={})",
            self.inner.dim(),
            self.inner.points(),
            self.inner.period()
        )
    }
}

/// Complex samples on a grid, row-major.
#[pyclass(name = "Field", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: grid::Field,
}

impl From<grid::Field> for PyField {
    fn from(inner: grid::Field) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyField {
    #[new]
    fn new(grid: &PyGrid, values: Vec<Complex64>) -> PyResult<Self> {
        grid::Field::new(&grid.inner, values)
            .map(Self::from)
            .map_err(value_err)
    }

    #[staticmethod]
    #[pyo3(signature = (grid, width, amplitude = Complex64::new(1.0, 0.0), center = vec![]))]
    fn gaussian(
        grid: &PyGrid,
        width: f64,
        amplitude: Complex64,
        center: Vec<f64>,
    ) -> PyResult<Self> {
        if center.len() > grid.inner.dim() || width.is_nan() || width <= 0.0 {
            return Err(PyValueError::new_err(
                "center must have at most N coordinates and width must be positive",
            ));
        }
        let mut c = [0.0; 3];
        c[..center.len()].copy_from_slice(&center);
        Ok(gaussian(&grid.inner, c, width, amplitude).into())
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid {
            inner: self.inner.grid().clone(),
        }
    }

    fn values(&self) -> Vec<Complex64> {
        self.inner.values().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }

    fn __sub__(&self, other: &PyField) -> PyResult<Self> {
        self.inner
            .sub(&other.inner)
            .map(Self::from)
            .map_err(value_err)
    }

    fn __add__(&self, other: &PyField) -> PyResult<Self> {
        self.inner
            .add(&other.inner)
            .map(Self::from)
            .map_err(value_err)
    }

    fn scale(&self, c: Complex64) -> Self {
        self.inner.scale(c).into()
    }

    fn lebesgue_norm(&self, p: f64) -> PyResult<f64> {
        lebesgue_norm(&self.inner, p).map_err(value_err)
    }

    #[pyo3(signature = (s, homogeneous = false))]
    fn sobolev_norm(&self, s: f64, homogeneous: bool) -> f64 {
        spaces::sobolev_norm(&self.inner, s, homogeneous)
    }

    /// Littlewood–Paley Besov norm.
    #[pyo3(signature = (s, p, q, homogeneous = true))]
    fn besov_lp(&self, s: f64, p: f64, q: f64, homogeneous: bool) -> PyResult<f64> {
        spaces::besov_norm_lp(&self.inner, &NormSpec::besov_lp(s, p, q, homogeneous))
            .map_err(value_err)
    }

    /// Finite-difference Besov norm (`0 < s < 1`).
    #[pyo3(signature = (s, p, q, homogeneous = true))]
    fn besov_fd(&self, s: f64, p: f64, q: f64, homogeneous: bool) -> PyResult<f64> {
        spaces::besov_norm_fd(
            &self.inner,
            &NormSpec::besov_fd(s, p, q, homogeneous),
            &QuadratureSpec::default(),
        )
        .map_err(value_err)
    }

    fn free_propagate(&self, t: f64) -> Self {
        grid::free_propagate(&self.inner, t).into()
    }

    fn translate(&self, y: Vec<f64>) -> PyResult<Self> {
        grid::translate(&self.inner, &y)
            .map(Self::from)
            .map_err(value_err)
    }

    fn dealias(&self) -> Self {
        grid::dealias(&self.inner).into()
    }

    fn __repr__(&self) -> String {
        let g = self.inner.grid();
        format!(
            "Field(dim={}, points={}, period={})",
            g.dim(),
            g.points(),
            g.period()
        )
    }
}

/// `λ|u|^α u`.
#[pyclass(name = "PowerNonlinearity", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPower {
    inner: nonlinearity::PowerNonlinearity,
}

#[pymethods]
impl PyPower {
    #[new]
    fn new(lam: Complex64, alpha: f64) -> PyResult<Self> {
        nonlinearity::PowerNonlinearity::new(lam, alpha)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    fn __call__(&self, z: Complex64) -> Complex64 {
        self.inner.value(z)
    }

    /// `(∂_z g, ∂_z̄ g)` at `z`.
    fn wirtinger(&self, z: Complex64) -> (Complex64, Complex64) {
        self.inner.wirtinger(z)
    }

    fn apply(&self, f: &PyField) -> PyField {
        nonlinearity::apply_g(&f.inner, &self.inner).into()
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn params(dim: usize, s: f64, alpha: f64, lam: Complex64) -> ProblemParams {
    ProblemParams::power(dim, s, alpha, lam)
}

/// Exponent set for `(N, s, α)` as a dict; raises on a violated hypothesis.
#[pyfunction]
fn exponents(py: Python<'_>, dim: usize, s: f64, alpha: f64) -> PyResult<Bound<'_, PyAny>> {
    let e =
        ExponentSet::new(&params(dim, s, alpha, Complex64::new(1.0, 0.0))).map_err(value_err)?;
    json_to_py(py, &e)
}

#[pyfunction]
#[pyo3(signature = (alpha, samples = 100_000, seed = 0))]
fn verify_pointwise(
    py: Python<'_>,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'_, PyAny>> {
    json_to_py(py, &pointwise_sweep(alpha, samples, seed))
}

fn slices(traj: &Trajectory) -> Vec<PyField> {
    traj.slices().iter().cloned().map(PyField::from).collect()
}

/// Strang splitting; returns the `nt + 1` stored slices.
#[pyfunction]
#[pyo3(signature = (phi, nl, horizon, nt, substeps = 1))]
fn split_step(
    phi: &PyField,
    nl: &PyPower,
    horizon: f64,
    nt: usize,
    substeps: usize,
) -> PyResult<Vec<PyField>> {
    let tg = TimeGrid::new(horizon, nt).map_err(value_err)?;
    split_step_sampled(&phi.inner, &nl.inner, &tg, substeps)
        .map(|t| slices(&t))
        .map_err(runtime_err)
}

/// Picard iteration on the Duhamel formula; returns `(slices, iterations)`.
#[pyfunction]
#[pyo3(signature = (phi, nl, s, horizon, nt, tol = 1e-10, max_iter = 60))]
fn picard(
    phi: &PyField,
    nl: &PyPower,
    s: f64,
    horizon: f64,
    nt: usize,
    tol: f64,
    max_iter: usize,
) -> PyResult<(Vec<PyField>, usize)> {
    let dim = phi.inner.grid().dim();
    let exps =
        ExponentSet::new(&params(dim, s, nl.inner.alpha, nl.inner.lambda)).map_err(value_err)?;
    let cfg = PicardConfig {
        tol,
        max_iter,
        ..PicardConfig::for_exponents(&exps)
    };
    let tg = TimeGrid::new(horizon, nt).map_err(value_err)?;
    let (traj, rep) = picard_duhamel(&phi.inner, &nl.inner, &tg, &cfg).map_err(runtime_err)?;
    Ok((slices(&traj), rep.iterations))
}

/// Besov remainder `K(u, v)` in the canonical exponents for `s`.
#[pyfunction]
#[pyo3(signature = (u, v, nl, s, theta_nodes = 64))]
fn remainder_k(
    u: &PyField,
    v: &PyField,
    nl: &PyPower,
    s: f64,
    theta_nodes: usize,
) -> PyResult<f64> {
    let dim = u.inner.grid().dim();
    let alpha = nl.inner.alpha;
    let exps = ExponentSet::new(&params(dim, s, alpha, nl.inner.lambda)).map_err(value_err)?;
    let lem = LemmaExponents::canonical(&exps);
    let cfg = RemainderConfig {
        theta_nodes,
        ..Default::default()
    };
    nonlinearity::remainder_k(&u.inner, &v.inner, &nl.inner, alpha, &lem, &cfg).map_err(value_err)
}

/// Dependence experiment with the default shifted-Gaussian direction.
///
/// Returns a dict with the table rows, the fitted slope and `r2` of the
/// `sup H^s` column, and any flags.
#[pyfunction]
#[pyo3(signature = (base, s, alpha, lam, horizon, nt, eps0 = 0.1, levels = 8, shift = 1.0, width = 1.0))]
#[allow(clippy::too_many_arguments)]
fn dependence<'py>(
    py: Python<'py>,
    base: &PyField,
    s: f64,
    alpha: f64,
    lam: Complex64,
    horizon: f64,
    nt: usize,
    eps0: f64,
    levels: usize,
    shift: f64,
    width: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params(base.inner.grid().dim(), s, alpha, lam);
    let fam = PerturbationFamily::with_default_direction(
        base.inner.clone(),
        s,
        [shift, 0.0, 0.0],
        width,
        eps0,
        levels,
    )
    .map_err(value_err)?;
    let rep =
        run_dependence(&p, &fam, &DependenceConfig::picard(horizon, nt)).map_err(runtime_err)?;
    let out = PyDict::new(py);
    out.set_item("rows", json_to_py(py, &rep.rows)?)?;
    let fit = rep.fit(Column::SupHs).ok();
    out.set_item("slope", fit.map(|f| f.slope))?;
    out.set_item("r2", fit.map(|f| f.r_squared))?;
    out.set_item("lipschitz_constant", rep.lipschitz(Column::SupHs).constant)?;
    out.set_item("flags", rep.flags.clone())?;
    Ok(out)
}

/// Runs the built-in invariant suites; returns `(all_passed, report)`.
#[pyfunction]
#[pyo3(signature = (pointwise_samples = 20_000))]
fn selftest(py: Python<'_>, pointwise_samples: usize) -> PyResult<(bool, Bound<'_, PyAny>)> {
    let rep = run_selftest(&SelftestOptions {
        pointwise_samples,
        ..Default::default()
    });
    Ok((rep.all_passed(), json_to_py(py, &rep)?))
}

#[pymodule]
pub fn fracnls(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyPower>()?;
    m.add_function(wrap_pyfunction!(exponents, m)?)?;
    m.add_function(wrap_pyfunction!(verify_pointwise, m)?)?;
    m.add_function(wrap_pyfunction!(split_step, m)?)?;
    m.add_function(wrap_pyfunction!(picard, m)?)?;
    m.add_function(wrap_pyfunction!(remainder_k, m)?)?;
    m.add_function(wrap_pyfunction!(dependence, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
