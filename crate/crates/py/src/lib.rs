//! Python bindings: grids, fields, solvers, norms and audits.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tpflow::fields::io::{read_field_standalone, write_field};
use tpflow::nonlinear::{picard_solve, InitialState, PicardConfig};
use tpflow::norms;
use tpflow::oseen::{BoundaryData, ExteriorOptions, OseenParams};
use tpflow::verify::{self, AuditReport, CaseKind, TimeContent};
use tpflow::{Backend, Error, Region};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Diverged { .. } | Error::MaxIterations { .. } | Error::NotConverged { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Space-time grid of a periodic box.
#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyGrid {
    inner: Arc<tpflow::PeriodicGrid>,
}

#[pymethods]
impl PyGrid {
    #[staticmethod]
    fn spectral(period: f64, nt: usize, n: usize, box_len: f64) -> PyResult<Self> {
        let g = tpflow::PeriodicGrid::spectral(period, nt, [n; 3], box_len).map_err(py_err)?;
        Ok(Self { inner: g.into_shared() })
    }

    /// Exterior grid with a ball of radius `r_star` at the box center.
    #[staticmethod]
    fn exterior(period: f64, nt: usize, n: usize, box_len: f64, r_star: f64, r_zero: f64) -> PyResult<Self> {
        let g = tpflow::PeriodicGrid::exterior(period, nt, [n; 3], box_len, r_star, r_zero).map_err(py_err)?;
        Ok(Self { inner: g.into_shared() })
    }

    #[getter]
    fn nt(&self) -> usize {
        self.inner.nt()
    }

    #[getter]
    fn n(&self) -> [usize; 3] {
        self.inner.n()
    }

    #[getter]
    fn box_len(&self) -> f64 {
        self.inner.box_len()
    }

    #[getter]
    fn period(&self) -> f64 {
        self.inner.period()
    }

    #[getter]
    fn backend(&self) -> &'static str {
        match self.inner.backend() {
            Backend::Spectral => "spectral",
            Backend::Exterior => "exterior",
        }
    }

    fn __repr__(&self) -> String {
        let n = self.inner.n();
        format!(
            "Grid({}, nt={}, n={}x{}x{}, box={})",
            self.backend(),
            self.inner.nt(),
            n[0],
            n[1],
            n[2],
            self.inner.box_len()
        )
    }
}

/// Sampled scalar or vector field, layout `(t, comp, z, y, x)`.
#[pyclass(name = "Field", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyField {
    inner: tpflow::Field,
}

#[pymethods]
impl PyField {
    #[staticmethod]
    fn zeros(grid: &PyGrid, ncomp: usize) -> PyResult<Self> {
        if ncomp != 1 && ncomp != 3 {
            return Err(PyValueError::new_err("ncomp must be 1 or 3"));
        }
        Ok(Self {
            inner: tpflow::Field::zeros(&grid.inner, ncomp),
        })
    }

    #[staticmethod]
    fn from_samples(grid: &PyGrid, ncomp: usize, samples: Vec<f64>) -> PyResult<Self> {
        let inner = tpflow::Field::from_samples(&grid.inner, ncomp, samples).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Smooth band-limited field; `content` is `full`, `steady` or `oscillatory`.
    #[staticmethod]
    #[pyo3(signature = (grid, ncomp, seed, content = "full"))]
    fn random(grid: &PyGrid, ncomp: usize, seed: u64, content: &str) -> PyResult<Self> {
        let content = match content {
            "full" => TimeContent::Full,
            "steady" => TimeContent::Steady,
            "oscillatory" => TimeContent::Oscillatory,
            other => return Err(PyValueError::new_err(format!("unknown time content `{other}`"))),
        };
        if ncomp != 1 && ncomp != 3 {
            return Err(PyValueError::new_err("ncomp must be 1 or 3"));
        }
        Ok(Self {
            inner: verify::band_limited_field(&grid.inner, ncomp, content, seed),
        })
    }

    /// Reads a TPOF file; the grid is rebuilt from its header.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        let inner = read_field_standalone(BufReader::new(file)).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let file = File::create(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        write_field(&self.inner, BufWriter::new(file)).map_err(py_err)
    }

    #[getter]
    fn ncomp(&self) -> usize {
        self.inner.ncomp()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid {
            inner: self.inner.grid().clone(),
        }
    }

    fn samples(&self) -> Vec<f64> {
        self.inner.samples().to_vec()
    }

    fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    fn scaled(&self, s: f64) -> Self {
        Self {
            inner: self.inner.scaled(s),
        }
    }

    fn __repr__(&self) -> String {
        format!("Field(ncomp={}, max_abs={:e})", self.inner.ncomp(), self.inner.max_abs())
    }
}

/// Viscosity and drift profile `zeta(t)`.
#[pyclass(name = "Params", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyParams {
    inner: OseenParams,
}

#[pymethods]
impl PyParams {
    /// Constant drift `zeta = lam`.
    #[new]
    fn new(nu: f64, lam: f64, nt: usize) -> PyResult<Self> {
        Ok(Self {
            inner: OseenParams::uniform(nu, lam, nt).map_err(py_err)?,
        })
    }

    /// `zeta(t) = lam + sum_j a_j cos(j w t) + b_j sin(j w t)`, bounded by `lambda0`.
    #[staticmethod]
    fn fourier(nu: f64, lam: f64, modes: Vec<(f64, f64)>, nt: usize, lambda0: f64) -> PyResult<Self> {
        Ok(Self {
            inner: OseenParams::from_fourier(nu, lam, &modes, nt, lambda0).map_err(py_err)?,
        })
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.inner.nu()
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda()
    }

    #[getter]
    fn zeta(&self) -> Vec<f64> {
        self.inner.zeta().to_vec()
    }
}

fn region(name: &str) -> PyResult<Region> {
    match name {
        "all" => Ok(Region::All),
        "fluid" => Ok(Region::Fluid),
        "interior" => Ok(Region::Interior),
        "annulus" => Ok(Region::Annulus),
        other => Err(PyValueError::new_err(format!("unknown region `{other}`"))),
    }
}

/// Linear solve with zero boundary values; returns `(u, p)`.
#[pyfunction]
fn solve_linear(f: &PyField, params: &PyParams) -> PyResult<(PyField, PyField)> {
    let (u, p) = verify::solve_linear(&f.inner, &params.inner, &ExteriorOptions::default()).map_err(py_err)?;
    Ok((PyField { inner: u }, PyField { inner: p.field }))
}

/// Picard solve of the nonlinear problem; `towed` sets the body velocity to
/// `towed * zeta / max|zeta|`. Returns `(u, p, report)`.
#[pyfunction]
#[pyo3(signature = (f, params, towed = None, tol = 1e-8, max_iter = 50, q = 1.25))]
fn solve_nonlinear<'py>(
    py: Python<'py>,
    f: &PyField,
    params: &PyParams,
    towed: Option<f64>,
    tol: f64,
    max_iter: usize,
    q: f64,
) -> PyResult<(PyField, PyField, Bound<'py, PyDict>)> {
    let grid = f.inner.grid();
    let bc = match towed {
        Some(amp) => {
            let zmax = params.inner.zeta().iter().fold(0.0f64, |m, z| m.max(z.abs()));
            let scale = if zmax > 0.0 { amp / zmax } else { 0.0 };
            let profile: Vec<f64> = params.inner.zeta().iter().map(|z| z * scale).collect();
            Some(BoundaryData::towed(grid, &profile).map_err(py_err)?)
        }
        None => None,
    };
    let cfg = PicardConfig {
        tol,
        max_iter,
        q,
        ..PicardConfig::default()
    };
    let sol = picard_solve(
        &f.inner,
        bc.as_ref(),
        &params.inner,
        &cfg,
        InitialState::Zero,
        &ExteriorOptions::default(),
    )
    .map_err(py_err)?;
    let report = PyDict::new(py);
    report.set_item("residuals", sol.report.residuals.clone())?;
    report.set_item("contraction_ratios", sol.report.contraction_ratios.clone())?;
    report.set_item("boundary_mismatch", sol.report.boundary_mismatch)?;
    for (label, value) in &sol.report.final_norms.entries {
        report.set_item(label, *value)?;
    }
    Ok((PyField { inner: sol.u }, PyField { inner: sol.p.field }, report))
}

/// Relative L2 error of recovering a manufactured solution.
#[pyfunction]
#[pyo3(signature = (kind, grid, params, seed = 0, amplitude = 1.0))]
fn mms(kind: &str, grid: &PyGrid, params: &PyParams, seed: u64, amplitude: f64) -> PyResult<f64> {
    let kind = CaseKind::parse(kind).ok_or_else(|| PyValueError::new_err(format!("unknown case kind `{kind}`")))?;
    let case = verify::manufactured_case(kind, &grid.inner, &params.inner, seed, amplitude).map_err(py_err)?;
    let rec = verify::recover(&case, &PicardConfig::default()).map_err(py_err)?;
    Ok(rec.relative_error)
}

#[pyfunction]
#[pyo3(signature = (f, q, region = "fluid"))]
fn lq_norm(f: &PyField, q: f64, region: &str) -> PyResult<f64> {
    Ok(norms::lq_norm(&f.inner, q, self::region(region)?))
}

#[pyfunction]
fn mixed_norm(f: &PyField, r: f64, p: f64) -> f64 {
    norms::mixed_rp_norm(&f.inner, r, p)
}

#[pyfunction]
fn sobolev_norm(f: &PyField, q: f64) -> f64 {
    norms::sobolev_norm_12q(&f.inner, q)
}

#[pyfunction]
fn xoseen_norm(f: &PyField, q: f64, lam: f64) -> PyResult<f64> {
    norms::xoseen_norm(&f.inner, q, lam).map_err(py_err)
}

fn report_dict<'py>(py: Python<'py>, r: &AuditReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("label", &r.label)?;
    d.set_item("pass", r.pass)?;
    d.set_item("constant", r.constant)?;
    d.set_item("min", r.stats.min)?;
    d.set_item("max", r.stats.max)?;
    d.set_item("median", r.stats.median)?;
    d.set_item("dispersion", r.stats.dispersion())?;
    for (label, value) in &r.notes {
        d.set_item(label, *value)?;
    }
    let rows: Vec<(String, f64, f64, f64)> = r
        .rows
        .iter()
        .map(|row| (row.label.clone(), row.left, row.right, row.fitted_constant))
        .collect();
    d.set_item("rows", rows)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (grid, params, q = 1.25, samples = 30, seed = 0))]
fn audit_linear_estimate<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    params: &PyParams,
    q: f64,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = verify::audit_linear_estimate(&grid.inner, &params.inner, q, samples, seed).map_err(py_err)?;
    report_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (grid, params, k_max = 8, seed = 0))]
fn audit_modewise<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    params: &PyParams,
    k_max: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = verify::audit_modewise(&grid.inner, &params.inner, k_max, seed).map_err(py_err)?;
    report_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (grid, q, alpha, beta, calibration = 20, fresh = 100, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn audit_embedding<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    q: f64,
    alpha: f64,
    beta: f64,
    calibration: usize,
    fresh: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = verify::audit_embedding(&grid.inner, q, alpha, beta, calibration, fresh, seed).map_err(py_err)?;
    report_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (grid, q, lambdas, samples = 10, seed = 0))]
fn audit_nonlinear_term<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    q: f64,
    lambdas: Vec<f64>,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = verify::audit_nonlinear_term(&grid.inner, q, &lambdas, samples, seed).map_err(py_err)?;
    report_dict(py, &r)
}

/// Downstream/upstream speed ratio of a steady field at distance `r`.
#[pyfunction]
fn wake_ratio(u: &PyField, r: f64) -> PyResult<f64> {
    Ok(verify::wake_diagnostic(&u.inner, r).map_err(py_err)?.ratio)
}

#[pymodule]
fn tpflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(solve_linear, m)?)?;
    m.add_function(wrap_pyfunction!(solve_nonlinear, m)?)?;
    m.add_function(wrap_pyfunction!(mms, m)?)?;
    m.add_function(wrap_pyfunction!(lq_norm, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_norm, m)?)?;
    m.add_function(wrap_pyfunction!(sobolev_norm, m)?)?;
    m.add_function(wrap_pyfunction!(xoseen_norm, m)?)?;
    m.add_function(wrap_pyfunction!(audit_linear_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(audit_modewise, m)?)?;
    m.add_function(wrap_pyfunction!(audit_embedding, m)?)?;
    m.add_function(wrap_pyfunction!(audit_nonlinear_term, m)?)?;
    m.add_function(wrap_pyfunction!(wake_ratio, m)?)?;
    Ok(())
}
