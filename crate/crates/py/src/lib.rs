//! Python bindings for the flow solver: grids, fields, stepping, runs,
//! diagnostics, classification, and snapshot/time-series I/O.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::collections::HashMap;
use std::path::PathBuf;

use nsf_core::config;
use nsf_core::constitutive;
use nsf_core::diagnostics::{self, DiagnosticsRecord};
use nsf_core::elliptic::EllipticSolverConfig;
use nsf_core::field::{ScalarField, VectorField};
use nsf_core::grid;
use nsf_core::integrator::{self, StepConfig, TimeScheme};
use nsf_core::monitor::{self, MonitorConfig};
use nsf_core::ops;
use nsf_core::runner::{self, RunOptions};
use nsf_core::snapshot;
use nsf_core::timeseries;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(e.to_string())
}

fn parse_scheme(s: &str) -> PyResult<TimeScheme> {
    match s {
        "explicit-rk2" => Ok(TimeScheme::ExplicitRk2),
        "semi-implicit" => Ok(TimeScheme::SemiImplicitTheta),
        other => Err(value_err(format!(
            "unknown scheme {other:?}; expected explicit-rk2 or semi-implicit"
        ))),
    }
}

fn step_config(dt: f64, cfl_safety: f64, scheme: &str) -> PyResult<StepConfig> {
    StepConfig::new(dt, cfl_safety, parse_scheme(scheme)?)
        .ok_or_else(|| value_err("dt must be positive and cfl_safety in (0, 1]"))
}

#[derive(FromPyObject)]
enum Cells {
    Cube(usize),
    PerAxis([usize; 3]),
}

/// Node-centered box grid.
#[pyclass(frozen, skip_from_py_object, name = "Grid")]
#[derive(Clone)]
struct PyGrid {
    inner: grid::Grid,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (cells, extents = [1.0, 1.0, 1.0]))]
    fn new(cells: Cells, extents: [f64; 3]) -> PyResult<Self> {
        let cells = match cells {
            Cells::Cube(n) => [n; 3],
            Cells::PerAxis(c) => c,
        };
        grid::Grid::new(extents, cells)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[getter]
    fn cells(&self) -> [usize; 3] {
        self.inner.cells()
    }

    #[getter]
    fn extents(&self) -> [f64; 3] {
        self.inner.extents()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn spacing(&self) -> [f64; 3] {
        self.inner.spacing()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(cells={:?}, extents={:?})",
            self.inner.cells(),
            self.inner.extents()
        )
    }
}

/// Constant material parameters.
#[pyclass(frozen, skip_from_py_object, name = "PhysParams")]
#[derive(Clone)]
struct PyParams {
    inner: constitutive::PhysParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (mu = 0.05, eta = 0.0, kappa = 0.05, cv = 1.5))]
    fn new(mu: f64, eta: f64, kappa: f64, cv: f64) -> PyResult<Self> {
        constitutive::PhysParams::new(mu, eta, kappa, cv)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta()
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa()
    }

    #[getter]
    fn cv(&self) -> f64 {
        self.inner.cv()
    }

    fn __repr__(&self) -> String {
        format!(
            "PhysParams(mu={}, eta={}, kappa={}, cv={})",
            self.inner.mu(),
            self.inner.eta(),
            self.inner.kappa(),
            self.inner.cv()
        )
    }
}

fn split_velocity(v: &VectorField) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = v.values().len();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for w in v.values() {
        x.push(w[0]);
        y.push(w[1]);
        z.push(w[2]);
    }
    (x, y, z)
}

/// Instantaneous flow state (density, temperature, velocity at every node).
#[pyclass(skip_from_py_object, name = "FluidState")]
#[derive(Clone)]
struct PyState {
    inner: integrator::FluidState,
}

#[pymethods]
impl PyState {
    /// Uniform state with zero velocity.
    #[staticmethod]
    fn equilibrium(grid: &PyGrid, rho: f64, theta: f64) -> Self {
        Self {
            inner: integrator::FluidState::equilibrium(grid.inner, rho, theta),
        }
    }

    /// State from flat per-node value lists (x-fastest node order).
    #[staticmethod]
    fn from_values(
        grid: &PyGrid,
        time: f64,
        rho: Vec<f64>,
        theta: Vec<f64>,
        ux: Vec<f64>,
        uy: Vec<f64>,
        uz: Vec<f64>,
    ) -> PyResult<Self> {
        let rho = ScalarField::from_values(grid.inner, rho).map_err(value_err)?;
        let theta = ScalarField::from_values(grid.inner, theta).map_err(value_err)?;
        let u = VectorField::from_components(grid.inner, ux, uy, uz).map_err(value_err)?;
        integrator::FluidState::new(time, rho, theta, u)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid {
            inner: self.inner.grid(),
        }
    }

    fn rho(&self) -> Vec<f64> {
        self.inner.rho.values().to_vec()
    }

    fn theta(&self) -> Vec<f64> {
        self.inner.theta.values().to_vec()
    }

    fn velocity(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        split_velocity(&self.inner.u)
    }

    fn mass(&self) -> f64 {
        ops::integrate(&self.inner.rho)
    }

    fn min_rho(&self) -> f64 {
        self.inner.rho.min_value()
    }

    fn min_theta(&self) -> f64 {
        self.inner.theta.min_value()
    }

    fn max_speed(&self) -> f64 {
        self.inner.u.magnitude().max_value()
    }

    fn __repr__(&self) -> String {
        format!(
            "FluidState(time={}, cells={:?})",
            self.inner.time,
            self.inner.grid().cells()
        )
    }
}

/// Boundary temperature, tangential slip velocity, body force, and their
/// interior extensions.
#[pyclass(frozen, name = "BoundaryData")]
struct PyBoundary {
    inner: integrator::BoundaryData,
}

#[pymethods]
impl PyBoundary {
    /// Uniform boundary temperature, no slip, no force.
    #[staticmethod]
    fn isothermal(grid: &PyGrid, theta_value: f64, params: &PyParams) -> PyResult<Self> {
        integrator::BoundaryData::new(
            ScalarField::constant(grid.inner, theta_value),
            VectorField::zeros(grid.inner),
            VectorField::zeros(grid.inner),
            &params.inner,
            &EllipticSolverConfig::default_for(grid.inner),
        )
        .map(|inner| Self { inner })
        .map_err(value_err)
    }

    /// Boundary data from flat per-node value lists (only boundary nodes of
    /// `theta_b` and the velocity lists are used; the force acts everywhere).
    #[staticmethod]
    #[allow(clippy::too_many_arguments)]
    fn from_values(
        grid: &PyGrid,
        theta_b: Vec<f64>,
        ub_x: Vec<f64>,
        ub_y: Vec<f64>,
        ub_z: Vec<f64>,
        f_x: Vec<f64>,
        f_y: Vec<f64>,
        f_z: Vec<f64>,
        params: &PyParams,
    ) -> PyResult<Self> {
        let theta_b = ScalarField::from_values(grid.inner, theta_b).map_err(value_err)?;
        let u_b = VectorField::from_components(grid.inner, ub_x, ub_y, ub_z).map_err(value_err)?;
        let force = VectorField::from_components(grid.inner, f_x, f_y, f_z).map_err(value_err)?;
        integrator::BoundaryData::new(
            theta_b,
            u_b,
            force,
            &params.inner,
            &EllipticSolverConfig::default_for(grid.inner),
        )
        .map(|inner| Self { inner })
        .map_err(value_err)
    }

    fn min_theta_b(&self) -> f64 {
        self.inner.min_theta_b()
    }

    /// Interior temperature extension (harmonic lift of the trace).
    fn theta_extension(&self) -> Vec<f64> {
        self.inner.theta_ext().values().to_vec()
    }

    /// Interior velocity extension.
    fn velocity_extension(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        split_velocity(self.inner.u_ext())
    }
}

fn record_to_dict<'py>(py: Python<'py>, rec: &DiagnosticsRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (name, value) in DiagnosticsRecord::FIELD_NAMES.iter().zip(rec.to_row()) {
        d.set_item(name, value)?;
    }
    Ok(d)
}

fn dict_to_record(map: &HashMap<String, f64>) -> PyResult<DiagnosticsRecord> {
    let mut row = [0.0; 22];
    for (slot, name) in row.iter_mut().zip(DiagnosticsRecord::FIELD_NAMES) {
        *slot = *map
            .get(name)
            .ok_or_else(|| value_err(format!("record is missing field {name:?}")))?;
    }
    DiagnosticsRecord::from_row(&row).ok_or_else(|| value_err("malformed record row"))
}

/// Names of the diagnostics record fields, in emitted column order.
#[pyfunction]
fn field_names() -> Vec<&'static str> {
    DiagnosticsRecord::FIELD_NAMES.to_vec()
}

/// Largest stable time step for the state under the given parameters.
#[pyfunction]
fn stability_bound(state: &PyState, params: &PyParams) -> f64 {
    integrator::stability_bound(&state.inner, &params.inner)
}

/// Advance the state by one time step.
#[pyfunction]
#[pyo3(signature = (state, bdata, params, dt, cfl_safety = 0.9, scheme = "explicit-rk2"))]
fn step(
    state: &PyState,
    bdata: &PyBoundary,
    params: &PyParams,
    dt: f64,
    cfl_safety: f64,
    scheme: &str,
) -> PyResult<PyState> {
    let cfg = step_config(dt, cfl_safety, scheme)?;
    integrator::step(&state.inner, &bdata.inner, &params.inner, &cfg)
        .map(|inner| PyState { inner })
        .map_err(value_err)
}

/// Outcome of a time-stepped run.
#[pyclass(frozen, name = "RunOutcome")]
struct PyRunOutcome {
    #[pyo3(get)]
    final_state: PyState,
    records: Vec<DiagnosticsRecord>,
    #[pyo3(get)]
    classification: String,
    #[pyo3(get)]
    estimated_tstar: Option<f64>,
    #[pyo3(get)]
    report: String,
}

#[pymethods]
impl PyRunOutcome {
    /// Diagnostics samples as a list of name -> value dicts.
    fn records<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.records.iter().map(|r| record_to_dict(py, r)).collect()
    }
}

/// Advance the state to `t_end`, sampling diagnostics and monitoring for
/// blow-up along the way.
#[pyfunction]
#[pyo3(signature = (state, bdata, params, dt, t_end, cfl_safety = 0.9, scheme = "explicit-rk2",
                    diag_interval = 10, override_compat = false))]
#[allow(clippy::too_many_arguments)]
fn run(
    state: &PyState,
    bdata: &PyBoundary,
    params: &PyParams,
    dt: f64,
    t_end: f64,
    cfl_safety: f64,
    scheme: &str,
    diag_interval: usize,
    override_compat: bool,
) -> PyResult<PyRunOutcome> {
    let cfg = step_config(dt, cfl_safety, scheme)?;
    let mut opts = RunOptions::new(t_end);
    opts.diag_interval = diag_interval;
    opts.override_compat = override_compat;
    let out = runner::run(
        &state.inner,
        &bdata.inner,
        &params.inner,
        &cfg,
        &opts,
        |_, _, _| {},
    )
    .map_err(value_err)?;
    Ok(PyRunOutcome {
        final_state: PyState {
            inner: out.final_state,
        },
        records: out.records,
        classification: out.report.classification.to_string(),
        estimated_tstar: out.report.estimated_tstar,
        report: out.report.to_string(),
    })
}

/// Evaluate one diagnostics record on a snapshot pair.
#[pyfunction]
fn diagnostics_record<'py>(
    py: Python<'py>,
    now: &PyState,
    prev: &PyState,
    bdata: &PyBoundary,
    params: &PyParams,
    dt: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let rec = diagnostics::record(&now.inner, &prev.inner, &bdata.inner, &params.inner, dt)
        .map_err(value_err)?;
    record_to_dict(py, &rec)
}

/// Validate initial data: positivity minima, data norms, and failures.
#[pyfunction]
fn check_data_class<'py>(
    py: Python<'py>,
    state: &PyState,
    bdata: &PyBoundary,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = integrator::check_data_class(&state.inner, &bdata.inner);
    let d = PyDict::new(py);
    d.set_item("min_rho0", rep.min_rho0)?;
    d.set_item("min_theta0", rep.min_theta0)?;
    d.set_item("min_theta_b", rep.min_theta_b)?;
    d.set_item("data_norm", rep.w32_data_norm)?;
    d.set_item("theta_b_boundary_norm", rep.theta_b_boundary_norm)?;
    d.set_item("u_b_boundary_norm", rep.u_b_boundary_norm)?;
    d.set_item("force_norm", rep.f_w22_norm)?;
    d.set_item("failures", rep.failures.clone())?;
    d.set_item("pass", rep.pass())?;
    Ok(d)
}

/// First-order compatibility residuals between initial and boundary data.
#[pyfunction]
fn check_compatibility<'py>(
    py: Python<'py>,
    state: &PyState,
    bdata: &PyBoundary,
    params: &PyParams,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = integrator::check_compatibility(&state.inner, &bdata.inner, &params.inner);
    let d = PyDict::new(py);
    d.set_item("theta_trace", rep.theta_trace_residual)?;
    d.set_item("u_trace", rep.u_trace_residual)?;
    d.set_item("momentum", rep.momentum_residual)?;
    d.set_item("energy", rep.energy_residual)?;
    d.set_item("max", rep.max_residual())?;
    Ok(d)
}

/// Classify a diagnostics history (list of record dicts); returns the
/// classification, estimated blow-up time, fit quality, and report text.
#[pyfunction]
#[pyo3(signature = (records, window = 30, growth_factor = 4.0, min_samples = 8))]
fn classify<'py>(
    py: Python<'py>,
    records: Vec<HashMap<String, f64>>,
    window: usize,
    growth_factor: f64,
    min_samples: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let history: Vec<DiagnosticsRecord> = records
        .iter()
        .map(dict_to_record)
        .collect::<PyResult<_>>()?;
    let cfg = MonitorConfig::new(window, growth_factor, min_samples).map_err(value_err)?;
    let rep = monitor::classify(&history, &cfg).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("classification", rep.classification.to_string())?;
    d.set_item("estimated_tstar", rep.estimated_tstar)?;
    d.set_item("fit_quality", rep.fit_quality)?;
    d.set_item("horizon", rep.horizon)?;
    d.set_item("report", rep.to_string())?;
    Ok(d)
}

/// Write a state snapshot file.
#[pyfunction]
fn write_snapshot(state: &PyState, path: PathBuf) -> PyResult<()> {
    snapshot::write_snapshot(&state.inner, &path).map_err(io_err)
}

/// Read a state snapshot file.
#[pyfunction]
fn read_snapshot(path: PathBuf) -> PyResult<PyState> {
    snapshot::read_snapshot(&path)
        .map(|inner| PyState { inner })
        .map_err(io_err)
}

/// Read an emitted diagnostics time series as a list of record dicts.
#[pyfunction]
fn read_timeseries<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let records = timeseries::read_timeseries(&path).map_err(io_err)?;
    records.iter().map(|r| record_to_dict(py, r)).collect()
}

/// Write a diagnostics time series from a list of record dicts.
#[pyfunction]
fn write_timeseries(records: Vec<HashMap<String, f64>>, path: PathBuf) -> PyResult<()> {
    let records: Vec<DiagnosticsRecord> = records
        .iter()
        .map(dict_to_record)
        .collect::<PyResult<_>>()?;
    timeseries::write_timeseries(&records, &path).map_err(io_err)
}

/// Parsed run configuration (same format as the `nsf` CLI).
#[pyclass(frozen, name = "RunConfig")]
struct PyConfig {
    inner: config::RunConfig,
}

#[pymethods]
impl PyConfig {
    fn build(&self) -> PyResult<(PyState, PyBoundary)> {
        let (state, bdata) = self.inner.build().map_err(value_err)?;
        Ok((PyState { inner: state }, PyBoundary { inner: bdata }))
    }

    fn serialize(&self) -> String {
        self.inner.serialize()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid {
            inner: self.inner.grid,
        }
    }

    #[getter]
    fn params(&self) -> PyParams {
        PyParams {
            inner: self.inner.params,
        }
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.inner.t_end
    }
}

/// Parse configuration text (INI-style `key = value` with [section] headers).
#[pyfunction]
fn parse_config(text: &str) -> PyResult<PyConfig> {
    config::parse_config(text)
        .map(|inner| PyConfig { inner })
        .map_err(value_err)
}

#[pymodule]
fn nsf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyBoundary>()?;
    m.add_class::<PyRunOutcome>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(field_names, m)?)?;
    m.add_function(wrap_pyfunction!(stability_bound, m)?)?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(diagnostics_record, m)?)?;
    m.add_function(wrap_pyfunction!(check_data_class, m)?)?;
    m.add_function(wrap_pyfunction!(check_compatibility, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(write_snapshot, m)?)?;
    m.add_function(wrap_pyfunction!(read_snapshot, m)?)?;
    m.add_function(wrap_pyfunction!(read_timeseries, m)?)?;
    m.add_function(wrap_pyfunction!(write_timeseries, m)?)?;
    m.add_function(wrap_pyfunction!(parse_config, m)?)?;
    Ok(())
}
