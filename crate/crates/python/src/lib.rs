//! Python bindings: kernels, calibration and the arbitrage checks.
//!
//! Matrices cross the boundary as lists of rows; reports come back as dicts.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crossimpact::arbitrage::{cost, min_roundtrip_cost, pair_trading_strategy, predict_prices};
use crossimpact::cli::{check_kernel, run_calibration, run_estimate, simulate_days};
use crossimpact::config::RunConfig;
use crossimpact::io;
use crossimpact::kernels::{self, nsa_check, regularize_k2};
use crossimpact::linalg::Mat;
use crossimpact::observables::BinnedSeries;
use crossimpact::{Error, ImpactKernel};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_mat(rows: &[Vec<f64>]) -> PyResult<Mat> {
    io::rows_to_mat(rows).map_err(err)
}

fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Any serializable value as a Python object, through JSON.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn load_config(path: PathBuf) -> PyResult<RunConfig> {
    let cfg = RunConfig::load(&path).map_err(err)?;
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Impact kernel sampled on a lattice of width `delta`.
#[pyclass(name = "Kernel", module = "crossimpact_py")]
struct PyKernel {
    inner: ImpactKernel,
}

#[pymethods]
impl PyKernel {
    #[new]
    #[pyo3(signature = (values, permanent, delta = 1.0))]
    fn new(values: Vec<Vec<Vec<f64>>>, permanent: Vec<Vec<f64>>, delta: f64) -> PyResult<Self> {
        if values.is_empty() || !(delta > 0.0) {
            return Err(PyValueError::new_err("need at least one lag and a positive delta"));
        }
        let values = values.iter().map(|v| to_mat(v)).collect::<PyResult<Vec<_>>>()?;
        Ok(PyKernel { inner: ImpactKernel::from_values(values, to_mat(&permanent)?, delta) })
    }

    #[staticmethod]
    fn read(dir: PathBuf) -> PyResult<Self> {
        Ok(PyKernel { inner: io::read_kernel(&dir).map_err(err)? })
    }

    fn write(&self, dir: PathBuf) -> PyResult<()> {
        io::write_kernel(&dir, &self.inner, BTreeMap::new(), 1.0).map_err(err)
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    #[getter]
    fn k0(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.k0)
    }

    #[getter]
    fn permanent(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.lambda)
    }

    #[getter]
    fn values(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.values.iter().map(to_rows).collect()
    }

    #[getter]
    fn provenance(&self) -> String {
        format!("{:?}", self.inner.provenance).to_lowercase()
    }

    /// Kernel at continuous lag `t`.
    fn at(&self, t: f64) -> Vec<Vec<f64>> {
        to_rows(&self.inner.at(t))
    }

    #[pyo3(signature = (tol = 1e-8))]
    fn nsa_check(&self, py: Python<'_>, tol: f64) -> PyResult<Py<PyAny>> {
        to_py(py, &nsa_check(&self.inner, tol).map_err(err)?)
    }

    /// Clipped projection of this kernel and the clipping report.
    fn regularize(&self, py: Python<'_>) -> PyResult<(PyKernel, Py<PyAny>)> {
        let (k2, report) = regularize_k2(&self.inner).map_err(err)?;
        Ok((PyKernel { inner: k2 }, to_py(py, &report)?))
    }

    fn __len__(&self) -> usize {
        self.inner.values.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Kernel(d={}, tau_max={}, delta={}, provenance={})",
            self.inner.d(),
            self.inner.tau_max(),
            self.inner.delta,
            self.provenance()
        )
    }
}

/// Symmetric PSD `M` with `M c M = Σ/2`.
#[pyfunction]
fn kyle_matrix(sigma: Vec<Vec<f64>>, c: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(&kernels::kyle_matrix(&to_mat(&sigma)?, &to_mat(&c)?).map_err(err)?))
}

/// Simulated events for every configured day, as `(time, asset, sign, size)` tuples.
#[pyfunction]
fn simulate(config: PathBuf) -> PyResult<Vec<Vec<(f64, usize, i8, f64)>>> {
    let cfg = load_config(config)?;
    let path = cfg.spec.clone().ok_or_else(|| PyValueError::new_err("the config has no spec"))?;
    let spec = crossimpact::cli::load_spec(&path).map_err(err)?;
    let days = simulate_days(&spec, &cfg).map_err(err)?;
    Ok(days
        .iter()
        .map(|d| {
            d.events
                .events
                .iter()
                .map(|e| (e.time, e.asset, e.side.sign() as i8, e.size))
                .collect()
        })
        .collect())
}

/// Observables estimated from the configured input.
#[pyfunction]
fn estimate(py: Python<'_>, config: PathBuf) -> PyResult<Py<PyAny>> {
    let cfg = load_config(config)?;
    let (obs, _) = run_estimate(&cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &obs)
}

/// Full calibration: `(K1, K2, report)`.
#[pyfunction]
fn calibrate(py: Python<'_>, config: PathBuf) -> PyResult<(PyKernel, PyKernel, Py<PyAny>)> {
    let cfg = load_config(config)?;
    let cal = py
        .detach(|| run_calibration(&cfg))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((PyKernel { inner: cal.k1 }, PyKernel { inner: cal.k2 }, to_py(py, &cal.report)?))
}

/// Admissibility report plus round-trip search, as written by `crossimpact check`.
#[pyfunction]
#[pyo3(signature = (kernel, tol = 1e-8, n_steps = 8, horizon = None))]
fn check(py: Python<'_>, kernel: &PyKernel, tol: f64, n_steps: usize, horizon: Option<f64>) -> PyResult<Py<PyAny>> {
    let k = &kernel.inner;
    let (report, _) = check_kernel(k, tol, n_steps, horizon.unwrap_or(10.0 * k.delta)).map_err(err)?;
    to_py(py, &report)
}

/// Cheapest round trip on `n_steps` uniform pieces over `[0, horizon]`.
#[pyfunction(name = "min_roundtrip_cost")]
fn roundtrip(py: Python<'_>, kernel: &PyKernel, n_steps: usize, horizon: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &min_roundtrip_cost(&kernel.inner, n_steps, horizon).map_err(err)?)
}

/// Cost of the three-phase pair trade between assets `p` and `q`.
#[pyfunction]
fn pair_trading_cost(kernel: &PyKernel, p: usize, q: usize, v_p: f64, v_q: f64, horizon: f64) -> PyResult<f64> {
    let s = pair_trading_strategy(kernel.inner.d(), p, q, v_p, v_q, horizon).map_err(err)?;
    Ok(cost(&s, &kernel.inner).map_err(err)?.total)
}

/// Predicted prices at bin boundaries for signed flows on the kernel lattice.
#[pyfunction]
fn predict(kernel: &PyKernel, flows: Vec<Vec<f64>>, p0: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
    let series = BinnedSeries::from_flows(kernel.inner.delta, flows);
    predict_prices(&kernel.inner, &series, &p0, false).map_err(err)
}

#[pymodule]
fn crossimpact_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_function(wrap_pyfunction!(kyle_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(roundtrip, m)?)?;
    m.add_function(wrap_pyfunction!(pair_trading_cost, m)?)?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    Ok(())
}
