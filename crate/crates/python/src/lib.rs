//! Python bindings for `qprelax`.
//!
//! Results come back as plain dictionaries built from the JSON form of the
//! Rust result types, with `value` fields restored to real floats so that
//! `inf` and `-inf` survive the round trip.

use nalgebra::DVector;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use qprelax::{ConeKind, LoadOptions, OracleOptions, QpError, RandomKind, SolveOptions};
use serde::Serialize;

fn to_py_err(e: QpError) -> PyErr {
    match e {
        QpError::Io { .. } => PyOSError::new_err(e.to_string()),
        QpError::DeskScaleLimit { .. } | QpError::GenerationFailed { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T, raw: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let obj = py.import("json")?.call_method1("loads", (text,))?;
    if let Some(v) = raw {
        obj.set_item("value", v)?;
    }
    Ok(obj)
}

fn cone(name: &str) -> PyResult<ConeKind> {
    name.parse().map_err(|e: QpError| PyValueError::new_err(e.to_string()))
}

fn solve_options(tol: Option<f64>, max_iterations: Option<usize>) -> SolveOptions {
    let mut opts = SolveOptions { oracle: OracleOptions::from_env(), ..SolveOptions::default() };
    if let Some(t) = tol {
        opts.tol_primal = t;
        opts.tol_dual = t;
    }
    if let Some(k) = max_iterations {
        opts.max_iterations = k;
    }
    opts
}

/// A validated instance of `min x'Qx + 2c'x  s.t.  Ax = b, x >= 0`.
#[pyclass(name = "Instance", module = "pyqprelax", frozen)]
struct Instance {
    inner: qprelax::QpInstance,
}

#[pymethods]
impl Instance {
    #[new]
    #[pyo3(signature = (q, c, a, b, name = "instance", symmetrize = false))]
    fn new(q: Vec<Vec<f64>>, c: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<f64>, name: &str, symmetrize: bool) -> PyResult<Self> {
        let text = serde_json::json!({
            "name": name, "n": c.len(), "m": b.len(), "Q": q, "c": c, "A": a, "b": b,
        })
        .to_string();
        let inner = qprelax::QpInstance::from_json(&text, LoadOptions { symmetrize }).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, symmetrize = false))]
    fn load(path: &str, symmetrize: bool) -> PyResult<Self> {
        let inner = qprelax::QpInstance::load(path, LoadOptions { symmetrize }).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (text, symmetrize = false))]
    fn from_json(text: &str, symmetrize: bool) -> PyResult<Self> {
        let inner = qprelax::QpInstance::from_json(text, LoadOptions { symmetrize }).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    /// `(Q, c, A, b)` as nested lists.
    fn data<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner.to_file(), None)
    }

    fn objective(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.objective(&DVector::from_vec(x)).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("Instance(name={:?}, n={}, m={})", self.inner.name(), self.inner.n(), self.inner.m())
    }
}

fn wrap(g: qprelax::GeneratedInstance) -> Instance {
    Instance { inner: g.instance }
}

/// The five-variable instance built on the Horn matrix.
#[pyfunction]
fn horn() -> Instance {
    Instance { inner: qprelax::horn_instance().0 }
}

#[pyfunction]
#[pyo3(signature = (n, seed = 0))]
fn horn_family(n: usize, seed: u64) -> PyResult<Instance> {
    qprelax::horn_family(&qprelax::HornFamilyParams::new(n, seed)).map(wrap).map_err(to_py_err)
}

/// `kind` is one of `bounded`, `convex-on-nullspace`, `unbounded-safe`, `infeasible`.
#[pyfunction]
#[pyo3(signature = (kind, n, m = 1, seed = 0))]
fn random_instance(kind: &str, n: usize, m: usize, seed: u64) -> PyResult<Instance> {
    let kind: RandomKind = kind.parse().map_err(|e: QpError| PyValueError::new_err(e.to_string()))?;
    qprelax::random_instance(kind, n, m, seed).map(wrap).map_err(to_py_err)
}

/// Solves the lifted relaxation and returns `l_K` with status and residuals.
#[pyfunction]
#[pyo3(signature = (inst, cone = "dnn", tol = None, max_iterations = None))]
fn solve<'py>(
    py: Python<'py>,
    inst: &Instance,
    cone: &str,
    tol: Option<f64>,
    max_iterations: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = solve_options(tol, max_iterations);
    let kind = self::cone(cone)?;
    let r = py.detach(|| qprelax::solve_relaxation(&inst.inner, kind, &opts)).map_err(to_py_err)?;
    to_dict(py, &r, Some(r.value))
}

/// Evaluates the underestimator `l_K(x)` at a feasible point.
#[pyfunction]
#[pyo3(signature = (inst, x, cone = "dnn", tol = None, max_iterations = None))]
fn evaluate<'py>(
    py: Python<'py>,
    inst: &Instance,
    x: Vec<f64>,
    cone: &str,
    tol: Option<f64>,
    max_iterations: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = solve_options(tol, max_iterations);
    let kind = self::cone(cone)?;
    let x = DVector::from_vec(x);
    let r = py.detach(|| qprelax::evaluate_underestimator(&inst.inner, kind, &x, &opts)).map_err(to_py_err)?;
    to_dict(py, &r, Some(r.value))
}

/// Exact global optimum by face enumeration.
#[pyfunction]
fn oracle<'py>(py: Python<'py>, inst: &Instance) -> PyResult<Bound<'py, PyAny>> {
    let opts = OracleOptions::from_env();
    let r = py.detach(|| qprelax::global_solve(&inst.inner, &opts)).map_err(to_py_err)?;
    to_dict(py, &r, Some(r.value))
}

/// Local minimizers among the vertices of the feasible set.
#[pyfunction]
#[pyo3(signature = (inst, tol = 1e-7))]
fn local_minimizers(inst: &Instance, tol: f64) -> PyResult<Vec<Vec<f64>>> {
    let opts = OracleOptions::from_env();
    let verts = qprelax::oracle::local_minimizing_vertices(&inst.inner, tol, &opts).map_err(to_py_err)?;
    Ok(verts.into_iter().map(|v| v.iter().copied().collect()).collect())
}

#[pyfunction]
#[pyo3(signature = (inst, tol = 1e-9))]
fn check_psd_on_nullspace<'py>(py: Python<'py>, inst: &Instance, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let r = qprelax::check_psd_on_nullspace(&inst.inner, tol).map_err(to_py_err)?;
    to_dict(py, &r, None)
}

#[pyfunction]
fn analyze_recession_cone<'py>(py: Python<'py>, inst: &Instance) -> PyResult<Bound<'py, PyAny>> {
    let r = qprelax::analyze_recession_cone(&inst.inner, &OracleOptions::from_env()).map_err(to_py_err)?;
    to_dict(py, &r, None)
}

#[pyfunction]
fn detect_unbounded<'py>(py: Python<'py>, inst: &Instance) -> PyResult<Bound<'py, PyAny>> {
    let r = qprelax::detect_unbounded(&inst.inner, &OracleOptions::from_env()).map_err(to_py_err)?;
    to_dict(py, &r, None)
}

/// Runs every analysis, both relaxations and the oracle.
#[pyfunction]
#[pyo3(signature = (inst, tol = None))]
fn compare<'py>(py: Python<'py>, inst: &Instance, tol: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let opts = solve_options(tol, None);
    let r = py.detach(|| qprelax::compare_report(&inst.inner, &opts)).map_err(to_py_err)?;
    let out = to_dict(py, &r, None)?;
    let rows = out.get_item("relaxations")?;
    for (i, s) in r.relaxations.iter().enumerate() {
        rows.get_item(i)?.set_item("value", s.value)?;
    }
    Ok(out)
}

#[pymodule]
fn pyqprelax(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_function(wrap_pyfunction!(horn, m)?)?;
    m.add_function(wrap_pyfunction!(horn_family, m)?)?;
    m.add_function(wrap_pyfunction!(random_instance, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(local_minimizers, m)?)?;
    m.add_function(wrap_pyfunction!(check_psd_on_nullspace, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_recession_cone, m)?)?;
    m.add_function(wrap_pyfunction!(detect_unbounded, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
