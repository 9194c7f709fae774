//! Python bindings. Results that are plain records come back as dicts;
//! metrics and time orientations are classes.

use std::path::PathBuf;

use finslervol::action::{evaluate_action, ActionSpec, Weighting};
use finslervol::catalog;
use finslervol::finsler::{self, MetricMatrix};
use finslervol::orientation::{self, SolverOptions};
use finslervol::quadrature::QuadOptions;
use finslervol::validate::{self as checks, ValidateOptions};
use finslervol::volume::{self, BoxDomain, Form, VolumeOptions};
use finslervol::MetricSpec;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;

create_exception!(finslervol, FinslerError, PyException, "Raised by failed computations; args are (code, message).");

fn to_py(e: finslervol::Error) -> PyErr {
    FinslerError::new_err((e.code(), e.to_string()))
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_bound_py_any(py)?,
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_bound_py_any(py)?,
            None => n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py)?,
        },
        Value::String(s) => s.into_bound_py_any(py)?,
        Value::Array(items) => {
            let items = items.iter().map(|i| json_to_py(py, i)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(map) => {
            let d = PyDict::new(py);
            for (k, i) in map {
                d.set_item(k, json_to_py(py, i)?)?;
            }
            d.into_any()
        }
    })
}

fn record<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(v).map_err(|e| PyException::new_err(e.to_string()))?;
    json_to_py(py, &value)
}

fn matrix_dict<'py>(py: Python<'py>, g: &MetricMatrix) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("g", g.rows())?;
    d.set_item("det", g.det)?;
    d.set_item("signature", (g.signature.positives, g.signature.negatives, g.signature.zeros))?;
    d.set_item("eigenvalues", g.eigenvalues.clone())?;
    Ok(d)
}

/// A Finsler structure given by its Lagrangian `L(x, y)`.
#[pyclass(frozen, skip_from_py_object, name = "Metric", module = "finslervol")]
#[derive(Clone)]
struct Metric {
    spec: MetricSpec,
}

#[pymethods]
impl Metric {
    #[new]
    #[pyo3(signature = (lagrangian, dim, name = "custom", admissible = None))]
    fn new(lagrangian: &str, dim: usize, name: &str, admissible: Option<&str>) -> PyResult<Self> {
        Ok(Metric { spec: MetricSpec::new(name, dim, lagrangian, admissible).map_err(to_py)? })
    }

    /// Built-in catalog entry by name.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        Ok(Metric { spec: catalog::builtin(name).map_err(to_py)?.spec })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Metric { spec: MetricSpec::load(path).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Metric { spec: MetricSpec::from_toml_str(text).map_err(to_py)? })
    }

    fn to_toml(&self) -> String {
        self.spec.to_toml_string()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.spec.save(path).map_err(to_py)
    }

    #[getter]
    fn name(&self) -> String {
        self.spec.name.clone()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.spec.dim
    }

    #[getter]
    fn lagrangian(&self) -> String {
        self.spec.lagrangian.to_string()
    }

    /// `L(x, y)`.
    fn __call__(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.spec.lagrangian_at(&x, &y).map_err(to_py)
    }

    fn metric_at<'py>(&self, py: Python<'py>, x: Vec<f64>, y: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        matrix_dict(py, &finsler::metric_at(&self.spec, &x, &y).map_err(to_py)?)
    }

    /// `F = √|L|`.
    fn norm(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        finsler::norm_f(&self.spec, &x, &y).map_err(to_py)
    }

    fn classify(&self, x: Vec<f64>, y: Vec<f64>) -> String {
        format!("{:?}", finsler::classify(&self.spec, &x, &y))
    }

    fn cartan(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        finsler::cartan_form(&self.spec, &x, &y).map_err(to_py)
    }

    /// The same structure in the basis `y = S·ỹ`.
    fn change_basis(&self, s: Vec<Vec<f64>>) -> PyResult<Self> {
        if s.len() != self.spec.dim || s.iter().any(|r| r.len() != self.spec.dim) {
            return Err(to_py(finslervol::Error::InvalidArgument(format!("S must be {0}x{0}", self.spec.dim))));
        }
        Ok(Metric { spec: self.spec.change_basis(&s) })
    }

    fn __repr__(&self) -> String {
        format!("Metric(name={:?}, dim={}, lagrangian={:?})", self.spec.name, self.spec.dim, self.lagrangian())
    }
}

/// A certified critical direction of `|det g(x, ·)|`.
#[pyclass(frozen, name = "TimeOrientation", module = "finslervol")]
struct TimeOrientation {
    inner: orientation::TimeOrientation,
}

#[pymethods]
impl TimeOrientation {
    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.x.clone()
    }

    #[getter]
    fn direction(&self) -> Vec<f64> {
        self.inner.direction.clone()
    }

    #[getter]
    fn critical_value(&self) -> f64 {
        self.inner.critical_value
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn status(&self) -> String {
        format!("{:?}", self.inner.status)
    }

    #[getter]
    fn kind(&self) -> String {
        format!("{:?}", self.inner.kind)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        record(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "TimeOrientation(direction={:?}, critical_value={}, status={:?})",
            self.inner.direction, self.inner.critical_value, self.inner.status
        )
    }
}

fn solver(seeds: usize, max_iters: usize, rng_seed: u64) -> SolverOptions {
    SolverOptions { seeds, max_iters, rng_seed, ..Default::default() }
}

fn volume_options(rng_seed: u64, samples: usize, quad: Option<(usize, usize)>) -> VolumeOptions {
    VolumeOptions {
        solver: solver(SolverOptions::default().seeds, SolverOptions::default().max_iters, rng_seed),
        quad: quad.map(|(radial, angular)| QuadOptions { radial, angular }),
        samples,
        rng_seed,
        ..Default::default()
    }
}

fn parse_form(form: &str) -> PyResult<Form> {
    form.parse().map_err(to_py)
}

fn domain(lo: Vec<f64>, hi: Vec<f64>) -> PyResult<BoxDomain> {
    BoxDomain::new(lo, hi).map_err(to_py)
}

/// Names of the built-in metrics.
#[pyfunction]
fn catalog_names() -> Vec<&'static str> {
    catalog::NAMES.to_vec()
}

/// Catalog entry with its reference values.
#[pyfunction]
fn catalog_entry<'py>(py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyAny>> {
    record(py, &catalog::builtin(name).map_err(to_py)?)
}

#[pyfunction]
#[pyo3(signature = (metric, x, seeds = 16, max_iters = 300, rng_seed = 0))]
fn find_privileged(
    py: Python<'_>,
    metric: &Metric,
    x: Vec<f64>,
    seeds: usize,
    max_iters: usize,
    rng_seed: u64,
) -> PyResult<TimeOrientation> {
    let opts = solver(seeds, max_iters, rng_seed);
    let inner = py.detach(|| orientation::find_privileged(&metric.spec, &x, &opts)).map_err(to_py)?;
    Ok(TimeOrientation { inner })
}

/// Certifies a given direction as critical.
#[pyfunction]
fn orientation_at(py: Python<'_>, metric: &Metric, x: Vec<f64>, t: Vec<f64>) -> PyResult<TimeOrientation> {
    let opts = SolverOptions::default();
    let inner = py.detach(|| orientation::orientation_at(&metric.spec, &x, &t, &opts)).map_err(to_py)?;
    Ok(TimeOrientation { inner })
}

/// `g^t`, `g^{t,+}` and the unit direction `t/F(t)`.
#[pyfunction]
fn osculating<'py>(py: Python<'py>, metric: &Metric, x: Vec<f64>, t: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let pair = orientation::osculating(&metric.spec, &x, &t).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("g_t", matrix_dict(py, &pair.g_t)?)?;
    d.set_item("g_t_plus", matrix_dict(py, &pair.g_t_plus)?)?;
    d.set_item("t_prime", pair.t_prime)?;
    Ok(d)
}

/// Volume density at `x`. `form` is one of "bh", "ht", "classical-bh",
/// "classical-ht".
#[pyfunction]
#[pyo3(signature = (metric, x, form = "bh", orientation = None, rng_seed = 0, samples = 100_000, quad = None))]
#[allow(clippy::too_many_arguments)]
fn density<'py>(
    py: Python<'py>,
    metric: &Metric,
    x: Vec<f64>,
    form: &str,
    orientation: Option<PyRef<'py, TimeOrientation>>,
    rng_seed: u64,
    samples: usize,
    quad: Option<(usize, usize)>,
) -> PyResult<Bound<'py, PyAny>> {
    let form = parse_form(form)?;
    let opts = volume_options(rng_seed, samples, quad);
    let t0 = orientation.as_ref().map(|t| t.inner.clone());
    let d = py.detach(|| volume::density(&metric.spec, &x, form, t0.as_ref(), &opts)).map_err(to_py)?;
    record(py, &d)
}

/// Integral of the density over the box `Π [lo_i, hi_i]` on a midpoint grid.
#[pyfunction]
#[pyo3(signature = (metric, lo, hi, res, form = "bh", rng_seed = 0, samples = 100_000, quad = None))]
#[allow(clippy::too_many_arguments)]
fn integrate_volume<'py>(
    py: Python<'py>,
    metric: &Metric,
    lo: Vec<f64>,
    hi: Vec<f64>,
    res: Vec<usize>,
    form: &str,
    rng_seed: u64,
    samples: usize,
    quad: Option<(usize, usize)>,
) -> PyResult<Bound<'py, PyAny>> {
    let form = parse_form(form)?;
    let dom = domain(lo, hi)?;
    let opts = volume_options(rng_seed, samples, quad);
    let v = py.detach(|| volume::integrate_volume(&metric.spec, &dom, form, &res, &opts)).map_err(to_py)?;
    record(py, &v)
}

/// Action `∫_D (1/Vol 𝔹) ∫_E 𝔏·w dⁿy dⁿx`. `fields` maps names to
/// expressions that may use `L` and earlier fields.
#[pyfunction]
#[pyo3(signature = (metric, density, lo, hi, res, fields = Vec::new(), weighting = "detg", quad = None))]
#[allow(clippy::too_many_arguments)]
fn action<'py>(
    py: Python<'py>,
    metric: &Metric,
    density: &str,
    lo: Vec<f64>,
    hi: Vec<f64>,
    res: Vec<usize>,
    fields: Vec<(String, String)>,
    weighting: &str,
    quad: Option<(usize, usize)>,
) -> PyResult<Bound<'py, PyAny>> {
    let weighting: Weighting = weighting.parse().map_err(to_py)?;
    let spec = ActionSpec::new(metric.spec.clone(), density, &fields, domain(lo, hi)?, weighting).map_err(to_py)?;
    let opts = volume_options(0, 0, quad);
    let v = py.detach(|| evaluate_action(&spec, &res, &opts)).map_err(to_py)?;
    record(py, &v)
}

/// Runs the invariant checks; the dict has `passed`, `checks` and `table`.
#[pyfunction]
#[pyo3(signature = (metric, points = 2, directions = 20, rng_seed = 0))]
fn validate<'py>(
    py: Python<'py>,
    metric: &Metric,
    points: usize,
    directions: usize,
    rng_seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let entry = catalog::builtin(&metric.spec.name).ok().filter(|e| e.spec == metric.spec);
    let opts = ValidateOptions { points, directions, rng_seed, ..Default::default() };
    let report = py.detach(|| checks::validate(&metric.spec, entry.as_ref(), &opts));
    let out = record(py, &report)?;
    out.set_item("passed", report.all_passed())?;
    out.set_item("table", report.to_string())?;
    Ok(out)
}

#[pymodule]
#[pyo3(name = "finslervol")]
fn finslervol_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", finslervol::VERSION)?;
    m.add("FinslerError", m.py().get_type::<FinslerError>())?;
    m.add_class::<Metric>()?;
    m.add_class::<TimeOrientation>()?;
    m.add_function(wrap_pyfunction!(catalog_names, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_entry, m)?)?;
    m.add_function(wrap_pyfunction!(find_privileged, m)?)?;
    m.add_function(wrap_pyfunction!(orientation_at, m)?)?;
    m.add_function(wrap_pyfunction!(osculating, m)?)?;
    m.add_function(wrap_pyfunction!(density, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_volume, m)?)?;
    m.add_function(wrap_pyfunction!(action, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
