//! Python bindings: symbols, grid fields, surface meshes and the main scans.
//! Structured reports are returned as plain dicts and lists.

use std::path::PathBuf;

use lap3d_core::error::Lap3dError;
use lap3d_core::geometry::{check_assumptions, AxisBox, GeometryConfig, Interval};
use lap3d_core::grid::GridField;
use lap3d_core::harness::{self, PipelineConfig, Stage};
use lap3d_core::lorentz::{lebesgue_norm, lorentz_norm, Exponent, LorentzIndex};
use lap3d_core::quadrature::{decay_scan, surface_fourier, SurfaceMesh};
use lap3d_core::resolvent::{limiting_absorption, ScheduleConfig};
use lap3d_core::restriction::{classify_exponents, pentagon_vertices, ExponentPair};
use lap3d_core::symbols::{MultiIndex, Symbol};
use nalgebra::Vector3;
use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict, PyList};

fn err(e: Lap3dError) -> PyErr {
    match e {
        Lap3dError::Io(e) => PyIOError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any().unbind(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(a) => {
            let list = PyList::empty(py);
            for x in a {
                list.append(json_to_py(py, x)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(o) => {
            let dict = PyDict::new(py);
            for (k, x) in o {
                dict.set_item(k, json_to_py(py, x)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| err(e.into()))?;
    json_to_py(py, &v)
}

fn vec3(x: [f64; 3]) -> Vector3<f64> {
    Vector3::new(x[0], x[1], x[2])
}

/// A symbol `p(ξ)`: a real polynomial or a trigonometric sum.
#[pyclass(name = "Symbol", frozen)]
struct PySymbol(Symbol);

#[pymethods]
impl PySymbol {
    /// Parse the literal text format.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Symbol::parse(text).map(Self).map_err(err)
    }

    #[staticmethod]
    fn helmholtz() -> Self {
        Self(Symbol::helmholtz())
    }

    #[staticmethod]
    fn laplacian_shifted(shift: f64) -> Self {
        Self(Symbol::laplacian_shifted(shift))
    }

    #[staticmethod]
    fn torus_quartic(big_r: f64, r: f64) -> Self {
        Self(Symbol::torus_quartic(big_r, r))
    }

    #[staticmethod]
    fn quartic_radial() -> Self {
        Self(Symbol::quartic_radial())
    }

    #[staticmethod]
    fn cos_sum(c: [f64; 3]) -> Self {
        Self(Symbol::cos_sum(c))
    }

    fn value(&self, xi: [f64; 3]) -> f64 {
        self.0.value(&vec3(xi))
    }

    fn gradient(&self, xi: [f64; 3]) -> [f64; 3] {
        let g = self.0.eval_jet(&vec3(xi), 1).gradient;
        [g.x, g.y, g.z]
    }

    /// `∂^β p(ξ)` for a multi-index `β`.
    fn derivative(&self, beta: [u32; 3], xi: [f64; 3]) -> f64 {
        self.0.derivative(MultiIndex(beta), &vec3(xi))
    }

    #[getter]
    fn degree(&self) -> u32 {
        self.0.degree()
    }

    fn digest(&self) -> String {
        self.0.digest()
    }

    fn principal_part(&self) -> PyResult<Self> {
        self.0.principal_part().map(Self).map_err(err)
    }

    #[pyo3(signature = (samples = 2000))]
    fn check_ellipticity(&self, py: Python<'_>, samples: usize) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.check_ellipticity(samples).map_err(err)?)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Symbol({:?})", self.0.to_string())
    }
}

/// Complex field on a uniform periodic grid.
#[pyclass(name = "Field", frozen)]
struct PyField(GridField);

#[pymethods]
impl PyField {
    /// Zero field on `[-L/2, L/2)^3` with `n` points per axis.
    #[staticmethod]
    fn centered_cube(n: usize, length: f64) -> PyResult<Self> {
        GridField::centered_cube(n, length).map(Self).map_err(err)
    }

    /// Field from interleaved little-endian complex64 bytes.
    #[staticmethod]
    fn from_bytes(data: &[u8], dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> PyResult<Self> {
        GridField::from_complex64_bytes(dims, spacing, origin, data).map(Self).map_err(err)
    }

    /// Centered Gaussian `exp(-|x|²/(2σ²))` on the same grid.
    fn gaussian(&self, sigma: f64) -> Self {
        let c = self.0.center();
        let values = (0..self.0.len())
            .map(|i| Complex64::new((-(self.0.point(i) - c).norm_squared() / (2.0 * sigma * sigma)).exp(), 0.0))
            .collect();
        Self(self.0.with_values(values))
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_complex64_bytes())
    }

    #[getter]
    fn dims(&self) -> [usize; 3] {
        self.0.dims
    }

    #[getter]
    fn spacing(&self) -> [f64; 3] {
        self.0.spacing
    }

    #[getter]
    fn origin(&self) -> [f64; 3] {
        self.0.origin
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    /// `‖f‖_{L^p}`; pass `float('inf')` for the sup norm.
    fn lebesgue_norm(&self, p: f64) -> PyResult<f64> {
        Ok(lebesgue_norm(&self.0, Exponent::new(p).map_err(err)?))
    }

    /// `‖f‖_{L^{p,q}}` with `q` equal to 1 or infinity.
    fn lorentz_norm(&self, p: f64, q: f64) -> PyResult<f64> {
        let index = if q == 1.0 {
            LorentzIndex::One
        } else if q.is_infinite() {
            LorentzIndex::Infinity
        } else {
            return Err(PyValueError::new_err("second Lorentz index must be 1 or inf"));
        };
        lorentz_norm(&self.0, Exponent::new(p).map_err(err)?, index).map_err(err)
    }
}

/// Triangulated piece of a level set with quadrature weights.
#[pyclass(name = "SurfaceMesh", frozen)]
struct PySurfaceMesh(SurfaceMesh);

#[pymethods]
impl PySurfaceMesh {
    #[new]
    fn new(symbol: &PySymbol, level: f64, lo: [f64; 3], hi: [f64; 3], h: f64) -> PyResult<Self> {
        SurfaceMesh::from_level_set(&symbol.0, level, &AxisBox::new(lo, hi), h, |_| 1.0)
            .map(Self)
            .map_err(err)
    }

    fn area(&self) -> f64 {
        self.0.area()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.0.vertices.len()
    }

    #[getter]
    fn triangle_count(&self) -> usize {
        self.0.triangles.len()
    }

    /// Fourier transform of the weighted surface measure at `x`.
    fn fourier(&self, x: [f64; 3]) -> Complex64 {
        surface_fourier(&self.0, &vec3(x))
    }

    /// Power-law fit of the decay along `directions` sampled rays.
    fn decay_scan(&self, py: Python<'_>, directions: usize, rmin: f64, rmax: f64) -> PyResult<Py<PyAny>> {
        to_py(py, &decay_scan(&self.0, directions, rmin, rmax).map_err(err)?)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| err(e.into()))
    }
}

/// Sampled check of the geometric assumptions on a box and level interval.
#[pyfunction]
#[pyo3(signature = (symbol, lo, hi, interval, resolution = 32))]
fn check_geometry(
    py: Python<'_>,
    symbol: &PySymbol,
    lo: [f64; 3],
    hi: [f64; 3],
    interval: (f64, f64),
    resolution: usize,
) -> PyResult<Py<PyAny>> {
    let r = check_assumptions(
        &symbol.0,
        &AxisBox::new(lo, hi),
        Interval::new(interval.0, interval.1),
        resolution,
        &GeometryConfig::default(),
    )
    .map_err(err)?;
    to_py(py, &r)
}

/// Region of `(1/p, 1/q)` given as rational strings such as `"3/4"`.
#[pyfunction]
fn classify(py: Python<'_>, inv_p: &str, inv_q: &str) -> PyResult<Py<PyAny>> {
    let e: ExponentPair = format!("{inv_p} {inv_q}").parse().map_err(err)?;
    to_py(py, &classify_exponents(e))
}

/// Named pentagon vertices as `(name, 1/p, 1/q)` strings.
#[pyfunction]
fn pentagon() -> Vec<(String, String, String)> {
    pentagon_vertices()
        .iter()
        .map(|(n, e)| (n.to_string(), e.inv_p.to_string(), e.inv_q.to_string()))
        .collect()
}

/// Limiting-absorption iteration; returns the run report and the last iterate.
#[pyfunction]
#[pyo3(signature = (symbol, rhs, delta0 = 0.125, steps = 6, sign = -1))]
fn solve(py: Python<'_>, symbol: &PySymbol, rhs: &PyField, delta0: f64, steps: usize, sign: i8) -> PyResult<(Py<PyAny>, PyField)> {
    let config = ScheduleConfig { delta0, steps, sign, ..ScheduleConfig::default() };
    let (run, u) = py.detach(|| limiting_absorption(&symbol.0, &rhs.0, &config)).map_err(err)?;
    Ok((to_py(py, &run)?, PyField(u)))
}

#[pyfunction]
fn scenario_names() -> Vec<&'static str> {
    harness::SCENARIO_NAMES.to_vec()
}

/// Built-in scenario as a dict.
#[pyfunction]
fn scenario(py: Python<'_>, name: &str) -> PyResult<Py<PyAny>> {
    to_py(py, &harness::scenario(name).map_err(err)?)
}

/// Run pipeline stages into `out_dir` and return the manifest.
#[pyfunction]
#[pyo3(signature = (out_dir, scenario = "sphere", config = None, stages = None))]
fn run_pipeline(
    py: Python<'_>,
    out_dir: PathBuf,
    scenario: &str,
    config: Option<PathBuf>,
    stages: Option<Vec<String>>,
) -> PyResult<Py<PyAny>> {
    let mut cfg = match config {
        Some(p) => PipelineConfig::load(&p).map_err(err)?,
        None => PipelineConfig::from_scenario(harness::scenario(scenario).map_err(err)?),
    };
    if let Some(st) = stages {
        cfg.stages = st.iter().map(|s| s.parse::<Stage>()).collect::<Result<_, _>>().map_err(err)?;
    }
    let m = py.detach(|| harness::run_pipeline(&cfg, &out_dir, "python")).map_err(err)?;
    to_py(py, &m)
}

#[pymodule]
fn lap3d(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySymbol>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PySurfaceMesh>()?;
    m.add_function(wrap_pyfunction!(check_geometry, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(pentagon, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_names, m)?)?;
    m.add_function(wrap_pyfunction!(scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
