//! Python bindings: graphs, spectra, noise models and the analyses built
//! on them. Reports come back as plain dicts.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qgraph::control::solve_null_control;
use qgraph::feller::decide_feller;
use qgraph::spectral::{assemble, eigensolve, interval_analytic, star_analytic, EigenSystem};
use qgraph::stochastic::{invariant_measure_check, regularity_profile, simulate, verify_covariance, SimConfig};
use qgraph::tree::{path_union_by_id, st_active_set};
use qgraph::{Error, MetricGraph, NoiseModel};

create_exception!(pyqgraph, NumericalError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    let msg = format!("{}: {e}", e.kind());
    if e.exit_code() == 3 {
        NumericalError::new_err(msg)
    } else {
        PyValueError::new_err(msg)
    }
}

fn to_dict<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (value.to_string(),))
}

#[pyclass(name = "Graph", frozen)]
struct PyGraph(MetricGraph);

#[pymethods]
impl PyGraph {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        MetricGraph::from_json_str(text).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        qgraph::io::read_graph(&path).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn star(arms: usize, length: f64) -> Self {
        Self(MetricGraph::star(arms, length))
    }

    #[staticmethod]
    fn star_with_lengths(lengths: Vec<f64>) -> Self {
        Self(MetricGraph::star_with_lengths(&lengths))
    }

    #[staticmethod]
    fn interval(length: f64) -> Self {
        Self(MetricGraph::interval(length))
    }

    #[getter]
    fn vertices(&self) -> Vec<String> {
        self.0.vertices().to_vec()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.0.edge_count()
    }

    /// Violations; empty when the graph is usable.
    fn validate(&self) -> Vec<String> {
        self.0.validate().violations
    }

    /// `"Tree"`, `"HasLoop"` or `"GeneralWithCycle"`.
    fn classify(&self) -> PyResult<String> {
        self.0.classify().map(|c| format!("{c:?}")).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.0.to_json_value().to_string()
    }

    #[pyo3(signature = (mesh = 256, modes = 50))]
    fn spectrum(&self, py: Python<'_>, mesh: usize, modes: usize) -> PyResult<PySpectrum> {
        let g = &self.0;
        py.detach(|| assemble(g, mesh).and_then(|op| eigensolve(&op, modes)))
            .map(PySpectrum)
            .map_err(to_py)
    }

    /// Path union and active set of a tree.
    #[pyo3(signature = (omit = None))]
    fn st_active<'py>(&self, py: Python<'py>, omit: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        let pu = path_union_by_id(&self.0, omit).map_err(to_py)?;
        let st = st_active_set(&pu, &self.0).map_err(to_py)?;
        let name = |v: &usize| self.0.vertex_id(*v).to_string();
        let v = serde_json::json!({
            "path_union": pu.to_json(&self.0),
            "i_star": st.i_star.iter().map(name).collect::<Vec<_>>(),
            "j_star": st.j_star.iter().map(|&e| self.0.edge(e).id.clone()).collect::<Vec<_>>(),
        });
        to_dict(py, &v)
    }

    fn __repr__(&self) -> String {
        format!("Graph(vertices={}, edges={})", self.0.vertex_count(), self.0.edge_count())
    }
}

#[pyclass(name = "Spectrum", frozen)]
struct PySpectrum(EigenSystem);

#[pymethods]
impl PySpectrum {
    /// Closed-form spectrum of `[0, length]`.
    #[staticmethod]
    fn interval(length: f64, modes: usize) -> Self {
        Self(interval_analytic(length, modes))
    }

    /// Closed-form spectrum of the equilateral star, `clusters` clusters.
    #[staticmethod]
    fn star(arms: usize, length: f64, clusters: usize) -> Self {
        Self(star_analytic(arms, length, clusters))
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values()
    }

    /// Vertex traces, one list per mode.
    #[getter]
    fn traces(&self) -> Vec<Vec<f64>> {
        self.0.modes.iter().map(|m| m.traces.clone()).collect()
    }

    #[getter]
    fn trusted(&self) -> Vec<bool> {
        self.0.modes.iter().map(|m| m.trusted).collect()
    }

    /// Mode indices of each cluster.
    #[getter]
    fn clusters(&self) -> Vec<Vec<usize>> {
        self.0.clusters.iter().map(|c| c.members.clone()).collect()
    }

    fn truncate(&self, k: usize) -> Self {
        Self(self.0.truncate(k))
    }

    /// Mode `k` on edge `e` at distance `x` from its tail.
    fn value_at(&self, k: usize, e: usize, x: f64) -> f64 {
        self.0.value_at(k, e, x)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "Noise", frozen)]
struct PyNoise(NoiseModel);

#[pymethods]
impl PyNoise {
    #[staticmethod]
    fn diagonal(q: Vec<f64>) -> PyResult<Self> {
        NoiseModel::diagonal(&q).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn full(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("matrix must be square"));
        }
        let q = nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        NoiseModel::new(q).map(Self).map_err(to_py)
    }

    /// Same syntax as the command line: `diag:v1=1,v2=1`, inline JSON or a path.
    #[staticmethod]
    fn parse(spec: &str, graph: &PyGraph) -> PyResult<Self> {
        qgraph::io::parse_noise(spec, &graph.0).map(Self).map_err(to_py)
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<f64>> {
        self.0.q.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

#[pyfunction]
fn feller<'py>(py: Python<'py>, graph: &PyGraph, spectrum: &PySpectrum, noise: &PyNoise) -> PyResult<Bound<'py, PyAny>> {
    let v = decide_feller(&graph.0, &spectrum.0, &noise.0).map_err(to_py)?;
    to_dict(py, &v.to_json())
}

#[pyfunction]
#[pyo3(signature = (spectrum, noise, z0, t, k, time_grid = 200))]
fn null_control<'py>(
    py: Python<'py>,
    spectrum: &PySpectrum,
    noise: &PyNoise,
    z0: Vec<f64>,
    t: f64,
    k: usize,
    time_grid: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let r = solve_null_control(&spectrum.0, &noise.0, &z0, t, k, time_grid).map_err(to_py)?;
    to_dict(py, &serde_json::to_value(&r).map_err(|e| to_py(e.into()))?)
}

#[pyfunction]
fn invariant_measure<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    spectrum: &PySpectrum,
    noise: &PyNoise,
    t: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = invariant_measure_check(&graph.0, &spectrum.0, &noise.0, t).map_err(to_py)?;
    to_dict(py, &serde_json::to_value(&r).map_err(|e| to_py(e.into()))?)
}

#[pyfunction]
fn regularity<'py>(
    py: Python<'py>,
    spectrum: &PySpectrum,
    noise: &PyNoise,
    t: f64,
    alphas: Vec<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let r = regularity_profile(&spectrum.0, &noise.0, t, &alphas).map_err(to_py)?;
    to_dict(py, &serde_json::to_value(&r).map_err(|e| to_py(e.into()))?)
}

/// Monte-Carlo ensemble. Returns `times`, `coeffs[sample][time][mode]`
/// and the covariance check.
#[pyfunction]
#[pyo3(signature = (spectrum, noise, z0 = vec![], t = 1.0, steps = 200, samples = 1000, seed = 42, modes = None, record_every = 1, threads = None))]
#[allow(clippy::too_many_arguments)]
fn simulate_ensemble<'py>(
    py: Python<'py>,
    spectrum: &PySpectrum,
    noise: &PyNoise,
    z0: Vec<f64>,
    t: f64,
    steps: usize,
    samples: usize,
    seed: u64,
    modes: Option<usize>,
    record_every: usize,
    threads: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = SimConfig { t, steps, samples, seed, modes: modes.unwrap_or(spectrum.0.len()), record_every, threads };
    let (eig, q) = (&spectrum.0, &noise.0);
    let (ens, cov) = py
        .detach(|| {
            let ens = simulate(eig, q, &z0, &cfg)?;
            let cov = verify_covariance(&ens, eig, q)?;
            Ok::<_, Error>((ens, cov))
        })
        .map_err(to_py)?;
    let coeffs: Vec<Vec<Vec<f64>>> = (0..ens.samples)
        .map(|s| (0..ens.times.len()).map(|i| (0..ens.modes).map(|k| ens.get(s, i, k)).collect()).collect())
        .collect();
    let out = PyDict::new(py);
    out.set_item("times", ens.times.clone())?;
    out.set_item("coeffs", coeffs)?;
    out.set_item("covariance", to_dict(py, &serde_json::to_value(&cov).map_err(|e| to_py(e.into()))?)?)?;
    Ok(out)
}

#[pymodule]
fn pyqgraph(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyNoise>()?;
    m.add_function(wrap_pyfunction!(feller, m)?)?;
    m.add_function(wrap_pyfunction!(null_control, m)?)?;
    m.add_function(wrap_pyfunction!(invariant_measure, m)?)?;
    m.add_function(wrap_pyfunction!(regularity, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_ensemble, m)?)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
