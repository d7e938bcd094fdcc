//! Python bindings: the interactive and offline ℓ1 mechanisms, calibration,
//! the two embeddings and the exact oracle.

use metricdp::embedding::{BourgainMap, EmbeddingError, ProjectionMap};
use metricdp::engine::{seeded_rng, EngineError};
use metricdp::metric::{avg_distance_raw, DistanceMatrix};
use metricdp::{
    release_offline as release_offline_rs, Database, InteractiveMechanism, MetricSpec, NoiseKind,
    NoisePlan, OfflineRelease, Point, PrivacyParams, QuerySet, ReleaseError, ReleaseSettings,
};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(pymetricdp, MetricDpError, PyValueError);
create_exception!(pymetricdp, InfeasibleError, MetricDpError);

fn engine_error(e: &EngineError) -> PyErr {
    match e {
        EngineError::Infeasible { minimal_alpha, .. } => {
            InfeasibleError::new_err((e.to_string(), *minimal_alpha))
        }
        _ => MetricDpError::new_err(e.to_string()),
    }
}

fn release_error(e: ReleaseError) -> PyErr {
    match &e {
        ReleaseError::Engine(inner) => engine_error(inner),
        _ => MetricDpError::new_err(e.to_string()),
    }
}

fn embedding_error(e: EmbeddingError) -> PyErr {
    match e {
        EmbeddingError::Release(r) => release_error(r),
        other => MetricDpError::new_err(other.to_string()),
    }
}

fn err(e: impl std::fmt::Display) -> PyErr {
    MetricDpError::new_err(e.to_string())
}

fn to_python(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn settings(
    epsilon: f64,
    k_max: usize,
    delta: f64,
    beta: f64,
    noise: &str,
    alpha: Option<f64>,
    seed: u64,
) -> PyResult<ReleaseSettings> {
    let params = PrivacyParams::new(epsilon, delta, beta, k_max).map_err(|e| engine_error(&e))?;
    let noise: NoiseKind = noise.parse().map_err(|e: EngineError| engine_error(&e))?;
    let mut s = ReleaseSettings::new(params, noise, seed);
    s.alpha = alpha;
    Ok(s)
}

fn database(points: Vec<Vec<f64>>) -> PyResult<Database> {
    Database::from_coords(points).map_err(err)
}

/// Interactive ℓ1 mechanism over points in the unit cube.
#[pyclass(name = "Mechanism", module = "pymetricdp")]
struct PyMechanism {
    inner: InteractiveMechanism,
}

#[pymethods]
impl PyMechanism {
    #[new]
    #[pyo3(signature = (points, epsilon, k_max, *, delta=0.0, beta=0.1, noise="laplace", alpha=None, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        points: Vec<Vec<f64>>,
        epsilon: f64,
        k_max: usize,
        delta: f64,
        beta: f64,
        noise: &str,
        alpha: Option<f64>,
        seed: u64,
    ) -> PyResult<Self> {
        let s = settings(epsilon, k_max, delta, beta, noise, alpha, seed)?;
        let inner = InteractiveMechanism::new(database(points)?, &s).map_err(release_error)?;
        Ok(Self { inner })
    }

    /// Released answer to the query `y`.
    fn answer(&mut self, y: Vec<f64>) -> PyResult<f64> {
        Ok(self.inner.answer_coords(&y).map_err(release_error)?.value)
    }

    /// Released answer with its mistake, refusal and budget flags.
    fn answer_detailed(&mut self, py: Python<'_>, y: Vec<f64>) -> PyResult<Py<PyAny>> {
        let a = self.inner.answer_coords(&y).map_err(release_error)?;
        to_python(py, &serde_json::to_value(a).map_err(err)?)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn epsilon_spent(&self) -> f64 {
        self.inner.ledger().epsilon_spent()
    }

    #[getter]
    fn mistakes(&self) -> usize {
        self.inner.ledger().mistakes_used()
    }

    #[getter]
    fn mistake_budget(&self) -> usize {
        self.inner.plan().mistake_budget
    }

    /// The round-by-round transcript as JSON lines.
    fn transcript(&self) -> String {
        self.inner.transcript_jsonl()
    }
}

/// A published offline synopsis.
#[pyclass(name = "Synopsis", module = "pymetricdp")]
struct PySynopsis {
    inner: OfflineRelease,
}

#[pymethods]
impl PySynopsis {
    fn answer(&self, y: Vec<f64>) -> PyResult<f64> {
        self.inner.answer(&y).map_err(release_error)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = OfflineRelease::from_json(text).map_err(release_error)?;
        Ok(Self { inner })
    }
}

/// Runs the offline grid mechanism and returns its synopsis.
#[pyfunction]
#[pyo3(signature = (points, epsilon, k_max, *, delta=0.0, beta=0.1, noise="laplace", alpha=None, seed=0))]
#[allow(clippy::too_many_arguments)]
fn release_offline(
    points: Vec<Vec<f64>>,
    epsilon: f64,
    k_max: usize,
    delta: f64,
    beta: f64,
    noise: &str,
    alpha: Option<f64>,
    seed: u64,
) -> PyResult<PySynopsis> {
    let s = settings(epsilon, k_max, delta, beta, noise, alpha, seed)?;
    let inner = release_offline_rs(&database(points)?, &s).map_err(release_error)?;
    Ok(PySynopsis { inner })
}

/// The calibrated noise plan as a dict; raises `InfeasibleError` (with the
/// minimal achievable alpha as second argument) when no alpha ≤ ℓ works.
#[pyfunction]
#[pyo3(signature = (n, dimension, epsilon, k_max, *, delta=0.0, beta=0.1, noise="laplace"))]
#[allow(clippy::too_many_arguments)]
fn calibrate(
    py: Python<'_>,
    n: usize,
    dimension: usize,
    epsilon: f64,
    k_max: usize,
    delta: f64,
    beta: f64,
    noise: &str,
) -> PyResult<Py<PyAny>> {
    let s = settings(epsilon, k_max, delta, beta, noise, None, 0)?;
    let plan =
        NoisePlan::calibrate(&s.params, s.noise, n, dimension).map_err(|e| engine_error(&e))?;
    to_python(py, &serde_json::to_value(&plan).map_err(err)?)
}

/// Exact average distance from `y` to `points` under `l1` or `l2`.
#[pyfunction]
#[pyo3(signature = (points, y, metric="l1"))]
fn oracle(points: Vec<Vec<f64>>, y: Vec<f64>, metric: &str) -> PyResult<f64> {
    let db = database(points)?;
    let dim = db.dimension().unwrap_or(0);
    let spec = match metric {
        "l1" => MetricSpec::l1(dim),
        "l2" => MetricSpec::l2(dim),
        other => return Err(err(format!("unknown metric `{other}`"))),
    };
    avg_distance_raw(&db, &Point::coords(y).map_err(err)?, &spec).map_err(err)
}

/// Images of `points` under a seeded random ℓ2→ℓ1 projection.
#[pyfunction]
#[pyo3(signature = (points, *, alpha_target=0.25, c0=4.0, shrink=metricdp::embedding::DEFAULT_SHRINK, seed=0))]
fn project(
    points: Vec<Vec<f64>>,
    alpha_target: f64,
    c0: f64,
    shrink: f64,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let dim = points.first().map_or(0, Vec::len);
    let map =
        ProjectionMap::build_with_shrink(dim, alpha_target, c0, shrink, &mut seeded_rng(seed))
            .map_err(embedding_error)?;
    points
        .iter()
        .map(|x| map.apply(x).map_err(embedding_error))
        .collect()
}

/// Bourgain images of labelled `points` for the metric given by `labels`
/// and `matrix`, with subsets sampled from `queries`.
#[pyfunction]
#[pyo3(signature = (labels, matrix, queries, points, *, seed=0))]
fn bourgain(
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
    queries: Vec<String>,
    points: Vec<String>,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let metric = MetricSpec::matrix(DistanceMatrix::new(labels, matrix, true).map_err(err)?);
    let q = QuerySet::new(queries.into_iter().map(Point::label).collect()).map_err(err)?;
    let map = BourgainMap::build(&q, points.len(), &metric, &mut seeded_rng(seed))
        .map_err(embedding_error)?;
    points
        .into_iter()
        .map(|p| map.apply(&Point::label(p)).map_err(embedding_error))
        .collect()
}

#[pymodule]
fn pymetricdp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MetricDpError", m.py().get_type::<MetricDpError>())?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_class::<PyMechanism>()?;
    m.add_class::<PySynopsis>()?;
    m.add_function(wrap_pyfunction!(release_offline, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(bourgain, m)?)?;
    Ok(())
}
