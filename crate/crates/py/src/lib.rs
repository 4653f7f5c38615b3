//! Python bindings: groups, sofic approximations, model partitions, AP
//! counting, and the verification suites, exposed as a small extension
//! module. Reports cross the boundary as JSON strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use soficount::ap::{ap_enumerate, ap_importance_estimate, curve_csv, rate_curve, RateMode};
use soficount::bernoulli::{base_entropy, ow_pushforward_check, BaseMeasure};
use soficount::group::GroupSpec;
use soficount::partition::ModelPartition;
use soficount::sofic::{
    build_folner_approx, build_quotient_approx, build_random_free_approx,
};
use soficount::space::ModelSpace;

fn err(e: soficount::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Group", skip_from_py_object)]
#[derive(Clone)]
struct PyGroup {
    inner: soficount::group::Group,
}

#[pymethods]
impl PyGroup {
    #[staticmethod]
    fn integers() -> PyResult<PyGroup> {
        Ok(PyGroup { inner: soficount::group::Group::new(GroupSpec::Integers).map_err(err)? })
    }

    #[staticmethod]
    fn lattice(d: usize) -> PyResult<PyGroup> {
        Ok(PyGroup {
            inner: soficount::group::Group::new(GroupSpec::IntegerLattice { d }).map_err(err)?,
        })
    }

    #[staticmethod]
    fn free(rank: usize) -> PyResult<PyGroup> {
        Ok(PyGroup {
            inner: soficount::group::Group::new(GroupSpec::Free { rank }).map_err(err)?,
        })
    }

    #[staticmethod]
    fn cyclic(n: u64) -> PyResult<PyGroup> {
        Ok(PyGroup { inner: soficount::group::Group::new(GroupSpec::Cyclic { n }).map_err(err)? })
    }

    fn ball_size(&self, radius: u32) -> usize {
        self.inner.ball(radius).len()
    }

    fn __repr__(&self) -> String {
        format!("Group({:?})", self.inner.spec())
    }
}

#[pyclass(name = "SymMap")]
struct PySymMap {
    inner: soficount::sofic::SymMap,
}

#[pymethods]
impl PySymMap {
    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    /// Certified quality over the ball of the given radius: the fraction
    /// of points outside the good set.
    fn epsilon(&self, radius: u32) -> PyResult<f64> {
        let ball = self.inner.group().ball(radius);
        Ok(self.inner.good_set(&ball).map_err(err)?.epsilon)
    }

    fn __repr__(&self) -> String {
        format!("SymMap(m={})", self.inner.degree())
    }
}

#[pyclass(name = "Partition", skip_from_py_object)]
#[derive(Clone)]
struct PyPartition {
    inner: ModelPartition,
}

#[pymethods]
impl PyPartition {
    /// The canonical one-coordinate Bernoulli partition with the given
    /// symbol weights.
    #[staticmethod]
    fn canonical(group: &PyGroup, weights: Vec<f64>) -> PyResult<PyPartition> {
        let space = ModelSpace::bernoulli(group.inner.clone(), weights).map_err(err)?;
        Ok(PyPartition { inner: ModelPartition::canonical_bernoulli(&space).map_err(err)? })
    }

    #[staticmethod]
    fn trivial(group: &PyGroup, weights: Vec<f64>) -> PyResult<PyPartition> {
        let space = ModelSpace::bernoulli(group.inner.clone(), weights).map_err(err)?;
        Ok(PyPartition { inner: ModelPartition::trivial(&space) })
    }

    #[getter]
    fn atom_count(&self) -> usize {
        self.inner.atom_count()
    }

    fn entropy(&self) -> f64 {
        self.inner.entropy()
    }

    fn conditional_entropy(&self, other: &PyPartition) -> PyResult<f64> {
        self.inner.conditional_entropy(&other.inner).map_err(err)
    }

    fn rohlin_distance(&self, other: &PyPartition) -> PyResult<f64> {
        self.inner.rohlin_distance(&other.inner).map_err(err)
    }

    fn join(&self, other: &PyPartition) -> PyResult<PyPartition> {
        Ok(PyPartition { inner: self.inner.join(&other.inner).map_err(err)? })
    }

    /// Translate by the integer k (one-generator groups).
    fn translate_int(&self, k: i64) -> PyResult<PyPartition> {
        let g = self.inner.space().group().int(k).map_err(err)?;
        Ok(PyPartition { inner: self.inner.translate(&g).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!("Partition(u={})", self.inner.atom_count())
    }
}

#[pyfunction]
fn build_quotient(group: &PyGroup, schedule: Vec<u64>) -> PyResult<Vec<PySymMap>> {
    Ok(build_quotient_approx(&group.inner, &schedule)
        .map_err(err)?
        .into_iter()
        .map(|inner| PySymMap { inner })
        .collect())
}

#[pyfunction]
fn build_folner(group: &PyGroup, windows: Vec<u64>) -> PyResult<Vec<PySymMap>> {
    Ok(build_folner_approx(&group.inner, &windows)
        .map_err(err)?
        .into_iter()
        .map(|inner| PySymMap { inner })
        .collect())
}

#[pyfunction]
fn build_random_free(group: &PyGroup, m: usize, seed: u64) -> PyResult<PySymMap> {
    Ok(PySymMap { inner: build_random_free_approx(&group.inner, m, seed).map_err(err)? })
}

/// Exact |AP(sigma, alpha : ball(radius), eps)| as (count, log_count).
#[pyfunction]
fn count_ap(
    sigma: &PySymMap,
    alpha: &PyPartition,
    radius: u32,
    eps: f64,
) -> PyResult<(f64, f64)> {
    let f = sigma.inner.group().ball(radius);
    let (count, _) = ap_enumerate(&sigma.inner, &alpha.inner, &f, eps, None).map_err(err)?;
    Ok((count.count, count.log_count))
}

/// Importance-sampled |AP| as (estimate, log_estimate, stderr_of_log).
#[pyfunction]
fn estimate_ap(
    sigma: &PySymMap,
    alpha: &PyPartition,
    radius: u32,
    eps: f64,
    n_samples: usize,
    seed: u64,
) -> PyResult<(f64, f64, Option<f64>)> {
    let f = sigma.inner.group().ball(radius);
    let c = ap_importance_estimate(&sigma.inner, &alpha.inner, &f, eps, n_samples, seed)
        .map_err(err)?;
    Ok((c.count, c.log_count, c.stderr))
}

/// CSV rate curve (one row per approximation) for F = ball(radius).
#[pyfunction]
fn rate_curve_csv(
    sigmas: Vec<PyRef<PySymMap>>,
    alpha: &PyPartition,
    radius: u32,
    eps: f64,
) -> PyResult<String> {
    let maps: Vec<soficount::sofic::SymMap> =
        sigmas.iter().map(|s| s.inner.clone()).collect();
    if maps.is_empty() {
        return Err(PyValueError::new_err("empty schedule"));
    }
    let f = maps[0].group().ball(radius);
    let curve = rate_curve(&maps, &alpha.inner, &f, Some(radius), eps, RateMode::Exact);
    Ok(curve_csv(&curve.entries))
}

/// Run one named verification suite; returns (suite, check, passed, detail)
/// tuples.
#[pyfunction]
fn run_suite(name: &str) -> PyResult<Vec<(String, String, bool, String)>> {
    Ok(soficount::verify::run_suite(name)
        .map_err(err)?
        .into_iter()
        .map(|r| (r.suite, r.name, r.passed, r.detail))
        .collect())
}

/// Shannon entropy of a base measure, in nats.
#[pyfunction]
fn shannon_entropy(weights: Vec<f64>) -> PyResult<f64> {
    Ok(base_entropy(&BaseMeasure::new(weights).map_err(err)?))
}

/// Ornstein-Weiss pushforward check; returns the JSON report.
#[pyfunction]
fn ow_pushforward(radius: u32, weights: Vec<f64>) -> PyResult<String> {
    let base = BaseMeasure::new(weights).map_err(err)?;
    let report = ow_pushforward_check(radius, &base).map_err(err)?;
    Ok(report.to_json().to_string())
}

#[pymodule]
fn soficount_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGroup>()?;
    m.add_class::<PySymMap>()?;
    m.add_class::<PyPartition>()?;
    m.add_function(wrap_pyfunction!(build_quotient, m)?)?;
    m.add_function(wrap_pyfunction!(build_folner, m)?)?;
    m.add_function(wrap_pyfunction!(build_random_free, m)?)?;
    m.add_function(wrap_pyfunction!(count_ap, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_ap, m)?)?;
    m.add_function(wrap_pyfunction!(rate_curve_csv, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(shannon_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(ow_pushforward, m)?)?;
    Ok(())
}
