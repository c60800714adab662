//! Python bindings. Reports come back as plain dicts shaped like the CLI's
//! JSON results; context indices are 0-based on input, as in the Rust API.

use povmctx::dilation::{
    exhaustive_extension_audit, extension_audit, one_to_one_feasibility, sequential_dilation,
    sequential_dilations, verify_dilation, ConstraintGraph,
};
use povmctx::hv::{bell_marginal_estimate, simulate_povm, value_map_survey, MonteCarlo};
use povmctx::ks::{enumerate_assignments_with_workers, parity_obstruction};
use povmctx::povm::{born_probability, check_completeness, check_family};
use povmctx::{bloch, ks, PovmFamily as CoreFamily};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: povmctx::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "BlochVector", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBlochVector(bloch::BlochVector);

#[pymethods]
impl PyBlochVector {
    /// Unit vector; pass `normalize=True` to accept any nonzero vector.
    #[new]
    #[pyo3(signature = (x, y, z, normalize = false))]
    fn new(x: f64, y: f64, z: f64, normalize: bool) -> PyResult<Self> {
        let v = if normalize {
            bloch::BlochVector::normalized(x, y, z)
        } else {
            bloch::BlochVector::new(x, y, z)
        };
        v.map(Self).map_err(err)
    }

    #[getter]
    fn x(&self) -> f64 {
        self.0.x()
    }

    #[getter]
    fn y(&self) -> f64 {
        self.0.y()
    }

    #[getter]
    fn z(&self) -> f64 {
        self.0.z()
    }

    fn dot(&self, other: &PyBlochVector) -> f64 {
        self.0.dot(&other.0)
    }

    fn angle_to(&self, other: &PyBlochVector) -> f64 {
        self.0.angle_to(&other.0)
    }

    fn antipode(&self) -> Self {
        Self(self.0.antipode())
    }

    fn to_list(&self) -> [f64; 3] {
        self.0.to_array()
    }

    fn __repr__(&self) -> String {
        format!(
            "BlochVector({}, {}, {})",
            self.0.x(),
            self.0.y(),
            self.0.z()
        )
    }
}

#[pyclass(name = "PovmFamily", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPovmFamily(CoreFamily);

impl PyPovmFamily {
    fn context_index(&self, context: usize) -> PyResult<usize> {
        self.0.context(context).map_err(err)?;
        Ok(context)
    }
}

#[pymethods]
impl PyPovmFamily {
    #[staticmethod]
    fn nakamura() -> Self {
        Self(povmctx::nakamura_family())
    }

    #[staticmethod]
    fn cabello() -> Self {
        Self(povmctx::cabello_family())
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CoreFamily::from_json(text).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.to_document())
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0
            .elements()
            .iter()
            .map(|e| e.label().to_string())
            .collect()
    }

    #[getter]
    fn contexts(&self) -> Vec<Vec<String>> {
        self.0
            .contexts()
            .iter()
            .map(|c| c.labels().to_vec())
            .collect()
    }

    fn weight(&self, label: &str) -> PyResult<f64> {
        Ok(self.0.element(label).map_err(err)?.weight_f64())
    }

    fn direction(&self, label: &str) -> PyResult<PyBlochVector> {
        Ok(PyBlochVector(
            self.0.element(label).map_err(err)?.direction(),
        ))
    }

    fn incidence(&self, label: &str) -> usize {
        self.0.incidence(label)
    }

    fn completeness_residual(&self, context: usize) -> PyResult<f64> {
        check_completeness(self.0.context(context).map_err(err)?, &self.0).map_err(err)
    }

    fn born_probability(&self, state: &PyBlochVector, label: &str) -> PyResult<f64> {
        let rho = bloch::state_from_bloch(&state.0).map_err(err)?;
        born_probability(&rho, self.0.element(label).map_err(err)?).map_err(err)
    }

    fn check<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &check_family(&self.0))
    }

    /// Residuals of the sequential dilation of one context, or of all.
    #[pyo3(signature = (context = None))]
    fn verify_dilation<'py>(
        &self,
        py: Python<'py>,
        context: Option<usize>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let contexts = match context {
            Some(c) => vec![self.context_index(c)?],
            None => (0..self.0.contexts().len()).collect(),
        };
        let residuals = contexts
            .into_iter()
            .map(|c| verify_dilation(&sequential_dilation(&self.0, c)?, &self.0, c))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        to_py(py, &residuals)
    }

    /// Sequential audit rows plus the exhaustive slot-assignment summary.
    fn extension_audit<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let schemes = sequential_dilations(&self.0).map_err(err)?;
        let rows = extension_audit(&self.0, &schemes).map_err(err)?;
        let f = self.0.clone();
        let exhaustive = py
            .detach(move || exhaustive_extension_audit(&f))
            .map_err(err)?;
        #[derive(Serialize)]
        struct Audit<T, U> {
            rows: T,
            exhaustive: U,
        }
        to_py(py, &Audit { rows, exhaustive })
    }

    fn one_to_one_feasibility<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &one_to_one_feasibility(&self.0))
    }

    #[pyo3(signature = (context, state, samples, seed, workers = 1))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        context: usize,
        state: &PyBlochVector,
        samples: u64,
        seed: u64,
        workers: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let c = self.context_index(context)?;
        let (f, n) = (self.0.clone(), state.0);
        let mc = MonteCarlo::new(samples, seed).with_workers(workers);
        let report = py
            .detach(move || simulate_povm(&f, c, &n, &mc))
            .map_err(err)?;
        to_py(py, &report)
    }

    #[pyo3(signature = (state, samples, seed, workers = 1))]
    fn value_map_survey<'py>(
        &self,
        py: Python<'py>,
        state: &PyBlochVector,
        samples: u64,
        seed: u64,
        workers: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let (f, n) = (self.0.clone(), state.0);
        let mc = MonteCarlo::new(samples, seed).with_workers(workers);
        let survey = py
            .detach(move || value_map_survey(&f, &n, &mc))
            .map_err(err)?;
        to_py(py, &survey)
    }

    fn __repr__(&self) -> String {
        format!(
            "PovmFamily({:?}, {} elements, {} contexts)",
            self.0.name(),
            self.0.elements().len(),
            self.0.contexts().len()
        )
    }
}

#[pyclass(name = "ContextHypergraph", frozen)]
struct PyHypergraph(ks::ContextHypergraph);

#[pymethods]
impl PyHypergraph {
    #[new]
    fn new(contexts: Vec<Vec<String>>) -> PyResult<Self> {
        ks::ContextHypergraph::from_contexts(contexts)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        ks::ContextHypergraph::parse(text).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_family(family: &PyPovmFamily) -> Self {
        Self(ks::ContextHypergraph::from_family(&family.0))
    }

    #[getter]
    fn elements(&self) -> Vec<String> {
        self.0.elements().to_vec()
    }

    #[getter]
    fn contexts(&self) -> Vec<Vec<String>> {
        self.0.contexts().to_vec()
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    fn parity_obstruction<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &parity_obstruction(&self.0))
    }

    #[pyo3(signature = (workers = 1))]
    fn enumerate_assignments<'py>(
        &self,
        py: Python<'py>,
        workers: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let h = self.0.clone();
        let verdict = py
            .detach(move || enumerate_assignments_with_workers(&h, workers))
            .map_err(err)?;
        to_py(py, &verdict)
    }

    fn one_to_one_feasibility<'py>(
        &self,
        py: Python<'py>,
        name: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        to_py(
            py,
            &ConstraintGraph::from_hypergraph(name, &self.0).saturate(),
        )
    }
}

#[pyfunction]
#[pyo3(signature = (state, direction, samples, seed, workers = 1))]
fn bell_marginal<'py>(
    py: Python<'py>,
    state: &PyBlochVector,
    direction: &PyBlochVector,
    samples: u64,
    seed: u64,
    workers: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let (n, v) = (state.0, direction.0);
    let mc = MonteCarlo::new(samples, seed).with_workers(workers);
    let est = py
        .detach(move || bell_marginal_estimate(&n, &v, &mc))
        .map_err(err)?;
    to_py(py, &est)
}

#[pymodule(name = "povmctx")]
fn povmctx_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBlochVector>()?;
    m.add_class::<PyPovmFamily>()?;
    m.add_class::<PyHypergraph>()?;
    m.add_function(wrap_pyfunction!(bell_marginal, m)?)?;
    m.add("TOL", povmctx::TOL)?;
    Ok(())
}
