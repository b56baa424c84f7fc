//! Python bindings for `critmst`. Vertex labels are 0-based, as in the Rust API.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use critmst::experiments::{run_validate, Experiment, ExperimentConfig};
use critmst::exploration::root_s;
use critmst::graphgen::{sample_ensemble, Kernel};
use critmst::metrics::{covering_number, mean_pair_distance, tree_diameter};
use critmst::mst::mst_of_giant;
use critmst::tilted::{sample_connected, ProbabilityVector};
use critmst::{Error, Seed, TreeStructure};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter { .. } | Error::InvalidWeights(_) | Error::Config(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_kernel(tag: &str) -> PyResult<Kernel> {
    tag.parse().map_err(to_py)
}

#[pyclass(frozen)]
struct WeightSequence {
    inner: critmst::WeightSequence,
}

#[pymethods]
impl WeightSequence {
    #[new]
    fn new(weights: Vec<f64>, tau: f64) -> PyResult<Self> {
        critmst::WeightSequence::new(weights, tau).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (n, tau, c = 3.0))]
    fn power_law(n: usize, tau: f64, c: f64) -> PyResult<Self> {
        critmst::WeightSequence::power_law(n, c, tau).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau()
    }

    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    /// `(alpha, rho, eta)`.
    fn constants(&self) -> (f64, f64, f64) {
        let c = self.inner.constants();
        (c.alpha, c.rho, c.eta)
    }

    /// `(total, ell, sigma2, nu)`.
    fn stats(&self) -> (f64, f64, f64, f64) {
        let s = self.inner.stats();
        (s.total, s.ell, s.sigma2, s.nu)
    }

    fn p_lambda(&self, lam: f64) -> f64 {
        self.inner.p_lambda(lam)
    }

    fn saturation_lambda(&self) -> f64 {
        self.inner.saturation_lambda()
    }

    fn root_s(&self, lam: f64) -> PyResult<f64> {
        root_s(&self.inner, lam).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("WeightSequence(n={}, tau={})", self.inner.n(), self.inner.tau())
    }
}

/// A rooted tree over global vertex labels.
#[pyclass(frozen)]
struct Tree {
    inner: TreeStructure,
}

#[pymethods]
impl Tree {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn root(&self) -> usize {
        self.inner.label(0)
    }

    /// `(u, v, weight)` triples with global labels and `u < v`.
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges()
    }

    fn diameter(&self) -> usize {
        tree_diameter(&self.inner)
    }

    fn mean_pair_distance(&self) -> f64 {
        mean_pair_distance(&self.inner)
    }

    fn covering_numbers(&self, radii: Vec<usize>) -> Vec<usize> {
        radii.into_iter().map(|r| covering_number(&self.inner, r)).collect()
    }
}

/// Edge list `(i, j, u)` of the percolation ensemble.
#[pyfunction]
#[pyo3(signature = (seq, seed, kernel = "product-minus-ell"))]
fn ensemble_edges(seq: &WeightSequence, seed: u64, kernel: &str) -> PyResult<Vec<(usize, usize, f64)>> {
    let ens = sample_ensemble(&seq.inner, parse_kernel(kernel)?, Seed::new(seed), &Default::default()).map_err(to_py)?;
    Ok(ens.edges().iter().map(|e| (e.i, e.j, e.u)).collect())
}

/// MST of the component of vertex 0, plus the MSTs of its percolated giants
/// at each `lambda` (ascending).
#[pyfunction]
#[pyo3(signature = (seq, seed, lambdas = Vec::new(), kernel = "product-minus-ell"))]
fn giant_mst(seq: &WeightSequence, seed: u64, lambdas: Vec<f64>, kernel: &str) -> PyResult<(Tree, Vec<Tree>)> {
    let ens = sample_ensemble(&seq.inner, parse_kernel(kernel)?, Seed::new(seed), &Default::default()).map_err(to_py)?;
    let gm = mst_of_giant(&ens, &seq.inner, &lambdas).map_err(to_py)?;
    let nested = (0..lambdas.len())
        .map(|k| gm.restricted(k).map(|inner| Tree { inner }))
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
    Ok((Tree { inner: gm.tree }, nested))
}

/// One draw of a connected graph on `len(q)` vertices from the tilted p-tree sampler.
#[pyfunction]
fn sample_connected_graph(q: Vec<f64>, a: f64, seed: u64) -> PyResult<Vec<(usize, usize)>> {
    let pv = ProbabilityVector::from_weights(&q, a).map_err(to_py)?;
    Ok(sample_connected(&pv, &mut Seed::new(seed).rng()).sorted_edges())
}

/// Runs the oracle suite; returns `(name, passed, detail)` per check.
#[pyfunction]
#[pyo3(signature = (seed = 1))]
fn validate(py: Python<'_>, seed: u64) -> PyResult<Vec<(String, bool, String)>> {
    let mut cfg = ExperimentConfig::defaults(Experiment::Validate);
    cfg.seed = seed;
    let report = py.detach(|| run_validate(&cfg)).map_err(to_py)?;
    Ok(report.checks.into_iter().map(|c| (c.name, c.passed, c.detail)).collect())
}

#[pymodule]
#[pyo3(name = "critmst")]
fn critmst_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<WeightSequence>()?;
    m.add_class::<Tree>()?;
    m.add_function(wrap_pyfunction!(ensemble_edges, m)?)?;
    m.add_function(wrap_pyfunction!(giant_mst, m)?)?;
    m.add_function(wrap_pyfunction!(sample_connected_graph, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
