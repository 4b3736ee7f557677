//! Python bindings.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use symnet_core::fourier::{self, ClusteringMode, FourierSeries, SeriesValue};
use symnet_core::mc::{self, Ensemble, Lattice};
use symnet_core::quadrature;
use symnet_core::{ConnectionKernel, Error, NetworkModel};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::QuadratureNonConvergence { .. } | Error::BudgetExceeded { .. } | Error::UndefinedEstimate(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn pair(v: SeriesValue) -> (f64, f64) {
    (v.value, v.error_bound)
}

/// Link probability as a function of angular distance.
#[pyclass(name = "Kernel", frozen)]
#[derive(Clone)]
struct PyKernel {
    inner: ConnectionKernel,
}

#[pymethods]
impl PyKernel {
    /// `p` within half-width `phi`, zero beyond.
    #[staticmethod]
    fn uniform(p: f64, phi: f64) -> PyResult<Self> {
        let inner = ConnectionKernel::uniform(p, phi).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// `a0 + 2 sum a_k cos(k x)`.
    #[staticmethod]
    fn cosine(coeffs: Vec<f64>) -> PyResult<Self> {
        let inner = ConnectionKernel::cosine(coeffs).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn product(factors: Vec<PyKernel>) -> PyResult<Self> {
        let inner = ConnectionKernel::product(factors.into_iter().map(|k| k.inner).collect()).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let k: ConnectionKernel = serde_json_parse(text)?;
        Ok(Self {
            inner: k.validated().map_err(to_py)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Value at an angle, or at a vector of angles for a product kernel.
    fn __call__(&self, angles: Vec<f64>) -> PyResult<f64> {
        self.inner.eval(&angles).map_err(to_py)
    }

    fn eval(&self, angle: f64) -> PyResult<f64> {
        self.inner.eval_scalar(angle).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Kernel({:?})", self.inner)
    }
}

fn serde_json_parse<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Violations found in a kernel description, empty when it is valid.
#[pyfunction]
fn validate_kernel(text: &str) -> PyResult<Vec<String>> {
    let k: ConnectionKernel = serde_json_parse(text)?;
    Ok(k.validate().iter().map(|v| v.to_string()).collect())
}

/// A circle or torus with its kernel.
#[pyclass(name = "Model", frozen)]
#[derive(Clone)]
struct PyModel {
    inner: NetworkModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn circle(radius: f64, kernel: PyKernel) -> PyResult<Self> {
        let inner = NetworkModel::circle(radius, kernel.inner).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn torus(radii: Vec<f64>, factors: Vec<PyKernel>) -> PyResult<Self> {
        let inner =
            NetworkModel::torus(radii, factors.into_iter().map(|k| k.inner).collect()).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn mean_degree(&self) -> f64 {
        self.inner.mean_degree().value
    }

    #[getter]
    fn radii(&self) -> Vec<f64> {
        self.inner.radii().to_vec()
    }

    #[getter]
    fn kernel(&self) -> PyKernel {
        PyKernel {
            inner: self.inner.kernel().clone(),
        }
    }

    fn __repr__(&self) -> String {
        format!("Model({:?}, {:?})", self.inner.space(), self.inner.kernel())
    }
}

/// Fourier coefficients a_0..a_m of the uniform window.
#[pyfunction]
#[pyo3(signature = (p, phi, m = fourier::DEFAULT_TRUNCATION))]
fn coeffs_uniform(p: f64, phi: f64, m: usize) -> PyResult<Vec<f64>> {
    Ok(fourier::coeffs_uniform(p, phi, m).map_err(to_py)?.coeffs().to_vec())
}

/// Fourier coefficients of any one-dimensional kernel, by quadrature.
#[pyfunction]
#[pyo3(signature = (kernel, m, tol = quadrature::DEFAULT_TOL))]
fn coeffs_numeric(kernel: &PyKernel, m: usize, tol: f64) -> PyResult<Vec<f64>> {
    Ok(fourier::coeffs_numeric(&kernel.inner, m, tol)
        .map_err(to_py)?
        .coeffs()
        .to_vec())
}

#[pyfunction]
fn eval_series(coeffs: Vec<f64>, phi: f64) -> PyResult<f64> {
    Ok(fourier::eval_series(&FourierSeries::new(coeffs).map_err(to_py)?, phi))
}

/// Closed-form clustering of the uniform window, as (value, error bound).
#[pyfunction]
#[pyo3(signature = (p, phi, m_tail = 1 << 20))]
fn clustering_closed(p: f64, phi: f64, m_tail: usize) -> PyResult<(f64, f64)> {
    fourier::clustering_uniform_closed(p, phi, m_tail).map(pair).map_err(to_py)
}

/// Clustering from Fourier coefficients, leading order or with corrections.
#[pyfunction]
#[pyo3(signature = (coeffs, radius, mean_degree, full = false, m_corr = fourier::DEFAULT_CORRECTION_TRUNCATION))]
fn clustering_series(coeffs: Vec<f64>, radius: f64, mean_degree: f64, full: bool, m_corr: usize) -> PyResult<(f64, f64)> {
    let s = FourierSeries::new(coeffs).map_err(to_py)?;
    let mode = if full { ClusteringMode::Full } else { ClusteringMode::Leading };
    fourier::clustering_from_series(&s, radius, mean_degree, mode, m_corr)
        .map(pair)
        .map_err(to_py)
}

/// Leading-order expected count of chains with `k` intermediates at angle `b`.
#[pyfunction]
fn p_sep_leading(coeffs: Vec<f64>, radius: f64, k: u32, b: f64) -> PyResult<(f64, f64)> {
    let s = FourierSeries::new(coeffs).map_err(to_py)?;
    Ok(pair(fourier::p_sep_leading(&s, radius, k, b)))
}

/// `P(k, pi) / (pi N^k)` for each `k`, as (value, error bound) pairs.
#[pyfunction]
#[pyo3(signature = (p, phi, ks, m_tail = 1 << 20))]
fn normalized_antipodal(p: f64, phi: f64, ks: Vec<u32>, m_tail: usize) -> PyResult<Vec<(f64, f64)>> {
    Ok(fourier::normalized_antipodal_uniform(p, phi, &ks, m_tail)
        .map_err(to_py)?
        .into_iter()
        .map(pair)
        .collect())
}

#[pyfunction]
#[pyo3(signature = (model, tol = quadrature::DEFAULT_TOL))]
fn clustering_quad(model: &PyModel, tol: f64) -> PyResult<(f64, f64)> {
    let r = quadrature::clustering_quad(&model.inner, tol).map_err(to_py)?;
    Ok((r.value, r.error_estimate))
}

#[pyfunction]
#[pyo3(signature = (model, k, b, with_exclusion = false, tol = quadrature::DEFAULT_TOL))]
fn chain_quad(model: &PyModel, k: usize, b: Vec<f64>, with_exclusion: bool, tol: f64) -> PyResult<(f64, f64)> {
    let r = quadrature::p_chain_quad(&model.inner, k, &b, with_exclusion, tol).map_err(to_py)?;
    Ok((r.value, r.error_estimate))
}

/// Exact expected chain count on a ring of `n` nodes: (reduced, with exclusion or None).
#[pyfunction]
fn lattice_chain_count(n: usize, kernel: &PyKernel, k: usize, offset: usize) -> PyResult<(f64, Option<f64>)> {
    let c = quadrature::discrete_chain_count(n, &kernel.inner, k, offset).map_err(to_py)?;
    Ok((c.reduced, c.with_exclusion))
}

#[pyfunction]
fn lattice_clustering(n: usize, kernel: &PyKernel) -> PyResult<f64> {
    quadrature::discrete_clustering(n, &kernel.inner).map_err(to_py)
}

/// Edges `(i, j)`, `i < j`, of one sampled graph on a ring or torus grid.
#[pyfunction]
fn sample_edges(dims: Vec<usize>, kernel: &PyKernel, seed: u64) -> PyResult<Vec<(u32, u32)>> {
    let lattice = Lattice::torus(dims).map_err(to_py)?;
    Ok(mc::sample_graph(&lattice, &kernel.inner, seed).map_err(to_py)?.edges())
}

/// Monte Carlo estimates over independent trials.
#[pyclass(name = "Ensemble", frozen)]
struct PyEnsemble {
    inner: Ensemble,
}

#[pymethods]
impl PyEnsemble {
    #[new]
    fn new(dims: Vec<usize>, kernel: PyKernel, seed: u64, trials: usize) -> PyResult<Self> {
        let lattice = Lattice::torus(dims).map_err(to_py)?;
        let inner = Ensemble::new(lattice, kernel.inner, seed, trials).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// (mean, standard error, trials)
    fn mean_degree(&self, py: Python<'_>) -> PyResult<(f64, f64, usize)> {
        let e = py.allow_threads(|| self.inner.mean_degree()).map_err(to_py)?;
        Ok((e.mean, e.std_error, e.trials))
    }

    fn clustering(&self, py: Python<'_>) -> PyResult<(f64, f64, usize)> {
        let e = py.allow_threads(|| self.inner.clustering()).map_err(to_py)?;
        Ok((e.mean, e.std_error, e.trials))
    }

    fn chain_count(&self, py: Python<'_>, offset: usize, k: usize) -> PyResult<(f64, f64, usize)> {
        let e = py.allow_threads(|| self.inner.chain_count(offset, k)).map_err(to_py)?;
        Ok((e.mean, e.std_error, e.trials))
    }

    /// Probabilities of separation 0..=max_sep and the unreached remainder.
    fn separation_histogram(&self, py: Python<'_>, offset: usize, max_sep: usize) -> PyResult<(Vec<f64>, f64)> {
        let h = py
            .allow_threads(|| self.inner.separation_histogram(offset, max_sep))
            .map_err(to_py)?;
        Ok((h.probabilities.iter().map(|e| e.mean).collect(), h.unreached.mean))
    }
}

#[pymodule]
fn symnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_function(wrap_pyfunction!(validate_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(coeffs_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(coeffs_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(eval_series, m)?)?;
    m.add_function(wrap_pyfunction!(clustering_closed, m)?)?;
    m.add_function(wrap_pyfunction!(clustering_series, m)?)?;
    m.add_function(wrap_pyfunction!(p_sep_leading, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_antipodal, m)?)?;
    m.add_function(wrap_pyfunction!(clustering_quad, m)?)?;
    m.add_function(wrap_pyfunction!(chain_quad, m)?)?;
    m.add_function(wrap_pyfunction!(lattice_chain_count, m)?)?;
    m.add_function(wrap_pyfunction!(lattice_clustering, m)?)?;
    m.add_function(wrap_pyfunction!(sample_edges, m)?)?;
    Ok(())
}
