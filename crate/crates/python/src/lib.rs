//! Python bindings: diagrams, exact twirls, design and gap reports.
//!
//! Matrices cross the boundary as lists of lists of Python `complex`;
//! structured reports come back as plain dicts.

use designlab::circuits::{self, BrickArchitecture, GapOptions, MomentOperator};
use designlab::designs::{self, DesignMode, Embedding};
use designlab::shadows::ShadowProtocol;
use designlab::weingarten::CommutantBasis;
use designlab::{brauer, EnsembleSpec, Error, GroupFamily, Operator, Pairing, C64};
use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::{PyMemoryError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Budget { .. } | Error::SizeLimit(_) => PyMemoryError::new_err(e.to_string()),
        Error::Convergence { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for designlab::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn family(name: &str) -> PyResult<GroupFamily> {
    name.parse().py()
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn report<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn to_matrix(rows: &[Vec<Complex64>]) -> PyResult<DMatrix<C64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn from_matrix(m: &DMatrix<C64>) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// A perfect matching of `2t` points, written `"t; (a,b)(c,d)..."` with
/// 1-based points: bottom row `1..t`, top row `t+1..2t`.
#[pyclass(name = "Pairing", module = "designlab", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyPairing {
    inner: Pairing,
}

#[pymethods]
impl PyPairing {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Self { inner: text.parse().py()? })
    }

    /// From 1-based pairs.
    #[staticmethod]
    fn from_pairs(t: usize, pairs: Vec<(usize, usize)>) -> PyResult<Self> {
        let zero_based: Vec<(usize, usize)> = pairs
            .iter()
            .map(|&(a, b)| match (a.checked_sub(1), b.checked_sub(1)) {
                (Some(a), Some(b)) => Ok((a, b)),
                _ => Err(PyValueError::new_err("points are 1-based")),
            })
            .collect::<PyResult<_>>()?;
        Ok(Self { inner: Pairing::new(t, &zero_based).py()? })
    }

    #[staticmethod]
    fn identity(t: usize) -> Self {
        Self { inner: Pairing::identity(t) }
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.t()
    }

    #[getter]
    fn pairs(&self) -> Vec<(usize, usize)> {
        self.inner.pairs().into_iter().map(|(a, b)| (a + 1, b + 1)).collect()
    }

    #[getter]
    fn propagating_number(&self) -> usize {
        self.inner.propagating_number()
    }

    #[getter]
    fn is_permutation(&self) -> bool {
        self.inner.is_permutation()
    }

    #[getter]
    fn crossing_sign(&self) -> i32 {
        self.inner.crossing_sign()
    }

    fn transpose(&self) -> Self {
        Self { inner: self.inner.transpose() }
    }

    /// `(self∘other, loops)`: the diagram of the product and the number of
    /// closed loops removed.
    fn compose(&self, other: &PyPairing) -> PyResult<(Self, u32)> {
        let w = brauer::compose(&self.inner, &other.inner).py()?;
        Ok((Self { inner: w.diagram }, w.loop_power))
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Pairing('{}')", self.inner)
    }
}

#[pyfunction]
fn enumerate_pairings(t: usize) -> PyResult<Vec<PyPairing>> {
    Ok(brauer::enumerate_pairings(t).py()?.into_iter().map(|inner| PyPairing { inner }).collect())
}

/// Exact twirl `E_G[U^⊗t X U†^⊗t]` of a `d^t × d^t` matrix.
#[pyfunction]
fn twirl<'py>(py: Python<'py>, family_name: &str, t: usize, d: usize, x: Vec<Vec<Complex64>>) -> PyResult<Bound<'py, PyDict>> {
    let op = Operator::dense(d, t, to_matrix(&x)?).py()?;
    let basis = CommutantBasis::build(family(family_name)?, t, d).py()?;
    let tw = basis.twirl(&op).py()?;
    let out = PyDict::new(py);
    out.set_item("coefficients", tw.coefficients)?;
    out.set_item("basis_labels", tw.basis_labels)?;
    out.set_item("trace_in", tw.trace_in)?;
    out.set_item("trace_out", tw.trace_out)?;
    out.set_item("gram_rank", basis.rank())?;
    out.set_item("operator", from_matrix(&tw.operator.to_matrix().py()?))?;
    Ok(out)
}

/// One Haar-random element of the family, reproducible in `(seed, stream)`.
#[pyfunction]
#[pyo3(signature = (family_name, d, seed = 0, stream = 0))]
fn haar_sample(family_name: &str, d: usize, seed: u64, stream: u64) -> PyResult<Vec<Vec<Complex64>>> {
    let mut s = EnsembleSpec::new(family(family_name)?, d, seed, stream).py()?.sampler().py()?;
    Ok(from_matrix(&s.sample()))
}

#[pyfunction]
#[pyo3(signature = (family_name, t, d, mode = "exact", samples = 10_000, seed = 0))]
fn state_design_test<'py>(
    py: Python<'py>,
    family_name: &str,
    t: usize,
    d: usize,
    mode: &str,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let mode = match mode {
        "exact" => DesignMode::Exact,
        "mc" => DesignMode::MonteCarlo,
        other => return Err(PyValueError::new_err(format!("mode must be 'exact' or 'mc', got {other:?}"))),
    };
    report(py, &designs::state_design_test(family(family_name)?, t, d, mode, samples, seed).py()?)
}

/// Largest non-permutation residual against `|0⟩^⊗t` and `Π_sym`.
#[pyfunction]
fn lemma1_max_residual(t: usize, d: usize) -> PyResult<f64> {
    let entries = designs::lemma1_residuals(t, d, &designs::reference_state(d)).py()?;
    Ok(entries.iter().filter(|e| !e.is_permutation).map(|e| e.max_residual()).fold(0.0, f64::max))
}

#[pyfunction]
#[pyo3(signature = (lambda0, d, embedding = "first-two"))]
fn mixed_state_gap<'py>(py: Python<'py>, lambda0: f64, d: usize, embedding: &str) -> PyResult<Bound<'py, PyAny>> {
    let embedding = match embedding {
        "first-two" => Embedding::FirstTwo,
        "omega-partners" => Embedding::OmegaPartners,
        other => {
            return Err(PyValueError::new_err(format!(
                "embedding must be 'first-two' or 'omega-partners', got {other:?}"
            )))
        }
    };
    report(py, &designs::mixed_state_gap(lambda0, d, embedding).py()?)
}

#[pyfunction]
#[pyo3(signature = (family_name, rho, observable, samples, seed = 0))]
fn shadow_estimate<'py>(
    py: Python<'py>,
    family_name: &str,
    rho: Vec<Vec<Complex64>>,
    observable: Vec<Vec<Complex64>>,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let rho = to_matrix(&rho)?;
    let obs = to_matrix(&observable)?;
    let spec = EnsembleSpec::new(family(family_name)?, rho.nrows(), seed, 0).py()?;
    let est = py.detach(|| ShadowProtocol::new(spec, samples)?.estimate_observable(&rho, &obs)).py()?;
    report(py, &est)
}

/// Per-layer gap `λ` of the brickwork second-moment operator.
#[pyfunction]
#[pyo3(signature = (n, architecture = "unitary", tolerance = 1e-10, max_iterations = 100_000, seed = 0))]
fn spectral_gap<'py>(
    py: Python<'py>,
    n: usize,
    architecture: &str,
    tolerance: f64,
    max_iterations: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let arch = match architecture {
        "unitary" => BrickArchitecture::unitary(n),
        "symplectic" => BrickArchitecture::symplectic(n),
        other => {
            return Err(PyValueError::new_err(format!(
                "architecture must be 'unitary' or 'symplectic', got {other:?}"
            )))
        }
    }
    .py()?;
    let opts = GapOptions { tolerance, max_iterations, seed };
    let r = py.detach(|| MomentOperator::new(&arch)?.spectral_gap(&opts)).py()?;
    report(py, &r)
}

#[pyfunction]
#[pyo3(signature = (lambda_u, lambda_sp, params_u = 15, params_sp = 6))]
fn parameter_ratio(lambda_u: f64, lambda_sp: f64, params_u: usize, params_sp: usize) -> PyResult<f64> {
    circuits::parameter_ratio(lambda_u, lambda_sp, params_u, params_sp).py()
}

#[pyfunction]
fn design_depth(lambda: f64, epsilon: f64, n: usize) -> PyResult<u64> {
    circuits::design_depth(lambda, epsilon, n).py()
}

#[pymodule]
#[pyo3(name = "designlab")]
fn designlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", designlab::VERSION)?;
    m.add_class::<PyPairing>()?;
    m.add_function(wrap_pyfunction!(enumerate_pairings, m)?)?;
    m.add_function(wrap_pyfunction!(twirl, m)?)?;
    m.add_function(wrap_pyfunction!(haar_sample, m)?)?;
    m.add_function(wrap_pyfunction!(state_design_test, m)?)?;
    m.add_function(wrap_pyfunction!(lemma1_max_residual, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_state_gap, m)?)?;
    m.add_function(wrap_pyfunction!(shadow_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_gap, m)?)?;
    m.add_function(wrap_pyfunction!(parameter_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(design_depth, m)?)?;
    Ok(())
}
