use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use closedforms::constructor;
use closedforms::linalg::parse_rational;
use closedforms::rank::{self, Backend};
use closedforms::structured::StructuredSolution;
use closedforms::{io, oracle, reducer, Error, JordanSpec, RationalMatrix};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(m) => PyIOError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn number(x: &Bound<'_, PyAny>) -> PyResult<closedforms::Rational> {
    parse_rational(&x.str()?.to_string()).map_err(err)
}

/// A validated, canonically ordered Jordan specification.
#[pyclass(name = "Spec", module = "closedforms_py", frozen)]
pub struct PySpec {
    inner: JordanSpec,
}

#[pymethods]
impl PySpec {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PySpec { inner: io::spec_from_json(text).map_err(err)? })
    }

    /// `real` is a list of `(size, eig)`, `complex` a list of `(half_size, re, im)`; numbers as ints or "p/q".
    #[new]
    #[pyo3(signature = (real = Vec::new(), complex = Vec::new()))]
    fn new(
        real: Vec<(usize, Bound<'_, PyAny>)>,
        complex: Vec<(usize, Bound<'_, PyAny>, Bound<'_, PyAny>)>,
    ) -> PyResult<Self> {
        let mut rb = Vec::new();
        for (n, e) in &real {
            rb.push(closedforms::RealBlock::new(*n, number(e)?));
        }
        let mut cb = Vec::new();
        for (m, a, b) in &complex {
            cb.push(closedforms::ComplexBlock::new(*m, number(a)?, number(b)?));
        }
        Ok(PySpec { inner: JordanSpec::new(rb, cb).map_err(err)? })
    }

    fn to_json(&self) -> String {
        io::spec_to_json(&self.inner).to_string()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    fn max_rank_real(&self) -> usize {
        rank::max_rank_real(&self.inner)
    }

    fn max_rank_complex(&self) -> usize {
        rank::max_rank_complex(&self.inner)
    }

    #[pyo3(signature = (r, backend = "formula"))]
    fn exists(&self, r: usize, backend: &str) -> PyResult<bool> {
        let b = match backend {
            "formula" => Backend::Formula,
            "oracle" => Backend::Oracle,
            other => return Err(PyValueError::new_err(format!("unknown backend {other:?}"))),
        };
        rank::exists_presymplectic(&self.inner, r, b).map_err(err)
    }

    /// `(admissible, clause code)`.
    fn symplectic(&self) -> PyResult<(bool, &'static str)> {
        let (ok, c) = rank::symplectic_admissible(&self.inner).map_err(err)?;
        Ok((ok, c.code()))
    }

    fn spec_hash(&self) -> String {
        io::spec_hash(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Spec({})", self.to_json())
    }
}

/// An exact rational matrix.
#[pyclass(name = "Matrix", module = "closedforms_py", frozen)]
pub struct PyMatrix {
    inner: RationalMatrix,
}

#[pymethods]
impl PyMatrix {
    /// Rows of ints or "p/q" strings.
    #[staticmethod]
    fn from_rows(rows: Vec<Vec<Bound<'_, PyAny>>>) -> PyResult<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = RationalMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(PyValueError::new_err("ragged rows"));
            }
            for (j, x) in row.iter().enumerate() {
                m[(i, j)] = number(x)?;
            }
        }
        Ok(PyMatrix { inner: m })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyMatrix { inner: io::matrix_from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        io::matrix_to_json(&self.inner).to_string()
    }

    /// Entries as "p/q" strings.
    fn to_rows(&self) -> Vec<Vec<String>> {
        (0..self.inner.rows()).map(|i| (0..self.inner.cols()).map(|j| self.inner[(i, j)].to_string()).collect()).collect()
    }

    fn to_floats(&self) -> Vec<Vec<f64>> {
        let f = self.inner.to_float();
        (0..f.rows).map(|i| (0..f.cols).map(|j| f[(i, j)]).collect()).collect()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.rows(), self.inner.cols())
    }

    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn is_skew(&self) -> bool {
        self.inner.is_skew()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Matrix({})", self.to_json())
    }
}

fn wrap(m: RationalMatrix) -> PyMatrix {
    PyMatrix { inner: m }
}

fn solution(spec: &PySpec, b: &PyMatrix) -> PyResult<StructuredSolution> {
    StructuredSolution::new(b.inner.clone(), &spec.inner).map_err(err)
}

/// Maximal-rank solution `B` of the Lyapunov-type equation.
#[pyfunction]
fn construct_max(spec: &PySpec) -> PyResult<PyMatrix> {
    Ok(wrap(constructor::construct_max(&spec.inner).map_err(err)?.matrix))
}

#[pyfunction]
fn lower_rank(spec: &PySpec, b: &PyMatrix, target: usize) -> PyResult<PyMatrix> {
    let sol = solution(spec, b)?;
    Ok(wrap(constructor::lower_rank(&sol, target, &spec.inner).map_err(err)?.matrix))
}

/// Returns `(form, v_in_image)`.
#[pyfunction]
#[pyo3(signature = (spec, b, rank, seed = 0))]
fn lift(spec: &PySpec, b: &PyMatrix, rank: usize, seed: u64) -> PyResult<(PyMatrix, bool)> {
    let sol = solution(spec, b)?;
    let f = constructor::lift(&sol, rank, &spec.inner, seed).map_err(err)?;
    Ok((wrap(f.matrix), f.v_in_image))
}

/// A closed 2-form of the requested rank.
#[pyfunction]
#[pyo3(signature = (spec, rank, seed = 0))]
fn construct(spec: &PySpec, rank: usize, seed: u64) -> PyResult<PyMatrix> {
    Ok(wrap(constructor::construct_form(&spec.inner, rank, seed).map_err(err)?.matrix))
}

#[pyfunction]
fn check_closed(spec: &PySpec, form: &PyMatrix) -> PyResult<bool> {
    Ok(constructor::check_closed(&form.inner, &spec.inner).map_err(err)?.closed)
}

/// Canonical reduction of a maximal-rank minor `B`.
#[pyfunction]
fn reduce<'py>(py: Python<'py>, spec: &PySpec, b: &PyMatrix) -> PyResult<Bound<'py, PyDict>> {
    let sol = solution(spec, b)?;
    let (res, trace) = reducer::reduce_to_canonical(&sol, &spec.inner).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("permutation", res.permutation.images().to_vec())?;
    d.set_item("rank", res.rank)?;
    d.set_item("residual", res.residual)?;
    d.set_item("sign_pattern", res.sign_pattern.clone())?;
    d.set_item("b_canonical", wrap(res.b_canonical))?;
    d.set_item("canonical_matrix", wrap(res.canonical_matrix))?;
    d.set_item("steps", trace.steps.iter().map(|s| s.tag.name()).collect::<Vec<_>>())?;
    Ok(d)
}

/// Permutation class of a symplectic form.
#[pyfunction]
fn moduli<'py>(py: Python<'py>, spec: &PySpec, form: &PyMatrix) -> PyResult<Bound<'py, PyDict>> {
    let c = reducer::moduli_class_of(&form.inner, &spec.inner).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("permutation", c.permutation.images().to_vec())?;
    d.set_item("pairs", c.pairs.clone())?;
    d.set_item("residual", c.residual)?;
    d.set_item("canonical_form", wrap(c.canonical_form))?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (spec, trials = 25, seed = 0))]
fn generic_rank(spec: &PySpec, trials: usize, seed: u64) -> PyResult<usize> {
    oracle::generic_rank(&spec.inner, trials, seed).map_err(err)
}

/// Oracle report as a JSON string.
#[pyfunction]
#[pyo3(signature = (spec, trials = 25, seed = 0))]
fn oracle_report(spec: &PySpec, trials: usize, seed: u64) -> PyResult<String> {
    let r = oracle::report(&spec.inner, trials, seed).map_err(err)?;
    Ok(io::report_to_json(&r).to_string())
}

#[pymodule]
fn closedforms_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_class::<PyMatrix>()?;
    m.add_function(wrap_pyfunction!(construct_max, m)?)?;
    m.add_function(wrap_pyfunction!(lower_rank, m)?)?;
    m.add_function(wrap_pyfunction!(lift, m)?)?;
    m.add_function(wrap_pyfunction!(construct, m)?)?;
    m.add_function(wrap_pyfunction!(check_closed, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(moduli, m)?)?;
    m.add_function(wrap_pyfunction!(generic_rank, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_report, m)?)?;
    Ok(())
}
