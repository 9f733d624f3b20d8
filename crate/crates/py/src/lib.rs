//! Python module `wentzell`: meshes, the discrete operator, its spectrum,
//! the semigroup and the 1D oracle. Vectors cross the boundary as lists of
//! floats indexed by mesh node.

use nalgebra::DVector;
use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;

use wentzell_core::dynamics::Semigroup;
use wentzell_core::oracle::{clamped_beam_eigenvalues, find_wentzell_eigenvalues_1d, scan_limit, BeamParams};
use wentzell_core::spectral::kernel_classify;
use wentzell_core::{DiscreteWentzellOperator, FieldSpec, KernelClass, ProblemData, SpectralDecomposition};

fn py_err(e: wentzell_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn vector(values: Vec<f64>, n: usize) -> PyResult<DVector<f64>> {
    if values.len() != n {
        return Err(PyValueError::new_err(format!("expected {n} nodal values, got {}", values.len())));
    }
    Ok(DVector::from_vec(values))
}

/// A float for a constant, or the JSON text of a field specification.
fn field(value: &Bound<'_, PyAny>) -> PyResult<FieldSpec> {
    if let Ok(v) = value.extract::<f64>() {
        return Ok(FieldSpec::constant(v));
    }
    let text: String = value.extract()?;
    FieldSpec::from_json(&text).map_err(py_err)
}

#[pyclass(name = "Mesh", module = "wentzell", frozen)]
struct PyMesh(wentzell_core::Mesh);

#[pymethods]
impl PyMesh {
    #[staticmethod]
    #[pyo3(signature = (a, b, n))]
    fn interval(a: f64, b: f64, n: usize) -> PyResult<Self> {
        wentzell_core::Mesh::interval(a, b, n).map(PyMesh).map_err(py_err)
    }

    #[staticmethod]
    fn unit_square(n: usize) -> PyResult<Self> {
        wentzell_core::Mesh::unit_square(n).map(PyMesh).map_err(py_err)
    }

    #[staticmethod]
    fn disk(rings: usize, sectors: usize) -> PyResult<Self> {
        wentzell_core::Mesh::polygonal_disk(rings, sectors).map(PyMesh).map_err(py_err)
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.0.dimension
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.0.node_count()
    }

    #[getter]
    fn nodes(&self) -> Vec<(f64, f64)> {
        self.0.nodes.iter().map(|p| (p[0], p[1])).collect()
    }

    #[getter]
    fn boundary_nodes(&self) -> Vec<usize> {
        self.0.boundary_nodes()
    }

    fn __repr__(&self) -> String {
        format!("Mesh(dimension={}, nodes={})", self.0.dimension, self.0.node_count())
    }
}

#[pyclass(name = "Operator", module = "wentzell", frozen)]
struct PyOperator(DiscreteWentzellOperator);

#[pymethods]
impl PyOperator {
    #[new]
    #[pyo3(signature = (mesh, alpha, beta, gamma, eta))]
    fn new(
        mesh: &PyMesh,
        alpha: &Bound<'_, PyAny>,
        beta: &Bound<'_, PyAny>,
        gamma: &Bound<'_, PyAny>,
        eta: f64,
    ) -> PyResult<Self> {
        let data = ProblemData {
            alpha: field(alpha)?,
            beta: field(beta)?,
            gamma: field(gamma)?,
            eta,
        };
        DiscreteWentzellOperator::build(&mesh.0, &data).map(PyOperator).map_err(py_err)
    }

    fn with_gamma(&self, gamma: &Bound<'_, PyAny>) -> PyResult<Self> {
        self.0.with_gamma(field(gamma)?).map(PyOperator).map_err(py_err)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.0.node_count()
    }

    /// Lower bound `min gamma` of the quadratic form.
    #[getter]
    fn gamma_floor(&self) -> f64 {
        self.0.gamma_floor()
    }

    fn quadratic_form(&self, u: Vec<f64>) -> PyResult<f64> {
        self.0.quadratic_form(&vector(u, self.0.node_count())?).map_err(py_err)
    }

    fn h_norm(&self, u: Vec<f64>) -> PyResult<f64> {
        Ok(self.0.h_norm(&vector(u, self.0.node_count())?))
    }

    fn rayleigh_quotient(&self, u: Vec<f64>) -> PyResult<f64> {
        self.0.rayleigh_quotient(&vector(u, self.0.node_count())?).map_err(py_err)
    }

    /// The `count` smallest eigenpairs; all of them when omitted.
    #[pyo3(signature = (count=None))]
    fn spectrum(&self, py: Python<'_>, count: Option<usize>) -> PyResult<PySpectrum> {
        let k = count.unwrap_or(self.0.node_count());
        py.detach(|| self.0.solve_spectrum(k)).map(PySpectrum).map_err(py_err)
    }
}

#[pyclass(name = "Spectrum", module = "wentzell", frozen)]
struct PySpectrum(SpectralDecomposition);

#[pymethods]
impl PySpectrum {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues.clone()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.0.residuals.clone()
    }

    #[getter]
    fn is_complete(&self) -> bool {
        self.0.is_complete()
    }

    fn eigenvector(&self, k: usize) -> PyResult<Vec<f64>> {
        if k >= self.0.len() {
            return Err(PyIndexError::new_err(format!("eigenvector {k} of {}", self.0.len())));
        }
        Ok(self.0.eigenvector(k).as_slice().to_vec())
    }

    /// `"zero"`, `"positive"` or `"negative"`.
    fn kernel_class(&self) -> PyResult<&'static str> {
        Ok(match kernel_classify(&self.0).map_err(py_err)? {
            KernelClass::ZeroEigenvalueConstantKernel => "zero",
            KernelClass::StrictlyPositive => "positive",
            KernelClass::NegativeFirstEigenvalue => "negative",
        })
    }

    fn orthonormality_defect(&self) -> f64 {
        self.0.orthonormality_defect()
    }

    /// `T(t) f` from the spectral expansion.
    fn apply(&self, f: Vec<f64>, t: f64) -> PyResult<Vec<f64>> {
        let f = vector(f, self.0.eigenvectors.nrows())?;
        let semigroup = Semigroup::new(&self.0).map_err(py_err)?;
        Ok(semigroup.apply(&f, t).map_err(py_err)?.into_inner().as_slice().to_vec())
    }

    /// Diagnostics of `T(t) f` on `times`: a dict of lists keyed by
    /// `times`, `h_norm`, `min_value`, `max_value`, `sup_norm`, `tail_bound`.
    fn evolve<'py>(&self, py: Python<'py>, f: Vec<f64>, times: Vec<f64>) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
        let f = vector(f, self.0.eigenvectors.nrows())?;
        let semigroup = Semigroup::new(&self.0).map_err(py_err)?;
        let result = semigroup.evolve(&f, &times).map_err(py_err)?;
        let dict = pyo3::types::PyDict::new(py);
        dict.set_item("times", result.times)?;
        dict.set_item("h_norm", result.h_norm)?;
        dict.set_item("min_value", result.min_value)?;
        dict.set_item("max_value", result.max_value)?;
        dict.set_item("sup_norm", result.sup_norm)?;
        dict.set_item("tail_bound", result.tail_bound)?;
        Ok(dict)
    }
}

/// Smallest `count` eigenvalues of the 1D problem on `[0, length]` from the
/// characteristic determinant.
#[pyfunction]
fn oracle_eigenvalues(length: f64, alpha: f64, beta: f64, gamma: f64, count: usize) -> PyResult<Vec<f64>> {
    let params = BeamParams::new(length, alpha, beta, gamma).map_err(py_err)?;
    find_wentzell_eigenvalues_1d(&params, count, scan_limit(&params, count)).map_err(py_err)
}

/// Eigenvalues of the clamped beam on `[0, length]`.
#[pyfunction]
fn clamped_eigenvalues(alpha: f64, length: f64, count: usize) -> Vec<f64> {
    clamped_beam_eigenvalues(alpha, length, count)
}

#[pymodule]
fn wentzell(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyOperator>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(oracle_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(clamped_eigenvalues, m)?)?;
    Ok(())
}
