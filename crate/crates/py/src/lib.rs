//! Python bindings: closed forms, the tradeoff curve, the optimizer and
//! Monte-Carlo fidelities of the optimal instrument.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use tradeoff_core as core;

fn py_err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// One operating point of the optimal instrument.
#[pyclass(frozen, get_all, skip_from_py_object, module = "tradeoff")]
#[derive(Clone)]
struct TradeoffPoint {
    a: f64,
    b: f64,
    #[pyo3(name = "F")]
    f: f64,
    #[pyo3(name = "G")]
    g: f64,
    #[pyo3(name = "I")]
    info: f64,
    #[pyo3(name = "D")]
    disturbance: f64,
}

impl From<core::TradeoffPoint> for TradeoffPoint {
    fn from(p: core::TradeoffPoint) -> Self {
        Self {
            a: p.a,
            b: p.b,
            f: p.f,
            g: p.g,
            info: p.info,
            disturbance: p.disturbance,
        }
    }
}

#[pymethods]
impl TradeoffPoint {
    fn __repr__(&self) -> String {
        format!(
            "TradeoffPoint(a={}, b={}, F={}, G={}, I={}, D={})",
            self.a, self.b, self.f, self.g, self.info, self.disturbance
        )
    }
}

/// Monte-Carlo estimate with its standard error.
#[pyclass(frozen, get_all, skip_from_py_object, module = "tradeoff")]
#[derive(Clone)]
struct Estimate {
    value: f64,
    stderr: f64,
    n_samples: usize,
    seed: u64,
}

impl From<core::McEstimate> for Estimate {
    fn from(e: core::McEstimate) -> Self {
        Self {
            value: e.value,
            stderr: e.stderr,
            n_samples: e.n_samples,
            seed: e.seed,
        }
    }
}

#[pymethods]
impl Estimate {
    /// Deviation from `target` in standard errors.
    fn sigmas_from(&self, target: f64) -> f64 {
        core::haar::sigmas(self.value - target, self.stderr)
    }

    fn __repr__(&self) -> String {
        format!("Estimate({} +- {})", self.value, self.stderr)
    }
}

/// Solution of the eigenvalue problem for weight `p`.
#[pyclass(frozen, get_all, skip_from_py_object, module = "tradeoff")]
struct Optimum {
    p: f64,
    x: f64,
    y: f64,
    point: TradeoffPoint,
    eigenvalue: f64,
    form_residual: f64,
    degenerate: Option<bool>,
}

/// Kraus instrument on two `d`-level systems.
#[pyclass(frozen, module = "tradeoff")]
struct Instrument {
    inner: core::KrausInstrument,
}

fn to_rows(m: &core::ComplexMatrix) -> Vec<Vec<Complex64>> {
    m.data().chunks(m.cols()).map(|r| r.to_vec()).collect()
}

#[pymethods]
impl Instrument {
    /// The `d^2`-outcome optimal instrument over the Weyl basis.
    #[staticmethod]
    fn optimal(a: f64, d: usize) -> PyResult<Self> {
        let params = core::OptimalParams::new(a, d).map_err(py_err)?;
        let inner = core::optimal_discrete_instrument(&params).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// The single-outcome instrument that does nothing.
    #[staticmethod]
    fn identity(d: usize) -> PyResult<Self> {
        core::KrausInstrument::identity(d)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn povm_element(&self, r: usize) -> PyResult<Vec<Vec<Complex64>>> {
        if r >= self.inner.len() {
            return Err(PyValueError::new_err(format!("no outcome {r}")));
        }
        Ok(to_rows(&self.inner.povm_element(r)))
    }

    fn completeness_deviation(&self) -> f64 {
        self.inner.completeness_deviation()
    }

    fn min_povm_eigenvalue(&self) -> PyResult<f64> {
        self.inner.min_povm_eigenvalue().map_err(py_err)
    }

    /// Monte-Carlo `(F, G)` over `samples` Haar-random inputs.
    fn mc_fidelities(
        &self,
        py: Python<'_>,
        samples: usize,
        seed: u64,
    ) -> PyResult<(Estimate, Estimate)> {
        let stream = core::SeededStream::new(seed, 0);
        let (f, g) = py
            .detach(|| core::mc_fidelities(&self.inner, samples, stream))
            .map_err(py_err)?;
        Ok((f.into(), g.into()))
    }
}

#[pyfunction]
fn closed_form_f(a: f64, d: usize) -> PyResult<f64> {
    core::closed_form_f(a, d).map_err(py_err)
}

#[pyfunction]
fn closed_form_g(a: f64, d: usize) -> PyResult<f64> {
    core::closed_form_g(a, d).map_err(py_err)
}

#[pyfunction]
fn b_from_a(a: f64, d: usize) -> PyResult<f64> {
    core::b_from_a(a, d).map_err(py_err)
}

/// `(I, D)` from `(F, G)`.
#[pyfunction]
fn visibilities(f: f64, g: f64, d: usize) -> PyResult<(f64, f64)> {
    core::visibilities(f, g, d).map_err(py_err)
}

/// Residuals of the two tradeoff relations; both vanish on the curve.
#[pyfunction]
fn tradeoff_residuals(f: f64, g: f64, d: usize) -> PyResult<(f64, f64)> {
    core::tradeoff_residuals(f, g, d).map_err(py_err)
}

#[pyfunction]
fn tradeoff_point(a: f64, d: usize) -> PyResult<TradeoffPoint> {
    core::tradeoff_point(a, d).map(Into::into).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (d, points = 101))]
fn tradeoff_curve(d: usize, points: usize) -> PyResult<Vec<TradeoffPoint>> {
    core::tradeoff_curve(d, points)
        .map(|v| v.into_iter().map(Into::into).collect())
        .map_err(py_err)
}

#[pyfunction]
fn optimize(py: Python<'_>, p: f64, d: usize) -> PyResult<Optimum> {
    let r = py.detach(|| core::optimize(p, d)).map_err(py_err)?;
    Ok(Optimum {
        p: r.p,
        x: r.chi.x,
        y: r.chi.y,
        point: r.point.into(),
        eigenvalue: r.eigenvalue,
        form_residual: r.form_residual,
        degenerate: r.degenerate,
    })
}

#[pymodule]
fn tradeoff(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TradeoffPoint>()?;
    m.add_class::<Estimate>()?;
    m.add_class::<Optimum>()?;
    m.add_class::<Instrument>()?;
    m.add_function(wrap_pyfunction!(closed_form_f, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_g, m)?)?;
    m.add_function(wrap_pyfunction!(b_from_a, m)?)?;
    m.add_function(wrap_pyfunction!(visibilities, m)?)?;
    m.add_function(wrap_pyfunction!(tradeoff_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(tradeoff_point, m)?)?;
    m.add_function(wrap_pyfunction!(tradeoff_curve, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    Ok(())
}
