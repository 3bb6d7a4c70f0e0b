//! Python bindings for the band-limited H2 norm toolkit.
//!
//! Exposes the state-space model type plus the norm, sweep, and model
//! generation entry points. Matrices cross the boundary as nested lists of
//! floats; poles and transfer-function values as Python complex numbers.

use h2wkit::gramian::{h2_gramian, h2w_gramian};
use h2wkit::io::{load_model_path, save_model_path, SpectrumSpec};
use h2wkit::model::default_imag_tol;
use h2wkit::quadrature::h2w_quadrature;
use h2wkit::spectral::{h2_spectral, h2w_band, h2w_limit, h2w_spectral, LimitRegime, NormResult};
use h2wkit::{
    classify_poles, eval_transfer, spectral_decompose, Backend, Error, FrequencyBand,
    StateSpaceModel,
};
use ndarray::Array2;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match &e {
        Error::Backend(_)
        | Error::ToleranceExceeded { .. }
        | Error::NonConvergence { .. }
        | Error::LyapunovSingular(_)
        | Error::SingularShift { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_backend(text: &str) -> PyResult<Backend> {
    match text {
        "spectral" => Ok(Backend::Spectral),
        "gramian" => Ok(Backend::Gramian),
        "quadrature" => Ok(Backend::Quadrature),
        _ => Err(PyValueError::new_err(format!(
            "backend must be 'spectral', 'gramian' or 'quadrature', got '{text}'"
        ))),
    }
}

fn parse_spectrum(text: &str) -> PyResult<SpectrumSpec> {
    let (kind, param) = match text.split_once(':') {
        Some((k, p)) => (k, Some(p)),
        None => (text, None),
    };
    match (kind, param) {
        ("stable", None) => Ok(SpectrumSpec::Stable),
        ("antistable", None) => Ok(SpectrumSpec::Antistable),
        ("mixed", Some(p)) => p
            .parse()
            .map(|unstable_fraction| SpectrumSpec::Mixed { unstable_fraction })
            .map_err(|_| PyValueError::new_err(format!("invalid mixed fraction '{p}'"))),
        ("light", Some(p)) => p
            .parse()
            .map(|zeta_max| SpectrumSpec::LightlyDamped { zeta_max })
            .map_err(|_| PyValueError::new_err(format!("invalid damping bound '{p}'"))),
        _ => Err(PyValueError::new_err(format!(
            "spectrum must be 'stable', 'antistable', 'mixed:<fraction>' or 'light:<zeta-max>', got '{text}'"
        ))),
    }
}

fn matrix_from_rows(name: &str, rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(format!(
            "matrix {name} has ragged rows"
        )));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| PyValueError::new_err(format!("matrix {name}: {e}")))
    }

fn matrix_to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Outcome of one norm evaluation.
#[pyclass(frozen)]
struct NormEvaluation {
    #[pyo3(get)]
    value_sq: f64,
    #[pyo3(get)]
    value: f64,
    #[pyo3(get)]
    imag_residual: f64,
    #[pyo3(get)]
    backend: String,
    #[pyo3(get)]
    elapsed_s: f64,
    /// True when the model has poles in the closed right half-plane, so the
    /// band value is a frequency-domain integral but not an H2 quantity.
    #[pyo3(get)]
    no_h2_interpretation: bool,
}

impl From<NormResult> for NormEvaluation {
    fn from(r: NormResult) -> Self {
        NormEvaluation {
            value_sq: r.value_sq,
            value: r.value,
            imag_residual: r.imag_residual,
            backend: r.backend.to_string(),
            elapsed_s: r.elapsed.as_secs_f64(),
            no_h2_interpretation: r.no_h2_interpretation,
        }
    }
}

#[pymethods]
impl NormEvaluation {
    fn __repr__(&self) -> String {
        format!(
            "NormEvaluation(value_sq={:.16e}, value={:.16e}, backend='{}')",
            self.value_sq, self.value, self.backend
        )
    }
}

/// A continuous-time LTI state-space model (A, B, C, D).
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Model {
    inner: StateSpaceModel,
    #[pyo3(get)]
    name: Option<String>,
}

#[pymethods]
impl Model {
    #[new]
    #[pyo3(signature = (a, b, c, d=None))]
    fn new(
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        d: Option<Vec<Vec<f64>>>,
    ) -> PyResult<Self> {
        let a = matrix_from_rows("A", a)?;
        let b = matrix_from_rows("B", b)?;
        let c = matrix_from_rows("C", c)?;
        let d = match d {
            Some(rows) => matrix_from_rows("D", rows)?,
            None => Array2::zeros((c.nrows(), b.ncols())),
        };
        let inner = StateSpaceModel::new(a, b, c, d).map_err(py_err)?;
        Ok(Model { inner, name: None })
    }

    /// Read a model from the text format written by `save`.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = load_model_path(path).map_err(py_err)?;
        Ok(Model {
            inner: file.model,
            name: Some(file.name),
        })
    }

    /// Write the model; entries keep full precision across a round trip.
    #[pyo3(signature = (path, name=None))]
    fn save(&self, path: &str, name: Option<&str>) -> PyResult<()> {
        let name = name
            .map(str::to_string)
            .or_else(|| self.name.clone())
            .unwrap_or_else(|| "model".to_string());
        save_model_path(&self.inner, &name, path).map_err(py_err)
    }

    /// Draw a random model with simple poles. `spectrum` is one of
    /// 'stable', 'antistable', 'mixed:<fraction>', 'light:<zeta-max>'.
    #[staticmethod]
    #[pyo3(signature = (n, nu=1, ny=1, spectrum="stable", seed=0, feedthrough=false))]
    fn random(
        n: usize,
        nu: usize,
        ny: usize,
        spectrum: &str,
        seed: u64,
        feedthrough: bool,
    ) -> PyResult<Self> {
        let spec = parse_spectrum(spectrum)?;
        let inner = if feedthrough {
            h2wkit::io::random_model_with_feedthrough(n, nu, ny, spec, seed)
        } else {
            h2wkit::io::random_model(n, nu, ny, spec, seed)
        }
        .map_err(py_err)?;
        Ok(Model { inner, name: None })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn nu(&self) -> usize {
        self.inner.nu()
    }

    #[getter]
    fn ny(&self) -> usize {
        self.inner.ny()
    }

    #[getter]
    fn a(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.a())
    }

    #[getter]
    fn b(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.b())
    }

    #[getter]
    fn c(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.c())
    }

    #[getter]
    fn d(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.d())
    }

    /// Eigenvalues of A (the poles), as complex numbers.
    fn poles(&self) -> PyResult<Vec<Complex64>> {
        let spec = spectral_decompose(&self.inner).map_err(py_err)?;
        Ok(spec.eigenvalues().to_vec())
    }

    /// Transfer function value H(s) = C (sI - A)^{-1} B + D.
    fn transfer(&self, s: Complex64) -> PyResult<Vec<Vec<Complex64>>> {
        let h = eval_transfer(&self.inner, s).map_err(py_err)?;
        Ok(h.rows().into_iter().map(|r| r.to_vec()).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(n={}, nu={}, ny={}{})",
            self.inner.n(),
            self.inner.nu(),
            self.inner.ny(),
            self.name
                .as_deref()
                .map(|n| format!(", name='{n}'"))
                .unwrap_or_default()
        )
    }
}

/// Squared H2 norm (and norm) of a stable, strictly proper model.
#[pyfunction]
#[pyo3(signature = (model, backend="spectral"))]
fn h2(model: &Model, backend: &str) -> PyResult<NormEvaluation> {
    let r = match parse_backend(backend)? {
        Backend::Spectral => {
            let spec = spectral_decompose(&model.inner).map_err(py_err)?;
            h2_spectral(&spec, &model.inner).map_err(py_err)?
        }
        Backend::Gramian => h2_gramian(&model.inner).map_err(py_err)?,
        Backend::Quadrature => {
            return Err(PyValueError::new_err(
                "the quadrature backend integrates finite bands only; use h2w",
            ))
        }
    };
    Ok(r.into())
}

/// Band norm over [-omega, omega].
#[pyfunction]
#[pyo3(signature = (model, omega, backend="spectral", tol=1e-9))]
fn h2w(model: &Model, omega: f64, backend: &str, tol: f64) -> PyResult<NormEvaluation> {
    let r = match parse_backend(backend)? {
        Backend::Spectral => {
            let spec = spectral_decompose(&model.inner).map_err(py_err)?;
            h2w_spectral(&spec, model.inner.d(), omega).map_err(py_err)?
        }
        Backend::Gramian => h2w_gramian(&model.inner, omega).map_err(py_err)?,
        Backend::Quadrature => {
            let band = FrequencyBand::upto(omega).map_err(py_err)?;
            h2w_quadrature(&model.inner, &band, tol).map_err(py_err)?
        }
    };
    Ok(r.into())
}

/// Band norm over the two-sided interval band [lo, hi] in |frequency|.
#[pyfunction]
#[pyo3(signature = (model, lo, hi, backend="spectral", tol=1e-9))]
fn h2w_interval(model: &Model, lo: f64, hi: f64, backend: &str, tol: f64) -> PyResult<NormEvaluation> {
    let band = FrequencyBand::new(lo, hi).map_err(py_err)?;
    let r = match parse_backend(backend)? {
        Backend::Spectral => {
            let spec = spectral_decompose(&model.inner).map_err(py_err)?;
            h2w_band(&spec, model.inner.d(), &band).map_err(py_err)?
        }
        Backend::Quadrature => h2w_quadrature(&model.inner, &band, tol).map_err(py_err)?,
        Backend::Gramian => {
            let hi_r = h2w_gramian(&model.inner, band.omega_hi()).map_err(py_err)?;
            let lo_r = h2w_gramian(&model.inner, band.omega_lo()).map_err(py_err)?;
            let value_sq = (hi_r.value_sq - lo_r.value_sq).max(0.0);
            return Ok(NormEvaluation {
                value_sq,
                value: value_sq.sqrt(),
                imag_residual: hi_r.imag_residual.max(lo_r.imag_residual),
                backend: "gramian".to_string(),
                elapsed_s: (hi_r.elapsed + lo_r.elapsed).as_secs_f64(),
                no_h2_interpretation: false,
            });
        }
    };
    Ok(r.into())
}

/// Behavior of the band norm as the band edge grows without bound:
/// ('stable', h2_sq), ('finite', limit_sq), or ('infinite', None).
#[pyfunction]
fn wide_band_limit(model: &Model) -> PyResult<(String, Option<f64>)> {
    let spec = spectral_decompose(&model.inner).map_err(py_err)?;
    let cls = classify_poles(spec.eigenvalues(), default_imag_tol(spec.eigenvalues()));
    let lim = h2w_limit(&spec, &cls);
    let regime = match lim.regime {
        LimitRegime::Stable => "stable",
        LimitRegime::UnstableFinite => "finite",
        LimitRegime::ImaginaryInfinite => "infinite",
    };
    Ok((regime.to_string(), lim.value_sq))
}

/// Evaluate the band norm on a grid of edges; returns
/// [(omega, value_sq, value), ...]. The spectral backend decomposes once.
#[pyfunction]
#[pyo3(signature = (model, grid, backend="spectral", tol=1e-9, parallel=false))]
fn sweep(
    model: &Model,
    grid: Vec<f64>,
    backend: &str,
    tol: f64,
    parallel: bool,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let backend = parse_backend(backend)?;
    let rows = h2wkit::sweep::sweep(&model.inner, &grid, backend, tol, parallel).map_err(py_err)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.omega, r.value_sq, r.value))
        .collect())
}

#[pymodule]
fn h2wkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<NormEvaluation>()?;
    m.add_function(wrap_pyfunction!(h2, m)?)?;
    m.add_function(wrap_pyfunction!(h2w, m)?)?;
    m.add_function(wrap_pyfunction!(h2w_interval, m)?)?;
    m.add_function(wrap_pyfunction!(wide_band_limit, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
