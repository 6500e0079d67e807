//! Python bindings. Structured results are returned as JSON strings; use
//! `json.loads` on the Python side.

use ergohorizon::horizon::no_escape_check;
use ergohorizon::tangency::critical_points;
use ergohorizon::verify::{run_verify, VerifyOptions};
use ergohorizon::{fields, Family, HorizonConfig, ModelParams, PolarPoint};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn numerical(e: ergohorizon::Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn family(name: &str) -> PyResult<Family> {
    match name {
        "plus" | "+" => Ok(Family::Plus),
        "minus" | "-" => Ok(Family::Minus),
        _ => Err(PyValueError::new_err(format!("family must be 'plus' or 'minus', got {name:?}"))),
    }
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Log-vortex flow `ψ = A0 log r + eps r sinθ`.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: ModelParams,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (a0, eps, allow_radial = false))]
    fn new(a0: f64, eps: f64, allow_radial: bool) -> PyResult<Self> {
        let inner = if allow_radial { ModelParams::radial_allowed(a0, eps) } else { ModelParams::new(a0, eps) };
        inner.map(|inner| Self { inner }).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn a0(&self) -> f64 {
        self.inner.a0
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.eps
    }

    /// `"black_hole"` or `"white_hole"`.
    fn kind(&self) -> PyResult<String> {
        let kind = self.inner.singularity_coefficients().map_err(numerical)?.kind();
        Ok(json(&kind)?.trim_matches('"').to_string())
    }

    fn reversed(&self) -> Self {
        Self { inner: self.inner.reversed() }
    }

    /// `A² + B² − r²`; positive inside the ergoregion.
    fn ergo_fn(&self, r: f64, theta: f64) -> PyResult<f64> {
        self.inner.ergo_fn(PolarPoint { r, theta }).map_err(numerical)
    }

    /// Ergosphere radius `r0(θ)`.
    fn r0(&self, theta: f64) -> PyResult<f64> {
        self.inner.ergosphere_radius(theta).map_err(numerical)
    }

    fn velocity(&self, r: f64, theta: f64) -> PyResult<(f64, f64)> {
        let v = self.inner.velocity(PolarPoint { r, theta }).map_err(numerical)?;
        Ok((v[0], v[1]))
    }

    /// `(dr/dx0, dθ/dx0)` of the characteristic field of `family`.
    fn field(&self, r: f64, theta: f64, family_name: &str) -> PyResult<(f64, f64)> {
        let d = fields::rhs_polar(&self.inner, PolarPoint { r, theta }, family(family_name)?).map_err(numerical)?;
        Ok((d[0], d[1]))
    }

    /// Field in the chart `(t, θ)` with `t = √(A² + B² − r²)`.
    fn field_sqrt(&self, t: f64, theta: f64, family_name: &str) -> PyResult<(f64, f64)> {
        let d = fields::rhs_sqrtchart(&self.inner, [t, theta], family(family_name)?).map_err(numerical)?;
        Ok((d[0], d[1]))
    }

    fn __repr__(&self) -> String {
        format!("Model(a0={}, eps={})", self.inner.a0, self.inner.eps)
    }
}

/// Angles of the transversal tangential points, ascending in `[0, 2π)`.
#[pyfunction]
fn tangential_points(model: &PyModel) -> PyResult<Vec<f64>> {
    Ok(ergohorizon::find_tangential_points(&model.inner).map_err(numerical)?.points)
}

/// Linearization at a tangential point as JSON.
#[pyfunction]
#[pyo3(signature = (model, theta, family_name = "plus"))]
fn jacobian(model: &PyModel, theta: f64, family_name: &str) -> PyResult<String> {
    json(&ergohorizon::jacobian_at(&model.inner, theta, family(family_name)?).map_err(numerical)?)
}

/// Classified tangential points of one family as JSON.
#[pyfunction]
#[pyo3(signature = (model, family_name = "plus"))]
fn critical(model: &PyModel, family_name: &str) -> PyResult<String> {
    json(&critical_points(&model.inner, family(family_name)?).map_err(numerical)?)
}

/// Fate of the trajectory of `family` started at `(r, θ)`, e.g. `"fell_in"`.
#[pyfunction]
fn classify_fate(py: Python<'_>, model: &PyModel, r: f64, theta: f64, family_name: &str) -> PyResult<String> {
    let fam = family(family_name)?;
    let m = model.inner;
    let fate = py
        .detach(|| ergohorizon::classify_fate(&m, PolarPoint { r, theta }, fam, &HorizonConfig::default()))
        .map_err(numerical)?;
    Ok(fate.label().to_string())
}

/// Event horizon as JSON, including corners and separatrices. The
/// `no_escape_max` key holds the largest `v·ν + 1` over 256 samples.
#[pyfunction]
fn build_horizon(py: Python<'_>, model: &PyModel) -> PyResult<String> {
    let m = model.inner;
    let (h, ne) = py
        .detach(|| {
            let h = ergohorizon::build_horizon(&m, &HorizonConfig::default())?;
            let ne = no_escape_check(&m, &h, 256)?;
            Ok::<_, ergohorizon::Error>((h, ne))
        })
        .map_err(numerical)?;
    let mut v = serde_json::to_value(&h).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    v["no_escape_max"] = ne.max_violation.into();
    json(&v)
}

/// Full self-check with default tolerances as JSON.
#[pyfunction]
fn verify(py: Python<'_>, model: &PyModel) -> PyResult<String> {
    let m = model.inner;
    json(&py.detach(|| run_verify(&m, &VerifyOptions::default())).map_err(numerical)?)
}

#[pymodule]
fn ergohorizon_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(tangential_points, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian, m)?)?;
    m.add_function(wrap_pyfunction!(critical, m)?)?;
    m.add_function(wrap_pyfunction!(classify_fate, m)?)?;
    m.add_function(wrap_pyfunction!(build_horizon, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
