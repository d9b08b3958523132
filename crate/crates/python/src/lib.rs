// Copyright 2026 The ci-recon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Python bindings for the confidence-interval reconstruction toolkit.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use ci_recon::calibration::{self, CalibrationInput};
use ci_recon::ci::{self, CiMethod};
use ci_recon::corpus::{self, AnalysisConfig, MethodResult, PaperRecord};
use ci_recon::glm::{self, ModelDocument, SdModel as CoreSdModel, TrainingPair};
use ci_recon::{stats, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "ConfidenceInterval", frozen, from_py_object)]
#[derive(Clone)]
struct PyConfidenceInterval {
    #[pyo3(get)]
    lower: f64,
    #[pyo3(get)]
    upper: f64,
    #[pyo3(get)]
    alpha: f64,
    /// "parametric_t" or "bootstrap_percentile".
    #[pyo3(get)]
    method: &'static str,
    #[pyo3(get)]
    clamped: bool,
}

#[pymethods]
impl PyConfidenceInterval {
    #[getter]
    fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn __repr__(&self) -> String {
        format!(
            "ConfidenceInterval(lower={:.6}, upper={:.6}, alpha={}, method='{}')",
            self.lower, self.upper, self.alpha, self.method
        )
    }
}

impl From<ci::ConfidenceInterval> for PyConfidenceInterval {
    fn from(ci: ci::ConfidenceInterval) -> Self {
        Self {
            lower: ci.lower,
            upper: ci.upper,
            alpha: ci.alpha,
            method: match ci.method {
                CiMethod::ParametricT => "parametric_t",
                CiMethod::BootstrapPercentile => "bootstrap_percentile",
            },
            clamped: ci.clamped,
        }
    }
}

#[pyclass(name = "GlmFit", frozen, from_py_object)]
#[derive(Clone)]
struct PyGlmFit {
    inner: glm::GlmFit,
}

#[pymethods]
impl PyGlmFit {
    #[getter]
    fn coefficients(&self) -> (f64, f64, f64) {
        let [b0, b1, b2] = self.inner.coefficients;
        (b0, b1, b2)
    }
    #[getter]
    fn dispersion(&self) -> f64 {
        self.inner.dispersion
    }
    #[getter]
    fn deviance(&self) -> f64 {
        self.inner.deviance
    }
    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }
    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }
    #[getter]
    fn n_obs(&self) -> usize {
        self.inner.n_obs
    }

    /// Model document in the on-disk JSON format.
    fn to_json(&self) -> String {
        ModelDocument::from(&self.inner).to_json()
    }

    fn model(&self) -> PySdModel {
        PySdModel {
            inner: CoreSdModel::from(&self.inner),
        }
    }

    fn __repr__(&self) -> String {
        let [b0, b1, b2] = self.inner.coefficients;
        format!(
            "GlmFit(coefficients=({b0:.6}, {b1:.6}, {b2:.6}), converged={}, n_obs={})",
            self.inner.converged, self.inner.n_obs
        )
    }
}

/// SD model `exp(b0 + b1 x + b2 x^2)` on the percent scale.
#[pyclass(name = "SdModel", frozen, from_py_object)]
#[derive(Clone)]
struct PySdModel {
    inner: CoreSdModel,
}

#[pymethods]
impl PySdModel {
    #[new]
    #[pyo3(signature = (coefficients, clamp=true))]
    fn new(coefficients: (f64, f64, f64), clamp: bool) -> Self {
        Self {
            inner: CoreSdModel::new([coefficients.0, coefficients.1, coefficients.2]).with_clamp(clamp),
        }
    }

    /// The published model.
    #[staticmethod]
    #[pyo3(signature = (clamp=true))]
    fn paper(clamp: bool) -> Self {
        Self {
            inner: CoreSdModel::paper().with_clamp(clamp),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc = ModelDocument::from_json(text).map_err(to_py)?;
        Ok(Self {
            inner: CoreSdModel::from(&doc),
        })
    }

    #[getter]
    fn coefficients(&self) -> (f64, f64, f64) {
        let [b0, b1, b2] = self.inner.coefficients;
        (b0, b1, b2)
    }

    #[getter]
    fn clamp(&self) -> bool {
        self.inner.clamp
    }

    /// Predicted SD in percentage points for a mean DSC in percent.
    fn sd_pct(&self, dsc_mean_pct: f64) -> PyResult<f64> {
        self.inner.sd_pct(dsc_mean_pct).map_err(to_py)
    }

    /// Predicted SD on the fraction scale for a mean DSC in [0, 1].
    fn sd(&self, mean_dsc: f64) -> PyResult<f64> {
        self.inner.sd_fraction(mean_dsc).map_err(to_py)
    }
}

fn model_or_paper(model: Option<&PySdModel>) -> CoreSdModel {
    model.map(|m| m.inner).unwrap_or_else(CoreSdModel::paper)
}

#[pyfunction]
fn ln_gamma(x: f64) -> PyResult<f64> {
    stats::ln_gamma(x).map_err(to_py)
}

#[pyfunction]
fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> PyResult<f64> {
    stats::regularized_incomplete_beta(a, b, x).map_err(to_py)
}

#[pyfunction]
fn t_quantile(p: f64, df: f64) -> PyResult<f64> {
    stats::t_quantile(p, df).map_err(to_py)
}

/// Returns a dict with n, mean, sd (None for n = 1), median, q1, q3, min, max.
#[pyfunction]
fn summarize(py: Python<'_>, values: Vec<f64>) -> PyResult<Py<PyAny>> {
    let s = stats::summarize(&values).map_err(to_py)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("n", s.n)?;
    d.set_item("mean", s.mean)?;
    d.set_item("sd", s.sd)?;
    d.set_item("median", s.median)?;
    d.set_item("q1", s.q1)?;
    d.set_item("q3", s.q3)?;
    d.set_item("min", s.min)?;
    d.set_item("max", s.max)?;
    Ok(d.into_any().unbind())
}

#[pyfunction]
#[pyo3(signature = (coefficients, dsc_mean_pct, clamp=true))]
fn predict_sd_pct(coefficients: (f64, f64, f64), dsc_mean_pct: f64, clamp: bool) -> PyResult<f64> {
    glm::predict_sd_pct(&[coefficients.0, coefficients.1, coefficients.2], dsc_mean_pct, clamp).map_err(to_py)
}

/// Fit from `(dsc_mean_pct, sd_pct)` pairs.
#[pyfunction]
fn fit_gamma_log_glm(pairs: Vec<(f64, f64)>) -> PyResult<PyGlmFit> {
    let data = pairs
        .into_iter()
        .map(|(x, y)| TrainingPair::new(x, y))
        .collect::<ci_recon::Result<Vec<_>>>()
        .map_err(to_py)?;
    let inner = glm::fit_gamma_log_glm(&data).map_err(to_py)?;
    Ok(PyGlmFit { inner })
}

/// Model-based SD (fraction scale) for a mean DSC in [0, 1].
#[pyfunction]
#[pyo3(signature = (mean_dsc, model=None))]
fn approximate_sd(mean_dsc: f64, model: Option<&PySdModel>) -> PyResult<f64> {
    let report = ci::AggregateReport::new(mean_dsc, 1, None).map_err(to_py)?;
    ci::approximate_sd(&report, &model_or_paper(model)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (mean_dsc, sd, n, alpha=0.05, clamp=true))]
fn parametric_ci(mean_dsc: f64, sd: f64, n: usize, alpha: f64, clamp: bool) -> PyResult<PyConfidenceInterval> {
    ci::parametric_ci_with(mean_dsc, sd, n, alpha, clamp)
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (values, alpha=0.05, n_resamples=10_000, seed=42))]
fn bootstrap_ci(py: Python<'_>, values: Vec<f64>, alpha: f64, n_resamples: usize, seed: u64) -> PyResult<PyConfidenceInterval> {
    py.detach(|| ci::bootstrap_ci(&values, alpha, n_resamples, seed))
        .map(Into::into)
        .map_err(to_py)
}

/// Calibration over `(task_id, method_id, n, mean_dsc, observed_sd)` tuples.
/// Returns `(points, summary_json)` where points are
/// `(predicted_width, observed_width, n)`.
#[pyfunction]
#[pyo3(signature = (results, model=None, alpha=0.05, min_n=20))]
fn calibrate(
    results: Vec<(String, String, usize, f64, f64)>,
    model: Option<&PySdModel>,
    alpha: f64,
    min_n: usize,
) -> PyResult<(Vec<(f64, f64, usize)>, String)> {
    let inputs: Vec<CalibrationInput> = results
        .into_iter()
        .map(|(task_id, method_id, n, mean_dsc, observed_sd)| CalibrationInput {
            task_id,
            method_id,
            n,
            mean_dsc,
            observed_sd,
        })
        .collect();
    let (records, summary) = calibration::calibrate(&inputs, &model_or_paper(model), alpha, min_n).map_err(to_py)?;
    let points = calibration::export_calibration_points(&records)
        .into_iter()
        .map(|p| (p.predicted_width, p.observed_width, p.n))
        .collect();
    Ok((points, serde_json::to_string(&summary).expect("summary serializes")))
}

/// Corpus analysis over papers given as
/// `(paper_id, test_n, [(method_id, mean_dsc, sd_or_None), ...])`.
/// Returns the analysis as a JSON string.
#[pyfunction]
#[pyo3(signature = (papers, model=None, alpha=0.05, clamp=true, prefer_reported_sd=true))]
fn analyze_corpus(
    papers: Vec<(String, usize, Vec<(String, f64, Option<f64>)>)>,
    model: Option<&PySdModel>,
    alpha: f64,
    clamp: bool,
    prefer_reported_sd: bool,
) -> PyResult<String> {
    let papers: Vec<PaperRecord> = papers
        .into_iter()
        .map(|(paper_id, test_n, methods)| PaperRecord {
            paper_id,
            test_n,
            methods: methods
                .into_iter()
                .map(|(method_id, mean_dsc, reported_sd)| MethodResult {
                    method_id,
                    mean_dsc,
                    reported_sd,
                })
                .collect(),
        })
        .collect();
    let config = AnalysisConfig {
        alpha,
        clamp_ci: clamp,
        prefer_reported_sd,
    };
    let analysis = corpus::analyze_corpus(&papers, &model_or_paper(model), &config).map_err(to_py)?;
    Ok(serde_json::to_string(&analysis).expect("analysis serializes"))
}

#[pymodule]
fn ci_recon_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfidenceInterval>()?;
    m.add_class::<PyGlmFit>()?;
    m.add_class::<PySdModel>()?;
    m.add("PAPER_COEFFICIENTS", glm::PAPER_COEFFICIENTS.to_vec())?;
    m.add_function(wrap_pyfunction!(ln_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(regularized_incomplete_beta, m)?)?;
    m.add_function(wrap_pyfunction!(t_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(predict_sd_pct, m)?)?;
    m.add_function(wrap_pyfunction!(fit_gamma_log_glm, m)?)?;
    m.add_function(wrap_pyfunction!(approximate_sd, m)?)?;
    m.add_function(wrap_pyfunction!(parametric_ci, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_ci, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_corpus, m)?)?;
    Ok(())
}
