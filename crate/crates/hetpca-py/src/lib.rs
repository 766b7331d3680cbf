//! Python module `hetpca`: predictions, simulations and sweeps from the Rust core.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hetpca::asymptotics::RecoveryRegime;
use hetpca::datagen::{generate, DatasetSpec, NoiseDist};
use hetpca::export::write_dataset;
use hetpca::harness::{self, SweepConfig, CSV_HEADER};
use hetpca::{ComponentPrediction, Error, NoiseProfile, SpectrumParams};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        Error::Internal(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    py_err(Error::from(e))
}

/// Parses serialized JSON into Python objects with the standard `json` module.
fn loads(py: Python<'_>, text: String) -> PyResult<Bound<'_, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_name<T: serde::de::DeserializeOwned>(what: &str, name: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown {what} '{name}'")))
}

#[pyclass(name = "NoiseProfile", module = "hetpca", frozen)]
struct PyNoiseProfile {
    inner: NoiseProfile,
}

#[pymethods]
impl PyNoiseProfile {
    /// Variance levels with their proportions; equal proportions when omitted.
    #[new]
    #[pyo3(signature = (variances, proportions = None))]
    fn new(variances: Vec<f64>, proportions: Option<Vec<f64>>) -> PyResult<Self> {
        let proportions = proportions.unwrap_or_else(|| vec![1.0 / variances.len().max(1) as f64; variances.len()]);
        Ok(Self { inner: NoiseProfile::new(variances, proportions).map_err(py_err)? })
    }

    #[staticmethod]
    fn homoscedastic(variance: f64) -> PyResult<Self> {
        Ok(Self { inner: NoiseProfile::homoscedastic(variance).map_err(py_err)? })
    }

    #[getter]
    fn variances(&self) -> Vec<f64> {
        self.inner.variances().to_vec()
    }

    #[getter]
    fn proportions(&self) -> Vec<f64> {
        self.inner.proportions().to_vec()
    }

    fn mean_variance(&self) -> f64 {
        self.inner.mean_variance()
    }

    fn average_inverse_variance(&self) -> PyResult<f64> {
        self.inner.average_inverse_variance().map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("NoiseProfile(variances={:?}, proportions={:?})", self.inner.variances(), self.inner.proportions())
    }
}

#[pyclass(name = "ComponentPrediction", module = "hetpca", frozen, get_all)]
struct PyComponentPrediction {
    alpha: f64,
    beta: f64,
    a_at_beta: f64,
    above_transition: bool,
    amplitude_sq_limit: f64,
    amplitude_sq_ratio: f64,
    subspace_recovery: f64,
    coefficient_recovery: f64,
    mixed_recovery: f64,
    /// "theorem" above the transition, "conjectured" below it.
    regime: &'static str,
}

impl From<ComponentPrediction> for PyComponentPrediction {
    fn from(p: ComponentPrediction) -> Self {
        Self {
            alpha: p.alpha,
            beta: p.beta,
            a_at_beta: p.a_at_beta,
            above_transition: p.above_transition,
            amplitude_sq_limit: p.amplitude_sq_limit,
            amplitude_sq_ratio: p.amplitude_sq_ratio,
            subspace_recovery: p.subspace_recovery,
            coefficient_recovery: p.coefficient_recovery,
            mixed_recovery: p.mixed_recovery,
            regime: match p.regime {
                RecoveryRegime::Theorem => "theorem",
                RecoveryRegime::Conjectured => "conjectured",
            },
        }
    }
}

#[pymethods]
impl PyComponentPrediction {
    fn __repr__(&self) -> String {
        format!(
            "ComponentPrediction(subspace_recovery={}, coefficient_recovery={}, amplitude_sq_ratio={}, above_transition={})",
            self.subspace_recovery, self.coefficient_recovery, self.amplitude_sq_ratio, self.above_transition
        )
    }
}

fn params(c: f64, theta_sq: f64, noise: &PyNoiseProfile) -> PyResult<SpectrumParams> {
    SpectrumParams::new(c, theta_sq, noise.inner.clone()).map_err(py_err)
}

/// Largest root of `A(x)`.
#[pyfunction]
fn solve_alpha(c: f64, noise: PyRef<'_, PyNoiseProfile>) -> PyResult<f64> {
    hetpca::solve_alpha(c, &noise.inner).map_err(py_err)
}

/// Largest root of `B(x)` for a component with squared amplitude `theta_sq`.
#[pyfunction]
fn solve_beta(c: f64, theta_sq: f64, noise: PyRef<'_, PyNoiseProfile>) -> PyResult<f64> {
    hetpca::solve_beta(&params(c, theta_sq, &noise)?).map_err(py_err)
}

#[pyfunction]
fn predict_component(c: f64, theta_sq: f64, noise: PyRef<'_, PyNoiseProfile>) -> PyResult<PyComponentPrediction> {
    Ok(hetpca::predict_component(&params(c, theta_sq, &noise)?).map_err(py_err)?.into())
}

#[pyfunction]
fn predict_homoscedastic(c: f64, theta_sq: f64, sigma_sq: f64) -> PyResult<PyComponentPrediction> {
    Ok(hetpca::predict_homoscedastic(c, theta_sq, sigma_sq).map_err(py_err)?.into())
}

/// `{name: (residual, passed)}` for every consistency identity at these parameters.
#[pyfunction]
fn check_spectrum_identities<'py>(
    py: Python<'py>,
    c: f64,
    theta_sq: f64,
    noise: PyRef<'_, PyNoiseProfile>,
) -> PyResult<Bound<'py, PyDict>> {
    let report = hetpca::check_spectrum_identities(&params(c, theta_sq, &noise)?).map_err(py_err)?;
    let out = PyDict::new(py);
    for check in &report.checks {
        out.set_item(check.name, (check.value, check.passed))?;
    }
    Ok(out)
}

/// Full prediction report for amplitudes `θ_i` (not squared), as a dict.
#[pyfunction]
fn predict<'py>(py: Python<'py>, c: f64, amplitudes: Vec<f64>, noise: PyRef<'_, PyNoiseProfile>) -> PyResult<Bound<'py, PyAny>> {
    let report = harness::predict_report(c, &amplitudes, &noise.inner).map_err(py_err)?;
    loads(py, serde_json::to_string(&report).map_err(json_err)?)
}

#[allow(clippy::too_many_arguments)]
fn dataset_spec(
    n: usize,
    d: usize,
    amplitudes: Vec<f64>,
    noise: &PyNoiseProfile,
    field: &str,
    coeff_dist: &str,
    assignment: &str,
    seed: u64,
) -> PyResult<DatasetSpec> {
    let spec = DatasetSpec {
        n,
        d,
        amplitudes,
        noise: noise.inner.clone(),
        field: parse_name("field", field)?,
        coeff_dist: parse_name("coefficient distribution", coeff_dist)?,
        noise_dist: NoiseDist::Gaussian,
        assignment: parse_name("assignment", assignment)?,
        seed,
        retain_noise: false,
    };
    spec.validate().map_err(py_err)?;
    Ok(spec)
}

/// One seeded dataset: empirical metrics next to the prediction at `c = n/d`.
#[pyfunction]
#[pyo3(signature = (n, d, amplitudes, noise, field = "real", coeff_dist = "gaussian", assignment = "deterministic", seed = 0))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    n: usize,
    d: usize,
    amplitudes: Vec<f64>,
    noise: PyRef<'_, PyNoiseProfile>,
    field: &str,
    coeff_dist: &str,
    assignment: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = dataset_spec(n, d, amplitudes, &noise, field, coeff_dist, assignment, seed)?;
    let report = py.detach(|| harness::simulate(&spec)).map_err(py_err)?;
    loads(py, serde_json::to_string(&report).map_err(json_err)?)
}

/// Writes a generated dataset in the binary export format, with its JSON sidecar.
#[pyfunction]
#[pyo3(signature = (path, n, d, amplitudes, noise, field = "real", coeff_dist = "gaussian", assignment = "deterministic", seed = 0))]
#[allow(clippy::too_many_arguments)]
fn export_dataset(
    py: Python<'_>,
    path: PathBuf,
    n: usize,
    d: usize,
    amplitudes: Vec<f64>,
    noise: PyRef<'_, PyNoiseProfile>,
    field: &str,
    coeff_dist: &str,
    assignment: &str,
    seed: u64,
) -> PyResult<()> {
    let spec = dataset_spec(n, d, amplitudes, &noise, field, coeff_dist, assignment, seed)?;
    py.detach(|| write_dataset(&path, &generate(&spec)?)).map_err(py_err)
}

fn run_sweep(py: Python<'_>, config_json: &str, threads: usize) -> PyResult<Vec<harness::TrialSummary>> {
    let config = SweepConfig::from_json(config_json).map_err(py_err)?;
    py.detach(|| harness::run_sweep(&config, threads)).map_err(py_err)
}

/// Sweep rows as a list of dicts; `config_json` uses the CLI configuration format.
#[pyfunction]
#[pyo3(signature = (config_json, threads = 0))]
fn sweep<'py>(py: Python<'py>, config_json: &str, threads: usize) -> PyResult<Bound<'py, PyAny>> {
    let rows = run_sweep(py, config_json, threads)?;
    loads(py, serde_json::to_string(&rows).map_err(json_err)?)
}

/// Sweep rows as CSV text, byte-identical to `hetpca sweep`.
#[pyfunction]
#[pyo3(signature = (config_json, threads = 0))]
fn sweep_csv(py: Python<'_>, config_json: &str, threads: usize) -> PyResult<String> {
    let rows = run_sweep(py, config_json, threads)?;
    let mut out = Vec::new();
    harness::write_csv(&mut out, &rows).map_err(py_err)?;
    String::from_utf8(out).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
#[pyo3(name = "hetpca")]
fn hetpca_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNoiseProfile>()?;
    m.add_class::<PyComponentPrediction>()?;
    m.add("CSV_HEADER", CSV_HEADER)?;
    m.add_function(wrap_pyfunction!(solve_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(solve_beta, m)?)?;
    m.add_function(wrap_pyfunction!(predict_component, m)?)?;
    m.add_function(wrap_pyfunction!(predict_homoscedastic, m)?)?;
    m.add_function(wrap_pyfunction!(check_spectrum_identities, m)?)?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(export_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    Ok(())
}
