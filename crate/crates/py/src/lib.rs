//! Python module `ssiss_py`: certified bounds, special functions and the
//! experiment runner.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use ssiss::experiments::{run_experiment as run, ExperimentConfig, Scenario};
use ssiss::SsissError;

fn py_err(e: SsissError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// I_k(x0, ε0) = ∫ x^k exp(-(x - x0)²/ε0²) dx.
#[pyfunction]
pub fn gaussian_integral(k: usize, x0: f64, eps0: f64) -> PyResult<f64> {
    ssiss::bounds::gaussian_integral_ik(k, x0, eps0).map_err(py_err)
}

/// Upper bound on the Gaussian tail beyond y_m.
#[pyfunction]
pub fn erfc_tail_bound(y_m: f64) -> PyResult<f64> {
    ssiss::bounds::erfc_tail_bound(y_m).map_err(py_err)
}

/// Smoothed step Θ(x, ε).
#[pyfunction]
pub fn smooth_step(x: f64, eps: f64) -> f64 {
    ssiss::potentials::smooth_step(x, eps)
}

/// Runs a scenario from TOML text with dotted `key=value` overrides and
/// returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (scenario, config_toml, overrides = Vec::new()))]
pub fn run_experiment(scenario: &str, config_toml: &str, overrides: Vec<String>) -> PyResult<String> {
    let mut cfg = ExperimentConfig::from_toml_str(config_toml, &overrides).map_err(py_err)?;
    cfg.scenario = scenario.parse::<Scenario>().map_err(py_err)?;
    run(&cfg).and_then(|r| r.to_json()).map_err(py_err)
}

#[pymodule]
fn ssiss_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gaussian_integral, m)?)?;
    m.add_function(wrap_pyfunction!(erfc_tail_bound, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_step, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
