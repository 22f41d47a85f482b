//! Python bindings: the configuration, the integrator and the certification battery.
//!
//! Structured results cross the boundary as JSON and are decoded with Python's
//! own `json` module, so dictionaries have the same layout as the CLI reports.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde_json::{json, Value};

use sddpde::config::{apply_override, RunConfig};
use sddpde::diagnostics::{energy_ledger, summarize};
use sddpde::integrator::integrate;
use sddpde::model;
use sddpde::runner::{certify, ledger_for, prepare, CertifyPlan};
use sddpde::spectral::Domain1D;
use sddpde::Error;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Config { .. } | Error::InvalidArgument(_) | Error::InvalidIndex(_) => PyValueError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_python<'py>(py: Python<'py>, value: &Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (value.to_string(),))
}

/// `λ_k = (kπ/ℓ)²` of the Dirichlet Laplacian on `(0, ℓ)`.
#[pyfunction]
#[pyo3(signature = (k, length = std::f64::consts::PI))]
fn eigenvalue(k: usize, length: f64) -> PyResult<f64> {
    Domain1D::new(length).and_then(|d| d.eigenvalue(k)).map_err(to_py_err)
}

/// Smooth cutoff: 1 on `[0, 1]`, 0 on `[2, ∞)`.
#[pyfunction]
fn chi(s: f64) -> PyResult<f64> {
    model::chi(s).map_err(to_py_err)
}

/// The reference configuration as a JSON string.
#[pyfunction]
fn canonical_config() -> String {
    serde_json::to_string_pretty(&RunConfig::canonical().to_value()).expect("serializable")
}

/// A validated configuration with its model.
#[pyclass(module = "pysddpde")]
struct Simulator {
    cfg: RunConfig,
}

impl Simulator {
    fn with_horizon(&self, horizon: Option<f64>) -> PyResult<RunConfig> {
        let mut cfg = self.cfg.clone();
        if let Some(t) = horizon {
            cfg.time.horizon = t;
            cfg.validate().map_err(to_py_err)?;
        }
        Ok(cfg)
    }
}

#[pymethods]
impl Simulator {
    /// `config` is a JSON document; the canonical configuration when omitted.
    /// `overrides` are `key.path=value` strings applied before validation.
    #[new]
    #[pyo3(signature = (config = None, overrides = Vec::new()))]
    fn new(config: Option<&str>, overrides: Vec<String>) -> PyResult<Self> {
        let mut doc = match config {
            Some(text) => serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
            None => RunConfig::canonical().to_value(),
        };
        for o in &overrides {
            apply_override(&mut doc, o).map_err(to_py_err)?;
        }
        let cfg = RunConfig::from_value(doc).map_err(to_py_err)?;
        Ok(Self { cfg })
    }

    /// The effective configuration as a JSON string.
    fn config(&self) -> String {
        serde_json::to_string_pretty(&self.cfg.to_value()).expect("serializable")
    }

    fn config_hash(&self) -> String {
        sddpde::runner::config_hash(&self.cfg)
    }

    /// Constants ledger with `L_{v,T}` set to `l_vt`.
    #[pyo3(signature = (l_vt = 0.0))]
    fn constants<'py>(&self, py: Python<'py>, l_vt: f64) -> PyResult<Bound<'py, PyAny>> {
        let (model, _) = prepare(&self.cfg).map_err(to_py_err)?;
        let ledger = ledger_for(&self.cfg, &model, l_vt, self.cfg.time.horizon).map_err(to_py_err)?;
        to_python(py, &serde_json::to_value(ledger).expect("serializable"))
    }

    /// Integrates from the configured history. Returns knot times, Galerkin
    /// coefficients per knot, the delay at each simulated knot, `||A^{1/2}u||²`
    /// and a per-check summary of the energy ledger.
    #[pyo3(signature = (horizon = None))]
    fn run<'py>(&self, py: Python<'py>, horizon: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
        let cfg = self.with_horizon(horizon)?;
        let (result, checks, energy) = py
            .detach(|| -> sddpde::Result<_> {
                let (model, _) = prepare(&cfg)?;
                let run = integrate(&cfg.initial_history()?, &model, &cfg.integrator_config())?;
                let checks = summarize(&energy_ledger(&run.trajectory, &model)?);
                let energy: Vec<f64> = run
                    .trajectory
                    .simulated()
                    .iter()
                    .map(|k| model.spectrum().frac_norm(0.5, &k.state).powi(2))
                    .collect();
                Ok((run, checks, energy))
            })
            .map_err(to_py_err)?;
        let traj = &result.trajectory;
        let out = PyDict::new(py);
        out.set_item("t", traj.simulated().iter().map(|k| k.t).collect::<Vec<_>>())?;
        out.set_item(
            "coefficients",
            traj.simulated()
                .iter()
                .map(|k| k.state.coefficients().to_vec())
                .collect::<Vec<_>>(),
        )?;
        out.set_item("eta", result.delays.iter().map(|d| d.eta).collect::<Vec<_>>())?;
        out.set_item("energy_half", energy)?;
        out.set_item("checks", to_python(py, &serde_json::to_value(checks).expect("serializable"))?)?;
        Ok(out)
    }

    /// Runs the certification battery; returns `{"pass", "checks", "constants", ...}`.
    /// `random_segments` and `dependence_pairs` shrink the sampled parts.
    #[pyo3(signature = (horizon = None, random_segments = 100, dependence_pairs = 20))]
    fn certify<'py>(
        &self,
        py: Python<'py>,
        horizon: Option<f64>,
        random_segments: usize,
        dependence_pairs: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let cfg = self.with_horizon(horizon)?;
        let plan = CertifyPlan {
            random_segments,
            dependence_pairs,
            ..CertifyPlan::default()
        };
        let (records, ledger, extra) = py.detach(|| certify(&cfg, &plan)).map_err(to_py_err)?;
        let checks = summarize(&records);
        let pass = checks.values().all(|c| c.pass);
        let mut doc = json!({ "pass": pass, "checks": checks, "constants": ledger });
        if let (Value::Object(d), Value::Object(e)) = (&mut doc, extra) {
            d.extend(e);
        }
        to_python(py, &doc)
    }

    fn __repr__(&self) -> String {
        format!(
            "Simulator(m={}, h={}, T={}, scenario={:?})",
            self.cfg.spectral.m, self.cfg.time.h, self.cfg.time.horizon, self.cfg.scenario
        )
    }
}

#[pymodule]
fn pysddpde(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(chi, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_config, m)?)?;
    m.add_class::<Simulator>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
