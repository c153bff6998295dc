//! Python bindings: estimation, rules, bootstrap, the simulation presets and
//! the batch pipeline. Errors surface as `capgate.CapgateError` with a `kind`
//! prefix in the message.

use capgate_core as core;
use capgate_core::batch::{self, AssessConfig, SynthSpec};
use capgate_core::resampling::BootstrapConfig;
use capgate_core::rules::{self, Rule};
use capgate_core::sim;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(capgate, CapgateError, PyValueError);

fn err(e: core::Error) -> PyErr {
    CapgateError::new_err(format!("{}: {e}", e.kind()))
}

fn json_err(e: serde_json::Error) -> PyErr {
    CapgateError::new_err(format!("IoError: {e}"))
}

#[pyclass(name = "SpecLimits", frozen)]
struct PySpecLimits(core::SpecLimits);

#[pymethods]
impl PySpecLimits {
    #[new]
    fn new(lsl: f64, usl: f64) -> PyResult<Self> {
        core::SpecLimits::new(lsl, usl).map(Self).map_err(err)
    }

    #[getter]
    fn lsl(&self) -> f64 {
        self.0.lsl()
    }

    #[getter]
    fn usl(&self) -> f64 {
        self.0.usl()
    }

    fn __repr__(&self) -> String {
        format!("SpecLimits(lsl={}, usl={})", self.0.lsl(), self.0.usl())
    }
}

#[pyclass(name = "CapabilityEstimate", frozen)]
struct PyEstimate(core::CapabilityEstimate);

#[pymethods]
impl PyEstimate {
    #[new]
    fn new(cpk_hat: f64, se: f64, n: usize) -> PyResult<Self> {
        core::CapabilityEstimate::new(cpk_hat, se, n)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn cpk_hat(&self) -> f64 {
        self.0.cpk_hat
    }

    #[getter]
    fn se(&self) -> f64 {
        self.0.se
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    fn __repr__(&self) -> String {
        format!(
            "CapabilityEstimate(cpk_hat={}, se={}, n={})",
            self.0.cpk_hat, self.0.se, self.0.n
        )
    }
}

#[pyclass(name = "Decision", frozen, get_all)]
struct PyDecision {
    accept: bool,
    k: f64,
    margin: f64,
    effective_threshold: f64,
    p_fail: Option<f64>,
}

impl From<rules::Decision> for PyDecision {
    fn from(d: rules::Decision) -> Self {
        Self {
            accept: d.accept,
            k: d.k,
            margin: d.margin,
            effective_threshold: d.effective_threshold,
            p_fail: d.p_fail,
        }
    }
}

#[pymethods]
impl PyDecision {
    fn __repr__(&self) -> String {
        format!(
            "Decision(accept={}, k={}, effective_threshold={}, p_fail={:?})",
            self.accept, self.k, self.effective_threshold, self.p_fail
        )
    }
}

/// Exactly one of `lcb`, `alpha`, `lam` selects the rule; none means deterministic.
fn rule_from(lcb: Option<f64>, alpha: Option<f64>, lam: Option<f64>) -> PyResult<Rule> {
    match (lcb, alpha, lam) {
        (None, None, None) => Ok(Rule::Deterministic),
        (Some(g), None, None) => Rule::lcb(g).map_err(err),
        (None, Some(a), None) => Rule::failure_probability(a).map_err(err),
        (None, None, Some(l)) => Rule::cost_sensitive(l).map_err(err),
        _ => Err(PyValueError::new_err("give at most one of lcb, alpha, lam")),
    }
}

#[pyfunction]
fn estimate(sample: Vec<f64>, limits: &PySpecLimits) -> PyResult<PyEstimate> {
    core::CapabilityEstimate::from_sample(&sample, &limits.0)
        .map(PyEstimate)
        .map_err(err)
}

#[pyfunction]
fn sigma_c(cpk: f64) -> f64 {
    core::sigma_c(cpk)
}

#[pyfunction]
fn failure_probability(cpk_hat: f64, se: f64, c0: f64) -> PyResult<f64> {
    core::failure_probability_analytic(cpk_hat, se, c0).map_err(err)
}

#[pyfunction]
fn alpha_from_lambda(lam: f64) -> PyResult<f64> {
    rules::alpha_from_lambda(lam).map_err(err)
}

#[pyfunction]
fn k_from_alpha(alpha: f64) -> PyResult<f64> {
    rules::k_from_alpha(alpha).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (estimate, c0 = 1.33, *, lcb = None, alpha = None, lam = None))]
fn decide(
    estimate: &PyEstimate,
    c0: f64,
    lcb: Option<f64>,
    alpha: Option<f64>,
    lam: Option<f64>,
) -> PyResult<PyDecision> {
    let rule = rule_from(lcb, alpha, lam)?;
    rules::decide(&rule, &estimate.0, c0)
        .map(PyDecision::from)
        .map_err(err)
}

/// Returns `(p_fail, se_boot)`.
#[pyfunction]
#[pyo3(signature = (sample, limits, c0 = 1.33, b_boot = 1000, seed = 0))]
fn bootstrap_p_fail(
    py: Python<'_>,
    sample: Vec<f64>,
    limits: &PySpecLimits,
    c0: f64,
    b_boot: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let cfg = BootstrapConfig::new(b_boot, seed).map_err(err)?;
    let lim = limits.0;
    py.detach(|| core::bootstrap_p_fail(&sample, &lim, c0, &cfg))
        .map(|r| (r.p_fail, r.se_boot))
        .map_err(err)
}

/// `(lambda, alpha, k)` rows for the given cost ratios.
#[pyfunction]
#[pyo3(signature = (lambdas = sim::TABLE1_LAMBDAS.to_vec()))]
fn lambda_table(lambdas: Vec<f64>) -> PyResult<Vec<(f64, f64, f64)>> {
    sim::lambda_alpha_k(&lambdas)
        .map(|rows| rows.iter().map(|r| (r.lambda, r.alpha, r.k)).collect())
        .map_err(err)
}

/// Expected-loss table at the boundary as a JSON string.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn loss_table(py: Python<'_>, seed: u64) -> PyResult<String> {
    let ctx = sim::table2_context(seed);
    let rows = py
        .detach(|| sim::loss_by_lambda(&ctx, ctx.c0, 32, &sim::TABLE2_LAMBDAS))
        .map_err(err)?;
    serde_json::to_string(&rows).map_err(json_err)
}

/// Acceptance at `Cpk = c0` for each `k`: `(k, p_acc, target, mc_se)` rows.
#[pyfunction]
#[pyo3(signature = (ks, n = 500, seed = 0))]
fn boundary_check(
    py: Python<'_>,
    ks: Vec<f64>,
    n: usize,
    seed: u64,
) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let ctx = sim::boundary_context(seed);
    py.detach(|| sim::boundary_check(&ctx, n, &ks))
        .map(|rows| {
            rows.iter()
                .map(|r| (r.k, r.p_acc, r.target, r.mc_se))
                .collect()
        })
        .map_err(err)
}

/// Synthetic long-form CSV (`dimension_id,lsl,usl,value`).
#[pyfunction]
#[pyo3(signature = (dimensions = 200, n = 32, near_fraction = 0.2, below_fraction = 0.25, non_normal_fraction = 0.3, seed = 0))]
fn synth_csv(
    dimensions: usize,
    n: usize,
    near_fraction: f64,
    below_fraction: f64,
    non_normal_fraction: f64,
    seed: u64,
) -> PyResult<String> {
    let spec = SynthSpec {
        dimensions,
        n_per_dimension: n,
        near_fraction,
        below_fraction,
        non_normal_fraction,
        seed,
        ..SynthSpec::default()
    };
    let records = batch::synth_dataset(&spec).map_err(err)?;
    let mut buf = Vec::new();
    batch::write_dataset_csv(&mut buf, &records).map_err(err)?;
    String::from_utf8(buf).map_err(|e| CapgateError::new_err(e.to_string()))
}

/// Batch report for long-form CSV text, as a JSON string.
#[pyfunction]
#[pyo3(signature = (csv_text, c0 = 1.33, lambdas = batch::DEFAULT_LAMBDAS.to_vec(), b_boot = 1000, level = 0.05, seed = 0))]
fn run_batch(
    py: Python<'_>,
    csv_text: &str,
    c0: f64,
    lambdas: Vec<f64>,
    b_boot: usize,
    level: f64,
    seed: u64,
) -> PyResult<String> {
    let records = batch::ingest(csv_text.as_bytes()).map_err(err)?;
    let cfg = AssessConfig::new(
        c0,
        lambdas,
        BootstrapConfig::new(b_boot, seed).map_err(err)?,
        level,
    )
    .map_err(err)?;
    let report = py
        .detach(|| batch::run_batch(&records, &cfg))
        .map_err(err)?;
    serde_json::to_string(&report).map_err(json_err)
}

#[pymodule]
fn capgate(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CapgateError", m.py().get_type::<CapgateError>())?;
    m.add_class::<PySpecLimits>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyDecision>()?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_c, m)?)?;
    m.add_function(wrap_pyfunction!(failure_probability, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_from_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(k_from_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(decide, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_p_fail, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_table, m)?)?;
    m.add_function(wrap_pyfunction!(loss_table, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_check, m)?)?;
    m.add_function(wrap_pyfunction!(synth_csv, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    Ok(())
}
