//! Python bindings: scenarios, policies, stationary analysis, optimizer,
//! burst statistics and simulation. Structured results come back as plain
//! dicts and lists.

use aoi_outage::burst::{self, DurationConvention};
use aoi_outage::{chain, experiments, optimizer, phy, sim, state};
use aoi_outage::{OutageRule, PenaltyKind, Policy, SystemState};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

fn err(e: aoi_outage::Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py_any(py)?,
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_py_any(py)?,
            (None, Some(i)) => i.into_py_any(py)?,
            _ => n.as_f64().unwrap_or(f64::NAN).into_py_any(py)?,
        },
        Value::String(s) => s.into_py_any(py)?,
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn serialize<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// A validated experiment description.
#[pyclass(frozen, skip_from_py_object, module = "aoi_outage")]
#[derive(Clone)]
struct Scenario {
    inner: aoi_outage::Scenario,
}

#[pymethods]
impl Scenario {
    /// `scenario_a`, `scenario_b` or `scenario_c`.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        aoi_outage::Scenario::preset(name)
            .map(|inner| Scenario { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        aoi_outage::Scenario::from_json(text)
            .map(|inner| Scenario { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn preset_names() -> Vec<&'static str> {
        aoi_outage::scenario::PRESET_NAMES.to_vec()
    }

    /// Copy with `rule` (`"exceeds"` or `"reaches"`) as the outage predicate.
    fn with_outage_rule(&self, rule: &str) -> PyResult<Self> {
        let rule = match rule {
            "exceeds" => OutageRule::Exceeds,
            "reaches" => OutageRule::Reaches,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown outage rule `{other}`"
                )))
            }
        };
        Ok(Scenario {
            inner: self.inner.clone().with_outage_rule(rule),
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn state_count(&self) -> usize {
        self.inner.system.state_count()
    }

    #[getter]
    fn blocklength(&self) -> u32 {
        self.inner.system.blocklength()
    }

    /// States as `(a1, a2, x1, x2)` tuples in index order.
    fn states(&self) -> Vec<(u32, u32, u32, u32)> {
        state::enumerate_states(self.inner.system.a_max)
            .into_iter()
            .map(|s| s.to_tuple().into())
            .collect()
    }

    fn is_outage(&self, s: (u32, u32, u32, u32)) -> PyResult<bool> {
        let s = SystemState::from_tuple(s.into()).map_err(err)?;
        Ok(self.inner.system.is_outage(s))
    }

    fn __repr__(&self) -> String {
        format!("Scenario({:?})", self.inner.name)
    }
}

fn policy(scenario: &Scenario, lambda: Vec<u32>) -> PyResult<Policy> {
    Policy::new(lambda, &scenario.inner.system).map_err(err)
}

#[pyfunction]
fn q_function(x: f64) -> f64 {
    phy::q_function(x)
}

#[pyfunction]
fn db_to_linear(snr_db: f64) -> f64 {
    phy::db_to_linear(snr_db)
}

#[pyfunction]
fn block_error_rate(n: u32, d: u32, gamma: f64) -> PyResult<f64> {
    phy::block_error_rate(n, d, gamma).map_err(err)
}

/// 1-based index of `(a1, a2, x1, x2)`.
#[pyfunction]
fn state_to_index(s: (u32, u32, u32, u32), a_max: u32) -> PyResult<usize> {
    let s = SystemState::from_tuple(s.into()).map_err(err)?;
    state::state_to_index(s, a_max).map_err(err)
}

#[pyfunction]
fn index_to_state(index: usize, a_max: u32) -> PyResult<(u32, u32, u32, u32)> {
    state::index_to_state(index, a_max)
        .map(|s| s.to_tuple().into())
        .map_err(err)
}

#[pyfunction]
fn naive_policy(scenario: &Scenario) -> Vec<u32> {
    optimizer::naive_policy(&scenario.inner.system).into_vec()
}

#[pyfunction]
fn min_error_policy(scenario: &Scenario) -> Vec<u32> {
    optimizer::min_error_policy(&scenario.inner.system).into_vec()
}

#[pyfunction]
fn random_policy(scenario: &Scenario, seed: u64) -> Vec<u32> {
    experiments::random_policy(&scenario.inner.system, seed).into_vec()
}

/// Row-major transition matrix of the chain under `lambda`.
#[pyfunction]
fn transition_matrix(scenario: &Scenario, lambda: Vec<u32>) -> PyResult<Vec<Vec<f64>>> {
    let p = chain::build_transition_matrix(&scenario.inner.system, &policy(scenario, lambda)?)
        .map_err(err)?;
    Ok(p.as_matrix()
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect())
}

#[pyfunction]
fn steady_state(scenario: &Scenario, lambda: Vec<u32>) -> PyResult<Vec<f64>> {
    let (_, pi) =
        chain::solve_policy(&scenario.inner.system, &policy(scenario, lambda)?).map_err(err)?;
    Ok(pi.as_slice().to_vec())
}

#[pyfunction]
fn outage_probability(scenario: &Scenario, lambda: Vec<u32>) -> PyResult<f64> {
    let cfg = &scenario.inner.system;
    let (_, pi) = chain::solve_policy(cfg, &policy(scenario, lambda)?).map_err(err)?;
    Ok(chain::outage_probability(&pi, cfg))
}

/// One optimizer run from the random initial policy drawn from `seed`.
#[pyfunction]
#[pyo3(signature = (scenario, penalty, seed, max_iter = None))]
fn optimize(
    py: Python<'_>,
    scenario: &Scenario,
    penalty: &str,
    seed: u64,
    max_iter: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let kind: PenaltyKind = penalty.parse().map_err(err)?;
    let max_iter = max_iter.unwrap_or(scenario.inner.optimizer.max_iter);
    let report = py
        .detach(|| optimizer::optimize(&scenario.inner.system, kind, seed, max_iter))
        .map_err(err)?;
    serialize(py, &report)
}

/// Analytic burst statistics; `status` is `"undefined"` when the outage set
/// is never entered.
#[pyfunction]
#[pyo3(signature = (scenario, lambda, convention = "run-length"))]
fn burst_stats(
    py: Python<'_>,
    scenario: &Scenario,
    lambda: Vec<u32>,
    convention: &str,
) -> PyResult<Py<PyAny>> {
    let convention = match convention {
        "run-length" => DurationConvention::RunLength,
        "bracketed" => DurationConvention::Bracketed,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown convention `{other}`"
            )))
        }
    };
    let report = burst::burst_stats(
        &scenario.inner.system,
        &policy(scenario, lambda)?,
        convention,
    )
    .map_err(err)?;
    serialize(py, &report)
}

/// One seeded Monte-Carlo run of `periods` periods.
#[pyfunction]
fn simulate(
    py: Python<'_>,
    scenario: &Scenario,
    lambda: Vec<u32>,
    periods: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let policy = policy(scenario, lambda)?;
    let result = py
        .detach(|| sim::simulate(&scenario.inner.system, &policy, periods, seed))
        .map_err(err)?;
    serialize(py, &result)
}

#[pymodule]
#[pyo3(name = "aoi_outage")]
fn aoi_outage_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_function(wrap_pyfunction!(q_function, m)?)?;
    m.add_function(wrap_pyfunction!(db_to_linear, m)?)?;
    m.add_function(wrap_pyfunction!(block_error_rate, m)?)?;
    m.add_function(wrap_pyfunction!(state_to_index, m)?)?;
    m.add_function(wrap_pyfunction!(index_to_state, m)?)?;
    m.add_function(wrap_pyfunction!(naive_policy, m)?)?;
    m.add_function(wrap_pyfunction!(min_error_policy, m)?)?;
    m.add_function(wrap_pyfunction!(random_policy, m)?)?;
    m.add_function(wrap_pyfunction!(transition_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(outage_probability, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(burst_stats, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
