//! Python bindings: instances, subsidy settings, gap profiles, round
//! arithmetic, simulation runs and bound reports.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cs_bandits::bounds::bound_report as core_bound_report;
use cs_bandits::instance::{self as inst, gap_profile as core_gap_profile, Arm, RewardKind};
use cs_bandits::policy::etc_exploration_budget as core_etc_budget;
use cs_bandits::rounds;
use cs_bandits::sim::{CheckpointSchedule, RunResult, SimConfig};
use cs_bandits::{BanditInstance, Error, PolicyId, SubsidySetting};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// A bandit instance with arms kept in ascending cost order.
#[pyclass(name = "Instance", module = "cs_bandits_py", frozen)]
struct PyInstance {
    inner: BanditInstance,
}

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (means, costs, labels=None, name="instance", reward="bernoulli"))]
    fn new(
        means: Vec<f64>,
        costs: Vec<f64>,
        labels: Option<Vec<String>>,
        name: &str,
        reward: &str,
    ) -> PyResult<Self> {
        if means.len() != costs.len() {
            return Err(PyValueError::new_err("means and costs must have the same length"));
        }
        let labels = labels.unwrap_or_else(|| (1..=means.len()).map(|i| i.to_string()).collect());
        if labels.len() != means.len() {
            return Err(PyValueError::new_err("labels must match the number of arms"));
        }
        let arms = labels
            .into_iter()
            .zip(means.into_iter().zip(costs))
            .map(|(l, (m, c))| Arm::new(l, m, c))
            .collect();
        let reward = RewardKind::parse(reward).map_err(to_py)?;
        BanditInstance::new(name, arms, reward)
            .map(|inner| PyInstance { inner })
            .map_err(to_py)
    }

    /// The four-arm toy instance with a free first mean.
    #[staticmethod]
    fn toy(mu1: f64) -> PyResult<Self> {
        inst::toy_instance(mu1).map(|inner| PyInstance { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn asymmetric_pe() -> Self {
        PyInstance {
            inner: inst::asymmetric_pe_instance(),
        }
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        inst::load_instance(path).map(|inner| PyInstance { inner }).map_err(to_py)
    }

    fn to_csv(&self) -> PyResult<String> {
        inst::instance_to_csv(&self.inner).map_err(to_py)
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn means(&self) -> Vec<f64> {
        self.inner.means()
    }

    #[getter]
    fn costs(&self) -> Vec<f64> {
        self.inner.costs()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.arms().iter().map(|a| a.label.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Instance(name={:?}, arms={})", self.inner.name(), self.inner.len())
    }
}

/// Feasibility setting. Arm numbers are 1-based, as in configs and CSVs.
#[pyclass(name = "Setting", module = "cs_bandits_py", frozen)]
struct PySetting {
    inner: SubsidySetting,
}

#[pymethods]
impl PySetting {
    #[staticmethod]
    fn fixed(mu0: f64) -> Self {
        PySetting {
            inner: SubsidySetting::FixedThreshold { mu0 },
        }
    }

    #[staticmethod]
    fn known_ell(ell: usize, alpha: f64) -> PyResult<Self> {
        if ell == 0 {
            return Err(PyValueError::new_err("ell is 1-based"));
        }
        Ok(PySetting {
            inner: SubsidySetting::KnownReferenceArm { ell: ell - 1, alpha },
        })
    }

    #[staticmethod]
    fn subsidized(alpha: f64) -> Self {
        PySetting {
            inner: SubsidySetting::SubsidizedBestReward { alpha },
        }
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind_name()
    }

    fn __repr__(&self) -> String {
        format!("Setting({:?})", self.inner)
    }
}

/// Gap quantities as a dict; `a_star` and `i_star` are 1-based.
#[pyfunction]
fn gap_profile<'py>(py: Python<'py>, instance: &PyInstance, setting: &PySetting) -> PyResult<Bound<'py, PyDict>> {
    let p = core_gap_profile(&instance.inner, &setting.inner).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("mu_cs", p.mu_cs)?;
    d.set_item("a_star", p.a_star + 1)?;
    d.set_item("i_star", p.i_star + 1)?;
    d.set_item("mu_star", p.mu_star)?;
    d.set_item("delta_c", p.delta_c)?;
    d.set_item("delta_q", p.delta_q)?;
    d.set_item("delta_conv", p.delta_conv)?;
    d.set_item("delta_min", p.delta_min)?;
    d.set_item("feasible", p.feasible.iter().map(|i| i + 1).collect::<Vec<_>>())?;
    Ok(d)
}

#[pyfunction]
fn presumed_gap(omega: u32) -> f64 {
    rounds::presumed_gap(omega)
}

#[pyfunction]
fn sample_quota(horizon: f64, gap: f64) -> PyResult<u64> {
    rounds::sample_quota(horizon, gap).map_err(to_py)
}

#[pyfunction]
fn exploration_bonus(horizon: f64, gap: f64, tau: u64) -> PyResult<f64> {
    rounds::exploration_bonus(horizon, gap, tau).map_err(to_py)
}

#[pyfunction]
fn max_round(horizon: u64) -> PyResult<u32> {
    rounds::max_round(horizon).map_err(to_py)
}

#[pyfunction]
fn etc_exploration_budget(horizon: u64, arms: usize) -> PyResult<u64> {
    if arms == 0 {
        return Err(PyValueError::new_err("arms must be positive"));
    }
    Ok(core_etc_budget(horizon, arms))
}

fn result_dict<'py>(py: Python<'py>, r: &RunResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("policy", r.policy.as_str())?;
    d.set_item("run_id", r.run_id)?;
    d.set_item("seed", r.seed)?;
    d.set_item("horizon", r.horizon)?;
    d.set_item("cost_regret", r.cost_regret())?;
    d.set_item("quality_regret", r.quality_regret())?;
    d.set_item("terminal_arm", r.terminal_arm + 1)?;
    d.set_item("commit_step", r.commit_step)?;
    d.set_item("pulls", r.trace.pulls.clone())?;
    let checkpoints: Vec<(u64, f64, f64)> = r
        .trace
        .checkpoints
        .iter()
        .map(|c| (c.t, c.cost_regret, c.quality_regret))
        .collect();
    d.set_item("checkpoints", checkpoints)?;
    Ok(d)
}

fn sim_config(horizon: u64, checkpoints: &str, kappa: u32) -> PyResult<SimConfig> {
    let schedule = CheckpointSchedule::parse(checkpoints).map_err(to_py)?;
    Ok(SimConfig::new(horizon).with_checkpoints(schedule).with_kappa(kappa))
}

fn policy_id(name: &str) -> PyResult<PolicyId> {
    name.parse::<PolicyId>().map_err(to_py)
}

/// One seeded run; the GIL is released while it simulates.
#[pyfunction]
#[pyo3(signature = (policy, instance, setting, horizon, seed=0, checkpoints="log:50", kappa=2))]
#[allow(clippy::too_many_arguments)]
fn run_single<'py>(
    py: Python<'py>,
    policy: &str,
    instance: &PyInstance,
    setting: &PySetting,
    horizon: u64,
    seed: u64,
    checkpoints: &str,
    kappa: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let id = policy_id(policy)?;
    let config = sim_config(horizon, checkpoints, kappa)?;
    let result = py
        .detach(|| cs_bandits::run_single(id, &instance.inner, &setting.inner, &config, seed))
        .map_err(to_py)?;
    result_dict(py, &result)
}

/// `runs` independent runs with seeds `seed0 + run_id`, ordered by run id.
#[pyfunction]
#[pyo3(signature = (policy, instance, setting, horizon, runs, seed0=0, checkpoints="log:50", kappa=2, jobs=None))]
#[allow(clippy::too_many_arguments)]
fn run_batch<'py>(
    py: Python<'py>,
    policy: &str,
    instance: &PyInstance,
    setting: &PySetting,
    horizon: u64,
    runs: usize,
    seed0: u64,
    checkpoints: &str,
    kappa: u32,
    jobs: Option<usize>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let id = policy_id(policy)?;
    let config = sim_config(horizon, checkpoints, kappa)?;
    let results = py
        .detach(|| cs_bandits::run_batch(id, &instance.inner, &setting.inner, &config, seed0, runs, jobs))
        .map_err(to_py)?;
    results.iter().map(|r| result_dict(py, r)).collect()
}

/// Lower and upper bounds as a JSON string.
#[pyfunction]
fn bound_report(instance: &PyInstance, setting: &PySetting, horizon: u64) -> PyResult<String> {
    let profile = core_gap_profile(&instance.inner, &setting.inner).map_err(to_py)?;
    let report = core_bound_report(instance.inner.name(), &profile, horizon).map_err(to_py)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn cs_bandits_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PySetting>()?;
    m.add_function(wrap_pyfunction!(gap_profile, m)?)?;
    m.add_function(wrap_pyfunction!(presumed_gap, m)?)?;
    m.add_function(wrap_pyfunction!(sample_quota, m)?)?;
    m.add_function(wrap_pyfunction!(exploration_bonus, m)?)?;
    m.add_function(wrap_pyfunction!(max_round, m)?)?;
    m.add_function(wrap_pyfunction!(etc_exploration_budget, m)?)?;
    m.add_function(wrap_pyfunction!(run_single, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    m.add_function(wrap_pyfunction!(bound_report, m)?)?;
    m.add("POLICIES", PolicyId::ALL.iter().map(|p| p.as_str()).collect::<Vec<_>>())?;
    Ok(())
}
