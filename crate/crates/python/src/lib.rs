//! Python bindings: scenarios, solvers, simulators and result export.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use detmec_core::results::{self, Command, Format, RunOptions, SimMode, SolverKind, SweepParam, SweepSpec};
use detmec_core::scenario::{self, Profile, ScenarioFile};
use detmec_core::scheduler::{validate_plan, Problem, SchedulePlan};
use detmec_core::sim::{self, BackgroundTraffic};
use detmec_core::Error;

create_exception!(detmec, DetmecError, PyException);
create_exception!(detmec, ValidationError, PyValueError);
create_exception!(detmec, InstanceTooLarge, DetmecError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Invalid(_) | Error::InvalidConfig(_) | Error::Json(_) => ValidationError::new_err(e.to_string()),
        Error::InstanceTooLarge(_) => InstanceTooLarge::new_err(e.to_string()),
        _ => DetmecError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// A scenario file and the problem it resolves to.
#[pyclass(module = "detmec")]
struct Scenario {
    file: ScenarioFile,
    problem: Problem,
    background: BackgroundTraffic,
}

impl Scenario {
    fn build(file: ScenarioFile) -> PyResult<Self> {
        let inst = file.instance().map_err(py_err)?;
        Ok(Self {
            file,
            problem: inst.problem,
            background: inst.background,
        })
    }

    fn problem(&self, max_hops: Option<usize>) -> Problem {
        match max_hops {
            Some(h) => self.problem.with_max_hops(h),
            None => self.problem.clone(),
        }
    }
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn generate(profile: &str, seed: u64) -> PyResult<Self> {
        Self::build(scenario::generate_scenario(parse::<Profile>(profile)?, seed))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Self::build(ScenarioFile::from_json(text).map_err(py_err)?)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Self::build(ScenarioFile::load(&path).map_err(py_err)?)
    }

    fn to_json(&self) -> PyResult<String> {
        self.file.to_json().map_err(py_err)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.file.name
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.problem.graph.node_count()
    }

    #[getter]
    fn demand_count(&self) -> usize {
        self.problem.demands.len()
    }

    #[getter]
    fn hop_bound(&self) -> usize {
        self.problem.max_hops
    }

    /// Cycle lengths and counts, in nanoseconds.
    fn timing<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let t = &self.problem.timing;
        let d = PyDict::new(py);
        d.set_item("delta_tti_ns", t.delta_tti)?;
        d.set_item("delta_dip_ns", t.delta_dip)?;
        d.set_item("delta_mec_ns", t.delta_mec)?;
        d.set_item("delta_hc_ns", t.delta_hc)?;
        d.set_item("queues", t.queue_count)?;
        d.set_item("n_tti", t.n_tti)?;
        d.set_item("n_dip", t.n_dip)?;
        d.set_item("n_mec", t.n_mec)?;
        d.set_item("jitter_bound_ns", t.jitter_bound())?;
        Ok(d)
    }

    /// Solves with `solver` in {tabu, spf, noshape, oracle}.
    #[pyo3(signature = (solver = "tabu", max_hops = None, time_budget_ms = 60_000))]
    fn schedule(&self, py: Python<'_>, solver: &str, max_hops: Option<usize>, time_budget_ms: u64) -> PyResult<Plan> {
        let mut o = RunOptions {
            solver: parse::<SolverKind>(solver)?,
            max_hops,
            ..RunOptions::default()
        };
        o.tabu.time_budget_ms = time_budget_ms;
        let file = &self.file;
        let r = py.detach(|| results::run(Command::Schedule, file, &o)).map_err(py_err)?;
        Ok(Plan {
            plan: r.plan.expect("schedule fills the plan"),
        })
    }

    /// Violations of `plan` against this scenario; empty when valid.
    #[pyo3(signature = (plan, max_hops = None))]
    fn validate(&self, plan: &Plan, max_hops: Option<usize>) -> Vec<String> {
        validate_plan(&self.problem(max_hops), &plan.plan)
            .iter()
            .map(ToString::to_string)
            .collect()
    }

    /// Per-task traces as dicts; `mode` is det or besteffort.
    #[pyo3(signature = (plan, hypercycles = 100, mode = "det", utilization = None, seed = None, max_hops = None))]
    #[allow(clippy::too_many_arguments)]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        plan: &Plan,
        hypercycles: u32,
        mode: &str,
        utilization: Option<f64>,
        seed: Option<u64>,
        max_hops: Option<usize>,
    ) -> PyResult<Bound<'py, PyList>> {
        let p = self.problem(max_hops);
        let seed = seed.unwrap_or(self.file.seeds.traffic);
        let mut bg = self.background.clone();
        if let Some(u) = utilization {
            bg.utilization = u;
        }
        let traces = py
            .detach(|| match parse::<SimMode>(mode)? {
                SimMode::Det => sim::run_deterministic(&p, &plan.plan, hypercycles, seed).map_err(py_err),
                SimMode::Besteffort => sim::run_best_effort(&p, &plan.plan, &bg, hypercycles, seed).map_err(py_err),
            })?;
        let out = PyList::empty(py);
        for t in &traces {
            let d = PyDict::new(py);
            d.set_item("demand", t.demand)?;
            d.set_item("hypercycle", t.hypercycle)?;
            d.set_item("generated_ns", t.generated)?;
            d.set_item("completion_ns", t.completion)?;
            d.set_item("latency_ns", t.latency)?;
            d.set_item("bound_ns", t.bound)?;
            d.set_item("deadline_ns", t.deadline)?;
            let cycles: Vec<u32> = t.hops.iter().map(|h| h.departure_cycle).collect();
            let nodes: Vec<&str> = t.hops.iter().map(|h| p.graph.node(h.node).name.as_str()).collect();
            d.set_item("cycles", cycles)?;
            d.set_item("nodes", nodes)?;
            out.append(d)?;
        }
        Ok(out)
    }

    /// Runs schedule, simulate, compare or sweep and returns the result set.
    #[pyo3(signature = (
        command,
        solver = "tabu",
        max_hops = None,
        hypercycles = 100,
        mode = "det",
        utilizations = None,
        sweep_param = None,
        sweep_range = None,
        sweep_step = 1,
        plan = None
    ))]
    #[allow(clippy::too_many_arguments)]
    fn run(
        &self,
        py: Python<'_>,
        command: &str,
        solver: &str,
        max_hops: Option<usize>,
        hypercycles: u32,
        mode: &str,
        utilizations: Option<Vec<f64>>,
        sweep_param: Option<&str>,
        sweep_range: Option<&str>,
        sweep_step: u32,
        plan: Option<&Plan>,
    ) -> PyResult<Results> {
        let command = match command {
            "schedule" => Command::Schedule,
            "simulate" => Command::Simulate,
            "compare" => Command::Compare,
            "sweep" => Command::Sweep,
            other => return Err(ValidationError::new_err(format!("unknown command {other:?}"))),
        };
        let sweep = match (sweep_param, sweep_range) {
            (Some(p), Some(r)) => Some(SweepSpec::parse(parse::<SweepParam>(p)?, r, sweep_step).map_err(py_err)?),
            (None, None) => None,
            _ => return Err(ValidationError::new_err("sweep_param and sweep_range go together")),
        };
        let defaults = RunOptions::default();
        let o = RunOptions {
            solver: parse::<SolverKind>(solver)?,
            max_hops,
            hypercycles,
            mode: parse::<SimMode>(mode)?,
            utilizations: utilizations.unwrap_or(defaults.utilizations.clone()),
            sweep,
            plan: plan.map(|p| p.plan.clone()),
            ..defaults
        };
        let file = &self.file;
        let r = py.detach(|| results::run(command, file, &o)).map_err(py_err)?;
        Ok(Results { inner: r })
    }
}

#[pyclass(module = "detmec")]
struct Plan {
    plan: SchedulePlan,
}

#[pymethods]
impl Plan {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let plan = serde_json::from_str(text).map_err(|e| py_err(e.into()))?;
        Ok(Self { plan })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.plan).map_err(|e| py_err(e.into()))
    }

    #[getter]
    fn solver(&self) -> &str {
        &self.plan.solver
    }

    /// Number of accepted demands.
    #[getter]
    fn objective(&self) -> u32 {
        self.plan.objective
    }

    #[getter]
    fn total_bound_ns(&self) -> i64 {
        self.plan.total_bound
    }

    fn accepted(&self) -> Vec<u32> {
        self.plan.accepted().map(|(i, _)| self.plan.decisions[i].demand).collect()
    }

    fn bounds(&self) -> Vec<(u32, i64)> {
        self.plan
            .accepted()
            .map(|(i, pl)| (self.plan.decisions[i].demand, pl.report.bound))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Plan(solver={:?}, objective={}, demands={})",
            self.plan.solver,
            self.plan.objective,
            self.plan.decisions.len()
        )
    }
}

#[pyclass(module = "detmec")]
struct Results {
    inner: results::ResultSet,
}

#[pymethods]
impl Results {
    #[getter]
    fn config_hash(&self) -> &str {
        &self.inner.meta.config_hash
    }

    fn plan(&self) -> Option<Plan> {
        self.inner.plan.clone().map(|plan| Plan { plan })
    }

    fn to_csv(&self) -> PyResult<String> {
        self.inner.to_csv().map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    /// Writes CSV or JSON, chosen by `format` or the file extension.
    #[pyo3(signature = (path, format = None))]
    fn export(&self, path: PathBuf, format: Option<&str>) -> PyResult<()> {
        let f = match format {
            Some(f) => parse::<Format>(f)?,
            None => Format::for_path(&path),
        };
        results::export(&self.inner, f, &path).map_err(py_err)
    }
}

#[pyfunction]
fn generate_scenario(profile: &str, seed: u64) -> PyResult<Scenario> {
    Scenario::generate(profile, seed)
}

#[pymodule]
fn detmec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", results::VERSION)?;
    m.add("DetmecError", m.py().get_type::<DetmecError>())?;
    m.add("ValidationError", m.py().get_type::<ValidationError>())?;
    m.add("InstanceTooLarge", m.py().get_type::<InstanceTooLarge>())?;
    m.add_class::<Scenario>()?;
    m.add_class::<Plan>()?;
    m.add_class::<Results>()?;
    m.add_function(wrap_pyfunction!(generate_scenario, m)?)?;
    Ok(())
}
