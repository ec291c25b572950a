//! Run orchestration and result export.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ledger::CycleLedger;
use crate::scenario::{Instance, ScenarioFile, Seeds};
use crate::scheduler::{
    brute_force_oracle, solve_baseline, solve_tabu_from, BaselineKind, OracleLimits, Problem, SchedulePlan,
    TabuConfig,
};
use crate::sim::{
    average_link_utilization, run_best_effort, run_deterministic, trace_stats, BackgroundTraffic, PacketTrace,
    TraceStats,
};
use crate::time::Nanos;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Schedule,
    Simulate,
    Compare,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Tabu,
    Spf,
    Noshape,
    Oracle,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Tabu => "tabu",
            Self::Spf => "spf",
            Self::Noshape => "noshape",
            Self::Oracle => "oracle",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tabu" => Ok(Self::Tabu),
            "spf" => Ok(Self::Spf),
            "noshape" => Ok(Self::Noshape),
            "oracle" => Ok(Self::Oracle),
            other => Err(Error::InvalidConfig(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Det,
    Besteffort,
}

impl SimMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Det => "det",
            Self::Besteffort => "besteffort",
        }
    }
}

impl FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "det" => Ok(Self::Det),
            "besteffort" => Ok(Self::Besteffort),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    H,
    #[serde(rename = "demands")]
    Demands,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::H => "H",
            Self::Demands => "demands",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" | "h" => Ok(Self::H),
            "demands" => Ok(Self::Demands),
            other => Err(Error::InvalidConfig(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

/// Inclusive range of sweep values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub from: u32,
    pub to: u32,
    pub step: u32,
}

impl SweepSpec {
    /// Parses `a..b` (inclusive).
    pub fn parse(param: SweepParam, range: &str, step: u32) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("range {range:?} is not a..b"));
        let (a, b) = range.split_once("..").ok_or_else(bad)?;
        let from = a.trim().parse().map_err(|_| bad())?;
        let to = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if from > to || step == 0 {
            return Err(Error::InvalidConfig(format!("empty sweep {range} step {step}")));
        }
        Ok(Self { param, from, to, step })
    }

    pub fn values(&self) -> impl Iterator<Item = u32> {
        (self.from..=self.to).step_by(self.step as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    pub solver: SolverKind,
    /// Overrides the scenario's hop bound.
    pub max_hops: Option<usize>,
    pub hypercycles: u32,
    pub mode: SimMode,
    /// Background utilization points for `compare`.
    pub utilizations: Vec<f64>,
    /// Its seed is replaced by the scenario's solver seed.
    pub tabu: TabuConfig,
    pub oracle: OracleLimits,
    pub sweep: Option<SweepSpec>,
    /// Plan to simulate instead of solving.
    pub plan: Option<SchedulePlan>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            solver: SolverKind::Tabu,
            max_hops: None,
            hypercycles: 100,
            mode: SimMode::Det,
            utilizations: vec![0.2, 0.4, 0.6, 0.8],
            tabu: TabuConfig::default(),
            oracle: OracleLimits::default(),
            sweep: None,
            plan: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    pub command: Command,
    pub scenario: String,
    pub seeds: Seeds,
    /// SHA-256 of the scenario, command and options.
    pub config_hash: String,
    pub solver: String,
    pub max_hops: usize,
    pub hypercycles: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub demand: u32,
    pub accepted: bool,
    pub source: String,
    pub server: String,
    pub path: String,
    pub hops: usize,
    pub r0: Option<u32>,
    pub ap_shift: Option<u32>,
    pub server_shift: Option<u32>,
    pub bound_ns: Option<Nanos>,
    pub deadline_ns: Nanos,
}

/// One hop of one task.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub mode: String,
    pub utilization: f64,
    pub demand: u32,
    pub hypercycle: u32,
    pub hop: usize,
    pub node: String,
    pub arrival_ns: Nanos,
    pub departure_cycle: u32,
    pub queue: u32,
    pub generated_ns: Nanos,
    pub completion_ns: Nanos,
    pub latency_ns: Nanos,
    pub bound_ns: Nanos,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub mode: String,
    pub utilization: f64,
    pub demand: u32,
    pub count: usize,
    pub min_ns: Nanos,
    pub max_ns: Nanos,
    pub mean_ns: f64,
    pub jitter_ns: Nanos,
    pub deadline_misses: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub utilization: f64,
    pub measured_utilization: f64,
    pub mode: String,
    pub packets: usize,
    pub min_latency_ns: Nanos,
    pub max_latency_ns: Nanos,
    pub mean_latency_ns: f64,
    pub p99_latency_ns: Nanos,
    pub max_jitter_ns: Nanos,
    pub jitter_bound_ns: Nanos,
    pub deadline_misses: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: u32,
    pub solver: String,
    pub demands: usize,
    pub objective: u32,
    pub total_bound_ns: Nanos,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UtilizationRow {
    pub kind: String,
    pub resource: String,
    pub cycle: u32,
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub meta: RunMeta,
    pub plan: Option<SchedulePlan>,
    pub decisions: Vec<DecisionRow>,
    pub traces: Vec<TraceRow>,
    pub stats: Vec<StatsRow>,
    pub compare: Vec<CompareRow>,
    pub sweep: Vec<SweepRow>,
    pub utilization: Vec<UtilizationRow>,
}

pub fn config_hash(command: Command, scenario: &ScenarioFile, options: &RunOptions) -> Result<String> {
    let bytes = serde_json::to_vec(&(command, scenario, options))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn run(command: Command, scenario: &ScenarioFile, options: &RunOptions) -> Result<ResultSet> {
    let Instance { problem, background } = scenario.instance()?;
    let problem = match options.max_hops {
        Some(h) => problem.with_max_hops(h),
        None => problem,
    };
    let tabu = TabuConfig {
        seed: scenario.seeds.solver,
        ..options.tabu.clone()
    };
    let sim_seed = scenario.seeds.traffic;
    let mut out = ResultSet {
        meta: RunMeta {
            version: VERSION.to_string(),
            command,
            scenario: scenario.name.clone(),
            seeds: scenario.seeds.clone(),
            config_hash: config_hash(command, scenario, options)?,
            solver: options.solver.to_string(),
            max_hops: problem.max_hops,
            hypercycles: options.hypercycles,
        },
        plan: None,
        decisions: Vec::new(),
        traces: Vec::new(),
        stats: Vec::new(),
        compare: Vec::new(),
        sweep: Vec::new(),
        utilization: Vec::new(),
    };

    match command {
        Command::Schedule => {
            let plan = solve(&problem, options.solver, &tabu, &options.oracle, None)?;
            out.fill_plan(&problem, plan)?;
        }
        Command::Simulate => {
            let plan = match &options.plan {
                Some(p) => p.clone(),
                None => solve(&problem, options.solver, &tabu, &options.oracle, None)?,
            };
            let (label, u, traces) = match options.mode {
                SimMode::Det => ("det", 0.0, run_deterministic(&problem, &plan, options.hypercycles, sim_seed)?),
                SimMode::Besteffort => (
                    "besteffort",
                    background.utilization,
                    run_best_effort(&problem, &plan, &background, options.hypercycles, sim_seed)?,
                ),
            };
            out.traces = trace_rows(&problem, label, u, &traces);
            if !traces.is_empty() {
                out.stats = stats_rows(label, u, &trace_stats(&traces)?);
            }
            out.fill_plan(&problem, plan)?;
        }
        Command::Compare => {
            let plan = match &options.plan {
                Some(p) => p.clone(),
                None => solve(&problem, options.solver, &tabu, &options.oracle, None)?,
            };
            let jb = problem.timing.jitter_bound();
            let det = run_deterministic(&problem, &plan, options.hypercycles, sim_seed)?;
            let det_stats = stats_of(&det)?;
            for &u in &options.utilizations {
                let bg = BackgroundTraffic { utilization: u, ..background.clone() };
                let measured = average_link_utilization(&problem, &plan, &bg, options.hypercycles);
                out.compare.push(compare_row(u, measured, "det", det_stats.as_ref(), det.len(), jb));
                let be = run_best_effort(&problem, &plan, &bg, options.hypercycles, sim_seed)?;
                let be_stats = stats_of(&be)?;
                out.compare.push(compare_row(u, measured, "besteffort", be_stats.as_ref(), be.len(), jb));
                if let Some(s) = &be_stats {
                    out.stats.extend(stats_rows("besteffort", u, s));
                }
            }
            if let Some(s) = &det_stats {
                let mut rows = stats_rows("det", 0.0, s);
                rows.append(&mut out.stats);
                out.stats = rows;
            }
            out.fill_plan(&problem, plan)?;
        }
        Command::Sweep => {
            let spec = options
                .sweep
                .ok_or_else(|| Error::InvalidConfig("sweep needs a parameter and range".into()))?;
            out.sweep = sweep(&problem, &spec, &tabu)?;
        }
    }
    Ok(out)
}

fn solve(
    p: &Problem,
    kind: SolverKind,
    tabu: &TabuConfig,
    oracle: &OracleLimits,
    warm: Option<&SchedulePlan>,
) -> Result<SchedulePlan> {
    match kind {
        SolverKind::Tabu => solve_tabu_from(p, tabu, warm),
        SolverKind::Spf => solve_baseline(p, BaselineKind::ShortestPathFirst),
        SolverKind::Noshape => solve_baseline(p, BaselineKind::NoShaping),
        SolverKind::Oracle => brute_force_oracle(p, oracle),
    }
}

/// Tabu (warm-started from the previous point), SPF and no-shaping at every value.
fn sweep(p: &Problem, spec: &SweepSpec, tabu: &TabuConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let mut warm: Option<SchedulePlan> = None;
    for v in spec.values() {
        let point = match spec.param {
            SweepParam::H => p.with_max_hops(v as usize),
            SweepParam::Demands => {
                let n = (v as usize).min(p.demands.len());
                let mut q = Problem::new(p.graph.clone(), p.timing.clone(), p.clocks.clone(), p.demands[..n].to_vec(), p.max_hops);
                q.paths_per_server = p.paths_per_server;
                q
            }
        };
        let plans = [
            solve_tabu_from(&point, tabu, warm.as_ref())?,
            solve_baseline(&point, BaselineKind::ShortestPathFirst)?,
            solve_baseline(&point, BaselineKind::NoShaping)?,
        ];
        for (name, plan) in ["tabu", "spf", "noshape"].into_iter().zip(&plans) {
            rows.push(SweepRow {
                param: spec.param.as_str().to_string(),
                value: v,
                solver: name.to_string(),
                demands: point.demands.len(),
                objective: plan.objective,
                total_bound_ns: plan.total_bound,
            });
        }
        let [t, _, _] = plans;
        warm = Some(t);
    }
    Ok(rows)
}

fn stats_of(traces: &[PacketTrace]) -> Result<Option<TraceStats>> {
    if traces.is_empty() {
        Ok(None)
    } else {
        trace_stats(traces).map(Some)
    }
}

fn compare_row(u: f64, measured: f64, mode: &str, s: Option<&TraceStats>, packets: usize, jb: Nanos) -> CompareRow {
    let mut row = CompareRow {
        utilization: u,
        measured_utilization: measured,
        mode: mode.to_string(),
        packets,
        jitter_bound_ns: jb,
        ..CompareRow::default()
    };
    if let Some(s) = s {
        row.min_latency_ns = s.min;
        row.max_latency_ns = s.max;
        row.mean_latency_ns = s.mean;
        row.p99_latency_ns = s.p99;
        row.max_jitter_ns = s.max_jitter;
        row.deadline_misses = s.deadline_misses;
    }
    row
}

fn stats_rows(mode: &str, u: f64, s: &TraceStats) -> Vec<StatsRow> {
    s.per_demand
        .iter()
        .map(|d| StatsRow {
            mode: mode.to_string(),
            utilization: u,
            demand: d.demand,
            count: d.count,
            min_ns: d.min,
            max_ns: d.max,
            mean_ns: d.mean,
            jitter_ns: d.jitter,
            deadline_misses: d.deadline_misses,
        })
        .collect()
}

fn trace_rows(p: &Problem, mode: &str, u: f64, traces: &[PacketTrace]) -> Vec<TraceRow> {
    traces
        .iter()
        .flat_map(|t| {
            t.hops.iter().enumerate().map(move |(i, h)| TraceRow {
                mode: mode.to_string(),
                utilization: u,
                demand: t.demand,
                hypercycle: t.hypercycle,
                hop: i,
                node: p.graph.node(h.node).name.clone(),
                arrival_ns: h.arrival,
                departure_cycle: h.departure_cycle,
                queue: h.queue,
                generated_ns: t.generated,
                completion_ns: t.completion,
                latency_ns: t.latency,
                bound_ns: t.bound,
            })
        })
        .collect()
}

impl ResultSet {
    fn fill_plan(&mut self, p: &Problem, plan: SchedulePlan) -> Result<()> {
        let name = |id| p.graph.node(id).name.clone();
        self.decisions = p
            .demands
            .iter()
            .map(|d| {
                let dec = plan.decisions.iter().find(|x| x.demand == d.id);
                let pl = dec.filter(|x| x.accepted).and_then(|x| x.placement.as_ref());
                DecisionRow {
                    demand: d.id,
                    accepted: pl.is_some(),
                    source: name(d.source),
                    server: pl.map(|pl| name(pl.path.server())).unwrap_or_default(),
                    path: pl
                        .map(|pl| pl.path.nodes.iter().map(|&n| name(n)).collect::<Vec<_>>().join(">"))
                        .unwrap_or_default(),
                    hops: pl.map_or(0, |pl| pl.path.hops()),
                    r0: pl.map(|pl| pl.shifts.r0()),
                    ap_shift: pl.map(|pl| pl.shifts.ap_shift()),
                    server_shift: pl.map(|pl| pl.shifts.server_shift()),
                    bound_ns: pl.map(|pl| pl.report.bound),
                    deadline_ns: d.deadline,
                }
            })
            .collect();

        let mut ledger = CycleLedger::new(&p.graph, &p.timing);
        for (i, pl) in plan.accepted() {
            let id = plan.decisions[i].demand;
            let Some(d) = p.demands.iter().find(|d| d.id == id) else {
                continue;
            };
            ledger
                .try_reserve(&p.graph, d, &pl.path, &pl.shifts, &pl.rbs, &pl.report.cycles)
                .map_err(|e| Error::Contract(format!("plan does not fit the ledger: {e}")))?;
        }
        let prof = ledger.utilization_profile(&p.graph);
        for (kind, list) in [("link", &prof.links), ("server", &prof.servers)] {
            for r in list.iter() {
                for (c, &load) in r.per_cycle.iter().enumerate() {
                    self.utilization.push(UtilizationRow {
                        kind: kind.to_string(),
                        resource: r.resource.clone(),
                        cycle: c as u32,
                        load,
                    });
                }
            }
        }
        self.plan = Some(plan);
        Ok(())
    }

    /// Main table of the command, as CSV.
    pub fn to_csv(&self) -> Result<String> {
        match self.meta.command {
            Command::Schedule => table_csv(&self.decisions),
            Command::Simulate => table_csv(&self.traces),
            Command::Compare => table_csv(&self.compare),
            Command::Sweep => table_csv(&self.sweep),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// JSON for `.json` paths, CSV otherwise.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Self::Json,
            _ => Self::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidConfig(format!("unknown format {other:?}"))),
        }
    }
}

pub fn export(results: &ResultSet, format: Format, path: &Path) -> Result<()> {
    let text = match format {
        Format::Csv => results.to_csv()?,
        Format::Json => results.to_json()?,
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// Header row plus one record per row; header only when `rows` is empty.
pub fn table_csv<T: Serialize + Default>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.serialize(T::default())?;
        let buf = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        let text = String::from_utf8(buf).expect("csv writes UTF-8");
        return Ok(text.lines().next().map(|h| format!("{h}\n")).unwrap_or_default());
    }
    for r in rows {
        w.serialize(r)?;
    }
    let buf = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(buf).expect("csv writes UTF-8"))
}

pub fn read_table<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}
