//! Scenario files and the profile generators.
//!
//! A scenario names nodes by string and keeps every duration in nanoseconds.
//! All randomness in a run comes from the named seeds stored in the file.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{
    enumerate_spaths, shannon_rb_bits, validate_graph, Demand, Link, NetworkGraph, Node, NodeId, NodeKind,
    RbGridSpec, RbOverride,
};
use crate::scheduler::Problem;
use crate::sim::{BackgroundTraffic, DEFAULT_BURST_PERIOD};
use crate::time::{compute_hypercycle, micros, ClockTable, Nanos, TimingConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub topology: u64,
    pub offsets: u64,
    pub traffic: u64,
    pub solver: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    pub delta_tti_ns: Nanos,
    pub delta_dip_ns: Nanos,
    pub delta_mec_ns: Nanos,
    pub queues: u32,
    /// Hypercycle multiplier; smallest valid one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_hc: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub name: String,
    pub kind: NodeKind,
    /// Servers only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpu_hz: Option<u64>,
    /// Devices only: the AP it attaches to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ap: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub a: String,
    pub b: String,
    pub delay_ns: Nanos,
    pub bandwidth_bps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
    /// CPU cycles per payload bit.
    pub kappa: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShannonSpec {
    pub band_hz: f64,
    pub tx_power_dbm: f64,
    pub distance_m: f64,
    pub path_loss_exponent: f64,
    pub noise_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideSpec {
    pub ap: String,
    pub tti: u32,
    pub band: u32,
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbSection {
    pub bands: u32,
    /// Uniform per-RB capacity; derived from `shannon` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_bits: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shannon: Option<ShannonSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<OverrideSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSpec {
    pub id: u32,
    pub source: String,
    pub period_ns: Nanos,
    pub arrival_tti: u32,
    pub payload_bits: u64,
    pub deadline_ns: Nanos,
}

/// Hypercycle start instants per node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OffsetSpec {
    Zero,
    /// Start per node name; missing nodes start at 0.
    Explicit { starts_ns: BTreeMap<String, Nanos> },
    /// Uniform starts in `[0, max_ns)` drawn from the offsets seed.
    Randomize { max_ns: Nanos },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSection {
    pub utilization: f64,
    #[serde(default = "default_burst_period")]
    pub mean_period_ns: Nanos,
    /// Undirected links by node name; empty means every wired link.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<(String, String)>,
}

fn default_burst_period() -> Nanos {
    DEFAULT_BURST_PERIOD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub seeds: Seeds,
    pub hop_bound: usize,
    pub timing: TimingSection,
    pub graph: GraphSection,
    pub rb: RbSection,
    pub demands: Vec<DemandSpec>,
    pub offsets: OffsetSpec,
    pub background: BackgroundSection,
}

/// A scenario resolved into solver and simulator inputs.
#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: Problem,
    pub background: BackgroundTraffic,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn timing(&self) -> Result<TimingConfig> {
        let t = &self.timing;
        let periods: Vec<Nanos> = self.demands.iter().map(|d| d.period_ns).filter(|&p| p > 0).collect();
        match t.n_hc {
            Some(n) => TimingConfig::with_multiplier(t.delta_tti_ns, t.delta_dip_ns, t.delta_mec_ns, &periods, t.queues, n),
            None => compute_hypercycle(t.delta_tti_ns, t.delta_dip_ns, t.delta_mec_ns, &periods, t.queues),
        }
    }

    /// Resolves names, builds the graph, timing and clocks, and validates them.
    pub fn instance(&self) -> Result<Instance> {
        let timing = self.timing()?;
        let mut ids: BTreeMap<&str, NodeId> = BTreeMap::new();
        let mut nodes = Vec::with_capacity(self.graph.nodes.len());
        for (i, n) in self.graph.nodes.iter().enumerate() {
            let id = NodeId(i as u32);
            if ids.insert(n.name.as_str(), id).is_some() {
                return Err(Error::InvalidConfig(format!("node name {} repeats", n.name)));
            }
            nodes.push(Node {
                id,
                name: n.name.clone(),
                kind: n.kind,
                cpu_hz: n.cpu_hz,
            });
        }
        let lookup = |name: &str| {
            ids.get(name)
                .copied()
                .ok_or_else(|| Error::InvalidConfig(format!("unknown node {name:?}")))
        };
        let links = self
            .graph
            .links
            .iter()
            .map(|l| {
                Ok(Link {
                    a: lookup(&l.a)?,
                    b: lookup(&l.b)?,
                    delay: l.delay_ns,
                    bandwidth_bps: l.bandwidth_bps,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut attachments = Vec::new();
        for (i, n) in self.graph.nodes.iter().enumerate() {
            if let Some(ap) = &n.ap {
                attachments.push((NodeId(i as u32), lookup(ap)?));
            }
        }
        let capacity_bits = match (self.rb.capacity_bits, &self.rb.shannon) {
            (Some(c), _) => c,
            (None, Some(s)) => shannon_rb_bits(
                s.band_hz,
                timing.delta_tti,
                s.tx_power_dbm,
                s.distance_m,
                s.path_loss_exponent,
                s.noise_dbm,
            ),
            (None, None) => return Err(Error::InvalidConfig("RB section needs capacity_bits or shannon".into())),
        };
        let overrides = self
            .rb
            .overrides
            .iter()
            .map(|o| {
                Ok(RbOverride {
                    ap: lookup(&o.ap)?,
                    tti: o.tti,
                    band: o.band,
                    bits: o.bits,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let rb = RbGridSpec {
            bands: self.rb.bands,
            capacity_bits,
            overrides,
        };
        let graph = NetworkGraph::new(nodes, links, attachments, self.graph.kappa, rb)?;

        let demands = self
            .demands
            .iter()
            .map(|d| {
                Ok(Demand {
                    id: d.id,
                    source: lookup(&d.source)?,
                    period: d.period_ns,
                    arrival_tti: d.arrival_tti,
                    payload_bits: d.payload_bits,
                    deadline: d.deadline_ns,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let starts = match &self.offsets {
            OffsetSpec::Zero => vec![0; graph.node_count()],
            OffsetSpec::Explicit { starts_ns } => {
                let mut s = vec![0; graph.node_count()];
                for (name, &start) in starts_ns {
                    s[lookup(name)?.index()] = start;
                }
                s
            }
            OffsetSpec::Randomize { max_ns } => {
                if *max_ns <= 0 {
                    return Err(Error::InvalidConfig("offset range must be positive".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seeds.offsets);
                (0..graph.node_count()).map(|_| rng.gen_range(0..*max_ns)).collect()
            }
        };
        let clocks = ClockTable::aligned(&graph, starts)?;

        let violations = validate_graph(&graph, &timing, &demands);
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }

        let bg_links = self
            .background
            .links
            .iter()
            .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>>>()?;
        let background = BackgroundTraffic {
            utilization: self.background.utilization,
            mean_period: self.background.mean_period_ns,
            seed: self.seeds.traffic.wrapping_add(1),
            links: bg_links,
        };
        Ok(Instance {
            problem: Problem::new(graph, timing, clocks, demands, self.hop_bound),
            background,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Tiny,
    PaperLike,
    Stress,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Tiny => "tiny",
            Self::PaperLike => "paper-like",
            Self::Stress => "stress",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tiny" => Ok(Self::Tiny),
            "paper-like" => Ok(Self::PaperLike),
            "stress" => Ok(Self::Stress),
            other => Err(Error::InvalidConfig(format!("unknown profile {other:?}"))),
        }
    }
}

/// Payload of every generated paper-like task.
pub const PAPER_PAYLOAD_BITS: u64 = 8192;
/// CPU cycles per bit for generated scenarios.
pub const PAPER_KAPPA: u64 = 100;
/// Demand count of the paper-like profile.
pub const PAPER_DEMANDS: usize = 120;

pub fn generate_scenario(profile: Profile, seed: u64) -> ScenarioFile {
    match profile {
        Profile::Tiny => tiny(seed),
        Profile::PaperLike => paper_like(seed, PAPER_DEMANDS),
        Profile::Stress => paper_like(seed, 2 * PAPER_DEMANDS),
    }
}

fn derived_seeds(seed: u64) -> Seeds {
    Seeds {
        topology: seed,
        offsets: seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1),
        traffic: seed.wrapping_mul(0xBF58_476D_1CE4_E5B9).wrapping_add(2),
        solver: seed.wrapping_mul(0x94D0_49BB_1331_11EB).wrapping_add(3),
    }
}

fn node(name: &str, kind: NodeKind) -> NodeSpec {
    NodeSpec {
        name: name.into(),
        kind,
        cpu_hz: None,
        ap: None,
    }
}

fn device(name: &str, ap: &str) -> NodeSpec {
    NodeSpec {
        ap: Some(ap.into()),
        ..node(name, NodeKind::Device)
    }
}

fn server(name: &str, cpu_hz: u64) -> NodeSpec {
    NodeSpec {
        cpu_hz: Some(cpu_hz),
        ..node(name, NodeKind::Server)
    }
}

fn link(a: &str, b: &str, delay_ns: Nanos, bandwidth_bps: u64) -> LinkSpec {
    LinkSpec {
        a: a.into(),
        b: b.into(),
        delay_ns,
        bandwidth_bps,
    }
}

/// CPU rate that fits exactly `tasks` tasks of `cpu_per_task` cycles into one
/// computation cycle of `delta_mec`.
fn cpu_for(tasks: u64, cpu_per_task: u64, delta_mec: Nanos) -> u64 {
    (u128::from(tasks * cpu_per_task) * 1_000_000_000).div_ceil(delta_mec as u128) as u64
}

/// 10 APs on 10 aggregation routers, 5 core routers, 3 edge servers on
/// aggregation routers and 2 central servers on core routers.
fn paper_like(seed: u64, demand_count: usize) -> ScenarioFile {
    const GBPS10: u64 = 10_000_000_000;
    let seeds = derived_seeds(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seeds.topology);
    let timing = TimingSection {
        delta_tti_ns: micros(125),
        delta_dip_ns: micros(15),
        delta_mec_ns: micros(30),
        queues: 20,
        n_hc: None,
    };
    let delay = |rng: &mut ChaCha8Rng| rng.gen_range(micros(30)..=micros(60));
    let task_cpu = PAPER_KAPPA * PAPER_PAYLOAD_BITS;

    let mut nodes = Vec::new();
    let mut links = Vec::new();
    for i in 0..10 {
        nodes.push(node(&format!("ap{i}"), NodeKind::Ap));
    }
    for i in 0..10 {
        nodes.push(node(&format!("agg{i}"), NodeKind::Router));
    }
    for i in 0..5 {
        nodes.push(node(&format!("core{i}"), NodeKind::Router));
    }
    for (i, agg) in [0, 4, 7].into_iter().enumerate() {
        nodes.push(server(&format!("edge{i}"), cpu_for(1, task_cpu, timing.delta_mec_ns)));
        links.push(link(&format!("agg{agg}"), &format!("edge{i}"), delay(&mut rng), GBPS10));
    }
    for (i, core) in [0, 3].into_iter().enumerate() {
        nodes.push(server(&format!("central{i}"), cpu_for(2, task_cpu, timing.delta_mec_ns)));
        links.push(link(&format!("core{core}"), &format!("central{i}"), delay(&mut rng), GBPS10));
    }
    for i in 0..10 {
        links.push(link(&format!("ap{i}"), &format!("agg{i}"), delay(&mut rng), GBPS10));
        links.push(link(&format!("agg{i}"), &format!("core{}", i / 2), delay(&mut rng), GBPS10));
    }
    // neighbouring aggregation routers in pairs, and a core ring
    for i in (0..10).step_by(2) {
        links.push(link(&format!("agg{i}"), &format!("agg{}", i + 1), delay(&mut rng), GBPS10));
    }
    for i in 0..5 {
        links.push(link(&format!("core{i}"), &format!("core{}", (i + 1) % 5), delay(&mut rng), GBPS10));
    }

    let devices_per_ap = 4;
    for ap in 0..10 {
        for k in 0..devices_per_ap {
            nodes.push(device(&format!("ue{ap}-{k}"), &format!("ap{ap}")));
        }
    }
    let hc = micros(750);
    let demands = (0..demand_count as u32)
        .map(|id| {
            let ap = rng.gen_range(0..10);
            let k = rng.gen_range(0..devices_per_ap);
            DemandSpec {
                id,
                source: format!("ue{ap}-{k}"),
                period_ns: hc,
                arrival_tti: rng.gen_range(0..6),
                payload_bits: PAPER_PAYLOAD_BITS,
                deadline_ns: micros(1000),
            }
        })
        .collect();

    ScenarioFile {
        name: format!("paper-like-{seed}"),
        seeds,
        hop_bound: 6,
        timing,
        graph: GraphSection {
            nodes,
            links,
            kappa: PAPER_KAPPA,
        },
        rb: RbSection {
            bands: 12,
            capacity_bits: Some(3000),
            shannon: None,
            overrides: Vec::new(),
        },
        demands,
        offsets: OffsetSpec::Randomize { max_ns: hc },
        background: BackgroundSection {
            utilization: 0.6,
            mean_period_ns: DEFAULT_BURST_PERIOD,
            links: Vec::new(),
        },
    }
}

/// At most 8 nodes and 4 paths per demand, with tight link and server budgets.
fn tiny(seed: u64) -> ScenarioFile {
    const GBPS: u64 = 1_000_000_000;
    let seeds = derived_seeds(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seeds.topology);
    let queues = *[3u32, 4, 5].choose(&mut rng).expect("non-empty");
    let timing = TimingSection {
        delta_tti_ns: micros(30),
        delta_dip_ns: micros(10),
        delta_mec_ns: micros(20),
        queues,
        n_hc: None,
    };
    let hc = compute_hypercycle(timing.delta_tti_ns, timing.delta_dip_ns, timing.delta_mec_ns, &[], queues)
        .expect("fixed tiny timing is valid");
    let two_aps = rng.gen_bool(0.5);
    let two_servers = rng.gen_bool(0.7);
    let kappa = 1;
    let payloads = [4000u64, 6000, 8000];

    loop {
        let mut nodes = vec![node("ap0", NodeKind::Ap)];
        if two_aps {
            nodes.push(node("ap1", NodeKind::Ap));
        }
        nodes.push(node("r0", NodeKind::Router));
        nodes.push(node("r1", NodeKind::Router));
        // one or two tasks of the largest payload per computation cycle
        let per_cycle = rng.gen_range(1..=2u64);
        nodes.push(server("s0", cpu_for(per_cycle, kappa * 8000, timing.delta_mec_ns)));
        if two_servers {
            nodes.push(server("s1", cpu_for(rng.gen_range(1..=2), kappa * 8000, timing.delta_mec_ns)));
        }
        nodes.push(device("ue0", "ap0"));
        nodes.push(device("ue1", if two_aps { "ap1" } else { "ap0" }));

        let d = |rng: &mut ChaCha8Rng| micros(rng.gen_range(5..=25));
        // 1 Gb/s carries one or two tasks per DIP cycle
        let bw = |rng: &mut ChaCha8Rng| *[GBPS, GBPS, 2 * GBPS].choose(rng).expect("non-empty");
        let mut links = vec![link("ap0", "r0", d(&mut rng), bw(&mut rng))];
        if rng.gen_bool(0.5) {
            links.push(link("ap0", "r1", d(&mut rng), bw(&mut rng)));
        }
        if two_aps {
            links.push(link("ap1", "r1", d(&mut rng), bw(&mut rng)));
        }
        if rng.gen_bool(0.6) {
            links.push(link("r0", "r1", d(&mut rng), bw(&mut rng)));
        }
        links.push(link("r0", "s0", d(&mut rng), bw(&mut rng)));
        if two_servers {
            links.push(link("r1", "s1", d(&mut rng), bw(&mut rng)));
        } else {
            links.push(link("r1", "s0", d(&mut rng), bw(&mut rng)));
        }
        if rng.gen_bool(0.3) {
            let (a, b) = if two_servers { ("r0", "s1") } else { ("r0", "r1") };
            if !links.iter().any(|l| (l.a == a && l.b == b) || (l.a == b && l.b == a)) {
                links.push(link(a, b, d(&mut rng), bw(&mut rng)));
            }
        }

        let bands = rng.gen_range(2..=4);
        let capacity = 4000;
        let n_demands = rng.gen_range(2..=6u32);
        let demands: Vec<DemandSpec> = (0..n_demands)
            .map(|id| DemandSpec {
                id,
                source: format!("ue{}", rng.gen_range(0..2)),
                period_ns: hc.delta_hc,
                arrival_tti: rng.gen_range(0..hc.n_tti),
                payload_bits: *payloads.choose(&mut rng).expect("non-empty"),
                deadline_ns: micros(rng.gen_range(120..=260)),
            })
            .collect();

        let scenario = ScenarioFile {
            name: format!("tiny-{seed}"),
            seeds: seeds.clone(),
            hop_bound: 4,
            timing: timing.clone(),
            graph: GraphSection { nodes, links, kappa },
            rb: RbSection {
                bands,
                capacity_bits: Some(capacity),
                shannon: None,
                overrides: Vec::new(),
            },
            demands,
            offsets: OffsetSpec::Randomize { max_ns: hc.delta_hc },
            background: BackgroundSection {
                utilization: 0.5,
                mean_period_ns: micros(100),
                links: Vec::new(),
            },
        };
        // keep every demand within the exhaustive-search path limit
        let inst = scenario.instance().expect("generated tiny scenarios are valid");
        let p = &inst.problem;
        if p.demands.iter().all(|d| enumerate_spaths(&p.graph, d, p.max_hops, usize::MAX).len() <= 4) {
            return scenario;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::{brute_force_oracle, OracleLimits};

    #[test]
    fn paper_like_counts() {
        let s = generate_scenario(Profile::PaperLike, 1);
        let inst = s.instance().unwrap();
        let g = &inst.problem.graph;
        let count = |k| g.nodes().iter().filter(|n| n.kind == k).count();
        assert_eq!(count(NodeKind::Ap), 10);
        assert_eq!(count(NodeKind::Router), 15);
        assert_eq!(count(NodeKind::Server), 5);
        let edge = g.nodes().iter().filter(|n| n.name.starts_with("edge")).count();
        assert_eq!(edge, 3);
        assert!(g.links().iter().all(|l| l.bandwidth_bps == 10_000_000_000));
        assert!(g.links().iter().all(|l| (micros(30)..=micros(60)).contains(&l.delay)));
        let t = &inst.problem.timing;
        assert_eq!((t.delta_hc, t.n_tti, t.n_dip, t.n_mec), (micros(750), 6, 50, 25));
        assert_eq!(t.jitter_bound(), micros(155));
    }

    #[test]
    fn same_seed_same_file() {
        for p in [Profile::Tiny, Profile::PaperLike, Profile::Stress] {
            assert_eq!(generate_scenario(p, 9).to_json().unwrap(), generate_scenario(p, 9).to_json().unwrap());
        }
        assert_ne!(generate_scenario(Profile::Tiny, 1), generate_scenario(Profile::Tiny, 2));
    }

    #[test]
    fn round_trip() {
        for seed in 0..20 {
            for p in [Profile::Tiny, Profile::PaperLike] {
                let s = generate_scenario(p, seed);
                assert_eq!(ScenarioFile::from_json(&s.to_json().unwrap()).unwrap(), s);
            }
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let s = generate_scenario(Profile::Tiny, 1).to_json().unwrap();
        let bad = s.replacen("\"hop_bound\"", "\"hop_bund\"", 1);
        assert!(ScenarioFile::from_json(&bad).is_err());
        let bad = s.replacen("\"kappa\"", "\"extra\": 1, \"kappa\"", 1);
        assert!(ScenarioFile::from_json(&bad).is_err());
    }

    #[test]
    fn tiny_fits_the_oracle() {
        for seed in 0..30 {
            let inst = generate_scenario(Profile::Tiny, seed).instance().unwrap();
            assert!(inst.problem.graph.node_count() <= 8);
            brute_force_oracle(&inst.problem, &OracleLimits::default()).unwrap();
        }
    }

    #[test]
    fn shannon_capacity_is_used_when_no_uniform_value() {
        let mut s = generate_scenario(Profile::Tiny, 3);
        s.rb.capacity_bits = None;
        assert!(s.instance().is_err());
        s.rb.shannon = Some(ShannonSpec {
            band_hz: 180_000.0,
            tx_power_dbm: 23.0,
            distance_m: 50.0,
            path_loss_exponent: 3.0,
            noise_dbm: -120.0,
        });
        let inst = s.instance().unwrap();
        assert!(inst.problem.graph.rb.capacity_bits > 0);
    }

    #[test]
    fn devices_share_their_ap_clock() {
        let inst = generate_scenario(Profile::PaperLike, 4).instance().unwrap();
        let g = &inst.problem.graph;
        for n in g.nodes().iter().filter(|n| n.kind == NodeKind::Device) {
            let ap = g.ap_of(n.id).unwrap();
            assert_eq!(inst.problem.clocks.start(n.id), inst.problem.clocks.start(ap));
        }
    }
}
