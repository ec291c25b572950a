//! Discrete-event replay of a schedule plan.

mod best_effort;
mod deterministic;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NodeId;
use crate::scheduler::{Placement, Problem, SchedulePlan};
use crate::time::Nanos;

pub use best_effort::{average_link_utilization, run_best_effort};
pub use deterministic::run_deterministic;

/// Default mean burst period for background traffic.
pub const DEFAULT_BURST_PERIOD: Nanos = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopRecord {
    pub node: NodeId,
    /// When the task reached this node (generation time at the device).
    pub arrival: Nanos,
    /// Local cycle (TTI, DIP or computation) in which the node sends or processes it.
    pub departure_cycle: u32,
    /// Cyclic queue that holds it; always 0 in best-effort mode.
    pub queue: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketTrace {
    pub demand: u32,
    pub hypercycle: u32,
    pub generated: Nanos,
    pub hops: Vec<HopRecord>,
    pub completion: Nanos,
    pub latency: Nanos,
    pub bound: Nanos,
    pub deadline: Nanos,
}

/// On/off bursts on wired links.
///
/// Every selected link gets one burst of `utilization * bandwidth * period`
/// bits per period, with the period drawn per link in
/// `[mean_period / 2, 3 * mean_period / 2]` and a random phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundTraffic {
    pub utilization: f64,
    #[serde(default = "default_period")]
    pub mean_period: Nanos,
    #[serde(default)]
    pub seed: u64,
    /// Undirected links `(a, b)` carrying bursts in both directions; empty means all.
    #[serde(default)]
    pub links: Vec<(NodeId, NodeId)>,
}

fn default_period() -> Nanos {
    DEFAULT_BURST_PERIOD
}

impl BackgroundTraffic {
    pub fn none() -> Self {
        Self::uniform(0.0, 0)
    }

    pub fn uniform(utilization: f64, seed: u64) -> Self {
        Self {
            utilization,
            mean_period: DEFAULT_BURST_PERIOD,
            seed,
            links: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandStats {
    pub demand: u32,
    pub count: usize,
    pub min: Nanos,
    pub max: Nanos,
    pub mean: f64,
    pub jitter: Nanos,
    pub deadline_misses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub per_demand: Vec<DemandStats>,
    pub count: usize,
    pub min: Nanos,
    pub max: Nanos,
    pub mean: f64,
    pub p50: Nanos,
    pub p99: Nanos,
    pub max_jitter: Nanos,
    pub deadline_misses: usize,
}

pub fn trace_stats(traces: &[PacketTrace]) -> Result<TraceStats> {
    if traces.is_empty() {
        return Err(Error::EmptyTraces);
    }
    let mut groups: BTreeMap<u32, Vec<&PacketTrace>> = BTreeMap::new();
    for t in traces {
        groups.entry(t.demand).or_default().push(t);
    }
    let per_demand: Vec<DemandStats> = groups
        .into_iter()
        .map(|(demand, ts)| {
            let min = ts.iter().map(|t| t.latency).min().expect("non-empty");
            let max = ts.iter().map(|t| t.latency).max().expect("non-empty");
            DemandStats {
                demand,
                count: ts.len(),
                min,
                max,
                mean: ts.iter().map(|t| t.latency as f64).sum::<f64>() / ts.len() as f64,
                jitter: max - min,
                deadline_misses: ts.iter().filter(|t| t.latency > t.deadline).count(),
            }
        })
        .collect();
    let mut lat: Vec<Nanos> = traces.iter().map(|t| t.latency).collect();
    lat.sort_unstable();
    let pct = |q: f64| lat[((lat.len() - 1) as f64 * q).round() as usize];
    Ok(TraceStats {
        count: lat.len(),
        min: lat[0],
        max: lat[lat.len() - 1],
        mean: lat.iter().map(|&x| x as f64).sum::<f64>() / lat.len() as f64,
        p50: pct(0.5),
        p99: pct(0.99),
        max_jitter: per_demand.iter().map(|d| d.jitter).max().unwrap_or(0),
        deadline_misses: per_demand.iter().map(|d| d.deadline_misses).sum(),
        per_demand,
    })
}

/// Accepted placements in demand order, paired with their demand index.
pub(crate) fn accepted<'a>(problem: &'a Problem, plan: &'a SchedulePlan) -> Vec<(usize, &'a Placement)> {
    plan.decisions
        .iter()
        .filter(|d| d.accepted)
        .filter_map(|dec| {
            let i = problem.demands.iter().position(|d| d.id == dec.demand)?;
            Some((i, dec.placement.as_ref()?))
        })
        .collect()
}

/// A task in flight.
#[derive(Debug, Clone)]
pub(crate) struct Packet {
    pub demand: usize,
    pub slot: usize,
    pub hypercycle: u32,
    pub generated: Nanos,
    pub hops: Vec<HopRecord>,
    /// Index in the path of the node the task is at or heading to.
    pub at: usize,
    /// Unwrapped sending cycle at the previous node.
    pub prev_cycle: i64,
}

/// Generation instants: uniform inside the arrival TTI of each hypercycle,
/// drawn in (placement, hypercycle) order so both modes see the same tasks.
pub(crate) fn spawn(
    problem: &Problem,
    placements: &[(usize, &Placement)],
    hypercycles: u32,
    rng: &mut ChaCha8Rng,
) -> Vec<Packet> {
    let t = &problem.timing;
    let mut out = Vec::with_capacity(placements.len() * hypercycles as usize);
    for (slot, &(d, pl)) in placements.iter().enumerate() {
        let dem = &problem.demands[d];
        let ap_start = problem.clocks.start(pl.path.ap());
        for h in 0..hypercycles {
            let k_gen = i64::from(h) * i64::from(t.n_tti) + i64::from(dem.arrival_tti);
            let generated = ap_start + k_gen * t.delta_tti + rng.gen_range(0..t.delta_tti);
            let k0 = k_gen + i64::from(pl.shifts.r0());
            out.push(Packet {
                demand: d,
                slot,
                hypercycle: h,
                generated,
                hops: vec![HopRecord {
                    node: pl.path.device(),
                    arrival: generated,
                    departure_cycle: k0.rem_euclid(i64::from(t.n_tti)) as u32,
                    queue: 0,
                }],
                at: 1,
                prev_cycle: k0,
            });
        }
    }
    out
}

/// Min-heap of timed events with FIFO tie-breaking.
pub(crate) struct Agenda<E> {
    heap: BinaryHeap<Reverse<(Nanos, u64, usize)>>,
    events: Vec<Option<E>>,
    seq: u64,
}

impl<E> Agenda<E> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            events: Vec::new(),
            seq: 0,
        }
    }

    pub fn push(&mut self, at: Nanos, ev: E) {
        self.events.push(Some(ev));
        self.heap.push(Reverse((at, self.seq, self.events.len() - 1)));
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<(Nanos, E)> {
        let Reverse((at, _, i)) = self.heap.pop()?;
        Some((at, self.events[i].take().expect("popped once")))
    }
}

pub(crate) fn finish(p: &Problem, pl: &Placement, pkt: &mut Packet, completion: Nanos) -> PacketTrace {
    let dem = &p.demands[pkt.demand];
    PacketTrace {
        demand: dem.id,
        hypercycle: pkt.hypercycle,
        generated: pkt.generated,
        hops: std::mem::take(&mut pkt.hops),
        completion,
        latency: completion - pkt.generated,
        bound: pl.report.bound,
        deadline: dem.deadline,
    }
}

pub(crate) fn sort_traces(traces: &mut [PacketTrace]) {
    traces.sort_by_key(|t| (t.demand, t.hypercycle));
}
