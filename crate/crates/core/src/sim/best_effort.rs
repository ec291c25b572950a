//! Ungated FIFO forwarding with background bursts, for comparison.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{service_time, ArcId, NodeId};
use crate::scheduler::{Problem, SchedulePlan};
use crate::time::Nanos;

use super::{accepted, finish, sort_traces, spawn, Agenda, BackgroundTraffic, HopRecord, PacketTrace};

enum Ev {
    Arrive(usize),
    Burst(ArcId, u64),
}

/// Sends the plan's accepted demands along their paths with no cycle gating:
/// every port and server is a single FIFO, shared with background bursts.
/// The radio part is unchanged (the task reaches the AP at the end of TTI c0).
pub fn run_best_effort(
    problem: &Problem,
    plan: &SchedulePlan,
    background: &BackgroundTraffic,
    hypercycles: u32,
    seed: u64,
) -> Result<Vec<PacketTrace>> {
    let p = problem;
    let t = &p.timing;
    if !(0.0..1.0).contains(&background.utilization) {
        return Err(Error::InvalidConfig(format!(
            "background utilization {} outside [0, 1)",
            background.utilization
        )));
    }
    if background.mean_period <= 0 {
        return Err(Error::InvalidConfig("burst period must be positive".into()));
    }
    let placements = accepted(p, plan);
    if placements.iter().any(|(_, pl)| pl.path.hops() < 2 || pl.path.arcs(&p.graph).is_none()) {
        return Err(Error::Contract("plan path uses a missing link".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut packets = spawn(p, &placements, hypercycles, &mut rng);
    let mut agenda = Agenda::new();
    for (i, pkt) in packets.iter().enumerate() {
        let ap = placements[pkt.slot].1.path.ap();
        agenda.push(p.clocks.start(ap) + (pkt.prev_cycle + 1) * t.delta_tti, Ev::Arrive(i));
    }

    for (arc, at, bits) in bursts(p, background, hypercycles) {
        agenda.push(at, Ev::Burst(arc, bits));
    }

    let mut port_busy: HashMap<ArcId, Nanos> = HashMap::new();
    let mut cpu_busy: HashMap<NodeId, Nanos> = HashMap::new();
    let mut traces = Vec::with_capacity(packets.len());

    while let Some((now, ev)) = agenda.pop() {
        match ev {
            Ev::Burst(arc, bits) => {
                let busy = port_busy.entry(arc).or_insert(Nanos::MIN);
                *busy = (*busy).max(now) + service_time(bits, p.graph.arc_link(arc).bandwidth_bps);
            }
            Ev::Arrive(i) => {
                let pkt = &mut packets[i];
                let pl = placements[pkt.slot].1;
                let node = pl.path.nodes[pkt.at];
                let dem = &p.demands[pkt.demand];
                if pkt.at == pl.path.hops() {
                    let busy = cpu_busy.entry(node).or_insert(Nanos::MIN);
                    let begin = (*busy).max(now);
                    *busy = begin + service_time(p.graph.kappa * dem.payload_bits, p.graph.cpu_hz(node));
                    pkt.hops.push(record(p, node, now, begin, t.delta_mec, t.n_mec));
                    let done = *busy;
                    traces.push(finish(p, pl, pkt, done));
                } else {
                    let arc = p.graph.arc(node, pl.path.nodes[pkt.at + 1]).expect("linked path");
                    let link = p.graph.arc_link(arc);
                    let busy = port_busy.entry(arc).or_insert(Nanos::MIN);
                    let begin = (*busy).max(now);
                    *busy = begin + service_time(dem.payload_bits, link.bandwidth_bps);
                    pkt.hops.push(record(p, node, now, begin, t.delta_dip, t.n_dip));
                    pkt.at += 1;
                    agenda.push(*busy + link.delay, Ev::Arrive(i));
                }
            }
        }
    }
    sort_traces(&mut traces);
    Ok(traces)
}

fn record(p: &Problem, node: NodeId, arrival: Nanos, begin: Nanos, len: Nanos, n: u32) -> HopRecord {
    let k = (begin - p.clocks.start(node)).div_euclid(len);
    HopRecord {
        node,
        arrival,
        departure_cycle: k.rem_euclid(i64::from(n)) as u32,
        queue: 0,
    }
}

/// Background bursts `(arc, start, bits)` covering the run, starting one period
/// early so the first task already sees a loaded link.
fn bursts(p: &Problem, bg: &BackgroundTraffic, hypercycles: u32) -> Vec<(ArcId, Nanos, u64)> {
    let mut out = Vec::new();
    if bg.utilization <= 0.0 {
        return out;
    }
    let horizon = i64::from(hypercycles) * p.timing.delta_hc;
    let mut rng = ChaCha8Rng::seed_from_u64(bg.seed);
    for arc in burst_arcs(p, bg) {
        let bw = p.graph.arc_link(arc).bandwidth_bps;
        let period = rng.gen_range(bg.mean_period / 2..=bg.mean_period * 3 / 2);
        let bits = (bg.utilization * bw as f64 * period as f64 / 1e9).round() as u64;
        let mut at = -period + rng.gen_range(0..period);
        while at < horizon + period {
            out.push((arc, at, bits));
            at += period;
        }
    }
    out
}

/// Mean over all wired arcs of the busy fraction over `hypercycles`
/// hypercycles: background bursts starting in the window plus the plan's tasks.
pub fn average_link_utilization(
    problem: &Problem,
    plan: &SchedulePlan,
    background: &BackgroundTraffic,
    hypercycles: u32,
) -> f64 {
    let p = problem;
    let arcs = p.graph.arc_count();
    if arcs == 0 || hypercycles == 0 {
        return 0.0;
    }
    let horizon = i64::from(hypercycles) * p.timing.delta_hc;
    let mut busy = vec![0 as Nanos; arcs];
    for (arc, at, bits) in bursts(p, background, hypercycles) {
        if (0..horizon).contains(&at) {
            busy[arc.index()] += service_time(bits, p.graph.arc_link(arc).bandwidth_bps);
        }
    }
    for (d, pl) in accepted(p, plan) {
        for arc in pl.path.arcs(&p.graph).unwrap_or_default() {
            let per_task = service_time(p.demands[d].payload_bits, p.graph.arc_link(arc).bandwidth_bps);
            busy[arc.index()] += per_task * i64::from(hypercycles);
        }
    }
    busy.iter().map(|&b| (b as f64 / horizon as f64).min(1.0)).sum::<f64>() / arcs as f64
}

fn burst_arcs(p: &Problem, bg: &BackgroundTraffic) -> Vec<ArcId> {
    let all = (0..p.graph.arc_count() as u32).map(ArcId);
    if bg.links.is_empty() {
        return all.collect();
    }
    all.filter(|&a| {
        let (u, v) = p.graph.arc_ends(a);
        bg.links.iter().any(|&(x, y)| (x, y) == (u, v) || (y, x) == (u, v))
    })
    .collect()
}
