//! Cycle-gated forwarding: cycle-identifier swap, Q rotating queues per port,
//! and computation cycles at the server.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::latency::path_mappings;
use crate::network::{service_time, ArcId, NodeId};
use crate::scheduler::{validate_plan, Placement, Problem, SchedulePlan};
use crate::time::CycleHop;

use super::{accepted, finish, sort_traces, spawn, Agenda, HopRecord, PacketTrace};

enum Ev {
    Arrive(usize),
    Port(ArcId, i64),
    Compute(NodeId, i64),
}

/// Replays `plan` for `hypercycles` hypercycles. Fails if the plan does not
/// validate, or if any packet misses its mapped cycle or overflows a queue.
pub fn run_deterministic(problem: &Problem, plan: &SchedulePlan, hypercycles: u32, seed: u64) -> Result<Vec<PacketTrace>> {
    let violations = validate_plan(problem, plan);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    let p = problem;
    let t = &p.timing;
    let placements = accepted(p, plan);
    let maps: Vec<Vec<CycleHop>> = placements
        .iter()
        .map(|(_, pl)| path_mappings(&pl.path, &p.graph, t, &p.clocks))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut packets = spawn(p, &placements, hypercycles, &mut rng);
    let mut agenda = Agenda::new();
    for (i, pkt) in packets.iter().enumerate() {
        let ap = placements[pkt.slot].1.path.ap();
        // RBs finish by the end of TTI c0
        agenda.push(p.clocks.start(ap) + (pkt.prev_cycle + 1) * t.delta_tti, Ev::Arrive(i));
    }

    let mut port_q: BTreeMap<(ArcId, i64), Vec<usize>> = BTreeMap::new();
    let mut cpu_q: BTreeMap<(NodeId, i64), Vec<usize>> = BTreeMap::new();
    let mut traces = Vec::with_capacity(packets.len());

    while let Some((now, ev)) = agenda.pop() {
        match ev {
            Ev::Arrive(i) => {
                let pkt = &mut packets[i];
                let pl: &Placement = placements[pkt.slot].1;
                let hop = &maps[pkt.slot][pkt.at - 1];
                let node = pl.path.nodes[pkt.at];
                let start = p.clocks.start(node);
                let len = hop.to.cycle_len;
                let n = i64::from(hop.to.cycles_per_hc);
                let here = (now - start).div_euclid(len);
                let latest = hop.unwrapped(pkt.prev_cycle);
                if here > latest {
                    return Err(Error::Contract(format!(
                        "demand {} reached {} in cycle {here}, after its mapped cycle {latest}",
                        p.demands[pkt.demand].id, p.graph.node(node).name
                    )));
                }
                // the receiver only sees the sender's cycle id
                let sent_id = pkt.prev_cycle.rem_euclid(i64::from(hop.from.cycles_per_hc)) as u32;
                let target = i64::from((hop.map_cycle(sent_id)? + pl.shifts.hops[pkt.at - 1]) % hop.to.cycles_per_hc);
                let send = here + 1 + (target - (here + 1)).rem_euclid(n);
                if send - here > i64::from(t.queue_count) - 1 {
                    return Err(Error::Contract(format!(
                        "demand {} waits {} cycles at {}, more than Q-1 receiving queues",
                        p.demands[pkt.demand].id,
                        send - here,
                        p.graph.node(node).name
                    )));
                }
                pkt.hops.push(HopRecord {
                    node,
                    arrival: now,
                    departure_cycle: target as u32,
                    queue: send.rem_euclid(i64::from(t.queue_count)) as u32,
                });
                pkt.prev_cycle = send;
                let at = start + send * len;
                if pkt.at == pl.path.hops() {
                    let q = cpu_q.entry((node, send)).or_default();
                    if q.is_empty() {
                        agenda.push(at, Ev::Compute(node, send));
                    }
                    q.push(i);
                } else {
                    let arc = p.graph.arc(node, pl.path.nodes[pkt.at + 1]).expect("validated path");
                    let q = port_q.entry((arc, send)).or_default();
                    if q.is_empty() {
                        agenda.push(at, Ev::Port(arc, send));
                    }
                    q.push(i);
                }
            }
            Ev::Port(arc, k) => {
                let mut q = port_q.remove(&(arc, k)).unwrap_or_default();
                q.sort_by_key(|&i| (packets[i].hops.last().map(|h| h.arrival), packets[i].demand, packets[i].hypercycle));
                let link = p.graph.arc_link(arc);
                let total: u64 = q.iter().map(|&i| p.demands[packets[i].demand].payload_bits).sum();
                let slack = t.delta_dip - service_time(total, link.bandwidth_bps);
                if slack < 0 {
                    return Err(Error::Contract(format!("DIP cycle {k} on arc {arc:?} overbooked")));
                }
                let begin = now + rng.gen_range(0..=slack);
                let mut bits = 0;
                for &i in &q {
                    bits += p.demands[packets[i].demand].payload_bits;
                    packets[i].at += 1;
                    agenda.push(begin + service_time(bits, link.bandwidth_bps) + link.delay, Ev::Arrive(i));
                }
            }
            Ev::Compute(server, k) => {
                let mut q = cpu_q.remove(&(server, k)).unwrap_or_default();
                q.sort_by_key(|&i| (packets[i].hops.last().map(|h| h.arrival), packets[i].demand, packets[i].hypercycle));
                let mut cpu = 0;
                for i in q {
                    let pkt = &mut packets[i];
                    cpu += p.graph.kappa * p.demands[pkt.demand].payload_bits;
                    let clock = now + service_time(cpu, p.graph.cpu_hz(server));
                    if clock > now + t.delta_mec {
                        return Err(Error::Contract(format!(
                            "computation cycle {k} at {} overbooked",
                            p.graph.node(server).name
                        )));
                    }
                    let pl = placements[pkt.slot].1;
                    traces.push(finish(p, pl, pkt, clock));
                }
            }
        }
    }
    sort_traces(&mut traces);
    Ok(traces)
}
