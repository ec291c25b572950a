//! Plan checker that recomputes every constraint from scratch.

use std::collections::{BTreeMap, HashMap};

use crate::latency::accumulated_delay;
use crate::network::{ArcId, NodeId, NodeKind, Rb};
use crate::time::Nanos;
use crate::violation::{Violation, ViolationCode as V};

use super::{Problem, SchedulePlan};

/// Every violation in `plan`; empty means the plan is feasible.
pub fn validate_plan(problem: &Problem, plan: &SchedulePlan) -> Vec<Violation> {
    let p = problem;
    let t = &p.timing;
    let g = &p.graph;
    let mut out = Vec::new();

    let mut by_id: HashMap<u32, usize> = HashMap::new();
    for (i, dec) in plan.decisions.iter().enumerate() {
        if by_id.insert(dec.demand, i).is_some() {
            out.push(Violation::for_demand(V::MissingDecision, dec.demand, "demand decided twice"));
        }
    }
    for dec in &plan.decisions {
        if !p.demands.iter().any(|d| d.id == dec.demand) {
            out.push(Violation::for_demand(V::MissingDecision, dec.demand, "decision for an unknown demand"));
        }
    }

    let mut link_load: BTreeMap<(ArcId, u32), u64> = BTreeMap::new();
    let mut server_load: BTreeMap<(NodeId, u32), u64> = BTreeMap::new();
    let mut rb_owner: BTreeMap<(NodeId, Rb), u32> = BTreeMap::new();
    let mut accepted = 0u32;
    let mut total: Nanos = 0;

    for dem in &p.demands {
        let v = |code, msg: String| Violation::for_demand(code, dem.id, msg);
        let Some(&i) = by_id.get(&dem.id) else {
            out.push(v(V::MissingDecision, "no decision".into()));
            continue;
        };
        let dec = &plan.decisions[i];
        let pl = match (&dec.placement, dec.accepted) {
            (Some(_), false) => {
                out.push(v(V::RejectedHolds, "rejected demand carries a placement".into()));
                continue;
            }
            (None, true) => {
                out.push(v(V::MissingDecision, "accepted demand has no placement".into()));
                continue;
            }
            (None, false) => continue,
            (Some(pl), true) => pl,
        };
        accepted += 1;

        let shape = pl.path.shape_errors(g, dem, p.max_hops);
        let fatal = shape.iter().any(|s| s.code == V::PathShape);
        out.extend(shape);
        if fatal {
            continue;
        }

        let report = match accumulated_delay(dem, &pl.path, &pl.shifts, t, &p.clocks, g) {
            Ok(r) => r,
            Err(e) => {
                out.push(v(V::ShiftBounds, e.to_string()));
                continue;
            }
        };
        if report != pl.report {
            out.push(v(V::StaleReport, "cached latency report differs from recomputation".into()));
        }
        total += report.bound;
        if report.bound > dem.deadline {
            out.push(v(
                V::DeadlineMiss,
                format!("bound {} ns > deadline {} ns", report.bound, dem.deadline),
            ));
        }

        // RBs: inside the grid, inside [breve + 1, r0] after arrival, touching both ends
        let ap = pl.path.ap();
        let n = t.n_tti;
        let breve = pl.shifts.buffer_ttis;
        let r0 = pl.shifts.r0();
        let mut bits = 0u64;
        let mut offsets = Vec::with_capacity(pl.rbs.len());
        for &rb in &pl.rbs {
            if rb.tti >= n || rb.band >= g.rb.bands {
                out.push(v(V::RbWindow, format!("RB ({}, {}) outside the grid", rb.tti, rb.band)));
                continue;
            }
            let off = (rb.tti + n - dem.arrival_tti % n) % n;
            offsets.push(off);
            if off <= breve || off > r0 {
                out.push(v(
                    V::RbWindow,
                    format!("RB at TTI offset {off} outside window ({breve}, {r0}]"),
                ));
            }
            if let Some(holder) = rb_owner.insert((ap, rb), dem.id) {
                out.push(v(
                    V::RbConflict,
                    format!("RB (tti {}, band {}) also held by demand {holder}", rb.tti, rb.band),
                ));
            }
            bits += g.rb_capacity(ap, rb.tti, rb.band);
        }
        if let (Some(&lo), Some(&hi)) = (offsets.iter().min(), offsets.iter().max()) {
            if lo != breve + 1 || hi != r0 {
                out.push(v(
                    V::RbWindow,
                    format!("RBs span offsets [{lo}, {hi}] but shifts claim ({breve}, {r0}]"),
                ));
            }
        }
        if bits < dem.payload_bits {
            out.push(v(
                V::RbCapacityShort,
                format!("RBs carry {bits} bits, payload is {}", dem.payload_bits),
            ));
        }

        let nodes = &pl.path.nodes;
        for k in 1..nodes.len() - 1 {
            if let Some(arc) = g.arc(nodes[k], nodes[k + 1]) {
                *link_load.entry((arc, report.cycles[k])).or_default() += dem.payload_bits;
            }
        }
        let server = pl.path.server();
        if g.node(server).kind == NodeKind::Server {
            *server_load.entry((server, *report.cycles.last().expect("cycles"))).or_default() +=
                g.kappa * dem.payload_bits;
        }
    }

    for (&(arc, cycle), &load) in &link_load {
        let budget = g.arc_budget(arc, t);
        if load > budget {
            let (a, b) = g.arc_ends(arc);
            out.push(Violation::new(
                V::LinkOverflow,
                format!(
                    "{} -> {} carries {load} bits in DIP cycle {cycle}, budget {budget}",
                    g.node(a).name,
                    g.node(b).name
                ),
            ));
        }
    }
    for (&(server, cycle), &load) in &server_load {
        let budget = g.server_budget(server, t);
        if load > budget {
            out.push(Violation::new(
                V::ServerOverflow,
                format!(
                    "{} needs {load} CPU cycles in computation cycle {cycle}, budget {budget}",
                    g.node(server).name
                ),
            ));
        }
    }
    if plan.objective != accepted || plan.total_bound != total {
        out.push(Violation::new(
            V::ObjectiveMismatch,
            format!(
                "plan claims ({}, {} ns), recomputed ({accepted}, {total} ns)",
                plan.objective, plan.total_bound
            ),
        ));
    }
    out
}
