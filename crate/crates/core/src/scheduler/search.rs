//! Incremental placement state shared by the greedy, baseline and tabu solvers.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::latency::{evaluate, path_mappings, ShiftVector};
use crate::ledger::{CycleLedger, ReservationHandle};
use crate::network::{enumerate_spaths, validate_graph, ArcId, Demand, NodeId, Rb, RbGrid, SPath};
use crate::time::{CycleHop, Nanos};

use super::{Decision, Placement, Problem, SchedulePlan};

/// A candidate path from an AP, shared by every device on that AP.
#[derive(Debug, Clone)]
pub(crate) struct CandPath {
    /// Device slot (`nodes[0]`) belongs to whichever demand enumerated it first.
    pub path: SPath,
    pub arcs: Vec<ArcId>,
    pub maps: Vec<CycleHop>,
    pub delay: Nanos,
}

impl CandPath {
    fn same_route(&self, path: &SPath) -> bool {
        self.path.nodes[1..] == path.nodes[1..]
    }
}

/// Which shifts a placement search may use.
#[derive(Debug, Clone)]
pub(crate) struct Spec {
    pub buffers: RangeInclusive<u32>,
    pub ap: RangeInclusive<u32>,
    pub server: RangeInclusive<u32>,
}

impl Spec {
    pub fn full(p: &Problem) -> Self {
        let r = p.timing.max_shift().max(1);
        Self {
            buffers: 0..=p.timing.n_tti,
            ap: 1..=r,
            server: 1..=r,
        }
    }

    pub fn unshaped(p: &Problem) -> Self {
        Self {
            ap: 1..=1,
            server: 1..=1,
            ..Self::full(p)
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Slot {
    pub cand: usize,
    pub placement: Placement,
    pub handle: ReservationHandle,
}

/// Reject instances the solvers cannot interpret.
pub(crate) fn check_problem(p: &Problem) -> Result<()> {
    if p.max_hops < 2 {
        return Err(Error::Contract(format!("hop bound H = {} < 2", p.max_hops)));
    }
    let violations = validate_graph(&p.graph, &p.timing, &p.demands);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub(crate) struct Engine<'p> {
    pub p: &'p Problem,
    pub ledger: CycleLedger,
    /// Candidate paths per AP.
    cands: BTreeMap<NodeId, Vec<CandPath>>,
    pub slots: Vec<Option<Slot>>,
    pub accepted: u32,
    pub total_bound: Nanos,
}

impl<'p> Engine<'p> {
    pub fn new(p: &'p Problem) -> Result<Self> {
        let mut cands: BTreeMap<NodeId, Vec<CandPath>> = BTreeMap::new();
        for d in &p.demands {
            let Some(ap) = p.graph.ap_of(d.source) else {
                continue;
            };
            if cands.contains_key(&ap) {
                continue;
            }
            let mut list = Vec::new();
            for path in enumerate_spaths(&p.graph, d, p.max_hops, p.paths_per_server) {
                list.push(Self::cand(p, path)?);
            }
            cands.insert(ap, list);
        }
        Ok(Self {
            p,
            ledger: CycleLedger::new(&p.graph, &p.timing),
            cands,
            slots: vec![None; p.demands.len()],
            accepted: 0,
            total_bound: 0,
        })
    }

    fn cand(p: &Problem, path: SPath) -> Result<CandPath> {
        let arcs = path
            .arcs(&p.graph)
            .ok_or_else(|| Error::Contract("candidate path uses a missing link".into()))?;
        let maps = path_mappings(&path, &p.graph, &p.timing, &p.clocks)?;
        let delay = path.total_delay(&p.graph);
        Ok(CandPath { path, arcs, maps, delay })
    }

    pub fn cands(&self, d: usize) -> &[CandPath] {
        self.p
            .graph
            .ap_of(self.p.demands[d].source)
            .and_then(|ap| self.cands.get(&ap))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn score(&self) -> (u32, Nanos) {
        (self.accepted, -self.total_bound)
    }

    /// Earliest feasible placement of demand `d` on candidate `cand`: smallest
    /// buffer, then smallest AP shift, then smallest server shift.
    pub fn find(&self, d: usize, cand: usize, spec: &Spec) -> Option<(Vec<Rb>, ShiftVector, Nanos)> {
        let dem = &self.p.demands[d];
        let c = self.cands(d).get(cand)?;
        let t = &self.p.timing;
        let grid = self.ledger.grid(c.path.ap())?;
        let n = c.path.hops();
        let server = c.path.server();
        let cpu = self.p.graph.kappa * dem.payload_bits;
        let base_tti = i64::from(dem.arrival_tti % t.n_tti);
        let clamp = |r: &RangeInclusive<u32>| (*r.start()).max(1)..=(*r.end()).min(t.max_shift());
        let (ap_range, server_range) = (clamp(&spec.ap), clamp(&spec.server));

        for breve in spec.buffers.clone() {
            if breve + 1 >= t.n_tti {
                break;
            }
            let Some(rbs) = fill(grid, dem, breve) else {
                break;
            };
            let offset = |rb: &Rb| (i64::from(rb.tti) - base_tti).rem_euclid(i64::from(t.n_tti)) as u32;
            if offset(&rbs[0]) != breve + 1 {
                // the same window was already tried from a smaller buffer
                continue;
            }
            let r0 = offset(rbs.last().expect("non-empty"));
            if (1 + i64::from(r0)) * t.delta_tti > dem.deadline {
                break;
            }
            let c0 = (dem.arrival_tti + r0) % t.n_tti;
            let first = &c.maps[0];
            let recv1 = first.map_cycle(c0).ok()?;
            let acc0 = (1 + i64::from(r0)) * t.delta_tti + first.mapping_delay(c0).ok()?;
            let mut cycles = Vec::with_capacity(n + 1);
            'ap: for r1 in ap_range.clone() {
                let mut acc = acc0 + i64::from(r1) * t.delta_dip;
                if acc > dem.deadline {
                    break;
                }
                cycles.clear();
                cycles.push(c0);
                cycles.push((recv1 + r1) % t.n_dip);
                if !self.ledger.link_fits(c.arcs[0], cycles[1], dem.payload_bits) {
                    continue;
                }
                for i in 1..n - 1 {
                    let hop = &c.maps[i];
                    let prev = cycles[i];
                    let next = (hop.map_cycle(prev).ok()? + 1) % t.n_dip;
                    acc += hop.mapping_delay(prev).ok()? + t.delta_dip;
                    if !self.ledger.link_fits(c.arcs[i], next, dem.payload_bits) {
                        continue 'ap;
                    }
                    cycles.push(next);
                }
                if acc > dem.deadline {
                    break;
                }
                let last = &c.maps[n - 1];
                let prev = cycles[n - 1];
                let recv = last.map_cycle(prev).ok()?;
                let before = acc + last.mapping_delay(prev).ok()?;
                for rl in server_range.clone() {
                    let bound = before + i64::from(rl) * t.delta_mec;
                    if bound > dem.deadline {
                        break;
                    }
                    if self.ledger.server_fits(server, (recv + rl) % t.n_mec, cpu) {
                        let shifts = ShiftVector::new(breve, r0 - breve, r1, rl, n);
                        return Some((rbs, shifts, bound));
                    }
                }
            }
        }
        None
    }

    /// Places `d` on the first candidate (in `order`) that admits it.
    pub fn place_any(&mut self, d: usize, order: impl IntoIterator<Item = usize>, spec: &Spec) -> bool {
        order.into_iter().any(|cand| self.place(d, cand, spec))
    }

    pub fn place(&mut self, d: usize, cand: usize, spec: &Spec) -> bool {
        debug_assert!(self.slots[d].is_none());
        let Some((rbs, shifts, bound)) = self.find(d, cand, spec) else {
            return false;
        };
        let c = &self.cands(d)[cand];
        let dem = &self.p.demands[d];
        let mut path = c.path.clone();
        path.nodes[0] = dem.source;
        let report = evaluate(dem, &shifts, &self.p.timing, &c.maps);
        debug_assert_eq!(report.bound, bound);
        let placement = Placement {
            path,
            rbs,
            shifts,
            report,
        };
        self.commit(d, cand, placement).is_ok()
    }

    fn commit(&mut self, d: usize, cand: usize, placement: Placement) -> Result<(), crate::ledger::ReserveError> {
        let dem = &self.p.demands[d];
        let handle = self.ledger.try_reserve(
            &self.p.graph,
            dem,
            &placement.path,
            &placement.shifts,
            &placement.rbs,
            &placement.report.cycles,
        )?;
        self.accepted += 1;
        self.total_bound += placement.report.bound;
        self.slots[d] = Some(Slot {
            cand,
            placement,
            handle,
        });
        Ok(())
    }

    pub fn remove(&mut self, d: usize) -> Option<Slot> {
        let slot = self.slots[d].take()?;
        self.ledger.release(slot.handle).expect("slot handle is live");
        self.accepted -= 1;
        self.total_bound -= slot.placement.report.bound;
        Some(slot)
    }

    /// Re-commits a slot that was removed earlier; resources must still be free.
    pub fn restore(&mut self, d: usize, slot: Slot) {
        self.commit(d, slot.cand, slot.placement)
            .expect("restoring a previously held placement");
    }

    /// Loads the accepted decisions of `plan`, skipping any that no longer fit.
    pub fn load(&mut self, plan: &SchedulePlan) {
        for dec in plan.decisions.iter().filter(|d| d.accepted) {
            let Some(pl) = &dec.placement else { continue };
            let Some(d) = self.p.demands.iter().position(|x| x.id == dec.demand) else {
                continue;
            };
            if self.slots[d].is_some() || pl.path.hops() > self.p.max_hops {
                continue;
            }
            let Some(ap) = self.p.graph.ap_of(self.p.demands[d].source) else {
                continue;
            };
            let list = self.cands.entry(ap).or_default();
            let cand = match list.iter().position(|c| c.same_route(&pl.path)) {
                Some(i) => i,
                None => match Self::cand(self.p, pl.path.clone()) {
                    Ok(c) => {
                        list.push(c);
                        list.len() - 1
                    }
                    Err(_) => continue,
                },
            };
            // never trust a cached report from elsewhere
            let maps = &self.cands[&ap][cand].maps;
            if pl.shifts.check(&pl.path, &self.p.timing).is_err() {
                continue;
            }
            let report = evaluate(&self.p.demands[d], &pl.shifts, &self.p.timing, maps);
            if report.bound > self.p.demands[d].deadline {
                continue;
            }
            let placement = Placement {
                report,
                ..pl.clone()
            };
            let _ = self.commit(d, cand, placement);
        }
    }

    pub fn to_plan(&self, solver: &str) -> SchedulePlan {
        SchedulePlan {
            solver: solver.to_string(),
            objective: self.accepted,
            total_bound: self.total_bound,
            decisions: self
                .p
                .demands
                .iter()
                .zip(&self.slots)
                .map(|(dem, slot)| Decision {
                    demand: dem.id,
                    accepted: slot.is_some(),
                    placement: slot.as_ref().map(|s| s.placement.clone()),
                })
                .collect(),
        }
    }
}

/// Lowest-index free bands from window offset `breve + 1` onward until the
/// payload fits.
fn fill(grid: &RbGrid, dem: &Demand, breve: u32) -> Option<Vec<Rb>> {
    let mut bits = 0;
    let mut out = Vec::new();
    for off in breve + 1..grid.n_tti {
        let tti = (dem.arrival_tti + off) % grid.n_tti;
        for band in grid.free_bands(tti) {
            let rb = Rb { tti, band };
            let cap = grid.capacity(rb);
            if cap == 0 {
                continue;
            }
            out.push(rb);
            bits += cap;
            if bits >= dem.payload_bits {
                return Some(out);
            }
        }
    }
    None
}

/// Greedy construction: tightest deadline first, every candidate in delay order.
pub(crate) fn greedy(p: &Problem) -> Result<SchedulePlan> {
    let mut e = Engine::new(p)?;
    let mut order: Vec<usize> = (0..p.demands.len()).collect();
    order.sort_by_key(|&i| (p.demands[i].deadline, p.demands[i].id));
    let spec = Spec::full(p);
    for d in order {
        let n = e.cands(d).len();
        e.place_any(d, 0..n, &spec);
    }
    Ok(e.to_plan("greedy"))
}
