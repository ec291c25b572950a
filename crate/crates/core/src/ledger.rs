//! Per-cycle reserved load on RBs, wired links and servers.
//!
//! One hypercycle of state is enough: every accepted demand repeats the same
//! load pattern in every hypercycle, so all cycle indices are taken mod N.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::latency::ShiftVector;
use crate::network::{rb_window_capacity, ArcId, Demand, NetworkGraph, NodeId, Rb, RbGrid, SPath};
use crate::time::TimingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ReservationHandle(u64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReserveError {
    #[error("demand {demand}: RBs carry {have} bits, need {need}")]
    RbCapacityShort { demand: u32, have: u64, need: u64 },
    #[error("RB (tti {tti}, band {band}) at {ap} already held by demand {holder}")]
    RbConflict { ap: NodeId, tti: u32, band: u32, holder: u32 },
    #[error("link arc {arc:?} overflows at DIP cycle {cycle}: {load} > {budget} bits")]
    LinkOverflow { arc: ArcId, cycle: u32, load: u64, budget: u64 },
    #[error("server {server} overflows at computation cycle {cycle}: {load} > {budget} CPU cycles")]
    ServerOverflow { server: NodeId, cycle: u32, load: u64, budget: u64 },
    #[error("unknown or released reservation handle")]
    UnknownHandle,
    #[error("malformed reservation: {0}")]
    Malformed(String),
}

/// Everything one accepted demand holds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Reservation {
    pub demand: u32,
    pub ap: NodeId,
    pub rbs: Vec<Rb>,
    /// (arc, DIP cycle, bits)
    pub links: Vec<(ArcId, u32, u64)>,
    /// (server, computation cycle, CPU cycles)
    pub server: (NodeId, u32, u64),
}

#[derive(Debug, Clone)]
pub struct CycleLedger {
    n_dip: u32,
    n_mec: u32,
    link_load: Vec<u64>,
    link_budget: Vec<u64>,
    server_load: Vec<u64>,
    server_budget: Vec<u64>,
    grids: BTreeMap<NodeId, RbGrid>,
    records: BTreeMap<ReservationHandle, Reservation>,
    next_handle: u64,
}

impl PartialEq for CycleLedger {
    // The handle counter is an allocator, not ledger state.
    fn eq(&self, other: &Self) -> bool {
        self.link_load == other.link_load
            && self.server_load == other.server_load
            && self.grids == other.grids
            && self.records == other.records
    }
}

impl Eq for CycleLedger {}

impl CycleLedger {
    pub fn new(graph: &NetworkGraph, timing: &TimingConfig) -> Self {
        let arcs = graph.arc_count();
        let nodes = graph.node_count();
        Self {
            n_dip: timing.n_dip,
            n_mec: timing.n_mec,
            link_load: vec![0; arcs * timing.n_dip as usize],
            link_budget: (0..arcs).map(|a| graph.arc_budget(ArcId(a as u32), timing)).collect(),
            server_load: vec![0; nodes * timing.n_mec as usize],
            server_budget: (0..nodes)
                .map(|n| graph.server_budget(NodeId(n as u32), timing))
                .collect(),
            grids: graph.aps().map(|ap| (ap.id, graph.rb_grid(ap.id, timing))).collect(),
            records: BTreeMap::new(),
            next_handle: 0,
        }
    }

    pub fn link_load(&self, arc: ArcId, cycle: u32) -> u64 {
        self.link_load[arc.index() * self.n_dip as usize + cycle as usize]
    }

    pub fn link_budget(&self, arc: ArcId) -> u64 {
        self.link_budget[arc.index()]
    }

    pub fn server_load(&self, server: NodeId, cycle: u32) -> u64 {
        self.server_load[server.index() * self.n_mec as usize + cycle as usize]
    }

    pub fn server_budget(&self, server: NodeId) -> u64 {
        self.server_budget[server.index()]
    }

    pub fn grid(&self, ap: NodeId) -> Option<&RbGrid> {
        self.grids.get(&ap)
    }

    pub fn reservations(&self) -> impl Iterator<Item = (ReservationHandle, &Reservation)> {
        self.records.iter().map(|(h, r)| (*h, r))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Immutable copy for concurrent read-only evaluation.
    pub fn snapshot(&self) -> CycleLedger {
        self.clone()
    }

    pub fn link_fits(&self, arc: ArcId, cycle: u32, bits: u64) -> bool {
        self.link_load(arc, cycle) + bits <= self.link_budget(arc)
    }

    pub fn server_fits(&self, server: NodeId, cycle: u32, cpu: u64) -> bool {
        self.server_load(server, cycle) + cpu <= self.server_budget(server)
    }

    /// Builds the load pattern of a placement without touching the ledger.
    pub fn footprint(
        graph: &NetworkGraph,
        demand: &Demand,
        path: &SPath,
        rbs: &[Rb],
        cycles: &[u32],
    ) -> Result<Reservation, ReserveError> {
        let hops = path.hops();
        if cycles.len() != hops + 1 {
            return Err(ReserveError::Malformed(format!(
                "{} emission cycles for a {hops}-hop path",
                cycles.len()
            )));
        }
        let arcs = path
            .arcs(graph)
            .ok_or_else(|| ReserveError::Malformed("path uses a missing link".into()))?;
        let links = arcs
            .iter()
            .enumerate()
            .map(|(k, &arc)| (arc, cycles[k + 1], demand.payload_bits))
            .collect();
        let mut rbs = rbs.to_vec();
        rbs.sort();
        Ok(Reservation {
            demand: demand.id,
            ap: path.ap(),
            rbs,
            links,
            server: (path.server(), cycles[hops], graph.kappa * demand.payload_bits),
        })
    }

    /// Checks, in order, the RB window, RB exclusivity, RB capacity, link
    /// budgets (in path order) and the server budget; commits everything or
    /// nothing and reports the first failed check.
    #[allow(clippy::too_many_arguments)]
    pub fn try_reserve(
        &mut self,
        graph: &NetworkGraph,
        demand: &Demand,
        path: &SPath,
        shifts: &ShiftVector,
        rbs: &[Rb],
        cycles: &[u32],
    ) -> Result<ReservationHandle, ReserveError> {
        let res = Self::footprint(graph, demand, path, rbs, cycles)?;
        let grid = self
            .grids
            .get(&res.ap)
            .ok_or_else(|| ReserveError::Malformed(format!("{} is not an AP", res.ap)))?;
        let have = match rb_window_capacity(grid, demand, shifts.buffer_ttis, shifts.tx_ttis, &res.rbs) {
            Ok(bits) => bits,
            Err(crate::Error::RbConflict { tti, band, holder, .. }) => {
                return Err(ReserveError::RbConflict {
                    ap: res.ap,
                    tti,
                    band,
                    holder,
                })
            }
            Err(e) => return Err(ReserveError::Malformed(e.to_string())),
        };
        if res.rbs.windows(2).any(|w| w[0] == w[1]) {
            return Err(ReserveError::Malformed("RB listed twice".into()));
        }
        // a second reservation for the same demand does not get its RBs back
        if let Some((&rb, holder)) = res.rbs.iter().find_map(|rb| grid.owner(*rb).map(|h| (rb, h))) {
            return Err(ReserveError::RbConflict {
                ap: res.ap,
                tti: rb.tti,
                band: rb.band,
                holder,
            });
        }
        if have < demand.payload_bits {
            return Err(ReserveError::RbCapacityShort {
                demand: demand.id,
                have,
                need: demand.payload_bits,
            });
        }
        self.check_loads(&res)?;
        Ok(self.commit(res))
    }

    fn check_loads(&self, res: &Reservation) -> Result<(), ReserveError> {
        for &(arc, cycle, bits) in &res.links {
            let load = self.link_load(arc, cycle) + bits;
            if load > self.link_budget(arc) {
                return Err(ReserveError::LinkOverflow {
                    arc,
                    cycle,
                    load,
                    budget: self.link_budget(arc),
                });
            }
        }
        let (server, cycle, cpu) = res.server;
        let load = self.server_load(server, cycle) + cpu;
        if load > self.server_budget(server) {
            return Err(ReserveError::ServerOverflow {
                server,
                cycle,
                load,
                budget: self.server_budget(server),
            });
        }
        Ok(())
    }

    fn commit(&mut self, res: Reservation) -> ReservationHandle {
        let grid = self.grids.get_mut(&res.ap).expect("checked");
        for &rb in &res.rbs {
            grid.assign(rb, res.demand).expect("checked free");
        }
        let n_dip = self.n_dip as usize;
        for &(arc, cycle, bits) in &res.links {
            self.link_load[arc.index() * n_dip + cycle as usize] += bits;
        }
        let (server, cycle, cpu) = res.server;
        self.server_load[server.index() * self.n_mec as usize + cycle as usize] += cpu;
        let handle = ReservationHandle(self.next_handle);
        self.next_handle += 1;
        self.records.insert(handle, res);
        handle
    }

    pub fn release(&mut self, handle: ReservationHandle) -> Result<Reservation, ReserveError> {
        let res = self.records.remove(&handle).ok_or(ReserveError::UnknownHandle)?;
        let grid = self.grids.get_mut(&res.ap).expect("reserved on this AP");
        for &rb in &res.rbs {
            grid.clear(rb, res.demand);
        }
        let n_dip = self.n_dip as usize;
        for &(arc, cycle, bits) in &res.links {
            self.link_load[arc.index() * n_dip + cycle as usize] -= bits;
        }
        let (server, cycle, cpu) = res.server;
        self.server_load[server.index() * self.n_mec as usize + cycle as usize] -= cpu;
        Ok(res)
    }

    pub fn utilization_profile(&self, graph: &NetworkGraph) -> UtilizationProfile {
        let n_dip = self.n_dip as usize;
        let n_mec = self.n_mec as usize;
        let frac = |load: u64, budget: u64| if budget == 0 { 0.0 } else { load as f64 / budget as f64 };
        let links: Vec<ResourceUtilization> = (0..graph.arc_count())
            .map(|a| {
                let arc = ArcId(a as u32);
                let (from, to) = graph.arc_ends(arc);
                ResourceUtilization {
                    resource: format!("{}->{}", graph.node(from).name, graph.node(to).name),
                    per_cycle: self.link_load[a * n_dip..(a + 1) * n_dip]
                        .iter()
                        .map(|&l| frac(l, self.link_budget[a]))
                        .collect(),
                }
            })
            .collect();
        let servers: Vec<ResourceUtilization> = graph
            .servers()
            .map(|s| {
                let i = s.id.index();
                ResourceUtilization {
                    resource: s.name.clone(),
                    per_cycle: self.server_load[i * n_mec..(i + 1) * n_mec]
                        .iter()
                        .map(|&l| frac(l, self.server_budget[i]))
                        .collect(),
                }
            })
            .collect();
        let mean = |rs: &[ResourceUtilization]| {
            let (sum, n) = rs
                .iter()
                .flat_map(|r| r.per_cycle.iter())
                .fold((0.0, 0usize), |(s, n), &x| (s + x, n + 1));
            if n == 0 {
                0.0
            } else {
                sum / n as f64
            }
        };
        UtilizationProfile {
            mean_link: mean(&links),
            mean_server: mean(&servers),
            links,
            servers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceUtilization {
    pub resource: String,
    pub per_cycle: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilizationProfile {
    pub links: Vec<ResourceUtilization>,
    pub servers: Vec<ResourceUtilization>,
    pub mean_link: f64,
    pub mean_server: f64,
}
