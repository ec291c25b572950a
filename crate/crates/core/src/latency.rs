//! Per-demand emission cycles and worst-case accumulated delay along an s-path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Demand, NetworkGraph, SPath};
use crate::time::{ClockTable, CycleHop, Domain, Nanos, TimingConfig};

/// Cycle shifts of one demand.
///
/// `hops[i - 1]` is the shift applied at node `v_i`: the AP for `i = 1`,
/// routers in between (always 1), and the server at `i = |p|`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShiftVector {
    /// TTIs the task waits on the device before its first RB.
    pub buffer_ttis: u32,
    /// TTIs spanned by the RB assignment.
    pub tx_ttis: u32,
    pub hops: Vec<u32>,
}

impl ShiftVector {
    pub fn new(buffer_ttis: u32, tx_ttis: u32, ap_shift: u32, server_shift: u32, path_hops: usize) -> Self {
        let mut hops = vec![1; path_hops.max(2)];
        hops[0] = ap_shift;
        *hops.last_mut().expect("at least two hops") = server_shift;
        Self {
            buffer_ttis,
            tx_ttis,
            hops,
        }
    }

    pub fn r0(&self) -> u32 {
        self.buffer_ttis + self.tx_ttis
    }

    pub fn ap_shift(&self) -> u32 {
        self.hops[0]
    }

    pub fn server_shift(&self) -> u32 {
        *self.hops.last().expect("non-empty")
    }

    pub fn check(&self, path: &SPath, timing: &TimingConfig) -> Result<()> {
        let n = path.hops();
        if self.hops.len() != n || n < 2 {
            return Err(Error::Contract(format!(
                "shift vector has {} entries for a {n}-hop path",
                self.hops.len()
            )));
        }
        if self.tx_ttis == 0 {
            return Err(Error::Contract("wireless transmission takes at least one TTI".into()));
        }
        if self.r0() >= timing.n_tti {
            return Err(Error::Contract(format!(
                "r0 = {} does not fit in {} TTIs",
                self.r0(),
                timing.n_tti
            )));
        }
        if self.hops[1..n - 1].iter().any(|&r| r != 1) {
            return Err(Error::Contract("router shifts must be 1".into()));
        }
        let max = timing.max_shift();
        for r in [self.ap_shift(), self.server_shift()] {
            if r < 1 || r > max {
                return Err(Error::Contract(format!("shift {r} outside [1, {max}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyReport {
    /// `c_0 .. c_|p|`: TTI of the last RB, then the sending cycle at every node.
    pub cycles: Vec<u32>,
    /// `Delta_1 .. Delta_|p|`, measured from the start of the arrival TTI.
    pub accumulated: Vec<Nanos>,
    pub bound: Nanos,
    pub jitter_bound: Nanos,
}

/// Mapping for hop `i` (1-based) of `path`: TTI->DIP inside the AP for `i = 1`,
/// then one wired link per hop.
pub fn path_mappings(
    path: &SPath,
    graph: &NetworkGraph,
    timing: &TimingConfig,
    clocks: &ClockTable,
) -> Result<Vec<CycleHop>> {
    let n = path.hops();
    let mut out = Vec::with_capacity(n);
    out.push(CycleHop::ap_internal(timing));
    for i in 2..=n {
        let (u, v) = (path.nodes[i - 1], path.nodes[i]);
        let arc = graph
            .arc(u, v)
            .ok_or_else(|| Error::Contract(format!("no link {u} -> {v}")))?;
        let to = if i == n { Domain::Mecs } else { Domain::Wn };
        out.push(CycleHop::new(
            timing.tag(Domain::Wn),
            timing.tag(to),
            graph.arc_link(arc).delay,
            clocks.offset(u, v).tau_hc,
        ));
    }
    Ok(out)
}

pub fn emission_cycles(
    demand: &Demand,
    path: &SPath,
    shifts: &ShiftVector,
    timing: &TimingConfig,
    clocks: &ClockTable,
    graph: &NetworkGraph,
) -> Result<Vec<u32>> {
    Ok(accumulated_delay(demand, path, shifts, timing, clocks, graph)?.cycles)
}

pub fn accumulated_delay(
    demand: &Demand,
    path: &SPath,
    shifts: &ShiftVector,
    timing: &TimingConfig,
    clocks: &ClockTable,
    graph: &NetworkGraph,
) -> Result<LatencyReport> {
    shifts.check(path, timing)?;
    let maps = path_mappings(path, graph, timing, clocks)?;
    Ok(evaluate(demand, shifts, timing, &maps))
}

/// Core of the recursion; `maps` must come from [`path_mappings`] and `shifts`
/// must already be checked.
pub(crate) fn evaluate(demand: &Demand, shifts: &ShiftVector, timing: &TimingConfig, maps: &[CycleHop]) -> LatencyReport {
    let n = maps.len();
    let mut cycles = Vec::with_capacity(n + 1);
    let mut accumulated = Vec::with_capacity(n);
    let c0 = (demand.arrival_tti + shifts.r0()) % timing.n_tti;
    cycles.push(c0);
    let mut acc = i64::from(1 + shifts.r0()) * timing.delta_tti;
    for (i, hop) in maps.iter().enumerate() {
        let prev = cycles[i];
        let r = shifts.hops[i];
        let received = hop.map_cycle(prev).expect("cycle in range");
        let c = (received + r) % hop.to.cycles_per_hc;
        acc += hop.mapping_delay(prev).expect("cycle in range") + i64::from(r) * hop.to.cycle_len;
        cycles.push(c);
        accumulated.push(acc);
    }
    LatencyReport {
        cycles,
        bound: acc,
        accumulated,
        jitter_bound: timing.jitter_bound(),
    }
}

pub fn check_deadline(report: &LatencyReport, demand: &Demand) -> bool {
    report.bound <= demand.deadline
}
