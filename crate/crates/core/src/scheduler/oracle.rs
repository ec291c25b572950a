//! Exhaustive search for small instances.
//!
//! Branches per demand on reject or (path, r0, r1, r_last). RBs are not
//! enumerated: with uniform RB capacity a demand needs `m` RBs anywhere in
//! window offsets `1..=r0` with at least one at `r0`, so per AP the question
//! "do RBs exist for this set of demands" is a transportation problem, solved
//! exactly by a max-flow.

use std::collections::{BTreeMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latency::{accumulated_delay, ShiftVector};
use crate::network::{enumerate_spaths, ArcId, NodeId, Rb, SPath};
use crate::time::Nanos;

use super::search::check_problem;
use super::{Decision, Placement, Problem, SchedulePlan};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleLimits {
    pub max_demands: usize,
    pub max_nodes: usize,
    pub max_paths: usize,
    pub max_queues: u32,
    pub max_bands: u32,
    pub max_ttis: u32,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_demands: 6,
            max_nodes: 8,
            max_paths: 4,
            max_queues: 5,
            max_bands: 4,
            max_ttis: 6,
        }
    }
}

#[derive(Debug, Clone)]
struct Config {
    path: usize,
    r0: u32,
    r1: u32,
    rl: u32,
    links: Vec<(ArcId, u32, u64)>,
    server: (NodeId, u32, u64),
}

#[derive(Debug, Clone, Copy)]
struct RbNeed {
    demand: usize,
    arrival: u32,
    r0: u32,
    m: u32,
}

struct Search<'a> {
    p: &'a Problem,
    paths: Vec<Vec<SPath>>,
    configs: Vec<Vec<Config>>,
    aps: Vec<NodeId>,
    needs: Vec<u32>,
    n_dip: usize,
    n_mec: usize,
    link_load: Vec<u64>,
    link_budget: Vec<u64>,
    server_load: Vec<u64>,
    server_budget: Vec<u64>,
    rb: BTreeMap<NodeId, Vec<RbNeed>>,
    chosen: Vec<Option<usize>>,
    best: u32,
    best_choice: Vec<Option<usize>>,
}

pub fn brute_force_oracle(problem: &Problem, limits: &OracleLimits) -> Result<SchedulePlan> {
    check_problem(problem)?;
    let p = problem;
    let t = &p.timing;
    let too_large = |what: String| Err(Error::InstanceTooLarge(what));
    if p.demands.len() > limits.max_demands {
        return too_large(format!("{} demands > {}", p.demands.len(), limits.max_demands));
    }
    if p.graph.node_count() > limits.max_nodes {
        return too_large(format!("{} nodes > {}", p.graph.node_count(), limits.max_nodes));
    }
    if t.queue_count > limits.max_queues {
        return too_large(format!("Q = {} > {}", t.queue_count, limits.max_queues));
    }
    if p.graph.rb.bands > limits.max_bands || t.n_tti > limits.max_ttis {
        return too_large(format!("RB grid {}x{} exceeds limits", t.n_tti, p.graph.rb.bands));
    }
    if !p.graph.rb.overrides.is_empty() {
        return too_large("per-RB capacity overrides are not supported".into());
    }

    let cap = p.graph.rb.capacity_bits;
    let mut paths = Vec::new();
    let mut configs = Vec::new();
    let mut aps = Vec::new();
    let mut needs = Vec::new();
    for d in &p.demands {
        let ps = enumerate_spaths(&p.graph, d, p.max_hops, usize::MAX);
        if ps.len() > limits.max_paths {
            return too_large(format!("demand {} has {} paths > {}", d.id, ps.len(), limits.max_paths));
        }
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for (pi, path) in ps.iter().enumerate() {
            let arcs = path.arcs(&p.graph).expect("enumerated paths are linked");
            for r0 in 1..t.n_tti {
                for r1 in 1..=t.max_shift() {
                    for rl in 1..=t.max_shift() {
                        let shifts = ShiftVector::new(0, r0, r1, rl, path.hops());
                        let rep = accumulated_delay(d, path, &shifts, t, &p.clocks, &p.graph)?;
                        if rep.bound > d.deadline {
                            continue;
                        }
                        let links: Vec<_> = arcs
                            .iter()
                            .enumerate()
                            .map(|(k, &a)| (a, rep.cycles[k + 1], d.payload_bits))
                            .collect();
                        let server = (path.server(), rep.cycles[path.hops()], p.graph.kappa * d.payload_bits);
                        if seen.insert((r0, links.clone(), server)) {
                            list.push(Config {
                                path: pi,
                                r0,
                                r1,
                                rl,
                                links,
                                server,
                            });
                        }
                    }
                }
            }
        }
        paths.push(ps);
        configs.push(list);
        aps.push(p.graph.ap_of(d.source).unwrap_or(d.source));
        needs.push(if cap == 0 {
            u32::MAX
        } else {
            d.payload_bits.div_ceil(cap) as u32
        });
    }

    let arcs = p.graph.arc_count();
    let nodes = p.graph.node_count();
    let mut s = Search {
        p,
        paths,
        configs,
        aps,
        needs,
        n_dip: t.n_dip as usize,
        n_mec: t.n_mec as usize,
        link_load: vec![0; arcs * t.n_dip as usize],
        link_budget: (0..arcs).map(|a| p.graph.arc_budget(ArcId(a as u32), t)).collect(),
        server_load: vec![0; nodes * t.n_mec as usize],
        server_budget: (0..nodes).map(|n| p.graph.server_budget(NodeId(n as u32), t)).collect(),
        rb: BTreeMap::new(),
        chosen: vec![None; p.demands.len()],
        best: 0,
        best_choice: vec![None; p.demands.len()],
    };
    s.dfs(0, 0);
    s.into_plan()
}

impl Search<'_> {
    fn fits(&self, d: usize, c: &Config) -> bool {
        let links_ok = c
            .links
            .iter()
            .all(|&(a, cy, bits)| self.link_load[a.index() * self.n_dip + cy as usize] + bits <= self.link_budget[a.index()]);
        let (srv, cy, cpu) = c.server;
        links_ok
            && self.server_load[srv.index() * self.n_mec + cy as usize] + cpu <= self.server_budget[srv.index()]
            && self.rb_ok_with(d, c.r0)
    }

    fn need(&self, d: usize, r0: u32) -> RbNeed {
        RbNeed {
            demand: d,
            arrival: self.p.demands[d].arrival_tti,
            r0,
            m: self.needs[d],
        }
    }

    fn rb_ok_with(&self, d: usize, r0: u32) -> bool {
        let mut set = self.rb.get(&self.aps[d]).cloned().unwrap_or_default();
        set.push(self.need(d, r0));
        rb_flow(&set, self.p.timing.n_tti, self.p.graph.rb.bands).is_some()
    }

    fn apply(&mut self, d: usize, ci: usize, sign: bool) {
        let c = &self.configs[d][ci];
        let upd = |x: &mut u64, v: u64| if sign { *x += v } else { *x -= v };
        for &(a, cy, bits) in &c.links {
            upd(&mut self.link_load[a.index() * self.n_dip + cy as usize], bits);
        }
        let (srv, cy, cpu) = c.server;
        upd(&mut self.server_load[srv.index() * self.n_mec + cy as usize], cpu);
        let need = self.need(d, c.r0);
        let set = self.rb.entry(self.aps[d]).or_default();
        if sign {
            set.push(need);
        } else {
            set.retain(|n| n.demand != d);
        }
        self.chosen[d] = sign.then_some(ci);
    }

    fn dfs(&mut self, i: usize, count: u32) {
        let n = self.p.demands.len();
        if self.best as usize == n {
            return;
        }
        if i == n {
            if count > self.best {
                self.best = count;
                self.best_choice = self.chosen.clone();
            }
            return;
        }
        let open = (i..n)
            .filter(|&j| self.configs[j].iter().any(|c| self.fits(j, c)))
            .count() as u32;
        if count + open <= self.best {
            return;
        }
        for ci in 0..self.configs[i].len() {
            if !self.fits(i, &self.configs[i][ci]) {
                continue;
            }
            self.apply(i, ci, true);
            self.dfs(i + 1, count + 1);
            self.apply(i, ci, false);
            if self.best as usize == n {
                return;
            }
        }
        self.dfs(i + 1, count);
    }

    fn into_plan(self) -> Result<SchedulePlan> {
        let p = self.p;
        let t = &p.timing;
        let n = p.demands.len();
        let mut per_ap: BTreeMap<NodeId, Vec<RbNeed>> = BTreeMap::new();
        for d in 0..n {
            if let Some(ci) = self.best_choice[d] {
                per_ap.entry(self.aps[d]).or_default().push(self.need(d, self.configs[d][ci].r0));
            }
        }
        let mut rbs: Vec<Vec<Rb>> = vec![Vec::new(); n];
        for set in per_ap.values() {
            let counts = rb_flow(set, t.n_tti, p.graph.rb.bands).expect("chosen set was feasible");
            let mut next_band = vec![0u32; t.n_tti as usize];
            for (need, per_offset) in set.iter().zip(counts) {
                for (off, &k) in per_offset.iter().enumerate() {
                    let tti = (need.arrival + off as u32) % t.n_tti;
                    for _ in 0..k {
                        rbs[need.demand].push(Rb {
                            tti,
                            band: next_band[tti as usize],
                        });
                        next_band[tti as usize] += 1;
                    }
                }
            }
        }

        let mut decisions = Vec::with_capacity(n);
        let mut total_bound: Nanos = 0;
        for (d, dem) in p.demands.iter().enumerate() {
            let Some(ci) = self.best_choice[d] else {
                decisions.push(Decision {
                    demand: dem.id,
                    accepted: false,
                    placement: None,
                });
                continue;
            };
            let c = &self.configs[d][ci];
            let first = rbs[d]
                .iter()
                .map(|rb| (rb.tti + t.n_tti - dem.arrival_tti % t.n_tti) % t.n_tti)
                .min()
                .expect("at least one RB");
            let path = self.paths[d][c.path].clone();
            let shifts = ShiftVector::new(first - 1, c.r0 + 1 - first, c.r1, c.rl, path.hops());
            let report = accumulated_delay(dem, &path, &shifts, t, &p.clocks, &p.graph)?;
            total_bound += report.bound;
            let mut list = std::mem::take(&mut rbs[d]);
            list.sort();
            decisions.push(Decision {
                demand: dem.id,
                accepted: true,
                placement: Some(Placement {
                    path,
                    rbs: list,
                    shifts,
                    report,
                }),
            });
        }
        Ok(SchedulePlan {
            solver: "oracle".into(),
            objective: self.best,
            total_bound,
            decisions,
        })
    }
}

/// RB counts per window offset (index 0 unused) for every need, or `None`
/// when the set cannot be served by one AP grid.
fn rb_flow(set: &[RbNeed], n_tti: u32, bands: u32) -> Option<Vec<Vec<u32>>> {
    let nt = n_tti as usize;
    // the RB in the last window TTI is forced; the rest is a transportation problem
    let mut fixed = vec![0u32; nt];
    for need in set {
        if need.m == 0 || need.m == u32::MAX || need.r0 == 0 || need.r0 >= n_tti {
            return None;
        }
        fixed[((need.arrival + need.r0) % n_tti) as usize] += 1;
    }
    if fixed.iter().any(|&f| f > bands) {
        return None;
    }
    // nodes: 0 source, 1..=k needs, then TTIs, then sink
    let k = set.len();
    let tti0 = 1 + k;
    let sink = tti0 + nt;
    let size = sink + 1;
    let mut cap = vec![vec![0i64; size]; size];
    let mut want = 0i64;
    for (j, need) in set.iter().enumerate() {
        cap[0][1 + j] = i64::from(need.m - 1);
        want += i64::from(need.m - 1);
        for off in 1..=need.r0 {
            let tti = ((need.arrival + off) % n_tti) as usize;
            cap[1 + j][tti0 + tti] = i64::from(bands);
        }
    }
    for tti in 0..nt {
        cap[tti0 + tti][sink] = i64::from(bands - fixed[tti]);
    }
    let orig = cap.clone();
    let mut flow = 0i64;
    loop {
        let mut prev = vec![usize::MAX; size];
        prev[0] = 0;
        let mut q = VecDeque::from([0usize]);
        while let Some(u) = q.pop_front() {
            for v in 0..size {
                if prev[v] == usize::MAX && cap[u][v] > 0 {
                    prev[v] = u;
                    q.push_back(v);
                }
            }
        }
        if prev[sink] == usize::MAX {
            break;
        }
        let mut push = i64::MAX;
        let mut v = sink;
        while v != 0 {
            push = push.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = sink;
        while v != 0 {
            cap[prev[v]][v] -= push;
            cap[v][prev[v]] += push;
            v = prev[v];
        }
        flow += push;
    }
    if flow < want {
        return None;
    }
    Some(
        set.iter()
            .enumerate()
            .map(|(j, need)| {
                let mut per = vec![0u32; nt];
                for off in 1..=need.r0 {
                    let tti = ((need.arrival + off) % n_tti) as usize;
                    let used = orig[1 + j][tti0 + tti] - cap[1 + j][tti0 + tti];
                    per[off as usize] += used.max(0) as u32;
                }
                per[need.r0 as usize] += 1;
                per
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn need(demand: usize, arrival: u32, r0: u32, m: u32) -> RbNeed {
        RbNeed { demand, arrival, r0, m }
    }

    #[test]
    fn flow_forces_one_rb_in_the_last_window_tti() {
        let out = rb_flow(&[need(0, 0, 2, 3)], 4, 2).unwrap();
        assert!(out[0][2] >= 1);
        assert_eq!(out[0].iter().sum::<u32>(), 3);
        assert_eq!(out[0][0], 0);
    }

    #[test]
    fn flow_detects_overbooked_grid() {
        // two demands with a 1-TTI window on the same TTI, 2 bands, 2 RBs each
        assert!(rb_flow(&[need(0, 0, 1, 2), need(1, 0, 1, 2)], 4, 2).is_none());
        // with a 2-TTI window the second demand moves to TTI 2
        let out = rb_flow(&[need(0, 0, 1, 2), need(1, 0, 2, 2)], 4, 2).unwrap();
        assert_eq!(out[0][1], 2);
        assert_eq!(out[1][2], 2);
    }

    #[test]
    fn flow_wraps_across_the_hypercycle() {
        let out = rb_flow(&[need(0, 3, 2, 2)], 4, 1).unwrap();
        assert_eq!(out[0][1], 1);
        assert_eq!(out[0][2], 1);
    }
}
