//! MEC network graph, radio resource-block grids, demands and s-paths.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{Nanos, TimingConfig};
use crate::violation::{Violation, ViolationCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Directed wired link; `2 * link + direction`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArcId(pub u32);

impl ArcId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Device,
    Ap,
    Router,
    Server,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
    /// CPU cycles per second; servers only.
    pub cpu_hz: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub delay: Nanos,
    pub bandwidth_bps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbOverride {
    pub ap: NodeId,
    pub tti: u32,
    pub band: u32,
    pub bits: u64,
}

/// Per-AP RB capacities: a uniform value with optional per-RB overrides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbGridSpec {
    pub bands: u32,
    pub capacity_bits: u64,
    #[serde(default)]
    pub overrides: Vec<RbOverride>,
}

#[derive(Debug, Clone)]
pub struct NetworkGraph {
    nodes: Vec<Node>,
    links: Vec<Link>,
    attachments: Vec<(NodeId, NodeId)>,
    /// CPU cycles per payload bit.
    pub kappa: u64,
    pub rb: RbGridSpec,
    adjacency: Vec<Vec<(NodeId, ArcId)>>,
    arcs: BTreeMap<(NodeId, NodeId), ArcId>,
}

impl NetworkGraph {
    pub fn new(
        nodes: Vec<Node>,
        links: Vec<Link>,
        attachments: Vec<(NodeId, NodeId)>,
        kappa: u64,
        rb: RbGridSpec,
    ) -> Result<Self> {
        let n = nodes.len();
        for (i, node) in nodes.iter().enumerate() {
            if node.id.index() != i {
                return Err(Error::InvalidConfig(format!("node {} stored at position {i}", node.id)));
            }
        }
        let in_range = |id: NodeId| id.index() < n;
        let mut adjacency = vec![Vec::new(); n];
        let mut arcs = BTreeMap::new();
        for (i, l) in links.iter().enumerate() {
            if !in_range(l.a) || !in_range(l.b) {
                return Err(Error::InvalidConfig(format!("link {i} references an unknown node")));
            }
            let fwd = ArcId(2 * i as u32);
            let rev = ArcId(2 * i as u32 + 1);
            adjacency[l.a.index()].push((l.b, fwd));
            adjacency[l.b.index()].push((l.a, rev));
            arcs.entry((l.a, l.b)).or_insert(fwd);
            arcs.entry((l.b, l.a)).or_insert(rev);
        }
        if attachments.iter().any(|&(d, a)| !in_range(d) || !in_range(a)) {
            return Err(Error::InvalidConfig("attachment references an unknown node".into()));
        }
        for adj in &mut adjacency {
            adj.sort();
        }
        Ok(Self {
            nodes,
            links,
            attachments,
            kappa,
            rb,
            adjacency,
            arcs,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn attachments(&self) -> &[(NodeId, NodeId)] {
        &self.attachments
    }

    pub fn arc_count(&self) -> usize {
        2 * self.links.len()
    }

    pub fn arc(&self, from: NodeId, to: NodeId) -> Option<ArcId> {
        self.arcs.get(&(from, to)).copied()
    }

    pub fn arc_link(&self, arc: ArcId) -> &Link {
        &self.links[arc.index() / 2]
    }

    pub fn arc_ends(&self, arc: ArcId) -> (NodeId, NodeId) {
        let l = self.arc_link(arc);
        if arc.0.is_multiple_of(2) {
            (l.a, l.b)
        } else {
            (l.b, l.a)
        }
    }

    pub fn neighbors(&self, id: NodeId) -> &[(NodeId, ArcId)] {
        &self.adjacency[id.index()]
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.name == name).map(|n| n.id)
    }

    pub fn ap_of(&self, device: NodeId) -> Option<NodeId> {
        self.attachments.iter().find(|&&(d, _)| d == device).map(|&(_, ap)| ap)
    }

    pub fn servers(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Server)
    }

    pub fn aps(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Ap)
    }

    pub fn cpu_hz(&self, server: NodeId) -> u64 {
        self.node(server).cpu_hz.unwrap_or(0)
    }

    /// Bits a link direction can carry in one DIP cycle.
    pub fn arc_budget(&self, arc: ArcId, timing: &TimingConfig) -> u64 {
        bits_in(self.arc_link(arc).bandwidth_bps, timing.delta_dip)
    }

    /// CPU cycles a server can spend in one computation cycle.
    pub fn server_budget(&self, server: NodeId, timing: &TimingConfig) -> u64 {
        bits_in(self.cpu_hz(server), timing.delta_mec)
    }

    pub fn rb_capacity(&self, ap: NodeId, tti: u32, band: u32) -> u64 {
        self.rb
            .overrides
            .iter()
            .rev()
            .find(|o| o.ap == ap && o.tti == tti && o.band == band)
            .map(|o| o.bits)
            .unwrap_or(self.rb.capacity_bits)
    }

    pub fn rb_grid(&self, ap: NodeId, timing: &TimingConfig) -> RbGrid {
        let bands = self.rb.bands;
        let mut capacity = Vec::with_capacity((timing.n_tti * bands) as usize);
        for tti in 0..timing.n_tti {
            for band in 0..bands {
                capacity.push(self.rb_capacity(ap, tti, band));
            }
        }
        RbGrid {
            ap,
            n_tti: timing.n_tti,
            bands,
            capacity,
            owner: vec![None; (timing.n_tti * bands) as usize],
        }
    }
}

/// `rate` units per second accumulated over `span` nanoseconds, floored.
pub fn bits_in(rate_per_s: u64, span: Nanos) -> u64 {
    (u128::from(rate_per_s) * span.max(0) as u128 / 1_000_000_000) as u64
}

/// Nanoseconds needed to serve `amount` units at `rate_per_s`, rounded up.
pub fn service_time(amount: u64, rate_per_s: u64) -> Nanos {
    if rate_per_s == 0 {
        return Nanos::MAX / 4;
    }
    (u128::from(amount) * 1_000_000_000).div_ceil(u128::from(rate_per_s)) as Nanos
}

/// Shannon-capacity estimate of the bits one RB carries.
pub fn shannon_rb_bits(
    band_hz: f64,
    tti: Nanos,
    tx_power_dbm: f64,
    distance_m: f64,
    path_loss_exponent: f64,
    noise_dbm: f64,
) -> u64 {
    // free-space reference loss at 1 m for 3.5 GHz is roughly 43 dB
    let loss_db = 43.0 + 10.0 * path_loss_exponent * distance_m.max(1.0).log10();
    let snr_db = tx_power_dbm - loss_db - noise_dbm;
    let snr = 10f64.powf(snr_db / 10.0);
    (band_hz * (tti as f64 * 1e-9) * (1.0 + snr).log2()).floor() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Rb {
    pub tti: u32,
    pub band: u32,
}

/// RB occupancy of one AP for a single hypercycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RbGrid {
    pub ap: NodeId,
    pub n_tti: u32,
    pub bands: u32,
    capacity: Vec<u64>,
    owner: Vec<Option<u32>>,
}

impl RbGrid {
    fn slot(&self, rb: Rb) -> Result<usize> {
        if rb.tti >= self.n_tti || rb.band >= self.bands {
            return Err(Error::Contract(format!(
                "RB ({}, {}) outside {}x{} grid",
                rb.tti, rb.band, self.n_tti, self.bands
            )));
        }
        Ok((rb.tti * self.bands + rb.band) as usize)
    }

    pub fn capacity(&self, rb: Rb) -> u64 {
        self.slot(rb).map(|s| self.capacity[s]).unwrap_or(0)
    }

    pub fn owner(&self, rb: Rb) -> Option<u32> {
        self.slot(rb).ok().and_then(|s| self.owner[s])
    }

    pub fn is_free(&self, rb: Rb) -> bool {
        matches!(self.slot(rb), Ok(s) if self.owner[s].is_none())
    }

    pub fn free_bands(&self, tti: u32) -> impl Iterator<Item = u32> + '_ {
        (0..self.bands).filter(move |&band| self.is_free(Rb { tti, band }))
    }

    pub(crate) fn assign(&mut self, rb: Rb, demand: u32) -> Result<()> {
        let s = self.slot(rb)?;
        if let Some(holder) = self.owner[s] {
            return Err(Error::RbConflict {
                ap: self.ap.to_string(),
                tti: rb.tti,
                band: rb.band,
                holder,
            });
        }
        self.owner[s] = Some(demand);
        Ok(())
    }

    pub(crate) fn clear(&mut self, rb: Rb, demand: u32) {
        if let Ok(s) = self.slot(rb) {
            if self.owner[s] == Some(demand) {
                self.owner[s] = None;
            }
        }
    }

    pub fn occupied(&self) -> usize {
        self.owner.iter().filter(|o| o.is_some()).count()
    }
}

/// `<s, T, c, omega, Gamma>` plus an id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demand {
    pub id: u32,
    pub source: NodeId,
    pub period: Nanos,
    pub arrival_tti: u32,
    pub payload_bits: u64,
    pub deadline: Nanos,
}

/// Device -> AP -> routers -> server.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SPath {
    pub nodes: Vec<NodeId>,
}

impl SPath {
    pub fn new(nodes: Vec<NodeId>) -> Self {
        Self { nodes }
    }

    pub fn hops(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn device(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn ap(&self) -> NodeId {
        self.nodes[1]
    }

    pub fn server(&self) -> NodeId {
        *self.nodes.last().expect("empty path")
    }

    /// Wired arcs in path order, AP egress first.
    pub fn arcs(&self, graph: &NetworkGraph) -> Option<Vec<ArcId>> {
        self.nodes[1..].windows(2).map(|w| graph.arc(w[0], w[1])).collect()
    }

    pub fn total_delay(&self, graph: &NetworkGraph) -> Nanos {
        self.nodes[1..]
            .windows(2)
            .filter_map(|w| graph.arc(w[0], w[1]))
            .map(|a| graph.arc_link(a).delay)
            .sum()
    }

    /// Structural problems with this path for `demand`, empty when well formed.
    pub fn shape_errors(&self, graph: &NetworkGraph, demand: &Demand, max_hops: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        let v = |code, msg: String| Violation::for_demand(code, demand.id, msg);
        if self.nodes.len() < 3 {
            out.push(v(ViolationCode::PathShape, format!("path has {} hop(s), need >= 2", self.hops())));
            return out;
        }
        if self.hops() > max_hops {
            out.push(v(ViolationCode::HopBound, format!("{} hops > H={max_hops}", self.hops())));
        }
        if self.nodes.iter().any(|n| n.index() >= graph.node_count()) {
            out.push(v(ViolationCode::PathShape, "path references unknown node".into()));
            return out;
        }
        if self.device() != demand.source {
            out.push(v(ViolationCode::PathShape, "path does not start at the demand source".into()));
        }
        if graph.ap_of(demand.source) != Some(self.ap()) {
            out.push(v(ViolationCode::PathShape, "second node is not the source's AP".into()));
        }
        if graph.node(self.server()).kind != NodeKind::Server {
            out.push(v(ViolationCode::PathShape, "path does not end at a server".into()));
        }
        let interior = &self.nodes[2..self.nodes.len() - 1];
        if interior.iter().any(|&n| graph.node(n).kind != NodeKind::Router) {
            out.push(v(ViolationCode::PathShape, "interior node is not a router".into()));
        }
        let mut seen = self.nodes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.nodes.len() {
            out.push(v(ViolationCode::PathShape, "path repeats a node".into()));
        }
        if self.arcs(graph).is_none() {
            out.push(v(ViolationCode::PathShape, "consecutive nodes are not linked".into()));
        }
        out
    }
}

/// Loop-free device -> server paths of at most `max_hops` hops.
///
/// Keeps the `per_server` lowest-delay paths to every reachable server and
/// returns them sorted by total link delay (ties: fewer hops, then node ids).
pub fn enumerate_spaths(graph: &NetworkGraph, demand: &Demand, max_hops: usize, per_server: usize) -> Vec<SPath> {
    let Some(ap) = graph.ap_of(demand.source) else {
        return Vec::new();
    };
    if max_hops < 2 || per_server == 0 {
        return Vec::new();
    }
    let mut found: BTreeMap<NodeId, Vec<(Nanos, SPath)>> = BTreeMap::new();
    let mut stack = vec![demand.source, ap];
    let mut on_path = vec![false; graph.node_count()];
    on_path[demand.source.index()] = true;
    on_path[ap.index()] = true;
    dfs(graph, &mut stack, &mut on_path, 0, max_hops, &mut found);

    let mut out: Vec<(Nanos, SPath)> = found
        .into_values()
        .flat_map(|mut paths| {
            paths.sort_by(|a, b| (a.0, a.1.hops(), &a.1).cmp(&(b.0, b.1.hops(), &b.1)));
            paths.truncate(per_server);
            paths
        })
        .collect();
    out.sort_by(|a, b| (a.0, a.1.hops(), &a.1).cmp(&(b.0, b.1.hops(), &b.1)));
    out.into_iter().map(|(_, p)| p).collect()
}

fn dfs(
    graph: &NetworkGraph,
    stack: &mut Vec<NodeId>,
    on_path: &mut [bool],
    delay: Nanos,
    max_hops: usize,
    found: &mut BTreeMap<NodeId, Vec<(Nanos, SPath)>>,
) {
    let here = *stack.last().expect("non-empty");
    let hops_so_far = stack.len() - 1;
    if hops_so_far >= max_hops {
        return;
    }
    for &(next, arc) in graph.neighbors(here) {
        if on_path[next.index()] {
            continue;
        }
        let d = delay + graph.arc_link(arc).delay;
        match graph.node(next).kind {
            NodeKind::Server => {
                let mut nodes = stack.clone();
                nodes.push(next);
                found.entry(next).or_default().push((d, SPath::new(nodes)));
            }
            NodeKind::Router => {
                stack.push(next);
                on_path[next.index()] = true;
                dfs(graph, stack, on_path, d, max_hops, found);
                on_path[next.index()] = false;
                stack.pop();
            }
            NodeKind::Device | NodeKind::Ap => {}
        }
    }
}

/// Capacity of the RBs assigned to `demand` inside its window
/// `[c + buffer_ttis, c + buffer_ttis + tx_ttis]` (mod `n_tti`).
pub fn rb_window_capacity(
    grid: &RbGrid,
    demand: &Demand,
    buffer_ttis: u32,
    tx_ttis: u32,
    assignment: &[Rb],
) -> Result<u64> {
    let r0 = buffer_ttis + tx_ttis;
    for &rb in assignment {
        let offset = (rb.tti + grid.n_tti - demand.arrival_tti % grid.n_tti) % grid.n_tti;
        if offset < buffer_ttis || offset > r0 {
            return Err(Error::Contract(format!(
                "RB (tti {}, band {}) outside window [{buffer_ttis}, {r0}] after arrival TTI {}",
                rb.tti, rb.band, demand.arrival_tti
            )));
        }
    }
    let mut total = 0;
    for &rb in assignment {
        if let Some(holder) = grid.owner(rb) {
            if holder != demand.id {
                return Err(Error::RbConflict {
                    ap: grid.ap.to_string(),
                    tti: rb.tti,
                    band: rb.band,
                    holder,
                });
            }
        }
        total += grid.capacity(rb);
    }
    Ok(total)
}

/// All violations of the graph invariants for this timing and demand set.
pub fn validate_graph(graph: &NetworkGraph, timing: &TimingConfig, demands: &[Demand]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut names: Vec<&str> = graph.nodes().iter().map(|n| n.name.as_str()).collect();
    names.sort_unstable();
    for w in names.windows(2) {
        if w[0] == w[1] {
            out.push(Violation::new(ViolationCode::DuplicateNode, format!("node name {} repeats", w[0])));
        }
    }

    for node in graph.nodes() {
        match node.kind {
            NodeKind::Device => {
                let aps: Vec<NodeId> = graph
                    .attachments()
                    .iter()
                    .filter(|&&(d, _)| d == node.id)
                    .map(|&(_, a)| a)
                    .collect();
                match aps.len() {
                    0 => out.push(Violation::new(ViolationCode::Unattached, format!("device {} has no AP", node.name))),
                    1 => {}
                    n => out.push(Violation::new(
                        ViolationCode::MultiAttach,
                        format!("device {} attaches to {n} APs", node.name),
                    )),
                }
                if !graph.neighbors(node.id).is_empty() {
                    out.push(Violation::new(
                        ViolationCode::BadLink,
                        format!("device {} has wired links", node.name),
                    ));
                }
            }
            NodeKind::Server if node.cpu_hz.unwrap_or(0) == 0 => {
                out.push(Violation::new(
                    ViolationCode::BadServer,
                    format!("server {} has no CPU capacity", node.name),
                ));
            }
            _ => {}
        }
    }
    for &(d, a) in graph.attachments() {
        if graph.node(d).kind != NodeKind::Device || graph.node(a).kind != NodeKind::Ap {
            out.push(Violation::new(
                ViolationCode::BadAttachment,
                format!("attachment {} -> {} is not device -> AP", graph.node(d).name, graph.node(a).name),
            ));
        }
    }
    for (i, l) in graph.links().iter().enumerate() {
        if l.delay <= 0 || l.bandwidth_bps == 0 {
            out.push(Violation::new(
                ViolationCode::BadLink,
                format!("link {i} needs positive delay and bandwidth"),
            ));
        }
        if l.a == l.b {
            out.push(Violation::new(ViolationCode::BadLink, format!("link {i} is a self-loop")));
        }
    }

    if graph.rb.bands == 0 {
        out.push(Violation::new(ViolationCode::BadRbGrid, "no frequency bands"));
    }
    for o in &graph.rb.overrides {
        if o.tti >= timing.n_tti || o.band >= graph.rb.bands || graph.node(o.ap).kind != NodeKind::Ap {
            out.push(Violation::new(
                ViolationCode::BadRbGrid,
                format!("RB override (tti {}, band {}) outside grid", o.tti, o.band),
            ));
        }
    }

    let mut ids: Vec<u32> = demands.iter().map(|d| d.id).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != demands.len() {
        out.push(Violation::new(ViolationCode::BadDemand, "demand ids repeat"));
    }
    for d in demands {
        let bad = |msg: String| Violation::for_demand(ViolationCode::BadDemand, d.id, msg);
        if d.source.index() >= graph.node_count() || graph.node(d.source).kind != NodeKind::Device {
            out.push(bad("source is not a device".into()));
        }
        if d.payload_bits == 0 {
            out.push(bad("payload must be positive".into()));
        }
        if d.arrival_tti >= timing.n_tti {
            out.push(bad(format!("arrival TTI {} >= {}", d.arrival_tti, timing.n_tti)));
        }
        if d.deadline <= 0 {
            out.push(bad("deadline must be positive".into()));
        }
        if d.period <= 0 || timing.delta_hc % d.period != 0 {
            out.push(Violation::for_demand(
                ViolationCode::PeriodMismatch,
                d.id,
                format!("period {} ns does not divide the hypercycle", d.period),
            ));
        } else if d.period != timing.delta_hc {
            out.push(Violation::for_demand(
                ViolationCode::PeriodMismatch,
                d.id,
                format!("period {} ns shorter than the hypercycle {} ns", d.period, timing.delta_hc),
            ));
        }
    }

    if let Some(max_payload) = demands.iter().map(|d| d.payload_bits).max() {
        for s in graph.servers() {
            let need = u128::from(graph.kappa) * u128::from(max_payload);
            if need > u128::from(graph.server_budget(s.id, timing)) && s.cpu_hz.unwrap_or(0) > 0 {
                out.push(Violation::new(
                    ViolationCode::SingleCycleViolation,
                    format!("server {} cannot process {max_payload} bits in one computation cycle", s.name),
                ));
            }
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::time::micros;

    pub fn node(id: u32, name: &str, kind: NodeKind) -> Node {
        Node {
            id: NodeId(id),
            name: name.into(),
            kind,
            cpu_hz: (kind == NodeKind::Server).then_some(10_000_000_000),
        }
    }

    pub fn link(a: u32, b: u32, delay_us: i64) -> Link {
        Link {
            a: NodeId(a),
            b: NodeId(b),
            delay: micros(delay_us),
            bandwidth_bps: 1_000_000_000,
        }
    }

    pub fn rb(bands: u32, bits: u64) -> RbGridSpec {
        RbGridSpec {
            bands,
            capacity_bits: bits,
            overrides: Vec::new(),
        }
    }

    /// device(0) - ap(1) - router(2) - server(3)
    pub fn chain() -> NetworkGraph {
        NetworkGraph::new(
            vec![
                node(0, "ue", NodeKind::Device),
                node(1, "ap", NodeKind::Ap),
                node(2, "r", NodeKind::Router),
                node(3, "srv", NodeKind::Server),
            ],
            vec![link(1, 2, 10), link(2, 3, 30)],
            vec![(NodeId(0), NodeId(1))],
            1,
            rb(4, 3000),
        )
        .unwrap()
    }

    /// device(0) - ap(1) - {r2 (short), r3 (long)} - server(4)
    pub fn diamond() -> NetworkGraph {
        NetworkGraph::new(
            vec![
                node(0, "ue", NodeKind::Device),
                node(1, "ap", NodeKind::Ap),
                node(2, "r-short", NodeKind::Router),
                node(3, "r-long", NodeKind::Router),
                node(4, "srv", NodeKind::Server),
            ],
            vec![link(1, 2, 10), link(1, 3, 40), link(2, 4, 10), link(3, 4, 10)],
            vec![(NodeId(0), NodeId(1))],
            1,
            rb(4, 3000),
        )
        .unwrap()
    }

    pub fn demand(id: u32, source: u32) -> Demand {
        Demand {
            id,
            source: NodeId(source),
            period: micros(200),
            arrival_tti: 0,
            payload_bits: 8000,
            deadline: micros(1000),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::time::{compute_hypercycle, micros};

    fn timing() -> TimingConfig {
        compute_hypercycle(micros(100), micros(20), micros(50), &[micros(200)], 4).unwrap()
    }

    #[test]
    fn chain_has_one_three_hop_path() {
        let g = chain();
        let d = demand(0, 0);
        let paths = enumerate_spaths(&g, &d, 3, 16);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].hops(), 3);
        assert!(enumerate_spaths(&g, &d, 2, 16).is_empty());
    }

    #[test]
    fn diamond_orders_by_delay() {
        let g = diamond();
        let paths = enumerate_spaths(&g, &demand(0, 0), 4, 10);
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].nodes[2], NodeId(2));
        assert!(paths[0].total_delay(&g) < paths[1].total_delay(&g));
    }

    /// Exhaustive walk over every node sequence, independent of the DFS above.
    fn brute_force_paths(g: &NetworkGraph, d: &Demand, h: usize) -> Vec<SPath> {
        let n = g.node_count() as u32;
        let mut out = Vec::new();
        let mut seqs: Vec<Vec<u32>> = vec![vec![d.source.0]];
        for _ in 0..h {
            let mut next = Vec::new();
            for s in &seqs {
                for v in 0..n {
                    let mut t = s.clone();
                    t.push(v);
                    next.push(t);
                }
            }
            for s in &next {
                let p = SPath::new(s.iter().map(|&i| NodeId(i)).collect());
                if p.shape_errors(g, d, h).is_empty() {
                    out.push(p);
                }
            }
            seqs = next;
        }
        out.sort();
        out
    }

    #[test]
    fn enumeration_matches_exhaustive_walk_on_small_graphs() {
        // 7 nodes: device, ap, three routers in a triangle, two servers
        let g = NetworkGraph::new(
            vec![
                node(0, "ue", NodeKind::Device),
                node(1, "ap", NodeKind::Ap),
                node(2, "r0", NodeKind::Router),
                node(3, "r1", NodeKind::Router),
                node(4, "r2", NodeKind::Router),
                node(5, "s0", NodeKind::Server),
                node(6, "s1", NodeKind::Server),
            ],
            vec![
                link(1, 2, 5),
                link(1, 3, 7),
                link(2, 3, 3),
                link(3, 4, 4),
                link(2, 4, 9),
                link(4, 5, 2),
                link(2, 6, 8),
                link(3, 5, 6),
            ],
            vec![(NodeId(0), NodeId(1))],
            1,
            rb(2, 1000),
        )
        .unwrap();
        let d = demand(0, 0);
        for h in 2..=6 {
            let mut got = enumerate_spaths(&g, &d, h, usize::MAX);
            got.sort();
            assert_eq!(got, brute_force_paths(&g, &d, h), "H={h}");
        }
    }

    #[test]
    fn window_capacity_arithmetic() {
        let g = chain();
        let grid = g.rb_grid(NodeId(1), &timing());
        let d = demand(0, 0);
        let three: Vec<Rb> = (0..3).map(|band| Rb { tti: 1, band }).collect();
        let cap = rb_window_capacity(&grid, &d, 0, 1, &three).unwrap();
        assert_eq!(cap, 9000);
        assert!(cap >= d.payload_bits);
        assert_eq!(rb_window_capacity(&grid, &d, 0, 1, &three[..2]).unwrap(), 6000);
        assert_eq!(rb_window_capacity(&grid, &d, 0, 1, &[]).unwrap(), 0);
    }

    #[test]
    fn window_capacity_rejects_occupied_and_out_of_window() {
        let g = chain();
        let t = timing();
        let mut grid = g.rb_grid(NodeId(1), &t);
        let d = demand(0, 0);
        grid.assign(Rb { tti: 1, band: 0 }, 7).unwrap();
        assert!(matches!(
            rb_window_capacity(&grid, &d, 0, 1, &[Rb { tti: 1, band: 0 }]),
            Err(Error::RbConflict { holder: 7, .. })
        ));
        assert!(matches!(
            rb_window_capacity(&grid, &d, 1, 0, &[Rb { tti: 0, band: 1 }]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn rb_grid_is_exclusive() {
        let g = chain();
        let mut grid = g.rb_grid(NodeId(1), &timing());
        let rb = Rb { tti: 0, band: 2 };
        grid.assign(rb, 1).unwrap();
        assert!(grid.assign(rb, 2).is_err());
        grid.clear(rb, 2);
        assert_eq!(grid.owner(rb), Some(1));
        grid.clear(rb, 1);
        assert!(grid.is_free(rb));
    }

    #[test]
    fn valid_chain_has_no_violations() {
        let g = chain();
        assert!(validate_graph(&g, &timing(), &[demand(0, 0)]).is_empty());
    }

    #[test]
    fn weak_server_violates_single_cycle() {
        let mut nodes = chain().nodes().to_vec();
        nodes[3].cpu_hz = Some(1_000); // 1 kHz: 8000 cycles take 8 s
        let g = NetworkGraph::new(nodes, chain().links().to_vec(), vec![(NodeId(0), NodeId(1))], 1, rb(4, 3000)).unwrap();
        let v = validate_graph(&g, &timing(), &[demand(0, 0)]);
        assert_eq!(crate::violation::codes(&v), vec![ViolationCode::SingleCycleViolation]);
    }

    #[test]
    fn double_attachment_is_reported() {
        let base = chain();
        let mut nodes = base.nodes().to_vec();
        nodes.push(node(4, "ap2", NodeKind::Ap));
        let mut links = base.links().to_vec();
        links.push(link(4, 2, 10));
        let g = NetworkGraph::new(
            nodes,
            links,
            vec![(NodeId(0), NodeId(1)), (NodeId(0), NodeId(4))],
            1,
            rb(4, 3000),
        )
        .unwrap();
        let v = validate_graph(&g, &timing(), &[demand(0, 0)]);
        assert_eq!(crate::violation::codes(&v), vec![ViolationCode::MultiAttach]);
    }

    #[test]
    fn shannon_helper_is_positive_and_decreasing_with_distance() {
        let near = shannon_rb_bits(180_000.0, micros(125), 23.0, 5.0, 3.0, -120.0);
        let far = shannon_rb_bits(180_000.0, micros(125), 23.0, 20.0, 3.0, -120.0);
        assert!(near > far && far > 0);
    }
}
