//! Joint admission, path/server selection, RB assignment and cycle shifting.

mod baseline;
mod oracle;
mod search;
mod tabu;
mod validate;

use serde::{Deserialize, Serialize};

use crate::latency::{LatencyReport, ShiftVector};
use crate::network::{Demand, NetworkGraph, Rb, SPath};
use crate::time::{ClockTable, Nanos, TimingConfig};

pub use baseline::{solve_baseline, BaselineKind};
pub use oracle::{brute_force_oracle, OracleLimits};
pub use tabu::{solve_tabu, solve_tabu_from, TabuConfig};
pub use validate::validate_plan;

/// Default number of candidate paths kept per (demand, server) pair.
pub const DEFAULT_PATHS_PER_SERVER: usize = 16;

/// One scheduling instance.
#[derive(Debug, Clone)]
pub struct Problem {
    pub graph: NetworkGraph,
    pub timing: TimingConfig,
    pub clocks: ClockTable,
    pub demands: Vec<Demand>,
    /// Hop bound H.
    pub max_hops: usize,
    pub paths_per_server: usize,
}

impl Problem {
    pub fn new(
        graph: NetworkGraph,
        timing: TimingConfig,
        clocks: ClockTable,
        demands: Vec<Demand>,
        max_hops: usize,
    ) -> Self {
        Self {
            graph,
            timing,
            clocks,
            demands,
            max_hops,
            paths_per_server: DEFAULT_PATHS_PER_SERVER,
        }
    }

    pub fn with_max_hops(&self, max_hops: usize) -> Self {
        Self {
            max_hops,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub path: SPath,
    pub rbs: Vec<Rb>,
    pub shifts: ShiftVector,
    pub report: LatencyReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub demand: u32,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<Placement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulePlan {
    pub solver: String,
    /// Number of accepted demands.
    pub objective: u32,
    /// Sum of worst-case service latencies over accepted demands.
    pub total_bound: Nanos,
    pub decisions: Vec<Decision>,
}

impl SchedulePlan {
    pub fn empty(solver: &str, demands: &[Demand]) -> Self {
        Self {
            solver: solver.to_string(),
            objective: 0,
            total_bound: 0,
            decisions: demands
                .iter()
                .map(|d| Decision {
                    demand: d.id,
                    accepted: false,
                    placement: None,
                })
                .collect(),
        }
    }

    pub fn accepted(&self) -> impl Iterator<Item = (usize, &Placement)> {
        self.decisions
            .iter()
            .enumerate()
            .filter_map(|(i, d)| d.placement.as_ref().filter(|_| d.accepted).map(|p| (i, p)))
    }

    /// Higher objective wins; ties go to the lower total latency.
    pub fn better_than(&self, other: &SchedulePlan) -> bool {
        (self.objective, -self.total_bound) > (other.objective, -other.total_bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latency::accumulated_delay;
    use crate::network::fixtures::{link, node, rb};
    use crate::network::{Link, NodeId, NodeKind};
    use crate::time::{compute_hypercycle, micros};
    use crate::violation::{codes, ViolationCode};

    const GBPS: u64 = 1_000_000_000;

    fn timing(q: u32) -> TimingConfig {
        compute_hypercycle(micros(30), micros(10), micros(20), &[], q).unwrap()
    }

    fn wired(a: u32, b: u32, delay_us: i64, bps: u64) -> Link {
        Link {
            bandwidth_bps: bps,
            ..link(a, b, delay_us)
        }
    }

    /// ue(0) - ap(1) - {r-short(2), r-long(3)} - srv(4)
    fn diamond(short_bps: u64, long_us: i64, bands: u32) -> NetworkGraph {
        NetworkGraph::new(
            vec![
                node(0, "ue", NodeKind::Device),
                node(1, "ap", NodeKind::Ap),
                node(2, "r-short", NodeKind::Router),
                node(3, "r-long", NodeKind::Router),
                node(4, "srv", NodeKind::Server),
            ],
            vec![
                wired(1, 2, 10, short_bps),
                wired(1, 3, long_us, 10 * GBPS),
                wired(2, 4, 10, 10 * GBPS),
                wired(3, 4, 10, 10 * GBPS),
            ],
            vec![(NodeId(0), NodeId(1))],
            1,
            rb(bands, 8000),
        )
        .unwrap()
    }

    /// ue(0) - ap(1) - {r1(2) - s1(4), r2(3) - s2(5)}, 1 Gb/s AP uplinks.
    fn twin_servers(bands: u32) -> NetworkGraph {
        NetworkGraph::new(
            vec![
                node(0, "ue", NodeKind::Device),
                node(1, "ap", NodeKind::Ap),
                node(2, "r1", NodeKind::Router),
                node(3, "r2", NodeKind::Router),
                node(4, "s1", NodeKind::Server),
                node(5, "s2", NodeKind::Server),
            ],
            vec![
                wired(1, 2, 10, GBPS),
                wired(1, 3, 10, GBPS),
                wired(2, 4, 10, 10 * GBPS),
                wired(3, 5, 10, 10 * GBPS),
            ],
            vec![(NodeId(0), NodeId(1))],
            1,
            rb(bands, 8000),
        )
        .unwrap()
    }

    fn demands(t: &TimingConfig, count: u32, deadline: Nanos) -> Vec<Demand> {
        (0..count)
            .map(|id| Demand {
                id,
                source: NodeId(0),
                period: t.delta_hc,
                arrival_tti: 0,
                payload_bits: 8000,
                deadline,
            })
            .collect()
    }

    fn bound(p: &Problem, nodes: &[u32], r0: u32, r1: u32, rl: u32) -> Nanos {
        let path = SPath::new(nodes.iter().copied().map(NodeId).collect());
        let d = Demand {
            deadline: Nanos::MAX,
            ..p.demands[0].clone()
        };
        let s = ShiftVector::new(0, r0, r1, rl, path.hops());
        accumulated_delay(&d, &path, &s, &p.timing, &p.clocks, &p.graph).unwrap().bound
    }

    fn problem(g: NetworkGraph, t: TimingConfig, n: u32) -> Problem {
        let clocks = ClockTable::zero(&g);
        Problem::new(g, t.clone(), clocks, demands(&t, n, 0), 4)
    }

    fn with_deadline(mut p: Problem, deadline: Nanos) -> Problem {
        for d in &mut p.demands {
            d.deadline = deadline;
        }
        p
    }

    fn all_objectives(p: &Problem) -> [u32; 4] {
        let tabu = solve_tabu(p, &TabuConfig::default()).unwrap();
        let spf = solve_baseline(p, BaselineKind::ShortestPathFirst).unwrap();
        let nos = solve_baseline(p, BaselineKind::NoShaping).unwrap();
        let oracle = brute_force_oracle(p, &OracleLimits::default()).unwrap();
        for plan in [&tabu, &spf, &nos, &oracle] {
            assert_eq!(validate_plan(p, plan), vec![], "{} plan", plan.solver);
        }
        [tabu.objective, spf.objective, nos.objective, oracle.objective]
    }

    #[test]
    fn single_demand_ample_resources() {
        let p = with_deadline(problem(diamond(10 * GBPS, 40, 4), timing(4), 1), micros(1000));
        assert_eq!(all_objectives(&p), [1, 1, 1, 1]);
    }

    #[test]
    fn empty_demand_set_gives_empty_plan() {
        let p = problem(diamond(10 * GBPS, 40, 4), timing(4), 0);
        assert_eq!(all_objectives(&p), [0, 0, 0, 0]);
    }

    #[test]
    fn deadline_below_first_hop_rejects_everything() {
        let p = with_deadline(problem(diamond(10 * GBPS, 40, 4), timing(4), 3), micros(60));
        assert_eq!(all_objectives(&p), [0, 0, 0, 0]);
    }

    #[test]
    fn spf_stays_on_the_congested_short_path() {
        // Q = 3: no shifting, and a 2-TTI hypercycle pins every RB to TTI 1
        let t = timing(3);
        assert_eq!(t.n_tti, 2);
        let p = problem(diamond(GBPS, 40, 4), t, 3);
        let deadline = bound(&p, &[0, 1, 3, 4], 1, 1, 1);
        let p = with_deadline(p, deadline);
        let [tabu, spf, _, oracle] = all_objectives(&p);
        assert_eq!(spf, 1);
        assert_eq!(oracle, 3);
        assert_eq!(tabu, 3);
    }

    #[test]
    fn ap_shift_separates_a_dip_collision() {
        let t = timing(4);
        let p = problem(twin_servers(2), t, 2);
        // keep one server reachable only, by making s2 a dead end for the deadline
        let deadline = bound(&p, &[0, 1, 2, 4], 1, 2, 1);
        assert!(bound(&p, &[0, 1, 2, 4], 2, 1, 1) > deadline);
        let mut p = with_deadline(p, deadline);
        p.graph = NetworkGraph::new(
            p.graph.nodes().to_vec(),
            p.graph.links()[..3].iter().cloned().chain([wired(3, 5, 200, 10 * GBPS)]).collect(),
            p.graph.attachments().to_vec(),
            1,
            rb(2, 8000),
        )
        .unwrap();
        let [tabu, _, noshape, oracle] = all_objectives(&p);
        assert_eq!(noshape, 1);
        assert_eq!(tabu, 2);
        assert_eq!(oracle, 2);
    }

    #[test]
    fn one_shared_rb_admits_one() {
        let t = timing(4);
        let p = problem(twin_servers(1), t, 3);
        // only window offset 1 meets the deadline, and it has a single band
        let deadline = bound(&p, &[0, 1, 2, 4], 1, 2, 1);
        assert!(bound(&p, &[0, 1, 2, 4], 2, 1, 1) > deadline);
        assert!(bound(&p, &[0, 1, 2, 4], 1, 1, 2) > deadline);
        let p = with_deadline(p, deadline);
        let [tabu, spf, noshape, oracle] = all_objectives(&p);
        assert_eq!([tabu, spf, noshape, oracle], [1, 1, 1, 1]);
    }

    #[test]
    fn five_demand_diamond_needs_shifting() {
        let t = timing(5);
        let p = problem(twin_servers(4), t, 5);
        // unshifted, each AP uplink carries one demand per window TTI, and
        // only two window TTIs meet the deadline
        let deadline = bound(&p, &[0, 1, 2, 4], 1, 3, 1);
        assert!(bound(&p, &[0, 1, 2, 4], 3, 1, 1) > deadline);
        let p = with_deadline(p, deadline);
        let [tabu, _, noshape, oracle] = all_objectives(&p);
        assert!(noshape < 5, "no-shaping accepted {noshape}");
        assert_eq!(oracle, 5);
        assert_eq!(tabu, 5);
    }

    #[test]
    fn solvers_are_deterministic() {
        let t = timing(5);
        let p = problem(twin_servers(4), t, 5);
        let deadline = bound(&p, &[0, 1, 2, 4], 2, 3, 2);
        let p = with_deadline(p, deadline);
        let cfg = TabuConfig {
            seed: 7,
            ..TabuConfig::default()
        };
        assert_eq!(solve_tabu(&p, &cfg).unwrap(), solve_tabu(&p, &cfg).unwrap());
    }

    #[test]
    fn oracle_refuses_large_instances() {
        let p = with_deadline(problem(diamond(10 * GBPS, 40, 4), timing(4), 7), micros(1000));
        assert!(matches!(
            brute_force_oracle(&p, &OracleLimits::default()),
            Err(crate::Error::InstanceTooLarge(_))
        ));
        let p = with_deadline(problem(diamond(10 * GBPS, 40, 4), timing(6), 2), micros(1000));
        assert!(matches!(
            brute_force_oracle(&p, &OracleLimits::default()),
            Err(crate::Error::InstanceTooLarge(_))
        ));
    }

    #[test]
    fn validator_flags_hop_bound() {
        let p = with_deadline(problem(diamond(10 * GBPS, 40, 4), timing(4), 1), micros(1000));
        let mut plan = solve_tabu(&p, &TabuConfig::default()).unwrap();
        assert_eq!(plan.objective, 1);
        let tight = p.with_max_hops(2);
        assert_eq!(codes(&validate_plan(&tight, &plan)), vec![ViolationCode::HopBound]);
        plan.decisions[0].accepted = false;
        let c = codes(&validate_plan(&p, &plan));
        assert!(c.contains(&ViolationCode::RejectedHolds));
    }

    #[test]
    fn validator_flags_double_assigned_rb() {
        let p = with_deadline(problem(diamond(10 * GBPS, 40, 4), timing(4), 2), micros(1000));
        let mut plan = solve_tabu(&p, &TabuConfig::default()).unwrap();
        assert_eq!(plan.objective, 2);
        let first = plan.decisions[0].placement.clone().unwrap();
        let second = plan.decisions[1].placement.as_mut().unwrap();
        // same window and path as the first demand, so only the RBs clash
        second.rbs = first.rbs.clone();
        second.shifts = first.shifts.clone();
        second.path = first.path.clone();
        second.report = first.report.clone();
        plan.total_bound = 2 * first.report.bound;
        let c = codes(&validate_plan(&p, &plan));
        assert!(c.contains(&ViolationCode::RbConflict), "{c:?}");
        assert!(c.iter().all(|&x| matches!(x, ViolationCode::RbConflict | ViolationCode::LinkOverflow)), "{c:?}");
    }

    #[test]
    fn validator_flags_stale_report_and_objective() {
        let p = with_deadline(problem(diamond(10 * GBPS, 40, 4), timing(4), 1), micros(1000));
        let mut plan = solve_tabu(&p, &TabuConfig::default()).unwrap();
        plan.decisions[0].placement.as_mut().unwrap().report.bound += 1;
        assert_eq!(codes(&validate_plan(&p, &plan)), vec![ViolationCode::StaleReport]);
        plan.objective = 2;
        assert!(codes(&validate_plan(&p, &plan)).contains(&ViolationCode::ObjectiveMismatch));
    }

    #[test]
    fn warm_start_is_never_lost() {
        let t = timing(5);
        let p = problem(twin_servers(4), t, 5);
        let p = with_deadline(p, micros(1000));
        let cfg = TabuConfig {
            max_iterations: 0,
            ..TabuConfig::default()
        };
        let first = solve_tabu(&p, &cfg).unwrap();
        let again = solve_tabu_from(&p, &cfg, Some(&first)).unwrap();
        assert!(again.objective >= first.objective);
    }
}
