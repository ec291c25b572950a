use detmec_core::scenario::*;
use detmec_core::scheduler::{solve_baseline, solve_tabu, BaselineKind, SchedulePlan, TabuConfig};
use detmec_core::sim::{run_best_effort, run_deterministic, trace_stats, BackgroundTraffic, PacketTrace};
use detmec_core::time::micros;
use detmec_core::network::NodeKind;
use detmec_core::Error;

const GBPS: u64 = 1_000_000_000;

fn spec(name: &str, kind: NodeKind, cpu_hz: Option<u64>, ap: Option<&str>) -> NodeSpec {
    NodeSpec {
        name: name.into(),
        kind,
        cpu_hz,
        ap: ap.map(Into::into),
    }
}

fn wire(a: &str, b: &str, delay_us: i64) -> LinkSpec {
    LinkSpec {
        a: a.into(),
        b: b.into(),
        delay_ns: micros(delay_us),
        bandwidth_bps: GBPS,
    }
}

/// ue0, ue1 -> ap0 -> r0 -> s0 with 1 Gb/s links and a 1 GHz server.
fn chain(demands: Vec<DemandSpec>) -> ScenarioFile {
    ScenarioFile {
        name: "chain".into(),
        seeds: Seeds {
            topology: 0,
            offsets: 0,
            traffic: 0,
            solver: 0,
        },
        hop_bound: 4,
        timing: TimingSection {
            delta_tti_ns: micros(30),
            delta_dip_ns: micros(10),
            delta_mec_ns: micros(20),
            queues: 4,
            n_hc: None,
        },
        graph: GraphSection {
            nodes: vec![
                spec("ap0", NodeKind::Ap, None, None),
                spec("r0", NodeKind::Router, None, None),
                spec("s0", NodeKind::Server, Some(GBPS), None),
                spec("ue0", NodeKind::Device, None, Some("ap0")),
                spec("ue1", NodeKind::Device, None, Some("ap0")),
            ],
            links: vec![wire("ap0", "r0", 7), wire("r0", "s0", 13)],
            kappa: 1,
        },
        rb: RbSection {
            bands: 4,
            capacity_bits: Some(4000),
            shannon: None,
            overrides: vec![],
        },
        demands,
        offsets: OffsetSpec::Zero,
        background: BackgroundSection {
            utilization: 0.0,
            mean_period_ns: micros(100),
            links: vec![],
        },
    }
}

fn demand(id: u32, source: &str, payload_bits: u64) -> DemandSpec {
    DemandSpec {
        id,
        source: source.into(),
        period_ns: micros(120),
        arrival_tti: 0,
        payload_bits,
        deadline_ns: micros(400),
    }
}

fn tabu(inst: &Instance) -> SchedulePlan {
    solve_tabu(&inst.problem, &TabuConfig::default()).unwrap()
}

fn ceil_div(a: u64, b: u64) -> i64 {
    a.saturating_mul(1_000_000_000).div_ceil(b) as i64
}

#[test]
fn unloaded_best_effort_latency_is_pure_transfer_time() {
    let inst = chain(vec![demand(0, "ue0", 3000)]).instance().unwrap();
    let plan = tabu(&inst);
    let r0 = i64::from(plan.decisions[0].placement.as_ref().unwrap().shifts.r0());
    let traces = run_best_effort(&inst.problem, &plan, &BackgroundTraffic::none(), 10, 4).unwrap();
    assert_eq!(traces.len(), 10);
    for t in &traces {
        let tti = micros(30);
        let hc = i64::from(t.hypercycle) * micros(120);
        let at_ap = hc + (r0 + 1) * tti;
        let wired = 2 * ceil_div(3000, GBPS) + micros(7) + micros(13);
        let cpu = ceil_div(3000, GBPS);
        assert_eq!(t.completion, at_ap + wired + cpu, "{t:?}");
        assert_eq!(t.latency, t.completion - t.generated);
        assert!((hc..hc + tti).contains(&t.generated));
    }
}

#[test]
fn best_effort_serializes_colliding_tasks() {
    // same arrival TTI, same path: whoever goes second waits a full transmission
    let inst = chain(vec![demand(0, "ue0", 3000), demand(1, "ue1", 3000)]).instance().unwrap();
    let plan = solve_baseline(&inst.problem, BaselineKind::NoShaping).unwrap();
    assert_eq!(plan.objective, 2);
    let pls: Vec<_> = plan.accepted().map(|(_, p)| p.shifts.r0()).collect();
    assert_eq!(pls[0], pls[1]);
    let traces = run_best_effort(&inst.problem, &plan, &BackgroundTraffic::none(), 1, 0).unwrap();
    let gap = (traces[0].completion - traces[1].completion).abs();
    assert!(gap >= ceil_div(3000, GBPS), "gap {gap}");
}

#[test]
fn deterministic_cycles_match_prediction() {
    for seed in 0..40 {
        let s = generate_scenario(Profile::Tiny, seed);
        let inst = s.instance().unwrap();
        let plan = tabu(&inst);
        let traces = run_deterministic(&inst.problem, &plan, 12, seed).unwrap();
        assert_eq!(traces.len(), 12 * plan.objective as usize);
        for t in &traces {
            let pl = placement(&plan, t);
            let got: Vec<u32> = t.hops.iter().map(|h| h.departure_cycle).collect();
            assert_eq!(got, pl.report.cycles, "seed {seed} demand {}", t.demand);
            assert_eq!(t.hops.len(), pl.path.nodes.len());
            assert!(t.hops.iter().all(|h| h.queue < inst.problem.timing.queue_count));
        }
    }
}

fn placement<'a>(plan: &'a SchedulePlan, t: &PacketTrace) -> &'a detmec_core::scheduler::Placement {
    plan.decisions
        .iter()
        .find(|d| d.demand == t.demand)
        .and_then(|d| d.placement.as_ref())
        .unwrap()
}

#[test]
fn deterministic_latency_is_bounded() {
    for seed in 0..40 {
        let inst = generate_scenario(Profile::Tiny, seed).instance().unwrap();
        let plan = tabu(&inst);
        let traces = run_deterministic(&inst.problem, &plan, 15, seed + 1).unwrap();
        let jb = inst.problem.timing.jitter_bound();
        for t in &traces {
            assert!(t.latency <= t.bound, "seed {seed}: {} > {}", t.latency, t.bound);
            assert!(t.bound - t.latency <= jb, "seed {seed}: slack {}", t.bound - t.latency);
            assert!(t.latency <= t.deadline);
        }
        if !traces.is_empty() {
            assert!(trace_stats(&traces).unwrap().max_jitter <= jb);
        }
    }
}

#[test]
fn deterministic_shares_a_dip_cycle_without_overflow() {
    let inst = chain(vec![demand(0, "ue0", 3000), demand(1, "ue1", 3000)]).instance().unwrap();
    let plan = solve_baseline(&inst.problem, BaselineKind::NoShaping).unwrap();
    let traces = run_deterministic(&inst.problem, &plan, 5, 2).unwrap();
    assert_eq!(traces.len(), 10);
    assert!(traces.iter().all(|t| t.latency <= t.bound));
}

#[test]
fn runs_repeat_under_a_seed() {
    let s = generate_scenario(Profile::Tiny, 11);
    let inst = s.instance().unwrap();
    let plan = tabu(&inst);
    assert!(plan.objective > 0);
    let bg = BackgroundTraffic::uniform(0.5, 9);
    assert_eq!(
        run_deterministic(&inst.problem, &plan, 8, 3).unwrap(),
        run_deterministic(&inst.problem, &plan, 8, 3).unwrap()
    );
    assert_eq!(
        run_best_effort(&inst.problem, &plan, &bg, 8, 3).unwrap(),
        run_best_effort(&inst.problem, &plan, &bg, 8, 3).unwrap()
    );
    assert_ne!(
        run_deterministic(&inst.problem, &plan, 8, 3).unwrap(),
        run_deterministic(&inst.problem, &plan, 8, 4).unwrap()
    );
}

#[test]
fn deterministic_refuses_a_broken_plan() {
    let inst = chain(vec![demand(0, "ue0", 3000)]).instance().unwrap();
    let mut plan = tabu(&inst);
    plan.decisions[0].placement.as_mut().unwrap().report.bound += 1;
    assert!(matches!(
        run_deterministic(&inst.problem, &plan, 1, 0),
        Err(Error::Invalid(_))
    ));
}

#[test]
fn background_load_only_slows_best_effort() {
    let inst = generate_scenario(Profile::Tiny, 5).instance().unwrap();
    let plan = tabu(&inst);
    let quiet = run_best_effort(&inst.problem, &plan, &BackgroundTraffic::none(), 30, 1).unwrap();
    let busy = run_best_effort(&inst.problem, &plan, &BackgroundTraffic::uniform(0.7, 2), 30, 1).unwrap();
    for (q, b) in quiet.iter().zip(&busy) {
        assert_eq!((q.demand, q.hypercycle, q.generated), (b.demand, b.hypercycle, b.generated));
        assert!(b.latency >= q.latency);
    }
}

#[test]
fn best_effort_rejects_bad_background() {
    let inst = chain(vec![demand(0, "ue0", 3000)]).instance().unwrap();
    let plan = tabu(&inst);
    let mut bg = BackgroundTraffic::uniform(1.0, 0);
    assert!(run_best_effort(&inst.problem, &plan, &bg, 1, 0).is_err());
    bg.utilization = 0.3;
    bg.mean_period = 0;
    assert!(run_best_effort(&inst.problem, &plan, &bg, 1, 0).is_err());
}
