//! Tabu search over admission, path/server choice, cycle shifts and RB windows.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::time::Nanos;

use super::baseline::{solve_baseline, BaselineKind};
use super::search::{check_problem, greedy, Engine, Slot, Spec};
use super::{Problem, SchedulePlan};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabuConfig {
    pub tenure: usize,
    pub max_iterations: usize,
    pub neighborhood: usize,
    pub seed: u64,
    /// Wall-clock safety net; the iteration limits normally stop the search first.
    pub time_budget_ms: u64,
    /// Stop after this many iterations without a new incumbent.
    pub stall_limit: usize,
}

impl Default for TabuConfig {
    fn default() -> Self {
        Self {
            tenure: 20,
            max_iterations: 5000,
            neighborhood: 64,
            seed: 0,
            time_budget_ms: 60_000,
            stall_limit: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum MoveKind {
    Admission,
    Path,
    ShiftAp,
    ShiftServer,
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    /// Admit a rejected demand, trying every candidate (`None`) or just one.
    Insert(usize, Option<usize>),
    Remove(usize),
    Reroute(usize, usize),
    ShiftAp(usize, i32),
    ShiftServer(usize, i32),
    Slide(usize, i32),
    /// Drop `out`, admit `in`, then try to re-admit `out` anywhere.
    Replace(usize, usize),
}

impl Move {
    fn keys(self) -> Vec<(usize, MoveKind)> {
        match self {
            Move::Insert(d, _) | Move::Remove(d) => vec![(d, MoveKind::Admission)],
            Move::Reroute(d, _) => vec![(d, MoveKind::Path)],
            Move::ShiftAp(d, _) => vec![(d, MoveKind::ShiftAp)],
            Move::ShiftServer(d, _) => vec![(d, MoveKind::ShiftServer)],
            Move::Slide(d, _) => vec![(d, MoveKind::Window)],
            Move::Replace(out, inn) => vec![(out, MoveKind::Admission), (inn, MoveKind::Admission)],
        }
    }
}

type Undo = Vec<(usize, Option<Slot>)>;

fn step(v: u32, delta: i32) -> Option<u32> {
    v.checked_add_signed(delta)
}

impl Engine<'_> {
    /// Applies `mv`; on failure the state is unchanged and `None` is returned.
    fn apply(&mut self, mv: Move) -> Option<Undo> {
        let full = Spec::full(self.p);
        match mv {
            Move::Insert(d, cand) => {
                if self.slots[d].is_some() {
                    return None;
                }
                let ok = match cand {
                    Some(c) => self.place(d, c, &full),
                    None => {
                        let n = self.cands(d).len();
                        self.place_any(d, 0..n, &full)
                    }
                };
                ok.then(|| vec![(d, None)])
            }
            Move::Remove(d) => {
                let old = self.remove(d)?;
                Some(vec![(d, Some(old))])
            }
            Move::Reroute(d, cand) => self.replace_slot(d, |_| Some((cand, full.clone()))),
            Move::ShiftAp(d, delta) => self.replace_slot(d, |s| {
                let sh = &s.placement.shifts;
                let r1 = step(sh.ap_shift(), delta)?;
                Some((
                    s.cand,
                    Spec {
                        buffers: sh.buffer_ttis..=sh.buffer_ttis,
                        ap: r1..=r1,
                        server: full.server.clone(),
                    },
                ))
            }),
            Move::ShiftServer(d, delta) => self.replace_slot(d, |s| {
                let sh = &s.placement.shifts;
                let rl = step(sh.server_shift(), delta)?;
                Some((
                    s.cand,
                    Spec {
                        buffers: sh.buffer_ttis..=sh.buffer_ttis,
                        ap: sh.ap_shift()..=sh.ap_shift(),
                        server: rl..=rl,
                    },
                ))
            }),
            Move::Slide(d, delta) => self.replace_slot(d, |s| {
                let b = step(s.placement.shifts.buffer_ttis, delta)?;
                Some((
                    s.cand,
                    Spec {
                        buffers: b..=b,
                        ..full.clone()
                    },
                ))
            }),
            Move::Replace(out, inn) => {
                if self.slots[inn].is_some() {
                    return None;
                }
                let old = self.remove(out)?;
                let n_in = self.cands(inn).len();
                if !self.place_any(inn, 0..n_in, &full) {
                    self.restore(out, old);
                    return None;
                }
                let n_out = self.cands(out).len();
                self.place_any(out, 0..n_out, &full);
                Some(vec![(out, Some(old)), (inn, None)])
            }
        }
    }

    /// Removes `d`'s placement and re-places it per `pick`; restores on failure.
    fn replace_slot(&mut self, d: usize, pick: impl FnOnce(&Slot) -> Option<(usize, Spec)>) -> Option<Undo> {
        let (cand, spec) = pick(self.slots[d].as_ref()?)?;
        let old = self.remove(d).expect("checked above");
        if self.place(d, cand, &spec) && self.slots[d].as_ref().map(|s| &s.placement) != Some(&old.placement) {
            Some(vec![(d, Some(old))])
        } else {
            self.remove(d);
            self.restore(d, old);
            None
        }
    }

    fn revert(&mut self, undo: Undo) {
        for (d, _) in &undo {
            self.remove(*d);
        }
        for (d, old) in undo {
            if let Some(slot) = old {
                self.restore(d, slot);
            }
        }
    }

    fn sample_moves(&self, rng: &mut ChaCha8Rng, size: usize) -> Vec<Move> {
        let n = self.p.demands.len();
        let accepted: Vec<usize> = (0..n).filter(|&d| self.slots[d].is_some()).collect();
        let rejected: Vec<usize> = (0..n).filter(|&d| self.slots[d].is_none()).collect();
        let mut moves = Vec::with_capacity(size);
        for &d in &rejected {
            moves.push(Move::Insert(d, None));
        }
        let mut guard = 0;
        while moves.len() < size && guard < size * 4 {
            guard += 1;
            let roll = rng.gen_range(0..8u32);
            let mv = match roll {
                0 | 1 if !rejected.is_empty() && !accepted.is_empty() => {
                    Move::Replace(*accepted.choose(rng).unwrap(), *rejected.choose(rng).unwrap())
                }
                2 if !rejected.is_empty() => {
                    let d = *rejected.choose(rng).unwrap();
                    let k = self.cands(d).len();
                    if k == 0 {
                        continue;
                    }
                    Move::Insert(d, Some(rng.gen_range(0..k)))
                }
                3 if !accepted.is_empty() => {
                    let d = *accepted.choose(rng).unwrap();
                    let k = self.cands(d).len();
                    Move::Reroute(d, rng.gen_range(0..k))
                }
                4 if !accepted.is_empty() => Move::ShiftAp(*accepted.choose(rng).unwrap(), sign(rng)),
                5 if !accepted.is_empty() => Move::ShiftServer(*accepted.choose(rng).unwrap(), sign(rng)),
                6 if !accepted.is_empty() => Move::Slide(*accepted.choose(rng).unwrap(), sign(rng)),
                7 if !accepted.is_empty() => Move::Remove(*accepted.choose(rng).unwrap()),
                _ => continue,
            };
            moves.push(mv);
        }
        moves
    }
}

fn sign(rng: &mut ChaCha8Rng) -> i32 {
    if rng.gen_bool(0.5) {
        1
    } else {
        -1
    }
}

pub fn solve_tabu(problem: &Problem, cfg: &TabuConfig) -> Result<SchedulePlan> {
    solve_tabu_from(problem, cfg, None)
}

/// Tabu search starting from the best of greedy, both baselines and `warm`.
pub fn solve_tabu_from(problem: &Problem, cfg: &TabuConfig, warm: Option<&SchedulePlan>) -> Result<SchedulePlan> {
    check_problem(problem)?;
    let mut seeds = vec![
        greedy(problem)?,
        solve_baseline(problem, BaselineKind::ShortestPathFirst)?,
        solve_baseline(problem, BaselineKind::NoShaping)?,
    ];
    if let Some(w) = warm {
        let mut e = Engine::new(problem)?;
        e.load(w);
        seeds.push(e.to_plan("warm"));
    }
    let start = seeds
        .iter()
        .fold(None::<&SchedulePlan>, |best, s| match best {
            Some(b) if !s.better_than(b) => Some(b),
            _ => Some(s),
        })
        .expect("at least one seed");

    let mut e = Engine::new(problem)?;
    e.load(start);
    debug_assert_eq!(e.accepted, start.objective);

    let n = problem.demands.len();
    let mut best_score = e.score();
    let mut best = e.to_plan("tabu");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tabu_until: HashMap<(usize, MoveKind), usize> = HashMap::new();
    let deadline = Instant::now() + Duration::from_millis(cfg.time_budget_ms);
    let mut since_best = 0;

    for iter in 0..cfg.max_iterations {
        if e.accepted as usize == n || since_best >= cfg.stall_limit || Instant::now() >= deadline {
            break;
        }
        let moves = e.sample_moves(&mut rng, cfg.neighborhood.max(1));
        let mut chosen: Option<(Move, (u32, Nanos))> = None;
        for mv in moves {
            let Some(undo) = e.apply(mv) else { continue };
            let score = e.score();
            e.revert(undo);
            let is_tabu = mv.keys().iter().any(|k| tabu_until.get(k).is_some_and(|&t| t > iter));
            if is_tabu && score <= best_score {
                continue;
            }
            if chosen.as_ref().is_none_or(|(_, s)| score > *s) {
                chosen = Some((mv, score));
            }
        }
        let Some((mv, _)) = chosen else {
            since_best += 1;
            continue;
        };
        e.apply(mv).expect("move was feasible a moment ago");
        for k in mv.keys() {
            tabu_until.insert(k, iter + 1 + cfg.tenure);
        }
        if e.score() > best_score {
            best_score = e.score();
            best = e.to_plan("tabu");
            since_best = 0;
        } else {
            since_best += 1;
        }
    }
    Ok(best)
}
