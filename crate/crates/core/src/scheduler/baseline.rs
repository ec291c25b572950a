use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::search::{check_problem, Engine, Spec};
use super::{Problem, SchedulePlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// Minimum-hop path to the nearest server that admits the demand.
    ShortestPathFirst,
    /// Any path and server, but every shift pinned to 1.
    NoShaping,
}

impl BaselineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ShortestPathFirst => "shortest-path-first",
            Self::NoShaping => "no-shaping",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shortest-path-first" | "spf" => Ok(Self::ShortestPathFirst),
            "no-shaping" | "noshape" => Ok(Self::NoShaping),
            other => Err(Error::InvalidConfig(format!("unknown baseline {other:?}"))),
        }
    }
}

/// Both baselines admit demands in input order and never revisit a decision.
pub fn solve_baseline(problem: &Problem, kind: BaselineKind) -> Result<SchedulePlan> {
    check_problem(problem)?;
    let mut e = Engine::new(problem)?;
    for d in 0..problem.demands.len() {
        let order = match kind {
            BaselineKind::ShortestPathFirst => spf_order(&e, d),
            BaselineKind::NoShaping => (0..e.cands(d).len()).collect(),
        };
        let spec = match kind {
            BaselineKind::ShortestPathFirst => Spec::full(problem),
            BaselineKind::NoShaping => Spec::unshaped(problem),
        };
        e.place_any(d, order, &spec);
    }
    Ok(e.to_plan(kind.as_str()))
}

/// One path per server (fewest hops, then least delay), nearest server first.
fn spf_order(e: &Engine<'_>, d: usize) -> Vec<usize> {
    let cands = e.cands(d);
    let mut best: Vec<usize> = Vec::new();
    for (i, c) in cands.iter().enumerate() {
        let key = |j: usize| (cands[j].path.hops(), cands[j].delay, &cands[j].path);
        match best.iter_mut().find(|j| cands[**j].path.server() == c.path.server()) {
            Some(j) if key(i) < key(*j) => *j = i,
            Some(_) => {}
            None => best.push(i),
        }
    }
    best.sort_by_key(|&j| (cands[j].path.hops(), cands[j].delay, &cands[j].path));
    best
}
