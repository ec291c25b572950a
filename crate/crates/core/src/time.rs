//! Clock domains, the hypercycle, and cycle mapping between neighbouring nodes.
//!
//! All durations are integer nanoseconds so that the lcm and the floor in the
//! mapping are exact. A packet whose latest arrival instant falls exactly on a
//! downstream cycle boundary is mapped to the cycle starting at that boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{NetworkGraph, NodeId, NodeKind};

/// Nanoseconds.
pub type Nanos = i64;

pub const NANOS_PER_MICRO: Nanos = 1_000;

pub fn micros(us: i64) -> Nanos {
    us * NANOS_PER_MICRO
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Radio access: TTI cycles.
    Ran,
    /// Wired network: DIP cycles.
    Wn,
    /// MEC servers: computation cycles.
    Mecs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainTag {
    pub domain: Domain,
    pub cycle_len: Nanos,
    pub cycles_per_hc: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub delta_tti: Nanos,
    pub delta_dip: Nanos,
    pub delta_mec: Nanos,
    pub queue_count: u32,
    pub n_hc: u64,
    pub delta_hc: Nanos,
    pub n_tti: u32,
    pub n_dip: u32,
    pub n_mec: u32,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm(a: i64, b: i64) -> Result<i64> {
    (a / gcd(a, b))
        .checked_mul(b)
        .ok_or_else(|| Error::InvalidConfig(format!("lcm of {a} ns and {b} ns overflows")))
}

fn base_period(delta_tti: Nanos, delta_dip: Nanos, delta_mec: Nanos, periods: &[Nanos], q: u32) -> Result<Nanos> {
    if q < 3 {
        return Err(Error::InvalidConfig(format!("queue count {q} < 3")));
    }
    let mut acc = 1;
    for (name, d) in [("delta_tti", delta_tti), ("delta_dip", delta_dip), ("delta_mec", delta_mec)]
        .into_iter()
        .chain(periods.iter().map(|&p| ("period", p)))
    {
        if d <= 0 {
            return Err(Error::InvalidConfig(format!("{name} must be positive, got {d} ns")));
        }
        acc = lcm(acc, d)?;
    }
    Ok(acc)
}

/// Smallest hypercycle that is a multiple of every cycle length and period and
/// holds at least `q` DIP and computation cycles.
pub fn compute_hypercycle(
    delta_tti: Nanos,
    delta_dip: Nanos,
    delta_mec: Nanos,
    periods: &[Nanos],
    q: u32,
) -> Result<TimingConfig> {
    let base = base_period(delta_tti, delta_dip, delta_mec, periods, q)?;
    let short = delta_dip.max(delta_mec);
    // n_dip, n_mec >= q  <=>  n_hc * base >= q * max(delta_dip, delta_mec)
    let need = i64::from(q) * short;
    let n_hc = ((need + base - 1) / base).max(1) as u64;
    TimingConfig::build(delta_tti, delta_dip, delta_mec, q, base, n_hc)
}

impl TimingConfig {
    /// Like [`compute_hypercycle`] but with a caller-chosen multiplier.
    pub fn with_multiplier(
        delta_tti: Nanos,
        delta_dip: Nanos,
        delta_mec: Nanos,
        periods: &[Nanos],
        q: u32,
        n_hc: u64,
    ) -> Result<Self> {
        if n_hc == 0 {
            return Err(Error::InvalidConfig("n_hc must be >= 1".into()));
        }
        let base = base_period(delta_tti, delta_dip, delta_mec, periods, q)?;
        Self::build(delta_tti, delta_dip, delta_mec, q, base, n_hc)
    }

    fn build(delta_tti: Nanos, delta_dip: Nanos, delta_mec: Nanos, q: u32, base: Nanos, n_hc: u64) -> Result<Self> {
        let delta_hc = base
            .checked_mul(n_hc as i64)
            .ok_or_else(|| Error::InvalidConfig("hypercycle overflows".into()))?;
        let count = |d: Nanos| -> Result<u32> {
            u32::try_from(delta_hc / d).map_err(|_| Error::InvalidConfig("too many cycles per hypercycle".into()))
        };
        let cfg = Self {
            delta_tti,
            delta_dip,
            delta_mec,
            queue_count: q,
            n_hc,
            delta_hc,
            n_tti: count(delta_tti)?,
            n_dip: count(delta_dip)?,
            n_mec: count(delta_mec)?,
        };
        if cfg.n_dip < q || cfg.n_mec < q {
            return Err(Error::InvalidConfig(format!(
                "hypercycle {} ns holds {} DIP / {} computation cycles, fewer than Q={q}",
                delta_hc, cfg.n_dip, cfg.n_mec
            )));
        }
        Ok(cfg)
    }

    pub fn tag(&self, domain: Domain) -> DomainTag {
        let (cycle_len, cycles_per_hc) = match domain {
            Domain::Ran => (self.delta_tti, self.n_tti),
            Domain::Wn => (self.delta_dip, self.n_dip),
            Domain::Mecs => (self.delta_mec, self.n_mec),
        };
        DomainTag {
            domain,
            cycle_len,
            cycles_per_hc,
        }
    }

    /// Largest cycle shift a Q-queue port can realize.
    pub fn max_shift(&self) -> u32 {
        self.queue_count - 2
    }

    /// Analytic per-demand jitter bound: one TTI plus one computation cycle.
    pub fn jitter_bound(&self) -> Nanos {
        self.delta_tti + self.delta_mec
    }
}

/// Hypercycle start offset between two neighbouring nodes,
/// `downstream start - upstream start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockOffset {
    pub upstream: NodeId,
    pub downstream: NodeId,
    pub tau_hc: Nanos,
}

/// Per-node hypercycle start instants on an ideal reference clock.
///
/// Devices are strictly time-synchronized with their AP, so a device always
/// shares its AP's start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockTable {
    starts: Vec<Nanos>,
}

impl ClockTable {
    pub fn zero(graph: &NetworkGraph) -> Self {
        Self {
            starts: vec![0; graph.node_count()],
        }
    }

    pub fn aligned(graph: &NetworkGraph, mut starts: Vec<Nanos>) -> Result<Self> {
        if starts.len() != graph.node_count() {
            return Err(Error::InvalidConfig(format!(
                "{} clock starts for {} nodes",
                starts.len(),
                graph.node_count()
            )));
        }
        for node in graph.nodes() {
            if node.kind == NodeKind::Device {
                if let Some(ap) = graph.ap_of(node.id) {
                    starts[node.id.index()] = starts[ap.index()];
                }
            }
        }
        Ok(Self { starts })
    }

    pub fn start(&self, node: NodeId) -> Nanos {
        self.starts[node.index()]
    }

    pub fn starts(&self) -> &[Nanos] {
        &self.starts
    }

    pub fn offset(&self, upstream: NodeId, downstream: NodeId) -> ClockOffset {
        ClockOffset {
            upstream,
            downstream,
            tau_hc: self.start(downstream) - self.start(upstream),
        }
    }
}

/// Cycle mapping parameters for one directed hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleHop {
    pub from: DomainTag,
    pub to: DomainTag,
    pub link_delay: Nanos,
    pub tau_hc: Nanos,
    wireless: bool,
}

impl CycleHop {
    pub fn new(from: DomainTag, to: DomainTag, link_delay: Nanos, tau_hc: Nanos) -> Self {
        Self {
            from,
            to,
            link_delay,
            tau_hc,
            wireless: false,
        }
    }

    /// Device to AP inside the RAN: identity mapping with no mapping delay.
    pub fn wireless(ran: DomainTag) -> Self {
        Self {
            from: ran,
            to: ran,
            link_delay: 0,
            tau_hc: 0,
            wireless: true,
        }
    }

    /// TTI to DIP clock inside one AP (same node, zero delay and offset).
    pub fn ap_internal(timing: &TimingConfig) -> Self {
        Self::new(timing.tag(Domain::Ran), timing.tag(Domain::Wn), 0, 0)
    }

    fn check(&self, a: u64) -> Result<()> {
        if a >= u64::from(self.from.cycles_per_hc) {
            return Err(Error::CycleOutOfRange {
                index: a,
                count: self.from.cycles_per_hc,
            });
        }
        Ok(())
    }

    /// Latest receiving cycle before the modulo, for any (possibly unwrapped) sending cycle.
    pub fn unwrapped(&self, a: i64) -> i64 {
        if self.wireless {
            return a;
        }
        let latest = (a + 1) * self.from.cycle_len + self.link_delay - self.tau_hc;
        latest.div_euclid(self.to.cycle_len)
    }

    pub fn map_cycle(&self, a: u32) -> Result<u32> {
        self.check(u64::from(a))?;
        Ok(self.wrap(self.unwrapped(i64::from(a))))
    }

    fn wrap(&self, unwrapped: i64) -> u32 {
        unwrapped.rem_euclid(i64::from(self.to.cycles_per_hc)) as u32
    }

    /// Time from the end of sending cycle `a` to the end of receiving cycle
    /// `map_cycle(a)`, measured on the upstream clock.
    pub fn mapping_delay(&self, a: u32) -> Result<Nanos> {
        self.check(u64::from(a))?;
        if self.wireless {
            return Ok(0);
        }
        let a = i64::from(a);
        Ok((self.unwrapped(a) + 1) * self.to.cycle_len + self.tau_hc - (a + 1) * self.from.cycle_len)
    }

    /// Worst-case transmission delay for a packet sent in cycle `a`.
    pub fn worst_case_hop_delay(&self, a: u32) -> Result<Nanos> {
        Ok(self.mapping_delay(a)? + if self.wireless { 0 } else { self.from.cycle_len })
    }

    /// Mapping of `a + k * N` evaluated without reducing first; equals `map_cycle(a)`.
    pub fn unwrap_periodic(&self, a: u32, k: u64) -> Result<u32> {
        self.check(u64::from(a))?;
        let shifted = i64::from(a) + (k as i64) * i64::from(self.from.cycles_per_hc);
        Ok(self.wrap(self.unwrapped(shifted)))
    }
}

pub fn map_cycle(a: u32, hop: &CycleHop) -> Result<u32> {
    hop.map_cycle(a)
}

pub fn mapping_delay(a: u32, hop: &CycleHop) -> Result<Nanos> {
    hop.mapping_delay(a)
}

pub fn unwrap_periodic(a: u32, k: u64, hop: &CycleHop) -> Result<u32> {
    hop.unwrap_periodic(a, k)
}
