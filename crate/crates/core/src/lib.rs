//! Deterministic service for MEC networks: cycle mapping and shifting across
//! radio, wired and compute domains, a joint admission/routing/shaping
//! scheduler, and a cycle-accurate simulator that replays its plans.

pub mod error;
pub mod latency;
pub mod ledger;
pub mod network;
pub mod results;
pub mod scenario;
pub mod scheduler;
pub mod sim;
pub mod time;
pub mod violation;

pub use error::{Error, Result};
