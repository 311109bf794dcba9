//! Deterministic discrete-event simulator for mobile ad hoc networks running
//! Dynamic Source Routing, with an optional reputation-based intrusion
//! detection layer that finds and routes around packet-dropping nodes.
//!
//! A run is described by a [`config::ScenarioConfig`], turned into a concrete
//! [`scenario::Scenario`] (placement, trajectories, traffic, adversaries) from
//! a seed, and executed by [`network::Simulation`]. [`sweep`] runs grids of
//! configurations in parallel and collects one CSV row per run.

use std::fmt;

pub mod config;
pub mod dsr;
pub mod ids;
pub mod link;
pub mod metrics;
pub mod mobility;
pub mod network;
pub mod packet;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod sweep;
pub mod trace;
pub mod workload;

pub use config::{Protocol, ScenarioConfig};
pub use network::{RunResult, Simulation};
pub use scenario::Scenario;

/// Node address, `0..nodes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
