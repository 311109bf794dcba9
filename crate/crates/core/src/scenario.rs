//! Concrete scenarios: node placement, trajectories, traffic and adversaries.
//!
//! Everything here is drawn from the scenario, mobility and traffic streams of
//! one seed, and nothing depends on the protocol, so a DSR run and an IDS run
//! with the same seed see the same world.

use std::io::{self, Write};

use crate::config::ScenarioConfig;
use crate::mobility::{Mobility, Point};
use crate::rng::{stream, StreamLabel};
use crate::workload::{pick_malicious, random_connections, BehaviorProfile, CbrConnection};
use crate::NodeId;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub mobility: Mobility,
    pub behaviors: Vec<BehaviorProfile>,
    pub connections: Vec<CbrConnection>,
}

impl Scenario {
    /// Random scenario for `cfg` and run seed `seed`.
    pub fn generate(cfg: &ScenarioConfig, seed: u64) -> Self {
        let mut scen = stream(seed, StreamLabel::Scenario);
        let field = cfg.field();
        let initial: Vec<Point> = (0..cfg.nodes).map(|_| field.sample(&mut scen)).collect();
        let bad = pick_malicious(cfg.nodes, cfg.malicious_fraction, &mut scen);
        let behaviors = (0..cfg.nodes as u32)
            .map(|i| {
                if bad.contains(&NodeId(i)) {
                    BehaviorProfile::malicious(cfg.drop_probability)
                } else {
                    BehaviorProfile::cooperative()
                }
            })
            .collect();

        let mut mob = stream(seed, StreamLabel::Mobility);
        let mobility =
            Mobility::random_waypoint(&initial, &cfg.waypoint_params(), cfg.radio_range, &mut mob);

        let mut traffic = stream(seed, StreamLabel::Traffic);
        let connections = random_connections(
            cfg.nodes,
            cfg.connection_count(),
            cfg.cbr_rate,
            cfg.packet_size,
            cfg.cbr_stagger,
            &mut traffic,
        );
        Self {
            mobility,
            behaviors,
            connections,
        }
    }

    /// Hand-built scenario with fixed node positions.
    pub fn stationary(
        positions: &[Point],
        radio_range: f64,
        behaviors: Vec<BehaviorProfile>,
        connections: Vec<CbrConnection>,
    ) -> Self {
        assert_eq!(positions.len(), behaviors.len(), "one behavior per node");
        Self {
            mobility: Mobility::stationary(positions, radio_range),
            behaviors,
            connections,
        }
    }

    pub fn node_count(&self) -> usize {
        self.behaviors.len()
    }

    pub fn malicious_nodes(&self) -> Vec<NodeId> {
        (0..self.behaviors.len() as u32)
            .map(NodeId)
            .filter(|n| self.behaviors[n.index()].is_malicious())
            .collect()
    }

    /// Waypoint and connection schedules as text, for comparing scenarios.
    pub fn dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        self.mobility.dump(&mut out)?;
        crate::workload::dump_connections(&self.connections, &mut out)
    }
}
