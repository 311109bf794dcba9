//! Fading: after the chain run convicts B, traffic stops and A slowly forgives
//! it. Once back to suspicious, a single bad window convicts B again.
//!
//!     cargo run --release --example fading

use rism_sim::mobility::Point;
use rism_sim::network::{SimSettings, Simulation};
use rism_sim::workload::{BehaviorProfile, CbrConnection};
use rism_sim::{NodeId, Scenario};

fn main() {
    let (a, b, c) = (NodeId(0), NodeId(1), NodeId(2));
    let positions = [
        Point::new(0.0, 0.0),
        Point::new(200.0, 0.0),
        Point::new(400.0, 0.0),
    ];
    let behaviors = vec![
        BehaviorProfile::cooperative(),
        BehaviorProfile::malicious(1.0),
        BehaviorProfile::cooperative(),
    ];
    let flow = CbrConnection {
        src: a,
        dst: c,
        rate: 4.0,
        payload: 64,
        start_time: 0.0,
    };
    let scenario = Scenario::stationary(&positions, 250.0, behaviors, vec![flow]);
    let settings = SimSettings {
        duration: 8.5,
        trace: true,
        ..SimSettings::default()
    };
    let mut sim = Simulation::new(scenario, settings, 1);
    sim.run_until(400.0);
    for rec in sim.trace() {
        let late_appraisal = rec.kind == "appraisal" && rec.time > 300.0;
        if rec.node == a && (late_appraisal || matches!(rec.kind, "category-change" | "fade")) {
            println!("{rec}");
        }
    }
    let rec = sim.table(a).and_then(|t| t.record(b)).expect("A rated B");
    println!("{rec:?}");
}
