//! Three static nodes A - B - C where B is the only relay and drops every data
//! packet. A watches B through passive acknowledgements, convicts it, purges
//! its routes and stops handing packets to it.
//!
//!     cargo run --release --example chain_detection

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
        duration: 40.0,
        trace: true,
        ..SimSettings::default()
    };
    let mut sim = Simulation::new(scenario, settings, 1);
    sim.run_until(40.0);

    for rec in sim.trace() {
        let watched = matches!(rec.kind, "appraisal" | "category-change" | "warning-tx");
        if rec.node == a && watched {
            println!("{rec}");
        }
    }
    let table = sim.table(a).expect("ids enabled");
    println!();
    println!(
        "rating of {b} at {a}: {} ({})",
        table.rating(b),
        table.category(b).as_str()
    );
    println!("caches free of convicted nodes: {}", sim.caches_are_clean());
    let r = sim.report();
    println!(
        "sent {} received {} drops {:?}",
        r.data_sent, r.data_received, r.drops
    );
}
