//! Knock test on a static triangle A, B, C. Scripted WARNINGs from C make B
//! suspicious at A; one more WARNING makes A probe B with a packet for C and
//! watch whether B forwards it.
//!
//!     cargo run --release --example knock_test

use rism_sim::mobility::Point;
use rism_sim::network::{Injection, SimSettings, Simulation};
use rism_sim::workload::BehaviorProfile;
use rism_sim::{NodeId, Scenario};

const A: NodeId = NodeId(0);
const B: NodeId = NodeId(1);
const C: NodeId = NodeId(2);

fn knock(b: BehaviorProfile) {
    let positions = [
        Point::new(0.0, 0.0),
        Point::new(100.0, 0.0),
        Point::new(50.0, 80.0),
    ];
    let behaviors = vec![
        BehaviorProfile::cooperative(),
        b,
        BehaviorProfile::cooperative(),
    ];
    let scenario = Scenario::stationary(&positions, 250.0, behaviors, Vec::new());
    let settings = SimSettings {
        duration: 5.0,
        trace: true,
        ..SimSettings::default()
    };
    let mut sim = Simulation::new(scenario, settings, 1);
    sim.inject(
        0.05,
        Injection::Route {
            path: vec![A, B, C],
        },
    );
    for k in 0..6 {
        let warning = Injection::Warning {
            receiver: A,
            accuser: C,
            accused: B,
        };
        sim.inject(0.1 + 0.01 * k as f64, warning);
    }
    sim.run_until(0.5);
    let rating = sim.table(A).expect("ids enabled").rating(B);
    sim.run_until(5.0);

    for rec in sim.trace() {
        if rec.node == A && matches!(rec.kind, "category-change" | "knock" | "warning-tx") {
            println!("  {rec}");
        }
    }
    let table = sim.table(A).expect("ids enabled");
    println!("  rating at 0.5 s {rating}");
    println!(
        "  rating at 5 s {} ({})",
        table.rating(B),
        table.category(B).as_str()
    );
}

fn main() {
    println!("B cooperative:");
    knock(BehaviorProfile::cooperative());
    println!("B drops data:");
    knock(BehaviorProfile::malicious(1.0));
}
