//! Prints the random waypoint schedule and the CBR connections of one seed,
//! followed by a neighbor snapshot at a chosen time.
//!
//!     cargo run --example mobility_dump -- [seed] [pause_time] [time]

use rism_sim::{NodeId, Scenario, ScenarioConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args
        .first()
        .map_or(1, |s| s.parse().expect("an integer seed"));
    let mut cfg = ScenarioConfig::default();
    if let Some(p) = args.get(1) {
        cfg.set("pause_time", p).expect("a pause time");
    }
    let t: f64 = args
        .get(2)
        .map_or(450.0, |s| s.parse().expect("a time in seconds"));

    let scenario = Scenario::generate(&cfg, seed);
    scenario.dump(std::io::stdout().lock()).expect("stdout");

    println!();
    println!("neighbors at {t} s:");
    for i in 0..scenario.node_count() as u32 {
        let n = NodeId(i);
        let p = scenario.mobility.position_at(n, t).expect("node exists");
        let nb = scenario.mobility.neighbors(n, t).expect("node exists");
        let nb: Vec<String> = nb.iter().map(|x| x.to_string()).collect();
        println!("{n:>3} ({:>7.2}, {:>7.2}) {}", p.x, p.y, nb.join(" "));
    }
}
