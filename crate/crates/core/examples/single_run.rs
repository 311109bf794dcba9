//! One 900 s run of the default scenario, printed as metrics plus a tally of
//! the event trace.
//!
//!     cargo run --release --example single_run -- [protocol] [malicious_fraction] [seed]

use std::collections::BTreeMap;

use rism_sim::network::{SimSettings, Simulation};
use rism_sim::{Scenario, ScenarioConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = ScenarioConfig::default();
    if let Some(p) = args.first() {
        cfg.set("protocol", p).expect("protocol is dsr or rism");
    }
    if let Some(f) = args.get(1) {
        cfg.set("malicious_fraction", f).expect("a fraction");
    }
    let seed: u64 = args
        .get(2)
        .map_or(42, |s| s.parse().expect("an integer seed"));
    cfg.validate().expect("valid config");

    let scenario = Scenario::generate(&cfg, seed);
    println!("malicious nodes: {:?}", scenario.malicious_nodes());
    for c in &scenario.connections {
        println!("cbr {} -> {} from {:.2} s", c.src, c.dst, c.start_time);
    }
    let settings = SimSettings {
        trace: true,
        ..SimSettings::from_config(&cfg)
    };
    let result = Simulation::new(scenario, settings, seed).run();
    let r = &result.report;
    println!();
    println!("protocol          {}", cfg.protocol);
    println!("events processed  {}", result.stats.processed);
    println!("data sent         {}", r.data_sent);
    println!("data received     {}", r.data_received);
    println!("pdr               {:.4}", r.pdr);
    println!("control generated {}", r.control_generated);
    println!("overhead ratio    {:.4}", r.overhead_ratio);
    println!("warnings          {}", r.warning_count);
    println!("drops             {:?}", r.drops);
    println!("in flight         {}", r.in_flight);
    println!("conserved         {}", r.is_conserved());

    let mut kinds: BTreeMap<&str, usize> = BTreeMap::new();
    let mut drops: BTreeMap<String, usize> = BTreeMap::new();
    for rec in &result.trace {
        *kinds.entry(rec.kind).or_default() += 1;
        if rec.kind == "data-drop" {
            let why: Vec<&str> = rec.detail.split(' ').take(2).collect();
            *drops.entry(why.join(" ")).or_default() += 1;
        }
    }
    println!();
    for (k, n) in kinds {
        println!("{k:<16} {n}");
    }
    println!();
    for (k, n) in drops {
        println!("{k:<32} {n}");
    }
}
