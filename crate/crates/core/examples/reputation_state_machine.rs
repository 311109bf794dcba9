//! Drives one reputation table by hand and prints every transition: indirect
//! evidence stalls at the suspicious threshold, self-observation convicts,
//! fading redeems, and a redeemed node is convicted again by one bad window.
//!
//!     cargo run --example reputation_state_machine

use rism_sim::ids::{Evidence, FadeOutcome, IdsConfig, ReputationTable};
use rism_sim::NodeId;

fn show(t: &ReputationTable, s: NodeId, time: f64, what: &str) {
    println!(
        "{time:>6.1} {what:<14} rating {:>5} {}",
        t.rating(s),
        t.category(s).as_str()
    );
}

fn main() {
    let s = NodeId(4);
    let mut t = ReputationTable::new(IdsConfig::default());

    for k in 0..8 {
        let now = k as f64;
        let out = t.apply_evidence(s, Evidence::Warning, now);
        show(&t, s, now, "warning");
        if out.knock_candidate {
            println!("       knock test would run now");
        }
    }
    for k in 8..14 {
        let now = k as f64;
        let out = t.apply_evidence(s, Evidence::SelfNegative, now);
        show(&t, s, now, "self-negative");
        if out.declared {
            println!("       declared malicious");
            break;
        }
    }

    let mut now = t
        .record(s)
        .and_then(|r| r.next_fade_time)
        .expect("fade scheduled");
    loop {
        match t.fade_tick(s, now) {
            FadeOutcome::Stepped { next, .. } => {
                show(&t, s, now, "fade");
                now = next;
            }
            FadeOutcome::Redeemed { .. } => {
                show(&t, s, now, "redeemed");
                break;
            }
            FadeOutcome::Wait(next) => now = next,
            FadeOutcome::NotMalicious => break,
        }
    }
    now += 1.0;
    let out = t.apply_evidence(s, Evidence::SelfNegative, now);
    show(&t, s, now, "self-negative");
    println!("       declared again: {}", out.declared);
}
