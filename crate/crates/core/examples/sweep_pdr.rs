//! A small paired sweep of DSR against RISM over the malicious fraction,
//! averaged over seeds and pause times, written as CSV to stdout and
//! summarised on stderr.
//!
//!     cargo run --release --example sweep_pdr -- [seeds]

use std::collections::BTreeMap;

use rism_sim::metrics::write_csv;
use rism_sim::sweep::{expand, run_sweep, Axis};
use rism_sim::ScenarioConfig;

fn main() {
    let seeds: usize = std::env::args()
        .nth(1)
        .map_or(3, |s| s.parse().expect("a seed count"));
    let base = ScenarioConfig {
        seeds,
        ..ScenarioConfig::default()
    };
    let axes = [
        Axis::new("protocol", ["dsr", "rism"]),
        Axis::new(
            "malicious_fraction",
            ["0", "0.1", "0.2", "0.3", "0.5", "0.8"],
        ),
        Axis::new("pause_time", [0, 300, 900]),
    ];
    let points = expand(&base, &axes).expect("valid sweep");
    let out = run_sweep(&points, false).expect("runs succeed");
    write_csv(&out.rows, std::io::stdout().lock()).expect("stdout");

    let mut means: BTreeMap<(u64, String), (f64, f64, usize)> = BTreeMap::new();
    for r in &out.rows {
        let e = means
            .entry((r.malicious_pct.round() as u64, r.protocol.clone()))
            .or_default();
        e.0 += r.pdr;
        e.1 += r.overhead_ratio;
        e.2 += 1;
    }
    eprintln!("malicious% protocol    pdr  overhead");
    for ((pct, proto), (pdr, ovh, n)) in means {
        eprintln!(
            "{pct:>10} {proto:>8} {:.3} {:>9.4}",
            pdr / n as f64,
            ovh / n as f64
        );
    }
}
