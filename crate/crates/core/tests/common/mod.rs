#![allow(dead_code)]

use rayon::prelude::*;

use rism_sim::ids::{Category, Evidence, IdsConfig, ReputationTable};
use rism_sim::metrics::{CsvRow, MetricsReport};
use rism_sim::mobility::Point;
use rism_sim::network::{Injection, SimSettings, Simulation};
use rism_sim::sweep::{csv_row, expand, run_point, Axis};
use rism_sim::workload::{BehaviorProfile, CbrConnection};
use rism_sim::{NodeId, Scenario, ScenarioConfig};

pub const A: NodeId = NodeId(0);
pub const B: NodeId = NodeId(1);
pub const C: NodeId = NodeId(2);

/// A - B - C, 200 m apart, so B is the only relay; flow A -> C at 4 pkt/s.
pub fn chain(b: BehaviorProfile, duration: f64) -> Simulation {
    let positions = [
        Point::new(0.0, 0.0),
        Point::new(200.0, 0.0),
        Point::new(400.0, 0.0),
    ];
    let behaviors = vec![
        BehaviorProfile::cooperative(),
        b,
        BehaviorProfile::cooperative(),
    ];
    let flow = CbrConnection {
        src: A,
        dst: C,
        rate: 4.0,
        payload: 64,
        start_time: 0.0,
    };
    let scenario = Scenario::stationary(&positions, 250.0, behaviors, vec![flow]);
    let settings = SimSettings {
        duration,
        trace: true,
        ..SimSettings::default()
    };
    Simulation::new(scenario, settings, 1)
}

/// A, B, C mutually in range with no traffic. A knows the route A-B-C and
/// receives six WARNINGs about B from C, the sixth arriving at 0.15 s.
pub fn knock_triangle(b: BehaviorProfile) -> Simulation {
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
        let w = Injection::Warning {
            receiver: A,
            accuser: C,
            accused: B,
        };
        sim.inject(0.1 + 0.01 * k as f64, w);
    }
    sim
}

pub struct GridRun {
    pub row: CsvRow,
    pub report: MetricsReport,
}

/// Runs the cross product of `axes` over `base`, in parallel, in run order.
pub fn grid(base: &ScenarioConfig, axes: &[Axis]) -> Vec<GridRun> {
    let points = expand(base, axes).expect("valid grid");
    points
        .par_iter()
        .map(|p| {
            let report = run_point(p, false).report;
            GridRun {
                row: csv_row(p.run_id, p.seed, &p.config, &report),
                report,
            }
        })
        .collect()
}

/// Mean of `f` over the runs matching `keep`.
pub fn mean<K, F>(runs: &[GridRun], keep: K, f: F) -> f64
where
    K: Fn(&CsvRow) -> bool,
    F: Fn(&CsvRow) -> f64,
{
    let v: Vec<f64> = runs
        .iter()
        .map(|r| &r.row)
        .filter(|r| keep(r))
        .map(f)
        .collect();
    assert!(!v.is_empty(), "no runs selected");
    v.iter().sum::<f64>() / v.len() as f64
}

/// One step of a randomized reputation workload.
#[derive(Debug, Clone, Copy)]
pub enum RepOp {
    Evidence(u32, Evidence),
    KnockFail(u32),
    KnockPass(u32),
    Fade(u32),
    Wait(f64),
}

/// Replays `ops` on a fresh table, checking the rating invariants after each
/// step. Returns the number of steps applied.
pub fn check_reputation_invariants(cfg: IdsConfig, ops: &[RepOp]) -> Result<usize, String> {
    let mut t = ReputationTable::new(cfg);
    let mut now = 0.0;
    let mut direct = [false; 8];
    for (i, &op) in ops.iter().enumerate() {
        let subject = match op {
            RepOp::Evidence(s, _) | RepOp::KnockFail(s) | RepOp::KnockPass(s) | RepOp::Fade(s) => s,
            RepOp::Wait(dt) => {
                now += dt;
                continue;
            }
        };
        let n = NodeId(subject);
        let before = t.category(n);
        let mut convicting = false;
        match op {
            RepOp::Evidence(_, e) => {
                convicting = e == Evidence::SelfNegative;
                direct[subject as usize] |= !e.is_indirect();
                t.apply_evidence(n, e, now);
            }
            RepOp::KnockFail(_) => {
                convicting = true;
                direct[subject as usize] = true;
                t.declare_malicious(n, now);
            }
            RepOp::KnockPass(_) => {
                direct[subject as usize] = true;
                t.knock_passed(n);
            }
            RepOp::Fade(_) => {
                t.fade_tick(n, now);
            }
            RepOp::Wait(_) => unreachable!(),
        }
        let r = t.rating(n);
        let after = t.category(n);
        if r > 0.0 {
            return Err(format!("step {i}: rating {r} above neutral"));
        }
        if r < cfg.rating_floor {
            return Err(format!("step {i}: rating {r} below floor"));
        }
        if !direct[subject as usize] && r < cfg.suspicious_threshold {
            return Err(format!(
                "step {i}: indirect evidence alone drove rating to {r}"
            ));
        }
        if before != Category::Malicious && after == Category::Malicious && !convicting {
            return Err(format!("step {i}: {op:?} made {n} malicious"));
        }
    }
    Ok(ops.len())
}
