//! Parameter sweeps: cross products of config values times seeds, run in
//! parallel, reported in run order.
//!
//! Run `k` of every grid point uses seed `derive_run_seed(master_seed, k)`,
//! so points that differ only in protocol see identical scenarios.

use std::panic::{self, AssertUnwindSafe};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ConfigErrorKind, ScenarioConfig};
use crate::metrics::{CsvRow, MetricsReport};
use crate::network::{RunResult, SimSettings, Simulation};
use crate::rng::derive_run_seed;
use crate::scenario::Scenario;
use crate::trace::TraceRecord;

/// One swept config key and its values, written `key=v1,v2,...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

impl Axis {
    pub fn new<I, S>(key: &str, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        Self {
            key: key.to_string(),
            values: values.into_iter().map(|v| v.to_string()).collect(),
        }
    }
}

impl FromStr for Axis {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || ConfigError::from(ConfigErrorKind::Malformed(s.to_string()));
        let (key, values) = s.split_once('=').ok_or_else(malformed)?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
        if key.trim().is_empty() || values.iter().any(String::is_empty) {
            return Err(malformed());
        }
        Ok(Self {
            key: key.trim().to_string(),
            values,
        })
    }
}

/// A single run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub run_id: u64,
    /// Index of the seed within the point's repetitions.
    pub seed_index: u64,
    pub seed: u64,
    pub config: ScenarioConfig,
}

/// Expands `axes` over `base` (first axis outermost, seeds innermost).
pub fn expand(base: &ScenarioConfig, axes: &[Axis]) -> Result<Vec<SweepPoint>, ConfigError> {
    let mut grid = vec![base.clone()];
    for axis in axes {
        let mut next = Vec::with_capacity(grid.len() * axis.values.len());
        for cfg in &grid {
            for v in &axis.values {
                let mut c = cfg.clone();
                c.set(&axis.key, v)?;
                next.push(c);
            }
        }
        grid = next;
    }
    let mut points = Vec::with_capacity(grid.len() * base.seeds);
    for cfg in grid {
        cfg.validate()?;
        for k in 0..cfg.seeds as u64 {
            points.push(SweepPoint {
                run_id: points.len() as u64,
                seed_index: k,
                seed: derive_run_seed(cfg.master_seed, k),
                config: cfg.clone(),
            });
        }
    }
    Ok(points)
}

pub fn csv_row(run_id: u64, seed: u64, cfg: &ScenarioConfig, r: &MetricsReport) -> CsvRow {
    CsvRow {
        run_id,
        seed,
        protocol: cfg.protocol.to_string(),
        nodes: cfg.nodes,
        malicious_pct: (cfg.malicious_fraction * 100.0 * 1e9).round() / 1e9,
        pause_time: cfg.pause_time,
        connections: cfg.connection_count(),
        data_sent: r.data_sent,
        data_received: r.data_received,
        pdr: r.pdr,
        control_generated: r.control_generated,
        overhead_ratio: r.overhead_ratio,
        warning_count: r.warning_count,
        overhead_ratio_with_ids: r.overhead_ratio_with_ids,
        drops_behavior: r.drops.behavior,
        drops_queue: r.drops.queue,
        drops_noroute: r.drops.noroute,
        drops_linkloss: r.drops.linkloss,
    }
}

/// Runs one point to completion.
pub fn run_point(p: &SweepPoint, trace: bool) -> RunResult {
    let settings = SimSettings {
        trace,
        ..SimSettings::from_config(&p.config)
    };
    Simulation::new(Scenario::generate(&p.config, p.seed), settings, p.seed).run()
}

#[derive(Debug, Clone, Error)]
#[error("run {run_id} (seed {seed}, protocol {protocol}, malicious_fraction {malicious_fraction}, pause_time {pause_time}) failed: {message}")]
pub struct RunFailure {
    pub run_id: u64,
    pub seed: u64,
    pub protocol: String,
    pub malicious_fraction: f64,
    pub pause_time: f64,
    pub message: String,
}

/// Rows of a finished sweep, plus traces when requested.
#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    pub rows: Vec<CsvRow>,
    /// Per run, in run order; empty unless tracing was on.
    pub traces: Vec<Vec<TraceRecord>>,
}

/// Runs every point (in parallel) and returns rows in run order. The first
/// failing run, by run id, aborts the sweep.
pub fn run_sweep(points: &[SweepPoint], trace: bool) -> Result<SweepOutput, RunFailure> {
    let results: Vec<Result<RunResult, RunFailure>> = points
        .par_iter()
        .map(|p| {
            panic::catch_unwind(AssertUnwindSafe(|| run_point(p, trace))).map_err(|e| {
                let message = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".to_string());
                RunFailure {
                    run_id: p.run_id,
                    seed: p.seed,
                    protocol: p.config.protocol.to_string(),
                    malicious_fraction: p.config.malicious_fraction,
                    pause_time: p.config.pause_time,
                    message,
                }
            })
        })
        .collect();
    let mut out = SweepOutput::default();
    for (p, r) in points.iter().zip(results) {
        let r = r?;
        out.rows
            .push(csv_row(p.run_id, p.seed, &p.config, &r.report));
        if trace {
            out.traces.push(r.trace);
        }
    }
    Ok(out)
}
