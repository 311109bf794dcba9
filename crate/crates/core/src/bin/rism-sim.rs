use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use rism_sim::config::ScenarioConfig;
use rism_sim::metrics::write_csv;
use rism_sim::sweep::{expand, run_sweep, Axis};
use rism_sim::trace::write_trace;
use rism_sim::Scenario;

/// Run DSR / RISM simulations and write one CSV row per run.
#[derive(Debug, Parser)]
#[command(name = "rism-sim", version)]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Sweep a key over a list of values (repeatable).
    #[arg(long = "sweep", value_name = "KEY=V1,V2,...")]
    sweeps: Vec<String>,
    /// Runs per sweep point.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, value_name = "S")]
    master_seed: Option<u64>,
    /// CSV output path; stdout if omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write the event trace of every run here.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

fn load_config(cli: &Cli) -> Result<(ScenarioConfig, Vec<Axis>), String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ScenarioConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => ScenarioConfig::default(),
    };
    for s in &cli.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| format!("--set {s}: expected KEY=VALUE"))?;
        cfg.set(k.trim(), v.trim())
            .map_err(|e| format!("--set {s}: {e}"))?;
    }
    if let Some(n) = cli.seeds {
        cfg.seeds = n;
    }
    if let Some(s) = cli.master_seed {
        cfg.master_seed = s;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    let axes = cli
        .sweeps
        .iter()
        .map(|s| s.parse::<Axis>().map_err(|e| format!("--sweep {s}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((cfg, axes))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, axes) = match load_config(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };
    let points = match expand(&cfg, &axes) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };
    if !cli.quiet {
        eprintln!("running {} simulations", points.len());
    }
    let output = match run_sweep(&points, cli.trace.is_some()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };

    let written = match &cli.out {
        Some(path) => File::create(path)
            .map_err(|e| e.to_string())
            .and_then(|f| write_csv(&output.rows, BufWriter::new(f)).map_err(|e| e.to_string())),
        None => write_csv(&output.rows, io::stdout().lock()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("cannot write results: {e}");
        return ExitCode::from(2);
    }
    if let Some(path) = &cli.trace {
        let res = File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            for (p, tr) in points.iter().zip(&output.traces) {
                let bad = Scenario::generate(&p.config, p.seed).malicious_nodes();
                let bad: Vec<String> = bad.iter().map(|n| n.to_string()).collect();
                writeln!(
                    w,
                    "# run {} seed {} protocol {} malicious [{}]",
                    p.run_id,
                    p.seed,
                    p.config.protocol,
                    bad.join(" ")
                )?;
                write_trace(tr, &mut w)?;
            }
            w.flush()
        });
        if let Err(e) = res {
            eprintln!("cannot write trace: {e}");
            return ExitCode::from(2);
        }
    }
    if !cli.quiet {
        for r in &output.rows {
            eprintln!(
                "run {:>4} {:>4} malicious {:>5.1}% pause {:>5} pdr {:.3} overhead {:.3} warnings {}",
                r.run_id, r.protocol, r.malicious_pct, r.pause_time, r.pdr, r.overhead_ratio, r.warning_count
            );
        }
    }
    ExitCode::SUCCESS
}
