// SPDX-License-Identifier: Apache-2.0
//! Command-line front end.
//!
//! Exit codes: 0 ok, 2 non-convergence, 3 timing violation, 1 for bad input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mesosync::experiments::{false_lock_experiment, sweep};
use mesosync::metrics::Outcome;
use mesosync::{Scenario, SimTime};

#[derive(Parser)]
#[command(name = "mesosync", version, about = "Mesochronous clock synchronizer simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (`key = value` lines).
    scenario: PathBuf,
    /// Override a scenario key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated time in microseconds.
    #[arg(long, value_name = "US")]
    duration: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write its traces.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory for traces and metrics.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run one simulation per value of a single parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Scenario key to vary.
        #[arg(long)]
        param: String,
        /// Comma-separated values for the key.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<String>,
        /// Write each point's traces to DIR/<index>-<value>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wrong-edge lock study: hold, stochastic release, snapshot restarts.
    Falselock {
        #[command(flatten)]
        common: Common,
        /// Number of release seeds and snapshot restarts.
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        /// Hold phase length in microseconds.
        #[arg(long, default_value_t = 2.0)]
        hold: f64,
        /// Release phase length in microseconds.
        #[arg(long, default_value_t = 6.0)]
        release: f64,
    },
}

fn load(c: &Common) -> Result<Scenario, String> {
    let mut s = Scenario::load(&c.scenario).map_err(|e| format!("{}: {e}", c.scenario.display()))?;
    s = s.with_overrides(c.sets.iter().map(String::as_str)).map_err(|e| e.to_string())?;
    if let Some(seed) = c.seed {
        s.seed = seed;
    }
    if let Some(d) = c.duration {
        s.set("run.duration_us", &d.to_string()).map_err(|e| e.to_string())?;
    }
    s.validate().map_err(|e| e.to_string())?;
    Ok(s)
}

fn write(m: &mesosync::RunMetrics, dir: &Path) -> Result<(), String> {
    m.write_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))
}

fn us(x: f64) -> SimTime {
    SimTime::from_secs(x * 1e-6)
}

fn worst(a: Outcome, b: Outcome) -> Outcome {
    if b.exit_code() > a.exit_code() {
        b
    } else {
        a
    }
}

fn dispatch(cli: Cli) -> Result<u8, String> {
    match cli.cmd {
        Cmd::Run { common, out } => {
            let s = load(&common)?;
            let m = mesosync::run(&s).map_err(|e| e.to_string())?;
            write(&m, &out)?;
            print!("{}", m.metrics_txt());
            Ok(m.outcome().exit_code() as u8)
        }
        Cmd::Sweep { common, param, grid, out } => {
            let s = load(&common)?;
            let mut overall = Outcome::Ok;
            let mut failed = false;
            println!("{param},outcome,locked,lock_time_fs,phase_error_ui,bit_errors,bits_checked,latency_max_ui");
            for (i, p) in sweep(&s, &param, &grid).into_iter().enumerate() {
                match p.result {
                    Ok(m) => {
                        let o = m.outcome();
                        overall = worst(overall, o);
                        println!(
                            "{},{},{},{},{},{},{},{}",
                            p.value,
                            o.name(),
                            m.locked,
                            m.lock_time.map_or("none".into(), |t| t.ticks().to_string()),
                            m.phase_error_ui.map_or("none".into(), |e| format!("{e:.4}")),
                            m.bit_errors,
                            m.bits_checked,
                            m.latency_max_ui.map_or("none".into(), |l| format!("{l:.2}")),
                        );
                        if let Some(dir) = &out {
                            write(&m, &dir.join(format!("{i}-{}", p.value)))?;
                        }
                    }
                    Err(e) => {
                        failed = true;
                        eprintln!("{param}={}: {e}", p.value);
                    }
                }
            }
            Ok(if failed && overall == Outcome::Ok { 1 } else { overall.exit_code() as u8 })
        }
        Cmd::Falselock { common, seeds, hold, release } => {
            let s = load(&common)?;
            let r = false_lock_experiment(&s, us(hold), us(release), seeds).map_err(|e| e.to_string())?;
            print!("{}", r.to_text());
            Ok(if r.passed() { 0 } else { Outcome::NonConvergence.exit_code() as u8 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("mesosync: {msg}");
            ExitCode::from(1)
        }
    }
}
