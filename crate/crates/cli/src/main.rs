//! Command-line harness: single runs, Monte Carlo batches and plot
//! regeneration.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on simulation
//! invariant violations, 1 on other failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use servoland::harness::{
    emit_outputs, plot_trace_file, run_monte_carlo, run_scenario, ExperimentConfig, HarnessError,
};

#[derive(Parser)]
#[command(name = "servoland", version, about = "IBVS landing-on-vehicle simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario and write its trace, summary and plots.
    Run {
        /// Experiment config (TOML); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a Monte Carlo batch and write traces, summaries and the
    /// aggregate report.
    Mc {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of runs override.
        #[arg(long)]
        runs: Option<u32>,
        /// Base seed override.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Regenerate the standard plots from an existing trace CSV.
    Plot {
        /// Trace file written by `run` or `mc`.
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig, HarnessError> {
    match path {
        Some(p) => ExperimentConfig::from_path(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let cfg = load_config(&config)?;
            let seed = seed.unwrap_or(cfg.scenario.seed);
            let record = run_scenario(&cfg, seed)?;
            let s = &record.summary;
            println!(
                "outcome: {} (seed {seed}, end t = {:.2} s)",
                s.outcome.result.name(),
                s.end_time
            );
            if let Some(dt) = s.outcome.detection_to_touchdown {
                println!("detection to touchdown: {dt:.2} s");
            }
            if let Some(off) = s.outcome.touchdown_offset {
                println!("touchdown offset: {off:.3} m");
            }
            let emitted = emit_outputs(std::slice::from_ref(&record), &out)?;
            println!(
                "wrote {} and {} plots to {}",
                emitted.summary.display(),
                emitted.plots.len(),
                out.display()
            );
            Ok(())
        }
        Command::Mc {
            config,
            runs,
            seed,
            out,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(n) = runs {
                cfg.scenario.n_runs = n;
            }
            if let Some(s) = seed {
                cfg.scenario.seed = s;
            }
            cfg.validate()?;
            let report = run_monte_carlo(&cfg)?;
            let a = &report.aggregate;
            println!(
                "{} runs: {} landed ({:.1}%), {} missed, {} lost, {} timed out",
                a.n_runs,
                a.landed,
                100.0 * a.landing_rate,
                a.missed_deck,
                a.lost_target,
                a.timed_out
            );
            println!("approach-within-1m rate: {:.1}%", 100.0 * a.approach_rate);
            if let (Some(mean), Some(min), Some(max)) = (
                a.detection_to_touchdown_mean,
                a.detection_to_touchdown_min,
                a.detection_to_touchdown_max,
            ) {
                println!("detection to touchdown: mean {mean:.2} s, min {min:.2} s, max {max:.2} s");
            }
            let emitted = emit_outputs(&report.records, &out)?;
            println!(
                "wrote {} traces and {} to {}",
                emitted.traces.len(),
                emitted.summary.display(),
                out.display()
            );
            Ok(())
        }
        Command::Plot { trace, out } => {
            let plots = plot_trace_file(&trace, &out)?;
            for p in &plots {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
