//! Experiment harness: configuration, the deterministic run loop,
//! Monte Carlo batches, and file outputs (traces, summaries, plots).

pub mod config;
pub mod monte_carlo;
pub mod plot;
pub mod runner;
pub mod trace;

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{CameraConfig, ExperimentConfig, ScenarioConfig, ServoConfig};
pub use monte_carlo::{aggregate, run_monte_carlo, McAggregate, McReport};
pub use runner::run_scenario;
pub use trace::{
    parse_trace_csv, trace_csv_string, write_summary_csv, write_trace_csv, ParsedTrace, RunRecord,
    RunSummary, TraceRow, TRACE_VERSION_LINE,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    #[error("simulation invariant violated: {0}")]
    InvariantViolation(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("plot error on {path}: {message}")]
    Plot { path: String, message: String },
}

impl HarnessError {
    /// Process exit code for the CLI: 2 for config problems, 3 for
    /// simulation invariant violations, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::InvariantViolation(_) => 3,
            _ => 1,
        }
    }
}

fn io_ctx(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Files written by `emit_outputs`.
#[derive(Debug, Clone, Default)]
pub struct EmittedFiles {
    pub traces: Vec<PathBuf>,
    pub summary: PathBuf,
    pub aggregate: Option<PathBuf>,
    pub plots: Vec<PathBuf>,
}

/// Writes per-run trace CSVs, the summary CSV, the aggregate JSON (for
/// multi-run batches) and the plots for the first run into `out_dir`.
pub fn emit_outputs(records: &[RunRecord], out_dir: &Path) -> Result<EmittedFiles, HarnessError> {
    fs::create_dir_all(out_dir).map_err(io_ctx(out_dir))?;
    let mut emitted = EmittedFiles::default();

    for record in records {
        let path = out_dir.join(format!("trace_{:04}.csv", record.summary.run_index));
        let mut file = fs::File::create(&path).map_err(io_ctx(&path))?;
        write_trace_csv(record, &mut file).map_err(io_ctx(&path))?;
        emitted.traces.push(path);
    }

    let summary_path = out_dir.join("summary.csv");
    let summaries: Vec<RunSummary> = records.iter().map(|r| r.summary.clone()).collect();
    let mut file = fs::File::create(&summary_path).map_err(io_ctx(&summary_path))?;
    write_summary_csv(&summaries, &mut file).map_err(io_ctx(&summary_path))?;
    emitted.summary = summary_path;

    if records.len() > 1 {
        let agg_path = out_dir.join("aggregate.json");
        let agg = aggregate(records);
        let text = serde_json::to_string_pretty(&agg).expect("aggregate serializes");
        fs::write(&agg_path, text).map_err(io_ctx(&agg_path))?;
        emitted.aggregate = Some(agg_path);
    }

    if let Some(first) = emitted.traces.first() {
        emitted.plots = plot_trace_file(first, out_dir)?;
    }
    Ok(emitted)
}

/// Regenerates the three standard plots from a trace CSV file.
pub fn plot_trace_file(trace_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(out_dir).map_err(io_ctx(out_dir))?;
    let file = fs::File::open(trace_path).map_err(io_ctx(trace_path))?;
    let trace = parse_trace_csv(BufReader::new(file)).map_err(io_ctx(trace_path))?;
    let stem = trace_path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "trace".to_string());
    let laser = out_dir.join(format!("{stem}_lasers.svg"));
    let feature = out_dir.join(format!("{stem}_feature_error.svg"));
    let trajectory = out_dir.join(format!("{stem}_trajectory.svg"));
    plot::plot_laser_ranges(&trace, &laser)?;
    plot::plot_feature_error(&trace, &feature)?;
    plot::plot_trajectory(&trace, &trajectory)?;
    Ok(vec![laser, feature, trajectory])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_records_emit_header_only_summary() {
        let dir = tempfile::tempdir().unwrap();
        let emitted = emit_outputs(&[], dir.path()).unwrap();
        assert!(emitted.traces.is_empty());
        let text = fs::read_to_string(&emitted.summary).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(emitted.plots.is_empty());
    }

    #[test]
    fn nominal_run_emits_trace_and_plots() {
        let cfg = ExperimentConfig::default();
        let record = run_scenario(&cfg, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let emitted = emit_outputs(std::slice::from_ref(&record), dir.path()).unwrap();
        assert_eq!(emitted.traces.len(), 1);
        assert_eq!(emitted.plots.len(), 3);
        for p in &emitted.plots {
            let meta = fs::metadata(p).unwrap();
            assert!(meta.len() > 0, "{p:?} is empty");
        }
        // The laser trace of a nominal run contains the 4.0 -> 2.5 drop.
        let text = fs::read_to_string(&emitted.traces[0]).unwrap();
        let parsed = parse_trace_csv(BufReader::new(text.as_bytes())).unwrap();
        let laser0 = parsed.numeric_column("laser_0").unwrap();
        let triggered = parsed.numeric_column("triggered").unwrap();
        let trigger_idx = triggered.iter().position(|&v| v > 0.5).expect("triggers");
        assert!((laser0[trigger_idx - 1] - 4.0).abs() < 0.05);
        assert!((laser0[trigger_idx] - 2.5).abs() < 0.05);
    }
}
