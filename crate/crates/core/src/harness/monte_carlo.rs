//! Multi-run experiment execution and aggregate statistics.
//!
//! Runs are independent simulations seeded `base_seed + i`, executed in
//! parallel and collected in run order, so the report is identical however
//! many workers participate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mission::MissionResult;

use super::config::ExperimentConfig;
use super::runner::run_scenario;
use super::trace::RunRecord;
use super::HarnessError;

/// Aggregate statistics over a Monte Carlo batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McAggregate {
    pub n_runs: u32,
    pub landed: u32,
    pub missed_deck: u32,
    pub lost_target: u32,
    pub timed_out: u32,
    /// Fraction of runs that touched down on the deck with the magnets
    /// holding.
    pub landing_rate: f64,
    /// Fraction of runs that came within 1 m of the deck center.
    pub approach_rate: f64,
    pub detection_to_touchdown_mean: Option<f64>,
    pub detection_to_touchdown_min: Option<f64>,
    pub detection_to_touchdown_max: Option<f64>,
}

/// Full Monte Carlo result: per-run records plus the aggregate.
#[derive(Debug)]
pub struct McReport {
    pub records: Vec<RunRecord>,
    pub aggregate: McAggregate,
}

/// Runs `scenario.n_runs` independent scenarios with seeds
/// `scenario.seed + i`.
pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<McReport, HarnessError> {
    config.validate()?;
    let n = config.scenario.n_runs;
    let base = config.scenario.seed;
    let mut records: Vec<RunRecord> = (0..n)
        .into_par_iter()
        .map(|i| {
            run_scenario(config, base + i as u64).map(|mut r| {
                r.summary.run_index = i;
                r
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    records.sort_by_key(|r| r.summary.run_index);

    let aggregate = aggregate(&records);
    Ok(McReport { records, aggregate })
}

/// Computes the aggregate report from run records.
pub fn aggregate(records: &[RunRecord]) -> McAggregate {
    let n = records.len() as u32;
    let count = |result: MissionResult| -> u32 {
        records
            .iter()
            .filter(|r| r.summary.outcome.result == result)
            .count() as u32
    };
    let landed = count(MissionResult::Landed);
    let approached = records.iter().filter(|r| r.summary.approached_1m).count() as u32;
    let times: Vec<f64> = records
        .iter()
        .filter_map(|r| r.summary.outcome.detection_to_touchdown)
        .collect();
    let (mean, min, max) = if times.is_empty() {
        (None, None, None)
    } else {
        (
            Some(times.iter().sum::<f64>() / times.len() as f64),
            times.iter().cloned().reduce(f64::min),
            times.iter().cloned().reduce(f64::max),
        )
    };
    McAggregate {
        n_runs: n,
        landed,
        missed_deck: count(MissionResult::MissedDeck),
        lost_target: count(MissionResult::LostTarget),
        timed_out: count(MissionResult::TimedOut),
        landing_rate: if n > 0 { landed as f64 / n as f64 } else { 0.0 },
        approach_rate: if n > 0 {
            approached as f64 / n as f64
        } else {
            0.0
        },
        detection_to_touchdown_mean: mean,
        detection_to_touchdown_min: min,
        detection_to_touchdown_max: max,
    }
}
