//! Per-run trace records and their CSV serialization.
//!
//! The trace format is versioned by a leading comment line
//! `# servoland-trace v1`, followed by a header row and one row per
//! controller tick. Floats are written with `{:.9}` so identical runs
//! produce byte-identical files.

use std::io::{self, BufRead, Write};

use crate::ibvs::CommandVelocity;
use crate::mission::{MissionOutcome, MissionPhase};

pub const TRACE_VERSION_LINE: &str = "# servoland-trace v1";

/// One controller-tick snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub phase: MissionPhase,
    /// Phase transition taken this tick, e.g. `hover->catch_up`.
    pub event: Option<String>,
    pub uav_x: f64,
    pub uav_y: f64,
    pub uav_z: f64,
    pub uav_yaw: f64,
    pub gimbal_pitch: f64,
    pub gimbal_yaw: f64,
    pub truck_x: f64,
    pub truck_y: f64,
    pub truck_z: f64,
    pub cmd: CommandVelocity,
    pub actual: CommandVelocity,
    /// Feature error norm; absent without a detection.
    pub feature_error: Option<f64>,
    pub detected: bool,
    pub lasers: Vec<f64>,
    pub triggered: bool,
}

/// Outcome plus derived metrics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run_index: u32,
    pub seed: u64,
    pub outcome: MissionOutcome,
    pub final_phase: MissionPhase,
    pub trigger_time: Option<f64>,
    pub first_detection_time: Option<f64>,
    pub end_time: f64,
    /// Minimum 3-D distance between the UAV and the deck center.
    pub min_deck_distance: f64,
    /// Came within 1 m of the deck center at any point.
    pub approached_1m: bool,
}

/// Full result of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<TraceRow>,
    pub summary: RunSummary,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.9}")).unwrap_or_default()
}

/// Writes one trace as CSV, including the version comment line.
pub fn write_trace_csv<W: Write>(record: &RunRecord, w: &mut W) -> io::Result<()> {
    writeln!(w, "{TRACE_VERSION_LINE}")?;
    let n_lasers = record.rows.first().map_or(0, |r| r.lasers.len());
    let laser_cols: Vec<String> = (0..n_lasers).map(|i| format!("laser_{i}")).collect();
    writeln!(
        w,
        "t,phase,event,uav_x,uav_y,uav_z,uav_yaw,gimbal_pitch,gimbal_yaw,\
         truck_x,truck_y,truck_z,cmd_vx,cmd_vy,cmd_vz,cmd_omega,\
         act_vx,act_vy,act_vz,act_omega,feature_error,detected,{},triggered",
        laser_cols.join(",")
    )?;
    for r in &record.rows {
        let lasers: Vec<String> = r.lasers.iter().map(|v| format!("{v:.9}")).collect();
        writeln!(
            w,
            "{:.9},{},{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},\
             {:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{},{},{},{}",
            r.t,
            r.phase.name(),
            r.event.as_deref().unwrap_or(""),
            r.uav_x,
            r.uav_y,
            r.uav_z,
            r.uav_yaw,
            r.gimbal_pitch,
            r.gimbal_yaw,
            r.truck_x,
            r.truck_y,
            r.truck_z,
            r.cmd.vx,
            r.cmd.vy,
            r.cmd.vz,
            r.cmd.omega,
            r.actual.vx,
            r.actual.vy,
            r.actual.vz,
            r.actual.omega,
            fmt_opt(r.feature_error),
            u8::from(r.detected),
            lasers.join(","),
            u8::from(r.triggered),
        )?;
    }
    Ok(())
}

pub fn trace_csv_string(record: &RunRecord) -> String {
    let mut buf = Vec::new();
    write_trace_csv(record, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub const SUMMARY_HEADER: &str = "run,seed,outcome,final_phase,detection_to_touchdown,\
     touchdown_offset,touchdown_rel_speed,trigger_time,first_detection_time,\
     end_time,min_deck_distance,approached_1m";

/// Writes the per-run summary CSV; an empty record list yields only the
/// header row.
pub fn write_summary_csv<W: Write>(summaries: &[RunSummary], w: &mut W) -> io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for s in summaries {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{:.9},{:.9},{}",
            s.run_index,
            s.seed,
            s.outcome.result.name(),
            s.final_phase.name(),
            fmt_opt(s.outcome.detection_to_touchdown),
            fmt_opt(s.outcome.touchdown_offset),
            fmt_opt(s.outcome.touchdown_rel_speed),
            fmt_opt(s.trigger_time),
            fmt_opt(s.first_detection_time),
            s.end_time,
            s.min_deck_distance,
            u8::from(s.approached_1m),
        )?;
    }
    Ok(())
}

/// A trace parsed back from CSV: column names plus rows of raw strings.
#[derive(Debug, Clone)]
pub struct ParsedTrace {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedTrace {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric column by name; empty cells become NaN.
    pub fn numeric_column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r[idx].parse::<f64>().unwrap_or(f64::NAN))
                .collect(),
        )
    }

    pub fn string_column(&self, name: &str) -> Option<Vec<String>> {
        let idx = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[idx].clone()).collect())
    }
}

/// Reads a trace CSV produced by `write_trace_csv`.
pub fn parse_trace_csv<R: BufRead>(reader: R) -> io::Result<ParsedTrace> {
    let mut lines = reader.lines();
    let version = lines
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "empty trace file"))??;
    if version.trim() != TRACE_VERSION_LINE {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unsupported trace version line: {version}"),
        ));
    }
    let header = lines
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "missing header row"))??;
    let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<String> = line.split(',').map(|s| s.to_string()).collect();
        if cells.len() != columns.len() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!(
                    "row has {} cells, header has {} columns",
                    cells.len(),
                    columns.len()
                ),
            ));
        }
        rows.push(cells);
    }
    Ok(ParsedTrace { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mission::MissionResult;
    use std::io::BufReader;

    fn sample_record() -> RunRecord {
        let row = |t: f64, phase: MissionPhase| TraceRow {
            t,
            phase,
            event: None,
            uav_x: 1.0,
            uav_y: 2.0,
            uav_z: -4.0,
            uav_yaw: 0.0,
            gimbal_pitch: -0.7,
            gimbal_yaw: 0.0,
            truck_x: -10.0,
            truck_y: 0.0,
            truck_z: -1.5,
            cmd: CommandVelocity::zero(),
            actual: CommandVelocity::zero(),
            feature_error: (t > 0.0).then_some(0.5),
            detected: t > 0.0,
            lasers: vec![4.0, 4.6, 4.6],
            triggered: false,
        };
        RunRecord {
            rows: vec![
                row(0.0, MissionPhase::Hover),
                row(1.0 / 30.0, MissionPhase::Hover),
            ],
            summary: RunSummary {
                run_index: 0,
                seed: 1,
                outcome: MissionOutcome {
                    result: MissionResult::Landed,
                    detection_to_touchdown: Some(6.0),
                    touchdown_offset: Some(0.2),
                    touchdown_rel_speed: Some(0.1),
                },
                final_phase: MissionPhase::MotorsOff,
                trigger_time: Some(3.0),
                first_detection_time: Some(3.4),
                end_time: 10.0,
                min_deck_distance: 0.2,
                approached_1m: true,
            },
        }
    }

    #[test]
    fn trace_roundtrips_through_csv() {
        let record = sample_record();
        let text = trace_csv_string(&record);
        assert!(text.starts_with(TRACE_VERSION_LINE));
        let parsed = parse_trace_csv(BufReader::new(text.as_bytes())).unwrap();
        assert_eq!(parsed.rows.len(), 2);
        let t = parsed.numeric_column("t").unwrap();
        assert_eq!(t[0], 0.0);
        let lasers = parsed.numeric_column("laser_0").unwrap();
        assert_eq!(lasers[0], 4.0);
        let phases = parsed.string_column("phase").unwrap();
        assert_eq!(phases[0], "hover");
        // Empty feature error cell parses as NaN.
        let fe = parsed.numeric_column("feature_error").unwrap();
        assert!(fe[0].is_nan());
        assert_eq!(fe[1], 0.5);
    }

    #[test]
    fn summary_of_no_runs_is_header_only() {
        let mut buf = Vec::new();
        write_summary_csv(&[], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("run,seed,outcome"));
    }

    #[test]
    fn identical_records_serialize_identically() {
        let a = trace_csv_string(&sample_record());
        let b = trace_csv_string(&sample_record());
        assert_eq!(a, b);
    }
}
