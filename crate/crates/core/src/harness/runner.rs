//! Single-scenario execution: the deterministic physics/controller loop.
//!
//! Physics steps at `sim.dt`; the camera, lasers and mission controller run
//! at `sim.camera_rate` (every N-th physics step). One `ChaCha8Rng` per
//! noise source, all derived from the run seed via distinct stream ids, so
//! toggling one noise source does not shift the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::camera::Detector;
use crate::ibvs::{build_goal_interaction, ServoGoal};
use crate::mission::{
    touchdown_check, Mission, MissionInputs, MissionOutcome, MissionPhase, MissionResult,
};
use crate::se3::Vec3;
use crate::sensors::{laser_measure, TriggerDetector};
use crate::sim::{camera_pose, step_gimbal, step_truck, step_uav, TruckState, UAVState};

use super::config::ExperimentConfig;
use super::trace::{RunRecord, RunSummary, TraceRow};
use super::HarnessError;

// Stream ids for the per-subsystem rngs.
const STREAM_INIT: u64 = 0;
const STREAM_TRUCK: u64 = 1;
const STREAM_LASER: u64 = 2;
const STREAM_DETECT: u64 = 3;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs one full scenario deterministically for the given seed.
pub fn run_scenario(config: &ExperimentConfig, seed: u64) -> Result<RunRecord, HarnessError> {
    config.validate()?;
    let params = &config.sim;
    let steps_per_tick = params
        .steps_per_controller_tick()
        .map_err(|message| HarnessError::Config {
            path: "sim.dt".to_string(),
            message,
        })?;

    let mount = config.camera.mount();
    let intr = config.camera.intrinsics;
    let goal = ServoGoal::from_geometry(
        config.scenario.deck_radius,
        config.servo.z_star,
        &mount,
        &intr,
        config.servo.lambda,
        config.servo.gimbal_gain,
    )
    .map_err(|e| HarnessError::Config {
        path: "servo".to_string(),
        message: e.to_string(),
    })?;
    let interaction =
        build_goal_interaction(&goal.s_star, goal.z_star).map_err(|e| HarnessError::Config {
            path: "servo.z_star".to_string(),
            message: e.to_string(),
        })?;

    let mut rng_init = stream_rng(seed, STREAM_INIT);
    let mut rng_truck = stream_rng(seed, STREAM_TRUCK);
    let mut rng_laser = stream_rng(seed, STREAM_LASER);
    let mut rng_detect = stream_rng(seed, STREAM_DETECT);

    let hover = (config.scenario.hover_x, config.scenario.hover_y);
    let offset = config.scenario.uav_offset_range;
    let (off_x, off_y) = if offset > 0.0 {
        (
            rng_init.random_range(-offset..offset),
            rng_init.random_range(-offset..offset),
        )
    } else {
        (0.0, 0.0)
    };
    let start_jitter = if config.scenario.truck_start_jitter > 0.0 {
        rng_init.random_range(-config.scenario.truck_start_jitter..config.scenario.truck_start_jitter)
    } else {
        0.0
    };

    let track_dir = config.mission.truck_direction_assumed;
    let track_yaw = track_dir.y.atan2(track_dir.x);
    let along = track_dir * config.scenario.uav_start_along;
    let mut uav = UAVState::at(
        Vec3::new(
            hover.0 + along.x + off_x,
            hover.1 + along.y + off_y,
            -config.mission.hover_height,
        ),
        track_yaw,
    );
    uav.gimbal_pitch = config.mission.search_gimbal_pitch;

    let mut truck = TruckState {
        path_origin: Vec3::new(hover.0, hover.1, 0.0),
        path_direction: track_dir,
        distance_along: config.scenario.truck_start_distance + start_jitter,
        speed: config.scenario.truck_speed,
        deck_height: config.scenario.deck_height,
    };

    let mut mission = Mission::new(
        config.mission.clone(),
        goal,
        interaction,
        mount,
        hover,
    );
    let mut detector = Detector::new(config.detection);
    let mut trigger = TriggerDetector::new(config.lasers.rays.len());

    let mut rows: Vec<TraceRow> = Vec::new();
    let mut min_deck_distance = f64::INFINITY;
    let mut ground_impact = false;

    let total_ticks = (config.scenario.max_duration * params.camera_rate).floor() as usize + 1;
    let mut end_time = 0.0;

    'ticks: for tick in 0..total_ticks {
        let t = tick as f64 / params.camera_rate;
        end_time = t;

        // Sensors.
        let ranges = laser_measure(&uav, &truck, &config.lasers, &mut rng_laser);
        let triggered = trigger.update(t, &ranges, &config.trigger);
        let cam_pose = camera_pose(&uav, &mount);
        let detection = detector.detect(
            t,
            &truck.deck_pose(),
            config.scenario.deck_radius,
            &cam_pose,
            &intr,
            &mut rng_detect,
        );
        let contact = touchdown_check(&uav, &truck, &config.mission);

        // Controller.
        let inputs = MissionInputs {
            uav: &uav,
            triggered,
            height_laser: ranges.first().copied().unwrap_or(config.lasers.max_range),
            detection: detection.as_ref(),
            contact,
        };
        let out = mission
            .step(t, &inputs, params)
            .map_err(|e| HarnessError::InvariantViolation(e.to_string()))?;
        let cmd = out.velocity;

        // Trace row.
        let deck = truck.deck_center();
        let dist = (uav.position - deck).norm();
        min_deck_distance = min_deck_distance.min(dist);
        rows.push(TraceRow {
            t,
            phase: mission.phase(),
            event: mission
                .last_event()
                .map(|(from, to)| format!("{}->{}", from.name(), to.name())),
            uav_x: uav.position.x,
            uav_y: uav.position.y,
            uav_z: uav.position.z,
            uav_yaw: uav.yaw,
            gimbal_pitch: uav.gimbal_pitch,
            gimbal_yaw: uav.gimbal_yaw,
            truck_x: deck.x,
            truck_y: deck.y,
            truck_z: deck.z,
            cmd,
            actual: uav.body_velocity,
            feature_error: detection.as_ref().map(|s| s.error_norm(&goal.s_star)),
            detected: detection.is_some(),
            lasers: ranges,
            triggered,
        });

        if !uav.is_finite() || !cmd.is_finite() {
            return Err(HarnessError::InvariantViolation(format!(
                "non-finite state at t = {t:.3}"
            )));
        }
        if mission.phase().is_terminal() {
            break 'ticks;
        }

        // Physics until the next controller tick.
        for _ in 0..steps_per_tick {
            uav = step_uav(&uav, &cmd, params);
            uav = step_gimbal(&uav, out.gimbal_pitch, out.gimbal_yaw, params);
            truck = step_truck(&truck, params, &mut rng_truck);

            // Collision handling: the deck surface stops the descent inside
            // the footprint; off the deck the ground does at z = 0.
            let deck = truck.deck_center();
            let rel = uav.position - deck;
            let in_footprint = rel.x.abs() <= config.mission.deck_half_width
                && rel.y.abs() <= config.mission.deck_half_width;
            if in_footprint && uav.position.z > deck.z {
                uav.position.z = deck.z;
            }
            if uav.position.z >= 0.0
                && matches!(
                    mission.phase(),
                    MissionPhase::BlindFinal | MissionPhase::Touchdown
                )
            {
                ground_impact = true;
                break 'ticks;
            }
        }
    }

    let outcome = classify_outcome(&mission, ground_impact, end_time, config);
    let summary = RunSummary {
        run_index: 0,
        seed,
        outcome,
        final_phase: mission.phase(),
        trigger_time: mission.trigger_time(),
        first_detection_time: mission.first_detection_time(),
        end_time,
        min_deck_distance,
        approached_1m: min_deck_distance < 1.0,
    };
    Ok(RunRecord { rows, summary })
}

fn classify_outcome(
    mission: &Mission,
    ground_impact: bool,
    _end_time: f64,
    _config: &ExperimentConfig,
) -> MissionOutcome {
    match mission.phase() {
        MissionPhase::MotorsOff => {
            let contact = mission.contact().expect("motors off implies contact");
            if contact.landed {
                MissionOutcome {
                    result: MissionResult::Landed,
                    detection_to_touchdown: match (
                        mission.first_detection_time(),
                        mission.touchdown_time(),
                    ) {
                        (Some(d), Some(td)) => Some(td - d),
                        _ => None,
                    },
                    touchdown_offset: Some(contact.offset),
                    touchdown_rel_speed: Some(contact.rel_speed),
                }
            } else {
                MissionOutcome {
                    result: MissionResult::MissedDeck,
                    detection_to_touchdown: None,
                    touchdown_offset: Some(contact.offset),
                    touchdown_rel_speed: Some(contact.rel_speed),
                }
            }
        }
        MissionPhase::Aborted => MissionOutcome {
            result: MissionResult::LostTarget,
            detection_to_touchdown: None,
            touchdown_offset: None,
            touchdown_rel_speed: None,
        },
        _ if ground_impact => MissionOutcome {
            result: MissionResult::MissedDeck,
            detection_to_touchdown: None,
            touchdown_offset: None,
            touchdown_rel_speed: None,
        },
        _ => MissionOutcome {
            result: MissionResult::TimedOut,
            detection_to_touchdown: None,
            touchdown_offset: None,
            touchdown_rel_speed: None,
        },
    }
}
