//! Mission state machine: hover above the road, sense the passing vehicle,
//! catch up, servo onto the deck, finish blind when the pattern is lost at
//! close range, and touch down.
//!
//! Phase flow:
//!
//! ```text
//! FlyToHover -> Hover -> CatchUp -> VisualServo -> BlindFinal -> Touchdown -> MotorsOff
//!                            \           |  \______________________/^
//!                             \          v
//!                              `----> Aborted  (detection lost too long)
//! ```
//!
//! Commands are velocity setpoints in the body frame; the gimbal pitch is
//! servoed separately to keep the deck centered.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::FeatureVector;
use crate::ibvs::{
    feed_forward, gimbal_command, servo_command, CommandVelocity, InteractionMatrix, ServoGoal,
};
use crate::se3::{velocity_twist, wrap_angle, RigidTransform, Vec3};
use crate::sim::{body_to_camera, SimParams, TruckState, UAVState};

#[derive(Debug, Error)]
pub enum MissionError {
    #[error("invalid mission transition {from:?} -> {to:?}")]
    InvalidTransition { from: MissionPhase, to: MissionPhase },
    #[error("mission step after terminal phase {0:?}")]
    SteppedTerminal(MissionPhase),
}

/// Mission phases, one per box of the landing strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MissionPhase {
    FlyToHover,
    Hover,
    CatchUp,
    VisualServo,
    BlindFinal,
    Touchdown,
    MotorsOff,
    Aborted,
}

impl MissionPhase {
    /// Legal FSM edges; everything else is an integrity error.
    pub fn can_transition(self, to: MissionPhase) -> bool {
        use MissionPhase::*;
        matches!(
            (self, to),
            (FlyToHover, Hover)
                | (Hover, CatchUp)
                | (CatchUp, VisualServo)
                | (CatchUp, Aborted)
                | (VisualServo, BlindFinal)
                | (VisualServo, Touchdown)
                | (VisualServo, Aborted)
                | (BlindFinal, Touchdown)
                | (BlindFinal, Aborted)
                | (Touchdown, MotorsOff)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, MissionPhase::MotorsOff | MissionPhase::Aborted)
    }

    pub fn name(self) -> &'static str {
        match self {
            MissionPhase::FlyToHover => "fly_to_hover",
            MissionPhase::Hover => "hover",
            MissionPhase::CatchUp => "catch_up",
            MissionPhase::VisualServo => "visual_servo",
            MissionPhase::BlindFinal => "blind_final",
            MissionPhase::Touchdown => "touchdown",
            MissionPhase::MotorsOff => "motors_off",
            MissionPhase::Aborted => "aborted",
        }
    }
}

/// Criterion for switching from the catch-up acceleration to servoing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchCriterion {
    /// Switch on the first deck detection after the trigger.
    VisionBased,
    /// Switch after the fixed catch-up time `t_a`.
    TimingBased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionConfig {
    /// Hover altitude above the ground (m).
    pub hover_height: f64,
    /// Speed margin over the vehicle during catch-up (m/s).
    pub catch_up_delta: f64,
    pub switch_criterion: SwitchCriterion,
    /// Fixed catch-up time for the timing-based switch (s); when absent it
    /// is derived from the lag model, see `catch_up_time`.
    pub t_a: Option<f64>,
    /// Number of controller samples to continue blind at the vehicle speed.
    pub blind_final_periods: u32,
    /// Height-laser reading that allows the final touchdown descent (m
    /// above the deck).
    pub blind_final_height: f64,
    /// Height-laser reading below which losing detection is expected and
    /// the blind continuation engages (m).
    pub blind_range: f64,
    /// Detection loss above blind range that aborts the approach (s).
    pub abort_timeout: f64,
    /// Known vehicle speed used for feed-forward and blind phases (m/s).
    pub truck_speed_assumed: f64,
    /// Known direction of vehicle travel (unit, horizontal).
    pub truck_direction_assumed: Vec3,
    /// Gimbal pitch while waiting for and chasing the vehicle (rad).
    pub search_gimbal_pitch: f64,
    /// Descent rate during the blind continuation (m/s, down-positive).
    pub blind_descent_speed: f64,
    /// Increased descent rate for the touchdown phase (m/s).
    pub touchdown_descent_speed: f64,
    /// Relative height that counts as deck contact (m).
    pub contact_height: f64,
    /// Half-width of the square deck footprint (m).
    pub deck_half_width: f64,
    /// Maximum horizontal relative speed the magnets can hold (m/s).
    pub magnet_speed_tolerance: f64,
    /// Proportional gain of the hover path tracker (1/s).
    pub path_gain: f64,
    /// Yaw gain of the path tracker (1/s).
    pub path_yaw_gain: f64,
    /// Position tolerance for reaching the hover point (m).
    pub hover_tolerance: f64,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            hover_height: 4.0,
            catch_up_delta: 1.39,
            switch_criterion: SwitchCriterion::VisionBased,
            t_a: None,
            blind_final_periods: 15,
            blind_final_height: 0.3,
            blind_range: 1.0,
            abort_timeout: 2.0,
            truck_speed_assumed: 4.17,
            truck_direction_assumed: Vec3::new(1.0, 0.0, 0.0),
            search_gimbal_pitch: -std::f64::consts::FRAC_PI_4,
            blind_descent_speed: 4.0,
            touchdown_descent_speed: 2.0,
            contact_height: 0.05,
            deck_half_width: 0.75,
            magnet_speed_tolerance: 1.0,
            path_gain: 1.0,
            path_yaw_gain: 1.0,
            hover_tolerance: 0.3,
        }
    }
}

impl MissionConfig {
    pub fn validate(&self, deck_height: f64) -> Result<(), String> {
        if !(self.hover_height > deck_height) {
            return Err("hover_height must exceed the deck height".to_string());
        }
        if !(self.catch_up_delta > 0.0) {
            return Err("catch_up_delta must be positive".to_string());
        }
        let dir_norm = self.truck_direction_assumed.norm();
        if !((dir_norm - 1.0).abs() < 1e-6) || self.truck_direction_assumed.z.abs() > 1e-9 {
            return Err("truck_direction_assumed must be a horizontal unit vector".to_string());
        }
        if self.blind_final_periods == 0 {
            return Err("blind_final_periods must be at least 1".to_string());
        }
        if !(self.blind_final_height > 0.0 && self.blind_range > self.blind_final_height) {
            return Err("require 0 < blind_final_height < blind_range".to_string());
        }
        if !(self.abort_timeout > 0.0) {
            return Err("abort_timeout must be positive".to_string());
        }
        Ok(())
    }

    /// Effective catch-up time: configured, or the lag-model closed form
    /// `tau * ln((v + delta) / delta)` — the time for the lagged velocity to
    /// reach the vehicle speed, at which point the gap has peaked and the
    /// deck is back in the camera's forward view.
    pub fn catch_up_time(&self, params: &SimParams) -> f64 {
        self.t_a.unwrap_or_else(|| {
            let v_c = self.truck_speed_assumed + self.catch_up_delta;
            params.uav_lag_tau * (v_c / self.catch_up_delta).ln()
        })
    }

    pub fn assumed_truck_velocity(&self) -> Vec3 {
        self.truck_direction_assumed * self.truck_speed_assumed
    }
}

/// Deck contact measurement from the touchdown check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    /// Within the deck footprint with a relative speed the magnets hold.
    pub landed: bool,
    /// Horizontal distance from the deck center at contact (m).
    pub offset: f64,
    /// Horizontal speed relative to the vehicle at contact (m/s).
    pub rel_speed: f64,
}

/// Checks for deck-level contact: `Some` once the relative height is within
/// the contact band, landed only inside the footprint at a relative speed
/// the magnets tolerate.
pub fn touchdown_check(uav: &UAVState, truck: &TruckState, cfg: &MissionConfig) -> Option<Contact> {
    let deck = truck.deck_center();
    let height_above = deck.z - uav.position.z;
    if height_above > cfg.contact_height {
        return None;
    }
    // Horizontal offset in track coordinates; the footprint is square.
    let rel = uav.position - deck;
    let yaw = truck.path_direction.y.atan2(truck.path_direction.x);
    let (sin_y, cos_y) = yaw.sin_cos();
    let along = cos_y * rel.x + sin_y * rel.y;
    let across = -sin_y * rel.x + cos_y * rel.y;
    let in_footprint = along.abs() <= cfg.deck_half_width && across.abs() <= cfg.deck_half_width;

    let v_rel = uav.world_velocity() - truck.velocity_world();
    let rel_speed = (v_rel.x * v_rel.x + v_rel.y * v_rel.y).sqrt();

    Some(Contact {
        landed: in_footprint && rel_speed <= cfg.magnet_speed_tolerance,
        offset: (rel.x * rel.x + rel.y * rel.y).sqrt(),
        rel_speed,
    })
}

/// Saturated proportional tracker used to reach and hold the hover point.
pub fn path_track(
    uav: &UAVState,
    goal_point: &Vec3,
    goal_yaw: f64,
    gain: f64,
    yaw_gain: f64,
    params: &SimParams,
) -> CommandVelocity {
    let err = goal_point - uav.position;
    let mut v = err * gain;
    let horiz = (v.x * v.x + v.y * v.y).sqrt();
    if horiz > params.max_horiz_speed {
        let s = params.max_horiz_speed / horiz;
        v.x *= s;
        v.y *= s;
    }
    v.z = v.z.clamp(-params.max_vert_speed, params.max_vert_speed);
    // Rotate the world-frame correction into the body frame.
    let (sin_y, cos_y) = uav.yaw.sin_cos();
    CommandVelocity::new(
        cos_y * v.x + sin_y * v.y,
        -sin_y * v.x + cos_y * v.y,
        v.z,
        yaw_gain * wrap_angle(goal_yaw - uav.yaw),
    )
}

/// Sensor and world snapshot consumed by one mission step.
#[derive(Debug, Clone, Copy)]
pub struct MissionInputs<'a> {
    pub uav: &'a UAVState,
    /// Passing-vehicle trigger (instantaneous, from the laser fan).
    pub triggered: bool,
    /// Center (downward) laser reading (m).
    pub height_laser: f64,
    pub detection: Option<&'a FeatureVector>,
    pub contact: Option<Contact>,
}

/// Commands produced by one mission step.
#[derive(Debug, Clone, Copy)]
pub struct MissionCommand {
    pub velocity: CommandVelocity,
    pub gimbal_pitch: f64,
    pub gimbal_yaw: f64,
    /// Rank warning from the servo law, for the trace.
    pub rank_deficient: bool,
}

/// The mission controller: owns the phase, the servo goal, and the timers.
#[derive(Debug, Clone)]
pub struct Mission {
    config: MissionConfig,
    goal: ServoGoal,
    interaction: InteractionMatrix,
    mount: RigidTransform,
    hover_point: Vec3,
    track_yaw: f64,
    phase: MissionPhase,
    trigger_time: Option<f64>,
    trigger_latched: bool,
    catch_up_start: Option<f64>,
    servo_entry: Option<f64>,
    first_detection: Option<f64>,
    last_detection: Option<f64>,
    blind_samples: u32,
    touchdown_time: Option<f64>,
    contact: Option<Contact>,
    last_event: Option<(MissionPhase, MissionPhase)>,
}

impl Mission {
    pub fn new(
        config: MissionConfig,
        goal: ServoGoal,
        interaction: InteractionMatrix,
        mount: RigidTransform,
        hover_point_xy: (f64, f64),
    ) -> Self {
        let hover_point = Vec3::new(hover_point_xy.0, hover_point_xy.1, -config.hover_height);
        let track_yaw = config
            .truck_direction_assumed
            .y
            .atan2(config.truck_direction_assumed.x);
        Self {
            config,
            goal,
            interaction,
            mount,
            hover_point,
            track_yaw,
            phase: MissionPhase::FlyToHover,
            trigger_time: None,
            trigger_latched: false,
            catch_up_start: None,
            servo_entry: None,
            first_detection: None,
            last_detection: None,
            blind_samples: 0,
            touchdown_time: None,
            contact: None,
            last_event: None,
        }
    }

    pub fn phase(&self) -> MissionPhase {
        self.phase
    }

    pub fn config(&self) -> &MissionConfig {
        &self.config
    }

    pub fn goal(&self) -> &ServoGoal {
        &self.goal
    }

    pub fn trigger_time(&self) -> Option<f64> {
        self.trigger_time
    }

    pub fn first_detection_time(&self) -> Option<f64> {
        self.first_detection
    }

    pub fn touchdown_time(&self) -> Option<f64> {
        self.touchdown_time
    }

    pub fn contact(&self) -> Option<Contact> {
        self.contact
    }

    /// The transition taken by the last step, if any.
    pub fn last_event(&self) -> Option<(MissionPhase, MissionPhase)> {
        self.last_event
    }

    fn transition(&mut self, to: MissionPhase) -> Result<(), MissionError> {
        if !self.phase.can_transition(to) {
            return Err(MissionError::InvalidTransition {
                from: self.phase,
                to,
            });
        }
        self.last_event = Some((self.phase, to));
        self.phase = to;
        Ok(())
    }

    /// Forces a phase change through the same edge validation that the
    /// stepper uses.
    pub fn force_phase(&mut self, to: MissionPhase) -> Result<(), MissionError> {
        self.transition(to)
    }

    /// Runs one controller tick. Terminal phases keep returning zero
    /// commands without stepping further.
    pub fn step(
        &mut self,
        t: f64,
        inputs: &MissionInputs,
        params: &SimParams,
    ) -> Result<MissionCommand, MissionError> {
        self.last_event = None;
        if inputs.detection.is_some() {
            if self.first_detection.is_none() {
                self.first_detection = Some(t);
            }
            self.last_detection = Some(t);
        }
        // The passing-vehicle event latches: once sensed (possibly already
        // while flying to the hover point), it stays sensed.
        if inputs.triggered && !self.trigger_latched {
            self.trigger_latched = true;
            self.trigger_time = Some(t);
        }

        let hold = MissionCommand {
            velocity: CommandVelocity::zero(),
            gimbal_pitch: inputs.uav.gimbal_pitch,
            gimbal_yaw: inputs.uav.gimbal_yaw,
            rank_deficient: false,
        };

        match self.phase {
            MissionPhase::FlyToHover => {
                let cmd = path_track(
                    inputs.uav,
                    &self.hover_point,
                    self.track_yaw,
                    self.config.path_gain,
                    self.config.path_yaw_gain,
                    params,
                );
                if (inputs.uav.position - self.hover_point).norm() < self.config.hover_tolerance {
                    self.transition(MissionPhase::Hover)?;
                }
                Ok(MissionCommand {
                    velocity: cmd,
                    gimbal_pitch: self.config.search_gimbal_pitch,
                    gimbal_yaw: 0.0,
                    rank_deficient: false,
                })
            }

            MissionPhase::Hover => {
                if self.trigger_latched {
                    self.catch_up_start = Some(t);
                    self.transition(MissionPhase::CatchUp)?;
                    return self.catch_up_command(t, inputs, params);
                }
                let cmd = path_track(
                    inputs.uav,
                    &self.hover_point,
                    self.track_yaw,
                    self.config.path_gain,
                    self.config.path_yaw_gain,
                    params,
                );
                Ok(MissionCommand {
                    velocity: cmd,
                    gimbal_pitch: self.config.search_gimbal_pitch,
                    gimbal_yaw: 0.0,
                    rank_deficient: false,
                })
            }

            MissionPhase::CatchUp => {
                let start = self.catch_up_start.unwrap_or(t);
                let switch = match self.config.switch_criterion {
                    SwitchCriterion::VisionBased => inputs.detection.is_some(),
                    SwitchCriterion::TimingBased => t - start >= self.config.catch_up_time(params),
                };
                if switch {
                    self.servo_entry = Some(t);
                    self.transition(MissionPhase::VisualServo)?;
                    return self.servo_command_step(t, inputs, params);
                }
                // Vision-based runs that never see the deck give up after
                // the catch-up window plus the abort timeout.
                if t - start > self.config.catch_up_time(params) + self.config.abort_timeout {
                    self.transition(MissionPhase::Aborted)?;
                    return Ok(hold);
                }
                self.catch_up_command(t, inputs, params)
            }

            MissionPhase::VisualServo => self.servo_command_step(t, inputs, params),

            MissionPhase::BlindFinal => {
                if let Some(c) = inputs.contact {
                    // Early contact during the blind continuation.
                    self.contact = Some(c);
                    self.touchdown_time = Some(t);
                    self.transition(MissionPhase::Touchdown)?;
                    return Ok(self.blind_command(inputs));
                }
                self.blind_samples += 1;
                if self.blind_samples >= self.config.blind_final_periods {
                    if inputs.height_laser <= self.config.blind_final_height {
                        self.transition(MissionPhase::Touchdown)?;
                    } else {
                        self.transition(MissionPhase::Aborted)?;
                        return Ok(hold);
                    }
                }
                Ok(self.blind_command(inputs))
            }

            MissionPhase::Touchdown => {
                if let Some(c) = inputs.contact {
                    self.contact = Some(c);
                    self.touchdown_time = Some(t);
                    self.transition(MissionPhase::MotorsOff)?;
                    return Ok(hold);
                }
                let ff = feed_forward(&self.config.assumed_truck_velocity(), inputs.uav.yaw);
                Ok(MissionCommand {
                    velocity: CommandVelocity::new(
                        ff.vx,
                        ff.vy,
                        self.config.touchdown_descent_speed,
                        0.0,
                    ),
                    gimbal_pitch: inputs.uav.gimbal_pitch,
                    gimbal_yaw: inputs.uav.gimbal_yaw,
                    rank_deficient: false,
                })
            }

            MissionPhase::MotorsOff | MissionPhase::Aborted => Ok(hold),
        }
    }

    fn catch_up_command(
        &self,
        _t: f64,
        inputs: &MissionInputs,
        _params: &SimParams,
    ) -> Result<MissionCommand, MissionError> {
        // Open-loop dash along the known direction, faster than the vehicle
        // by the configured margin; vertical and yaw channels stay quiet so
        // the command magnitude is exactly speed + delta.
        let speed = self.config.truck_speed_assumed + self.config.catch_up_delta;
        let v = feed_forward(
            &(self.config.truck_direction_assumed * speed),
            inputs.uav.yaw,
        );
        Ok(MissionCommand {
            velocity: v,
            gimbal_pitch: self.config.search_gimbal_pitch,
            gimbal_yaw: 0.0,
            rank_deficient: false,
        })
    }

    fn servo_command_step(
        &mut self,
        t: f64,
        inputs: &MissionInputs,
        _params: &SimParams,
    ) -> Result<MissionCommand, MissionError> {
        // Direct touchdown handoff once the height laser reads low enough.
        if inputs.height_laser <= self.config.blind_final_height {
            self.transition(MissionPhase::Touchdown)?;
            let ff = feed_forward(&self.config.assumed_truck_velocity(), inputs.uav.yaw);
            return Ok(MissionCommand {
                velocity: CommandVelocity::new(
                    ff.vx,
                    ff.vy,
                    self.config.touchdown_descent_speed,
                    0.0,
                ),
                gimbal_pitch: inputs.uav.gimbal_pitch,
                gimbal_yaw: inputs.uav.gimbal_yaw,
                rank_deficient: false,
            });
        }

        if let Some(s) = inputs.detection {
            let ff = feed_forward(&self.config.assumed_truck_velocity(), inputs.uav.yaw);
            let cvb = velocity_twist(&body_to_camera(inputs.uav, &self.mount));
            let out = servo_command(s, &self.goal, &self.interaction, &cvb, &ff);
            let pitch = inputs.uav.gimbal_pitch + gimbal_command(s.center(), &self.goal);
            Ok(MissionCommand {
                velocity: out.command,
                gimbal_pitch: pitch,
                gimbal_yaw: inputs.uav.gimbal_yaw,
                rank_deficient: out.rank_deficient,
            })
        } else {
            // Pattern lost: coast at the known vehicle velocity. Close to
            // the deck this is the expected blind continuation; higher up
            // it aborts after the timeout.
            if inputs.height_laser < self.config.blind_range {
                self.blind_samples = 0;
                self.transition(MissionPhase::BlindFinal)?;
                return Ok(self.blind_command(inputs));
            }
            let lost_since = self.last_detection.or(self.servo_entry).unwrap_or(t);
            if t - lost_since > self.config.abort_timeout {
                self.transition(MissionPhase::Aborted)?;
                return Ok(MissionCommand {
                    velocity: CommandVelocity::zero(),
                    gimbal_pitch: inputs.uav.gimbal_pitch,
                    gimbal_yaw: inputs.uav.gimbal_yaw,
                    rank_deficient: false,
                });
            }
            let ff = feed_forward(&self.config.assumed_truck_velocity(), inputs.uav.yaw);
            Ok(MissionCommand {
                velocity: ff,
                gimbal_pitch: inputs.uav.gimbal_pitch,
                gimbal_yaw: inputs.uav.gimbal_yaw,
                rank_deficient: false,
            })
        }
    }

    fn blind_command(&self, inputs: &MissionInputs) -> MissionCommand {
        let ff = feed_forward(&self.config.assumed_truck_velocity(), inputs.uav.yaw);
        MissionCommand {
            velocity: CommandVelocity::new(ff.vx, ff.vy, self.config.blind_descent_speed, 0.0),
            gimbal_pitch: inputs.uav.gimbal_pitch,
            gimbal_yaw: inputs.uav.gimbal_yaw,
            rank_deficient: false,
        }
    }
}

/// Final classification of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionResult {
    Landed,
    LostTarget,
    TimedOut,
    MissedDeck,
}

impl MissionResult {
    pub fn name(self) -> &'static str {
        match self {
            MissionResult::Landed => "landed",
            MissionResult::LostTarget => "lost_target",
            MissionResult::TimedOut => "timed_out",
            MissionResult::MissedDeck => "missed_deck",
        }
    }
}

/// Outcome summary of a mission run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionOutcome {
    pub result: MissionResult,
    /// Time from the first deck detection to touchdown; present iff landed.
    pub detection_to_touchdown: Option<f64>,
    pub touchdown_offset: Option<f64>,
    pub touchdown_rel_speed: Option<f64>,
}
