//! Experiment configuration: one TOML file with one section per subsystem.
//! Unknown keys are rejected and every semantic invariant is checked with a
//! field path in the error.

use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, DetectionModel};
use crate::mission::MissionConfig;
use crate::se3::{RigidTransform, Vec3};
use crate::sensors::{LaserConfig, TriggerConfig};
use crate::sim::SimParams;

use super::HarnessError;

/// Camera intrinsics plus the gimbal mount offset in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraConfig {
    pub intrinsics: CameraIntrinsics,
    /// Gimbal position in the body frame (m): forward, right, down.
    pub mount_offset: Vec3,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics::default(),
            mount_offset: Vec3::new(0.1, 0.0, 0.05),
        }
    }
}

impl CameraConfig {
    pub fn mount(&self) -> RigidTransform {
        RigidTransform::from_translation(self.mount_offset)
    }
}

/// Servo gains and the goal depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServoConfig {
    /// Servo gain lambda (1/s).
    pub lambda: f64,
    /// Gimbal pitch gain (rad per unit vertical error).
    pub gimbal_gain: f64,
    /// Camera-deck distance at the goal (m).
    pub z_star: f64,
}

impl Default for ServoConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            gimbal_gain: 0.5,
            z_star: 0.5,
        }
    }
}

/// Scenario layout, run count and randomization ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_runs: u32,
    /// Wall-clock cap of one run (simulated seconds).
    pub max_duration: f64,
    /// Hover point on the track (m); the track passes through it.
    pub hover_x: f64,
    pub hover_y: f64,
    /// True vehicle speed (m/s).
    pub truck_speed: f64,
    /// Vehicle start position along the track relative to the hover point
    /// (m; negative = behind).
    pub truck_start_distance: f64,
    /// Deck surface height above the ground (m).
    pub deck_height: f64,
    /// Radius of the circular deck pattern (m).
    pub deck_radius: f64,
    /// Deterministic initial UAV offset along the track relative to the
    /// hover point (m; negative = behind).
    pub uav_start_along: f64,
    /// Uniform half-range of the random initial UAV horizontal offset (m).
    pub uav_offset_range: f64,
    /// Uniform half-range of the random vehicle start offset (m).
    pub truck_start_jitter: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_runs: 200,
            max_duration: 30.0,
            hover_x: 0.0,
            hover_y: 0.0,
            truck_speed: 4.17,
            truck_start_distance: -15.0,
            deck_height: 1.5,
            deck_radius: 0.75,
            uav_start_along: 0.0,
            uav_offset_range: 0.0,
            truck_start_jitter: 0.0,
        }
    }
}

/// Complete experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub sim: SimParams,
    pub camera: CameraConfig,
    pub detection: DetectionModel,
    pub lasers: LaserConfig,
    pub trigger: TriggerConfig,
    pub servo: ServoConfig,
    pub mission: MissionConfig,
    pub scenario: ScenarioConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config {
            path: "<toml>".to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let field = |path: &str, r: Result<(), String>| -> Result<(), HarnessError> {
            r.map_err(|message| HarnessError::Config {
                path: path.to_string(),
                message,
            })
        };
        field("sim", self.sim.validate())?;
        field("camera.intrinsics", self.camera.intrinsics.validate())?;
        field("detection", self.detection.validate())?;
        field("lasers", self.lasers.validate())?;
        field("trigger", self.trigger.validate())?;
        field(
            "mission",
            self.mission.validate(self.scenario.deck_height),
        )?;
        if !(self.servo.lambda > 0.0) {
            return Err(HarnessError::Config {
                path: "servo.lambda".to_string(),
                message: "must be positive".to_string(),
            });
        }
        if !(self.servo.gimbal_gain > 0.0) {
            return Err(HarnessError::Config {
                path: "servo.gimbal_gain".to_string(),
                message: "must be positive".to_string(),
            });
        }
        if !(self.servo.z_star > 0.0) {
            return Err(HarnessError::Config {
                path: "servo.z_star".to_string(),
                message: "must be positive".to_string(),
            });
        }
        if self.scenario.n_runs == 0 {
            return Err(HarnessError::Config {
                path: "scenario.n_runs".to_string(),
                message: "must be at least 1".to_string(),
            });
        }
        if !(self.scenario.max_duration > 0.0) {
            return Err(HarnessError::Config {
                path: "scenario.max_duration".to_string(),
                message: "must be positive".to_string(),
            });
        }
        if !(self.scenario.deck_radius > 0.0) {
            return Err(HarnessError::Config {
                path: "scenario.deck_radius".to_string(),
                message: "must be positive".to_string(),
            });
        }
        if !(self.scenario.deck_height > 0.0) {
            return Err(HarnessError::Config {
                path: "scenario.deck_height".to_string(),
                message: "must be positive".to_string(),
            });
        }
        if self.scenario.uav_offset_range < 0.0 || self.scenario.truck_start_jitter < 0.0 {
            return Err(HarnessError::Config {
                path: "scenario".to_string(),
                message: "randomization ranges must be non-negative".to_string(),
            });
        }
        self.sim
            .steps_per_controller_tick()
            .map_err(|message| HarnessError::Config {
                path: "sim.dt".to_string(),
                message,
            })?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn empty_toml_gives_defaults() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml_string();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml_str("[sim]\nnot_a_field = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("not_a_field"), "unhelpful error: {msg}");
    }

    #[test]
    fn invalid_values_name_the_field() {
        let err = ExperimentConfig::from_toml_str("[sim]\ndt = -0.01\n").unwrap_err();
        assert!(err.to_string().contains("sim"), "{err}");

        let err =
            ExperimentConfig::from_toml_str("[detection]\nmin_range = 9.0\nmax_range = 1.0\n")
                .unwrap_err();
        assert!(err.to_string().contains("detection"), "{err}");
    }

    #[test]
    fn partial_override_keeps_other_defaults() {
        let cfg = ExperimentConfig::from_toml_str("[servo]\nlambda = 1.2\n").unwrap();
        assert_eq!(cfg.servo.lambda, 1.2);
        assert_eq!(cfg.servo.z_star, 0.5);
        assert_eq!(cfg.sim.camera_rate, 30.0);
    }
}
