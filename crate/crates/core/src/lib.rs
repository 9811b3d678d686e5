//! Deterministic simulator and control stack for landing a quadrotor on a
//! moving ground vehicle with image-based visual servoing.
//!
//! The library is layered bottom-up:
//!
//! - [`se3`]: rigid-body transforms, twists and the 6x6 twist transport
//!   matrix, plus the frame conventions used everywhere else.
//! - [`camera`]: pinhole projection of the deck's circular pattern, direct
//!   least-squares ellipse fitting, the five-point feature vector and the
//!   stochastic detection-availability model.
//! - [`ibvs`]: the interaction matrix, pseudo-inverse control law with
//!   feed-forward, and the gimbal pitch law.
//! - [`sim`]: fixed-timestep kinematics of the quadrotor, gimbal and truck.
//! - [`sensors`]: the three-ray laser altimeter fan and the sudden-drop
//!   trigger.
//! - [`mission`]: the landing state machine from hover to motors-off.
//! - [`harness`]: configuration files, the run loop, Monte Carlo batches,
//!   CSV traces and plots.

pub mod camera;
pub mod harness;
pub mod ibvs;
pub mod mission;
pub mod se3;
pub mod sensors;
pub mod sim;

pub use camera::{
    extract_features, fit_ellipse, ideal_features, project_deck_circle, project_point,
    CameraError, CameraIntrinsics, DetectionModel, Detector, EllipseParams, FeatureVector,
    NormalizedPoint, PixelPoint,
};
pub use harness::{
    emit_outputs, run_monte_carlo, run_scenario, ExperimentConfig, HarnessError, McAggregate,
    RunRecord,
};
pub use ibvs::{
    build_goal_interaction, feed_forward, gimbal_command, interaction_block, pseudo_inverse,
    robot_jacobian, servo_command, CommandVelocity, IbvsError, InteractionMatrix, ServoGoal,
};
pub use mission::{
    path_track, touchdown_check, Contact, Mission, MissionCommand, MissionConfig, MissionError,
    MissionInputs, MissionOutcome, MissionPhase, MissionResult, SwitchCriterion,
};
pub use se3::{
    rotation_from_gimbal, skew, velocity_twist, RigidTransform, Twist, Vec3, VelocityTwistMatrix,
};
pub use sensors::{lateral_coverage, laser_measure, LaserConfig, LaserRay, TriggerConfig, TriggerDetector};
pub use sim::{
    camera_pose, saturate_command, step_gimbal, step_truck, step_uav, SimParams, TruckState,
    UAVState,
};
