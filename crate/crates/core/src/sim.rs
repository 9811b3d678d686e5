//! Deterministic fixed-timestep kinematics of the quadrotor, its gimbal and
//! the ground vehicle.
//!
//! The platform accepts velocity commands, so the quadrotor is modeled
//! kinematically: the actual body velocity relaxes toward the saturated
//! command with a first-order lag, standing in for the controller and
//! attitude dynamics of the real vehicle. Physics runs at `dt` while the
//! camera and controller run at `camera_rate`.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ibvs::CommandVelocity;
use crate::se3::{rotation_from_gimbal, RigidTransform, Vec3};

/// Simulated quadrotor state. Positions are world frame (z down, ground at
/// z = 0); the velocity is the actual body-frame velocity after lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UAVState {
    pub position: Vec3,
    pub yaw: f64,
    pub body_velocity: CommandVelocity,
    pub gimbal_pitch: f64,
    pub gimbal_yaw: f64,
}

impl UAVState {
    pub fn at(position: Vec3, yaw: f64) -> Self {
        Self {
            position,
            yaw,
            body_velocity: CommandVelocity::zero(),
            gimbal_pitch: 0.0,
            gimbal_yaw: 0.0,
        }
    }

    pub fn altitude(&self) -> f64 {
        -self.position.z
    }

    /// Actual velocity expressed in the world frame.
    pub fn world_velocity(&self) -> Vec3 {
        let (sin_y, cos_y) = self.yaw.sin_cos();
        Vec3::new(
            cos_y * self.body_velocity.vx - sin_y * self.body_velocity.vy,
            sin_y * self.body_velocity.vx + cos_y * self.body_velocity.vy,
            self.body_velocity.vz,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.yaw.is_finite()
            && self.body_velocity.is_finite()
            && self.gimbal_pitch.is_finite()
            && self.gimbal_yaw.is_finite()
    }
}

/// Ground-vehicle state: straight-line track plus the deck geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruckState {
    pub path_origin: Vec3,
    /// Unit horizontal direction of travel.
    pub path_direction: Vec3,
    pub distance_along: f64,
    pub speed: f64,
    /// Height of the deck surface above the ground (m).
    pub deck_height: f64,
}

impl TruckState {
    /// Ground-level position of the vehicle center.
    pub fn ground_position(&self) -> Vec3 {
        self.path_origin + self.path_direction * self.distance_along
    }

    /// World position of the deck-pattern center (deck surface).
    pub fn deck_center(&self) -> Vec3 {
        let mut p = self.ground_position();
        p.z -= self.deck_height;
        p
    }

    /// Pose of the deck frame: x along the track, origin at the pattern
    /// center on the deck surface.
    pub fn deck_pose(&self) -> RigidTransform {
        let yaw = self.path_direction.y.atan2(self.path_direction.x);
        let (sin_y, cos_y) = yaw.sin_cos();
        let rot = nalgebra::Matrix3::new(cos_y, -sin_y, 0.0, sin_y, cos_y, 0.0, 0.0, 0.0, 1.0);
        RigidTransform::new(rot, self.deck_center())
    }

    pub fn velocity_world(&self) -> Vec3 {
        self.path_direction * self.speed
    }
}

/// Fixed simulation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    /// Physics timestep (s).
    pub dt: f64,
    /// First-order lag of the velocity response (s); 0 means instantaneous.
    pub uav_lag_tau: f64,
    /// Horizontal speed limit (m/s).
    pub max_horiz_speed: f64,
    /// Vertical speed limit (m/s).
    pub max_vert_speed: f64,
    /// Gimbal slew rate limit (rad/s).
    pub gimbal_rate_limit: f64,
    /// Standard deviation of the driver's speed jitter (m/s).
    pub truck_speed_noise_sigma: f64,
    /// Camera and controller rate (Hz).
    pub camera_rate: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 1.0 / 150.0,
            uav_lag_tau: 0.5,
            max_horiz_speed: 8.33,
            max_vert_speed: 4.0,
            gimbal_rate_limit: 2.0,
            truck_speed_noise_sigma: 0.0,
            camera_rate: 30.0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0) {
            return Err("dt must be positive".to_string());
        }
        if self.uav_lag_tau < 0.0 {
            return Err("uav_lag_tau must be non-negative".to_string());
        }
        if !(self.max_horiz_speed > 0.0 && self.max_vert_speed > 0.0) {
            return Err("speed limits must be positive".to_string());
        }
        if !(self.gimbal_rate_limit > 0.0) {
            return Err("gimbal_rate_limit must be positive".to_string());
        }
        if self.truck_speed_noise_sigma < 0.0 {
            return Err("truck_speed_noise_sigma must be non-negative".to_string());
        }
        if !(self.camera_rate > 0.0) {
            return Err("camera_rate must be positive".to_string());
        }
        Ok(())
    }

    /// Physics steps per controller tick; errors when the rates do not
    /// divide evenly.
    pub fn steps_per_controller_tick(&self) -> Result<usize, String> {
        let exact = 1.0 / (self.dt * self.camera_rate);
        let n = exact.round();
        if (exact - n).abs() > 1e-9 || n < 1.0 {
            return Err(format!(
                "camera_rate {} Hz does not divide the physics rate {} Hz",
                self.camera_rate,
                1.0 / self.dt
            ));
        }
        Ok(n as usize)
    }
}

/// Clamps a command to the configured speed limits: the horizontal velocity
/// vector by norm, the vertical component by magnitude.
pub fn saturate_command(cmd: &CommandVelocity, params: &SimParams) -> CommandVelocity {
    let horiz = (cmd.vx * cmd.vx + cmd.vy * cmd.vy).sqrt();
    let scale = if horiz > params.max_horiz_speed {
        params.max_horiz_speed / horiz
    } else {
        1.0
    };
    CommandVelocity::new(
        cmd.vx * scale,
        cmd.vy * scale,
        cmd.vz.clamp(-params.max_vert_speed, params.max_vert_speed),
        cmd.omega,
    )
}

/// One physics step of the quadrotor: the actual velocity relaxes toward the
/// saturated command, position integrates the yaw-rotated velocity, yaw
/// integrates the yaw rate. Altitude never goes below the ground plane.
pub fn step_uav(state: &UAVState, cmd: &CommandVelocity, params: &SimParams) -> UAVState {
    let target = saturate_command(cmd, params);
    let alpha = if params.uav_lag_tau <= 0.0 {
        1.0
    } else {
        (params.dt / params.uav_lag_tau).min(1.0)
    };
    let v = CommandVelocity::new(
        state.body_velocity.vx + alpha * (target.vx - state.body_velocity.vx),
        state.body_velocity.vy + alpha * (target.vy - state.body_velocity.vy),
        state.body_velocity.vz + alpha * (target.vz - state.body_velocity.vz),
        state.body_velocity.omega + alpha * (target.omega - state.body_velocity.omega),
    );
    let mut next = *state;
    next.body_velocity = v;
    let world_v = next.world_velocity();
    next.position += world_v * params.dt;
    next.position.z = next.position.z.min(0.0);
    next.yaw += v.omega * params.dt;
    next
}

/// One physics step of the ground vehicle with optional speed jitter.
pub fn step_truck(state: &TruckState, params: &SimParams, rng: &mut ChaCha8Rng) -> TruckState {
    let noise = if params.truck_speed_noise_sigma > 0.0 {
        Normal::new(0.0, params.truck_speed_noise_sigma)
            .expect("valid sigma")
            .sample(rng)
    } else {
        0.0
    };
    let mut next = *state;
    next.distance_along += (state.speed + noise) * params.dt;
    next
}

/// One physics step of the gimbal: both angles slew toward their commands at
/// the rate limit.
pub fn step_gimbal(
    state: &UAVState,
    pitch_cmd: f64,
    yaw_cmd: f64,
    params: &SimParams,
) -> UAVState {
    let max_step = params.gimbal_rate_limit * params.dt;
    let mut next = *state;
    next.gimbal_pitch += (pitch_cmd - state.gimbal_pitch).clamp(-max_step, max_step);
    next.gimbal_yaw += (yaw_cmd - state.gimbal_yaw).clamp(-max_step, max_step);
    next
}

/// Pose of the camera in the world: UAV pose, gimbal mount offset, gimbal
/// rotation.
pub fn camera_pose(state: &UAVState, mount: &RigidTransform) -> RigidTransform {
    let (sin_y, cos_y) = state.yaw.sin_cos();
    let body_rot = nalgebra::Matrix3::new(cos_y, -sin_y, 0.0, sin_y, cos_y, 0.0, 0.0, 0.0, 1.0);
    let world_from_body = RigidTransform::new(body_rot, state.position);
    world_from_body.compose(&body_to_camera(state, mount).inverse())
}

/// Transform taking body coordinates into camera coordinates, from the
/// current gimbal angles; this is what the servo twist transform is built
/// from.
pub fn body_to_camera(state: &UAVState, mount: &RigidTransform) -> RigidTransform {
    let gimbal = RigidTransform::new(
        rotation_from_gimbal(0.0, state.gimbal_pitch, state.gimbal_yaw),
        Vec3::zeros(),
    );
    mount.compose(&gimbal).inverse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn command_at_current_velocity_is_a_fixed_point() {
        let params = SimParams::default();
        let mut state = UAVState::at(Vec3::new(0.0, 0.0, -4.0), 0.0);
        state.body_velocity = CommandVelocity::new(2.0, 0.0, 0.0, 0.0);
        let cmd = state.body_velocity;
        let next = step_uav(&state, &cmd, &params);
        assert_eq!(next.body_velocity, state.body_velocity);
        assert_abs_diff_eq!(next.position.x, 2.0 * params.dt, epsilon = 1e-12);
    }

    #[test]
    fn first_order_response_from_rest() {
        let params = SimParams {
            dt: 0.02,
            uav_lag_tau: 0.5,
            ..SimParams::default()
        };
        let mut state = UAVState::at(Vec3::new(0.0, 0.0, -4.0), 0.0);
        let cmd = CommandVelocity::new(5.56, 0.0, 0.0, 0.0);
        let steps = (0.5 / params.dt).round() as usize;
        for _ in 0..steps {
            state = step_uav(&state, &cmd, &params);
        }
        let expected = 5.56 * (1.0 - (-1.0f64).exp());
        let rel = (state.body_velocity.vx - expected).abs() / expected;
        assert!(rel < 0.02, "vx {} vs {}", state.body_velocity.vx, expected);
    }

    #[test]
    fn horizontal_command_saturates_at_limit() {
        let params = SimParams::default();
        let sat = saturate_command(&CommandVelocity::new(20.0, 0.0, 0.0, 0.0), &params);
        assert_abs_diff_eq!(sat.vx, 8.33, epsilon = 1e-12);
        let sat2 = saturate_command(&CommandVelocity::new(0.0, 0.0, -9.0, 0.0), &params);
        assert_abs_diff_eq!(sat2.vz, -4.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_command_from_rest_keeps_state_constant() {
        let params = SimParams::default();
        let state = UAVState::at(Vec3::new(1.0, 2.0, -4.0), 0.3);
        let mut s = state;
        for _ in 0..100 {
            s = step_uav(&s, &CommandVelocity::zero(), &params);
        }
        assert_eq!(s.position, state.position);
        assert_eq!(s.yaw, state.yaw);
    }

    #[test]
    fn truck_advances_exactly_without_noise() {
        let params = SimParams {
            dt: 0.02,
            ..SimParams::default()
        };
        let truck = TruckState {
            path_origin: Vec3::zeros(),
            path_direction: Vec3::new(1.0, 0.0, 0.0),
            distance_along: 0.0,
            speed: 4.17,
            deck_height: 1.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let next = step_truck(&truck, &params, &mut rng);
        assert_abs_diff_eq!(next.distance_along, 0.0834, epsilon = 1e-12);

        let stopped = TruckState { speed: 0.0, ..truck };
        let next = step_truck(&stopped, &params, &mut rng);
        assert_eq!(next.distance_along, 0.0);
    }

    #[test]
    fn truck_noise_has_small_mean_effect() {
        let params = SimParams {
            dt: 0.02,
            truck_speed_noise_sigma: 0.2,
            ..SimParams::default()
        };
        let mut truck = TruckState {
            path_origin: Vec3::zeros(),
            path_direction: Vec3::new(1.0, 0.0, 0.0),
            distance_along: 0.0,
            speed: 4.17,
            deck_height: 1.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let steps = 1000;
        for _ in 0..steps {
            truck = step_truck(&truck, &params, &mut rng);
        }
        let noiseless = 4.17 * params.dt * steps as f64;
        let rel = (truck.distance_along - noiseless).abs() / noiseless;
        assert!(rel < 0.01, "drift {rel}");
    }

    #[test]
    fn gimbal_rate_limit_arithmetic() {
        let params = SimParams {
            dt: 0.02,
            gimbal_rate_limit: 2.0,
            ..SimParams::default()
        };
        let state = UAVState::at(Vec3::new(0.0, 0.0, -4.0), 0.0);
        let same = step_gimbal(&state, state.gimbal_pitch, state.gimbal_yaw, &params);
        assert_eq!(same.gimbal_pitch, state.gimbal_pitch);

        let moved = step_gimbal(&state, 0.5, 0.0, &params);
        assert_abs_diff_eq!(moved.gimbal_pitch, 0.04, epsilon = 1e-12);

        // ceil(0.5 / 0.04) = 13 steps to converge.
        let mut s = state;
        let mut steps = 0;
        while (s.gimbal_pitch - 0.5).abs() > 1e-12 {
            s = step_gimbal(&s, 0.5, 0.0, &params);
            steps += 1;
            assert!(steps <= 13, "did not converge in 13 steps");
        }
        assert_eq!(steps, 13);
    }

    #[test]
    fn camera_pose_identity_case() {
        let state = UAVState::at(Vec3::zeros(), 0.0);
        let pose = camera_pose(&state, &RigidTransform::identity());
        assert_abs_diff_eq!(pose.translation, Vec3::zeros(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            pose.rotation,
            crate::se3::camera_mount_base(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn camera_pose_pitch_down_points_world_down() {
        let mut state = UAVState::at(Vec3::new(3.0, -1.0, -4.0), 0.7);
        state.gimbal_pitch = -std::f64::consts::FRAC_PI_2;
        let pose = camera_pose(&state, &RigidTransform::identity());
        let axis = pose.rotation * Vec3::new(0.0, 0.0, 1.0);
        assert_abs_diff_eq!(axis, Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn camera_pose_composes_associatively() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        use rand::Rng;
        for _ in 0..50 {
            let mut state = UAVState::at(
                Vec3::new(
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-8.0..-1.0),
                ),
                rng.random_range(-3.0..3.0),
            );
            state.gimbal_pitch = rng.random_range(-1.5..0.0);
            state.gimbal_yaw = rng.random_range(-1.0..1.0);
            let mount = RigidTransform::from_translation(Vec3::new(0.1, 0.0, 0.05));
            // camera_pose == world_from_body ∘ (body_to_camera)^-1 by
            // definition; check associativity via the body->camera route.
            let pose = camera_pose(&state, &mount);
            let b2c = body_to_camera(&state, &mount);
            let (sin_y, cos_y) = state.yaw.sin_cos();
            let body_rot =
                nalgebra::Matrix3::new(cos_y, -sin_y, 0.0, sin_y, cos_y, 0.0, 0.0, 0.0, 1.0);
            let world_from_body = RigidTransform::new(body_rot, state.position);
            let recomposed = pose.compose(&b2c);
            assert_abs_diff_eq!(recomposed.rotation, world_from_body.rotation, epsilon = 1e-12);
            assert_abs_diff_eq!(
                recomposed.translation,
                world_from_body.translation,
                epsilon = 1e-12
            );
        }
    }

    proptest! {
        // Actual speed never exceeds the configured limits, whatever the
        // command sequence.
        #[test]
        fn saturation_bounds_actual_speed(
            cmds in proptest::collection::vec((-30.0f64..30.0, -30.0f64..30.0, -10.0f64..10.0), 1..60)
        ) {
            let params = SimParams::default();
            let mut state = UAVState::at(Vec3::new(0.0, 0.0, -4.0), 0.0);
            for (vx, vy, vz) in cmds {
                let cmd = CommandVelocity::new(vx, vy, vz, 0.0);
                for _ in 0..5 {
                    state = step_uav(&state, &cmd, &params);
                    let horiz = (state.body_velocity.vx.powi(2) + state.body_velocity.vy.powi(2)).sqrt();
                    prop_assert!(horiz <= params.max_horiz_speed + 1e-9);
                    prop_assert!(state.body_velocity.vz.abs() <= params.max_vert_speed + 1e-9);
                }
            }
        }
    }
}
