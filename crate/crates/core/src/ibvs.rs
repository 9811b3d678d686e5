//! Image-based visual servoing controller: the point-feature interaction
//! matrix, the reduced robot Jacobian, the pseudo-inverse control law with
//! feed-forward, and the proportional gimbal pitch law.
//!
//! The interaction matrix is held constant, evaluated once at the goal
//! configuration (features and depth at the landing pose); only the
//! camera-to-body twist transform is recomputed online from the gimbal
//! angles. The control law is
//!
//! `v = -lambda * (L * cVb * bJb)^+ * (s - s*) + v_ff`
//!
//! with the sign fixed so that the closed-loop feature error decays; the
//! convergence tests pin this choice.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use thiserror::Error;

use crate::camera::{ideal_features, CameraIntrinsics, FeatureVector, NormalizedPoint};
use crate::se3::{rotation_from_gimbal, RigidTransform, Vec3, VelocityTwistMatrix};

#[derive(Debug, Error)]
pub enum IbvsError {
    #[error("feature depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("goal geometry is not projectable: {0}")]
    GoalGeometry(String),
}

/// Stacked 10x6 interaction matrix, one 2x6 block per feature point.
pub type InteractionMatrix = SMatrix<f64, 10, 6>;

/// Constant 6x4 map from the commanded (vx, vy, vz, omega) to the body
/// twist; roll and pitch rates are not commanded.
pub type RobotJacobian = SMatrix<f64, 6, 4>;

/// Relative singular-value cutoff for the pseudo-inverse.
pub const PINV_CUTOFF: f64 = 1e-8;

pub fn robot_jacobian() -> RobotJacobian {
    let mut j = RobotJacobian::zeros();
    j[(0, 0)] = 1.0;
    j[(1, 1)] = 1.0;
    j[(2, 2)] = 1.0;
    j[(5, 3)] = 1.0;
    j
}

/// 2x6 interaction-matrix block of a point feature at normalized image
/// coordinates (x, y) and depth z.
pub fn interaction_block(x: f64, y: f64, z: f64) -> Result<SMatrix<f64, 2, 6>, IbvsError> {
    if !(z > 0.0) {
        return Err(IbvsError::NonPositiveDepth(z));
    }
    Ok(SMatrix::<f64, 2, 6>::from_row_slice(&[
        -1.0 / z,
        0.0,
        x / z,
        x * y,
        -(1.0 + x * x),
        y,
        0.0,
        -1.0 / z,
        y / z,
        1.0 + y * y,
        -x * y,
        -x,
    ]))
}

/// Stacks one interaction block per feature point, all at the goal depth.
pub fn build_goal_interaction(
    s_star: &FeatureVector,
    z_star: f64,
) -> Result<InteractionMatrix, IbvsError> {
    let mut l = InteractionMatrix::zeros();
    for (i, p) in s_star.points.iter().enumerate() {
        let block = interaction_block(p.x, p.y, z_star)?;
        l.fixed_view_mut::<2, 6>(2 * i, 0).copy_from(&block);
    }
    Ok(l)
}

/// Moore-Penrose pseudo-inverse by SVD; singular values below
/// `PINV_CUTOFF * sigma_max` are treated as zero. Also reports the
/// numerical rank.
pub fn pseudo_inverse_with_rank(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = PINV_CUTOFF * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let pinv = svd
        .pseudo_inverse(tol)
        .expect("svd pseudo-inverse with non-negative tolerance");
    (pinv, rank)
}

pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    pseudo_inverse_with_rank(m).0
}

/// Servo goal: desired features, goal depth, gains and the desired image
/// position of the deck center for the gimbal law.
#[derive(Debug, Clone, Copy)]
pub struct ServoGoal {
    pub s_star: FeatureVector,
    /// Camera-deck distance at the goal (m).
    pub z_star: f64,
    /// Servo gain (1/s).
    pub lambda: f64,
    /// Gimbal pitch gain (rad per unit of normalized vertical error).
    pub gimbal_gain: f64,
    /// Desired deck-center position in the image; offset from the principal
    /// point compensates the gimbal mount not sitting at the body center.
    pub gimbal_center_offset: NormalizedPoint,
}

impl ServoGoal {
    /// Builds the goal from the landing geometry: the body directly above
    /// the deck center with the camera pointing straight down at the goal
    /// depth. The deck circle exceeds the frame at that distance, so the
    /// goal features come from the boundary-tolerant projection.
    pub fn from_geometry(
        deck_radius: f64,
        z_star: f64,
        mount: &RigidTransform,
        intr: &CameraIntrinsics,
        lambda: f64,
        gimbal_gain: f64,
    ) -> Result<Self, IbvsError> {
        if !(z_star > 0.0) {
            return Err(IbvsError::NonPositiveDepth(z_star));
        }
        let rot = rotation_from_gimbal(0.0, -std::f64::consts::FRAC_PI_2, 0.0);
        // Body above the deck center; the camera sits at the mount offset.
        let camera_pos = Vec3::new(mount.translation.x, mount.translation.y, -z_star);
        let camera_pose = RigidTransform::new(rot, camera_pos);
        let deck_pose = RigidTransform::identity();
        let s_star = ideal_features(&deck_pose, deck_radius, &camera_pose, intr, 64)
            .ok_or_else(|| IbvsError::GoalGeometry("goal projection failed".to_string()))?;
        Ok(Self {
            s_star,
            z_star,
            lambda,
            gimbal_gain,
            gimbal_center_offset: s_star.center(),
        })
    }
}

/// Body-frame velocity command: linear velocities plus yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CommandVelocity {
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub omega: f64,
}

impl CommandVelocity {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(vx: f64, vy: f64, vz: f64, omega: f64) -> Self {
        Self { vx, vy, vz, omega }
    }

    pub fn linear(&self) -> Vec3 {
        Vec3::new(self.vx, self.vy, self.vz)
    }

    pub fn as_vector(&self) -> SVector<f64, 4> {
        SVector::<f64, 4>::new(self.vx, self.vy, self.vz, self.omega)
    }

    pub fn from_vector(v: &SVector<f64, 4>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.vz.is_finite() && self.omega.is_finite()
    }
}

/// Servo command plus a warning flag for rank-deficient task geometry.
#[derive(Debug, Clone, Copy)]
pub struct ServoOutput {
    pub command: CommandVelocity,
    pub rank_deficient: bool,
}

/// The visual servoing control law. `cvb` transports body twists into the
/// camera frame and is recomputed online from the gimbal angles; `l` is the
/// constant goal interaction matrix.
pub fn servo_command(
    s: &FeatureVector,
    goal: &ServoGoal,
    l: &InteractionMatrix,
    cvb: &VelocityTwistMatrix,
    v_ff: &CommandVelocity,
) -> ServoOutput {
    let m_static = l * cvb * robot_jacobian();
    let m = DMatrix::from_column_slice(10, 4, m_static.as_slice());
    let (pinv, rank) = pseudo_inverse_with_rank(&m);

    let error = s.as_vector() - goal.s_star.as_vector();
    let e = DVector::from_column_slice(error.as_slice());
    let v = -goal.lambda * (pinv * e);

    ServoOutput {
        command: CommandVelocity::new(
            v[0] + v_ff.vx,
            v[1] + v_ff.vy,
            v[2] + v_ff.vz,
            v[3] + v_ff.omega,
        ),
        rank_deficient: rank < 4,
    }
}

/// Proportional gimbal pitch law: signed vertical error of the deck center
/// against its desired image position, scaled by the gimbal gain. Returns a
/// pitch increment; negative pitches the camera further down.
pub fn gimbal_command(s_c: NormalizedPoint, goal: &ServoGoal) -> f64 {
    -goal.gimbal_gain * (s_c.y - goal.gimbal_center_offset.y)
}

/// Feed-forward term: the ground-vehicle velocity rotated into the body
/// frame. Yaw rate is zero on straight segments.
pub fn feed_forward(truck_velocity_world: &Vec3, uav_yaw: f64) -> CommandVelocity {
    let (sin_y, cos_y) = uav_yaw.sin_cos();
    CommandVelocity::new(
        cos_y * truck_velocity_world.x + sin_y * truck_velocity_world.y,
        -sin_y * truck_velocity_world.x + cos_y * truck_velocity_world.y,
        truck_velocity_world.z,
        0.0,
    )
}
