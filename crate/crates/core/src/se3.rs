//! Rigid-body geometry: rotations, transforms, twists, and the 6x6 twist
//! transport matrix used by the servo controller.
//!
//! Frame conventions used throughout the crate:
//!
//! - **World**: x along the default track direction, y right, z down.
//!   The ground plane is z = 0, so a vehicle flying at 4 m altitude sits at
//!   z = -4.
//! - **Body**: x forward, y right, z down. Yaw rotates about body z, so a
//!   positive yaw turns the nose to the right.
//! - **Camera**: z along the optical axis, x right in the image, y down in
//!   the image. At zero gimbal angles the camera looks forward along body x
//!   (camera z = body x, camera x = body y, camera y = body z). Gimbal
//!   angles compose in yaw-pitch-roll order (Rz * Ry * Rx) in the body
//!   frame, so `pitch = -PI/2` points the optical axis straight down with
//!   image-up toward body-forward.

use nalgebra::{Matrix3, Matrix6, Rotation3, Vector3, Vector6};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// 6x6 matrix transporting twists between frames (Adjoint of a transform).
pub type VelocityTwistMatrix = Matrix6<f64>;

/// Skew-symmetric cross-product matrix: `skew(t) * v == t.cross(v)`.
pub fn skew(t: &Vec3) -> Mat3 {
    Mat3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
}

/// Rotation plus translation mapping points from a source frame to a
/// destination frame: `p_dst = R * p_src + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Mat3::identity(), Vec3::zeros())
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::new(Mat3::identity(), translation)
    }

    /// Functional composition: `(a.compose(b))(p) = a(b(p))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn rotate_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// Worst deviation from a proper rotation: max of `|R*R^T - I|` entries
    /// and `|det(R) - 1|`.
    pub fn rotation_defect(&self) -> f64 {
        let gram = self.rotation * self.rotation.transpose() - Mat3::identity();
        let ortho = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ortho.max((self.rotation.determinant() - 1.0).abs())
    }

    pub fn is_finite(&self) -> bool {
        self.rotation.iter().all(|v| v.is_finite()) && self.translation.iter().all(|v| v.is_finite())
    }
}

/// 6-D spatial velocity, linear part first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist {
    pub linear: Vec3,
    pub angular: Vec3,
}

impl Twist {
    pub fn new(linear: Vec3, angular: Vec3) -> Self {
        Self { linear, angular }
    }

    pub fn zero() -> Self {
        Self::new(Vec3::zeros(), Vec3::zeros())
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.linear.x,
            self.linear.y,
            self.linear.z,
            self.angular.x,
            self.angular.y,
            self.angular.z,
        )
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]))
    }

    pub fn is_finite(&self) -> bool {
        self.linear.iter().all(|v| v.is_finite()) && self.angular.iter().all(|v| v.is_finite())
    }
}

/// Builds the 6x6 matrix that transports a twist the same direction as the
/// given transform: for `x` mapping coordinates from frame B to frame A,
/// `velocity_twist(x) * xi_B` expresses the twist `xi_B` in frame A.
///
/// Block structure: `[[R, skew(t)*R], [0, R]]`.
pub fn velocity_twist(x: &RigidTransform) -> VelocityTwistMatrix {
    let r = x.rotation;
    let tr = skew(&x.translation) * r;
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&tr);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
    m
}

/// Applies a velocity twist matrix to a twist value.
pub fn transport_twist(m: &VelocityTwistMatrix, xi: &Twist) -> Twist {
    Twist::from_vector(&(m * xi.to_vector()))
}

/// Camera-to-body rotation at zero gimbal angles: camera z (optical axis)
/// along body x, camera x along body y, camera y along body z.
pub fn camera_mount_base() -> Mat3 {
    // Columns are the camera axes expressed in body coordinates.
    Mat3::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0)
}

/// Camera-to-body rotation for the given gimbal angles, composed as
/// Rz(yaw) * Ry(pitch) * Rx(roll) applied to the mount base convention.
/// `pitch = -PI/2` points the optical axis straight down.
pub fn rotation_from_gimbal(roll: f64, pitch: f64, yaw: f64) -> Mat3 {
    Rotation3::from_euler_angles(roll, pitch, yaw).into_inner() * camera_mount_base()
}

/// Wraps an angle to (-PI, PI].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * std::f64::consts::PI);
    if w > std::f64::consts::PI {
        w -= 2.0 * std::f64::consts::PI;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
        let axis = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let angle = rng.random_range(-3.0..3.0);
        Rotation3::new(axis.normalize() * angle).into_inner()
    }

    fn random_transform(rng: &mut ChaCha8Rng) -> RigidTransform {
        RigidTransform::new(
            random_rotation(rng),
            Vec3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            ),
        )
    }

    #[test]
    fn skew_matches_definition() {
        let m = skew(&Vec3::new(1.0, 2.0, 3.0));
        let expected = Mat3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0);
        assert_eq!(m, expected);
        assert_eq!(skew(&Vec3::zeros()), Mat3::zeros());
    }

    #[test]
    fn skew_acts_as_cross_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let t = Vec3::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            );
            let v = Vec3::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            );
            let lhs = skew(&t) * v;
            let rhs = t.cross(&v);
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn transform_inverse_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = random_transform(&mut rng);
            let id = x.compose(&x.inverse());
            assert_abs_diff_eq!(id.rotation, Mat3::identity(), epsilon = 1e-9);
            assert_abs_diff_eq!(id.translation, Vec3::zeros(), epsilon = 1e-9);
        }
    }

    #[test]
    fn velocity_twist_of_identity_is_identity() {
        let m = velocity_twist(&RigidTransform::identity());
        assert_abs_diff_eq!(m, Matrix6::identity(), epsilon = 1e-15);
    }

    #[test]
    fn velocity_twist_pure_translation_block() {
        let x = RigidTransform::from_translation(Vec3::new(0.0, 0.0, 1.0));
        let m = velocity_twist(&x);
        let ur = m.fixed_view::<3, 3>(0, 3).into_owned();
        assert_abs_diff_eq!(ur, skew(&Vec3::new(0.0, 0.0, 1.0)), epsilon = 1e-15);
        assert_abs_diff_eq!(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            Mat3::identity(),
            epsilon = 1e-15
        );
    }

    // Independent oracle: transport the velocities of sample points attached
    // to the source frame and compare with the twist transported as a whole.
    #[test]
    fn velocity_twist_matches_point_velocity_transport() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, -2.0, 1.0),
            Vec3::new(0.3, 0.7, -1.2),
        ];
        for _ in 0..50 {
            let x = random_transform(&mut rng);
            let xi_b = Twist::new(
                Vec3::new(
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ),
                Vec3::new(
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ),
            );
            let xi_a = transport_twist(&velocity_twist(&x), &xi_b);
            for p_b in &samples {
                let p_a = x.transform_point(p_b);
                // Velocity of the point expressed in B, rotated to A.
                let v_b = xi_b.linear + xi_b.angular.cross(p_b);
                let lhs = x.rotation * v_b;
                let rhs = xi_a.linear + xi_a.angular.cross(&p_a);
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn gimbal_zero_angles_is_mount_base() {
        assert_eq!(rotation_from_gimbal(0.0, 0.0, 0.0), camera_mount_base());
    }

    #[test]
    fn gimbal_pitch_down_points_optical_axis_down() {
        let r = rotation_from_gimbal(0.0, -std::f64::consts::FRAC_PI_2, 0.0);
        // Optical axis (camera z) in body coordinates: straight down (+z).
        let axis = r * Vec3::new(0.0, 0.0, 1.0);
        assert_abs_diff_eq!(axis, Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
        // Image right (camera x) stays along body y.
        let right = r * Vec3::new(1.0, 0.0, 0.0);
        assert_abs_diff_eq!(right, Vec3::new(0.0, 1.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn gimbal_rotation_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let r = rotation_from_gimbal(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let defect = (r * r.transpose() - Mat3::identity())
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(defect < 1e-12, "defect {defect}");
            assert!((r.determinant() - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn skew_is_antisymmetric(x in -1e3f64..1e3, y in -1e3f64..1e3, z in -1e3f64..1e3) {
            let m = skew(&Vec3::new(x, y, z));
            prop_assert_eq!(m + m.transpose(), Mat3::zeros());
        }

        #[test]
        fn velocity_twist_is_a_homomorphism(
            ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0, aa in -3.0f64..3.0,
            bx in -1.0f64..1.0, by in -1.0f64..1.0, bz in -1.0f64..1.0, ba in -3.0f64..3.0,
            tx in -5.0f64..5.0, ty in -5.0f64..5.0, tz in -5.0f64..5.0,
            sx in -5.0f64..5.0, sy in -5.0f64..5.0, sz in -5.0f64..5.0,
        ) {
            let axis_a = Vec3::new(ax, ay, az);
            let axis_b = Vec3::new(bx, by, bz);
            prop_assume!(axis_a.norm() > 1e-3 && axis_b.norm() > 1e-3);
            let a = RigidTransform::new(
                Rotation3::new(axis_a.normalize() * aa).into_inner(),
                Vec3::new(tx, ty, tz),
            );
            let b = RigidTransform::new(
                Rotation3::new(axis_b.normalize() * ba).into_inner(),
                Vec3::new(sx, sy, sz),
            );
            let lhs = velocity_twist(&a.compose(&b));
            let rhs = velocity_twist(&a) * velocity_twist(&b);
            let err = (lhs - rhs).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(err < 1e-9, "max entry error {}", err);
        }
    }
}
