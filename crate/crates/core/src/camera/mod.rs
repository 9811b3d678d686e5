//! Pinhole camera model, projection of the deck circle, feature extraction
//! and the stochastic detection-availability model.
//!
//! The deck detector of the real system operates on raw frames; here the
//! detector's *output interface* is modeled instead: the circular pattern is
//! projected from geometry, an ellipse is fitted to the projected contour,
//! and the five-point feature vector (ellipse center plus the corners of its
//! axis-aligned bounding box) is extracted. The `Detector` wrapper adds the
//! observed failure statistics: range limits, partial-view loss, dropout
//! bursts and pixel noise.

mod conic;

pub use conic::{fit_ellipse, EllipseParams};

use nalgebra::SVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::se3::{RigidTransform, Vec3};

#[derive(Debug, Error)]
pub enum CameraError {
    #[error("point is behind the camera (z = {z:.6} m)")]
    BehindCamera { z: f64 },
    #[error("degenerate input for conic fit: {0}")]
    DegenerateInput(String),
    #[error("fitted conic is not an ellipse")]
    NotAnEllipse,
}

/// Pinhole intrinsics for the gimbal camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraIntrinsics {
    /// 640x360 frame with ~90 degree horizontal field of view.
    fn default() -> Self {
        Self {
            fx: 320.0,
            fy: 320.0,
            cx: 320.0,
            cy: 180.0,
            width: 640,
            height: 360,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err("focal lengths must be positive".to_string());
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err("cx must lie within the image width".to_string());
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err("cy must lie within the image height".to_string());
        }
        Ok(())
    }

    pub fn contains(&self, p: &PixelPoint) -> bool {
        p.u >= 0.0 && p.u < self.width as f64 && p.v >= 0.0 && p.v < self.height as f64
    }

    pub fn normalize(&self, p: &PixelPoint) -> NormalizedPoint {
        NormalizedPoint {
            x: (p.u - self.cx) / self.fx,
            y: (p.v - self.cy) / self.fy,
        }
    }
}

/// Image point in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

/// Image point in normalized coordinates ((u-cx)/fx, (v-cy)/fy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPoint {
    pub x: f64,
    pub y: f64,
}

/// The five servo features in normalized coordinates, in fixed order:
/// ellipse center, then the bounding-box corners top-left, top-right,
/// bottom-right, bottom-left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub points: [NormalizedPoint; 5],
}

impl FeatureVector {
    pub fn center(&self) -> NormalizedPoint {
        self.points[0]
    }

    pub fn as_vector(&self) -> SVector<f64, 10> {
        let mut v = SVector::<f64, 10>::zeros();
        for (i, p) in self.points.iter().enumerate() {
            v[2 * i] = p.x;
            v[2 * i + 1] = p.y;
        }
        v
    }

    /// Euclidean norm of the feature error `self - other`.
    pub fn error_norm(&self, other: &FeatureVector) -> f64 {
        (self.as_vector() - other.as_vector()).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|p| p.x.is_finite() && p.y.is_finite())
    }
}

/// Availability model for the deck detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionModel {
    /// Detections beyond this camera-deck distance are dropped (m).
    pub max_range: f64,
    /// Detections closer than this camera-deck distance are dropped (m),
    /// reproducing the close-range loss of the pattern.
    pub min_range: f64,
    /// Minimum fraction of the projected contour that must fall inside the
    /// frame.
    pub min_visible_fraction: f64,
    /// Poisson rate of dropout bursts (1/s); 0 disables bursts.
    pub dropout_burst_rate: f64,
    /// Duration of a dropout burst (s).
    pub dropout_burst_len: f64,
    /// Gaussian noise added to each projected contour point (px).
    pub pixel_noise_sigma: f64,
}

impl Default for DetectionModel {
    fn default() -> Self {
        Self {
            max_range: 8.0,
            min_range: 0.8,
            min_visible_fraction: 0.3,
            dropout_burst_rate: 0.0,
            dropout_burst_len: 0.0,
            pixel_noise_sigma: 0.0,
        }
    }
}

impl DetectionModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.min_range < self.max_range) {
            return Err("min_range must be below max_range".to_string());
        }
        if !(0.0..=1.0).contains(&self.min_visible_fraction) {
            return Err("min_visible_fraction must be in [0, 1]".to_string());
        }
        if self.dropout_burst_rate < 0.0 || self.dropout_burst_len < 0.0 {
            return Err("dropout burst parameters must be non-negative".to_string());
        }
        if self.pixel_noise_sigma < 0.0 {
            return Err("pixel_noise_sigma must be non-negative".to_string());
        }
        Ok(())
    }
}

/// Projects a world point through the pinhole model.
///
/// `camera_pose` maps camera coordinates to world coordinates (the pose of
/// the camera in the world). Points at or behind the image plane are
/// rejected.
pub fn project_point(
    world_point: &Vec3,
    camera_pose: &RigidTransform,
    intr: &CameraIntrinsics,
) -> Result<PixelPoint, CameraError> {
    let p = camera_pose.inverse().transform_point(world_point);
    if p.z <= 1e-6 {
        return Err(CameraError::BehindCamera { z: p.z });
    }
    Ok(PixelPoint {
        u: intr.fx * p.x / p.z + intr.cx,
        v: intr.fy * p.y / p.z + intr.cy,
    })
}

/// Result of projecting the deck circle into the image.
#[derive(Debug, Clone)]
pub struct CircleProjection {
    /// In-frame projections of the sampled contour.
    pub points: Vec<PixelPoint>,
    /// Fraction of contour samples that landed inside the frame.
    pub visible_fraction: f64,
}

/// Samples the deck circle uniformly by angle and projects each sample,
/// dropping behind-camera and out-of-frame points.
///
/// `deck_pose` maps deck-local coordinates (circle in the local xy plane,
/// centered at the origin) to world coordinates.
pub fn project_deck_circle(
    deck_pose: &RigidTransform,
    radius: f64,
    camera_pose: &RigidTransform,
    intr: &CameraIntrinsics,
    n_samples: usize,
) -> CircleProjection {
    assert!(n_samples >= 8, "need at least 8 contour samples");
    let mut points = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let t = 2.0 * std::f64::consts::PI * (i as f64) / (n_samples as f64);
        let local = Vec3::new(radius * t.cos(), radius * t.sin(), 0.0);
        let world = deck_pose.transform_point(&local);
        if let Ok(px) = project_point(&world, camera_pose, intr) {
            if intr.contains(&px) {
                points.push(px);
            }
        }
    }
    let visible_fraction = points.len() as f64 / n_samples as f64;
    CircleProjection {
        points,
        visible_fraction,
    }
}

/// Extracts the five-point feature vector from a fitted ellipse: the center
/// plus the corners of the axis-aligned bounding box, all in normalized
/// coordinates.
pub fn extract_features(ellipse: &EllipseParams, intr: &CameraIntrinsics) -> FeatureVector {
    let (sin_o, cos_o) = ellipse.orientation.sin_cos();
    let a = ellipse.semi_major;
    let b = ellipse.semi_minor;
    // Half-extents of the axis-aligned bounding box of a rotated ellipse.
    let eu = (a * a * cos_o * cos_o + b * b * sin_o * sin_o).sqrt();
    let ev = (a * a * sin_o * sin_o + b * b * cos_o * cos_o).sqrt();
    let c = ellipse.center;
    let corners = [
        PixelPoint { u: c.u - eu, v: c.v - ev },
        PixelPoint { u: c.u + eu, v: c.v - ev },
        PixelPoint { u: c.u + eu, v: c.v + ev },
        PixelPoint { u: c.u - eu, v: c.v + ev },
    ];
    FeatureVector {
        points: [
            intr.normalize(&c),
            intr.normalize(&corners[0]),
            intr.normalize(&corners[1]),
            intr.normalize(&corners[2]),
            intr.normalize(&corners[3]),
        ],
    }
}

/// Feature source for an ideal boundary-tolerant detector: projects the full
/// contour without frame clipping (behind-camera samples still disqualify
/// the view) and fits the ellipse on all samples.
///
/// This mirrors the real detector's ability to track ellipses that exceed
/// the image boundaries and is what the servo goal is built from, since at
/// the goal distance the deck circle does not fit in the frame.
pub fn ideal_features(
    deck_pose: &RigidTransform,
    radius: f64,
    camera_pose: &RigidTransform,
    intr: &CameraIntrinsics,
    n_samples: usize,
) -> Option<FeatureVector> {
    assert!(n_samples >= 8, "need at least 8 contour samples");
    let mut points = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let t = 2.0 * std::f64::consts::PI * (i as f64) / (n_samples as f64);
        let local = Vec3::new(radius * t.cos(), radius * t.sin(), 0.0);
        let world = deck_pose.transform_point(&local);
        points.push(project_point(&world, camera_pose, intr).ok()?);
    }
    let ellipse = fit_ellipse(&points).ok()?;
    Some(extract_features(&ellipse, intr))
}

/// Number of contour samples used by the stochastic detector.
pub const DETECTOR_CONTOUR_SAMPLES: usize = 36;

/// Stochastic deck detector: projection, noise, fit and feature extraction
/// behind the availability gates of a `DetectionModel`.
#[derive(Debug, Clone)]
pub struct Detector {
    model: DetectionModel,
    burst_until: f64,
    last_t: Option<f64>,
}

impl Detector {
    pub fn new(model: DetectionModel) -> Self {
        Self {
            model,
            burst_until: f64::NEG_INFINITY,
            last_t: None,
        }
    }

    pub fn model(&self) -> &DetectionModel {
        &self.model
    }

    /// Runs one detection attempt at time `t`. Returns `None` when the deck
    /// is out of range, insufficiently visible, or a dropout burst is
    /// active. Deterministic for a fixed rng stream and call sequence.
    pub fn detect(
        &mut self,
        t: f64,
        deck_pose: &RigidTransform,
        radius: f64,
        camera_pose: &RigidTransform,
        intr: &CameraIntrinsics,
        rng: &mut ChaCha8Rng,
    ) -> Option<FeatureVector> {
        let dt = self.last_t.map(|last| (t - last).max(0.0)).unwrap_or(0.0);
        self.last_t = Some(t);

        // Burst arrivals are Poisson with the configured rate.
        if self.model.dropout_burst_rate > 0.0 && dt > 0.0 {
            let p_start = 1.0 - (-self.model.dropout_burst_rate * dt).exp();
            if rng.random::<f64>() < p_start {
                self.burst_until = t + self.model.dropout_burst_len;
            }
        }
        if t < self.burst_until {
            return None;
        }

        let range = (camera_pose.translation - deck_pose.translation).norm();
        if range < self.model.min_range || range > self.model.max_range {
            return None;
        }

        let projection = project_deck_circle(
            deck_pose,
            radius,
            camera_pose,
            intr,
            DETECTOR_CONTOUR_SAMPLES,
        );
        if projection.visible_fraction < self.model.min_visible_fraction
            || projection.points.len() < 6
        {
            return None;
        }

        let points = if self.model.pixel_noise_sigma > 0.0 {
            let normal = Normal::new(0.0, self.model.pixel_noise_sigma).expect("valid sigma");
            projection
                .points
                .iter()
                .map(|p| PixelPoint {
                    u: p.u + normal.sample(rng),
                    v: p.v + normal.sample(rng),
                })
                .collect()
        } else {
            projection.points
        };

        let ellipse = fit_ellipse(&points).ok()?;
        Some(extract_features(&ellipse, intr))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::rotation_from_gimbal;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn straight_down_camera(x: f64, y: f64, altitude: f64) -> RigidTransform {
        RigidTransform::new(
            rotation_from_gimbal(0.0, -std::f64::consts::FRAC_PI_2, 0.0),
            Vec3::new(x, y, -altitude),
        )
    }

    fn deck_at(x: f64, y: f64, top_z: f64) -> RigidTransform {
        RigidTransform::from_translation(Vec3::new(x, y, top_z))
    }

    #[test]
    fn axis_point_maps_to_principal_point() {
        let intr = CameraIntrinsics::default();
        let cam = RigidTransform::identity();
        // Optical axis is camera z; identity pose means world z.
        let px = project_point(&Vec3::new(0.0, 0.0, 2.0), &cam, &intr).unwrap();
        assert_abs_diff_eq!(px.u, intr.cx, epsilon = 1e-12);
        assert_abs_diff_eq!(px.v, intr.cy, epsilon = 1e-12);
    }

    #[test]
    fn pinhole_hand_evaluation() {
        let intr = CameraIntrinsics::default();
        let cam = RigidTransform::identity();
        let px = project_point(&Vec3::new(0.5, 0.0, 2.0), &cam, &intr).unwrap();
        assert_abs_diff_eq!(px.u, 400.0, epsilon = 1e-12);
        assert_abs_diff_eq!(px.v, 180.0, epsilon = 1e-12);
    }

    #[test]
    fn behind_camera_is_signaled() {
        let intr = CameraIntrinsics::default();
        let cam = RigidTransform::identity();
        match project_point(&Vec3::new(0.0, 0.0, -1.0), &cam, &intr) {
            Err(CameraError::BehindCamera { .. }) => {}
            other => panic!("expected behind-camera, got {other:?}"),
        }
    }

    #[test]
    fn overhead_circle_projects_to_expected_radius() {
        let intr = CameraIntrinsics::default();
        // Camera 3 m above the deck plane, looking straight down.
        let cam = straight_down_camera(0.0, 0.0, 3.0);
        let deck = deck_at(0.0, 0.0, 0.0);
        let proj = project_deck_circle(&deck, 0.75, &cam, &intr, 36);
        assert_eq!(proj.points.len(), 36);
        assert_abs_diff_eq!(proj.visible_fraction, 1.0, epsilon = 1e-12);
        for p in &proj.points {
            let r = ((p.u - intr.cx).powi(2) + (p.v - intr.cy).powi(2)).sqrt();
            assert_abs_diff_eq!(r, 320.0 * 0.75 / 3.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn tilted_view_flattens_by_cosine() {
        let intr = CameraIntrinsics::default();
        // Long-range 45-degree view: distance much larger than the radius so
        // the projective distortion is near-affine.
        let dist = 60.0;
        let pitch = -std::f64::consts::FRAC_PI_4;
        let rot = rotation_from_gimbal(0.0, pitch, 0.0);
        // Place the camera so the deck center sits on the optical axis.
        let axis_world = rot * Vec3::new(0.0, 0.0, 1.0);
        let deck_center = Vec3::new(0.0, 0.0, 0.0);
        let cam = RigidTransform::new(rot, deck_center - axis_world * dist);
        let proj = project_deck_circle(&deck_at(0.0, 0.0, 0.0), 0.75, &cam, &intr, 48);
        assert_abs_diff_eq!(proj.visible_fraction, 1.0, epsilon = 1e-12);
        let fit = fit_ellipse(&proj.points).unwrap();
        let ratio = fit.semi_minor / fit.semi_major;
        let expected = (std::f64::consts::FRAC_PI_4).cos();
        assert!(
            (ratio - expected).abs() / expected < 0.02,
            "ratio {ratio} vs {expected}"
        );
    }

    #[test]
    fn deck_behind_camera_is_invisible() {
        let intr = CameraIntrinsics::default();
        // Camera looking forward (+x world) with the deck behind it.
        let cam = RigidTransform::new(rotation_from_gimbal(0.0, 0.0, 0.0), Vec3::new(0.0, 0.0, -4.0));
        let deck = deck_at(-10.0, 0.0, -1.5);
        let proj = project_deck_circle(&deck, 0.75, &cam, &intr, 36);
        assert!(proj.points.is_empty());
        assert_eq!(proj.visible_fraction, 0.0);
    }

    #[test]
    fn features_of_centered_circle() {
        let intr = CameraIntrinsics::default();
        let ellipse = EllipseParams {
            center: PixelPoint { u: 320.0, v: 180.0 },
            semi_major: 80.0,
            semi_minor: 80.0,
            orientation: 0.0,
        };
        let f = extract_features(&ellipse, &intr);
        assert_abs_diff_eq!(f.points[0].x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.points[0].y, 0.0, epsilon = 1e-12);
        // tl, tr, br, bl at (+-0.25, +-0.25).
        assert_abs_diff_eq!(f.points[1].x, -0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(f.points[1].y, -0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(f.points[3].x, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(f.points[3].y, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn features_of_axis_aligned_ellipse() {
        let intr = CameraIntrinsics::default();
        let ellipse = EllipseParams {
            center: PixelPoint { u: 320.0, v: 180.0 },
            semi_major: 80.0,
            semi_minor: 40.0,
            orientation: 0.0,
        };
        let f = extract_features(&ellipse, &intr);
        assert_abs_diff_eq!(f.points[2].x, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(f.points[2].y, -0.125, epsilon = 1e-12);
    }

    #[test]
    fn detector_noiseless_matches_direct_extraction() {
        let intr = CameraIntrinsics::default();
        let cam = straight_down_camera(0.1, -0.2, 3.0);
        let deck = deck_at(0.0, 0.0, 0.0);
        let mut det = Detector::new(DetectionModel::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let got = det
            .detect(0.0, &deck, 0.75, &cam, &intr, &mut rng)
            .expect("nominal geometry detects");
        let proj = project_deck_circle(&deck, 0.75, &cam, &intr, DETECTOR_CONTOUR_SAMPLES);
        let expected = extract_features(&fit_ellipse(&proj.points).unwrap(), &intr);
        assert!(got.error_norm(&expected) < 1e-9);
    }

    #[test]
    fn detector_respects_min_range() {
        let intr = CameraIntrinsics::default();
        let cam = straight_down_camera(0.0, 0.0, 0.6);
        let deck = deck_at(0.0, 0.0, 0.0);
        let mut det = Detector::new(DetectionModel::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(det.detect(0.0, &deck, 0.75, &cam, &intr, &mut rng).is_none());
    }

    #[test]
    fn detector_is_deterministic_per_seed() {
        let intr = CameraIntrinsics::default();
        let deck = deck_at(0.0, 0.0, 0.0);
        let model = DetectionModel {
            pixel_noise_sigma: 0.5,
            dropout_burst_rate: 0.2,
            dropout_burst_len: 0.2,
            ..DetectionModel::default()
        };
        let run = |seed: u64| -> Vec<Option<[f64; 2]>> {
            let mut det = Detector::new(model);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..60)
                .map(|i| {
                    let t = i as f64 / 30.0;
                    let cam = straight_down_camera(0.01 * i as f64, 0.0, 3.0);
                    det.detect(t, &deck, 0.75, &cam, &intr, &mut rng)
                        .map(|f| [f.center().x, f.center().y])
                })
                .collect()
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn detector_noise_keeps_center_close_monte_carlo() {
        let intr = CameraIntrinsics::default();
        let deck = deck_at(0.0, 0.0, 0.0);
        let cam = straight_down_camera(0.0, 0.0, 3.0);
        let model = DetectionModel {
            pixel_noise_sigma: 0.5,
            ..DetectionModel::default()
        };
        let mut det = Detector::new(model);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut ok = 0;
        let trials = 200;
        for i in 0..trials {
            let t = i as f64 / 30.0;
            let f = det
                .detect(t, &deck, 0.75, &cam, &intr, &mut rng)
                .expect("in range and visible");
            // Truth: center at the principal point, 80 px radius.
            let du = f.center().x * intr.fx;
            let dv = f.center().y * intr.fy;
            if (du * du + dv * dv).sqrt() < 2.0 {
                ok += 1;
            }
        }
        assert!(ok as f64 >= 0.95 * trials as f64, "only {ok}/{trials} within 2 px");
    }

    proptest! {
        // Full-view round trip: the fitted conic reproduces the projected
        // contour for any pose that sees the whole circle.
        #[test]
        fn projection_fit_roundtrip(
            dist in 1.5f64..8.0,
            pitch_extra in -0.5f64..0.5,
            off_x in -1.0f64..1.0,
            off_y in -1.0f64..1.0,
        ) {
            let intr = CameraIntrinsics::default();
            let pitch = -std::f64::consts::FRAC_PI_2 + pitch_extra;
            let rot = rotation_from_gimbal(0.0, pitch, 0.0);
            let axis_world = rot * Vec3::new(0.0, 0.0, 1.0);
            let deck_center = Vec3::new(off_x, off_y, 0.0);
            let cam = RigidTransform::new(rot, deck_center - axis_world * dist);
            let proj = project_deck_circle(
                &RigidTransform::from_translation(deck_center),
                0.75,
                &cam,
                &intr,
                36,
            );
            prop_assume!(proj.visible_fraction == 1.0);
            let fit = fit_ellipse(&proj.points).unwrap();
            for p in &proj.points {
                prop_assert!(fit.algebraic_residual(p) < 1e-8);
            }
        }

        // Bounding-box corners always average to the center.
        #[test]
        fn corners_average_to_center(
            cu in 0.0f64..640.0,
            cv in 0.0f64..360.0,
            a in 1.0f64..200.0,
            ratio in 0.05f64..1.0,
            angle in -1.5f64..1.5,
        ) {
            let intr = CameraIntrinsics::default();
            let ellipse = EllipseParams {
                center: PixelPoint { u: cu, v: cv },
                semi_major: a,
                semi_minor: a * ratio,
                orientation: angle,
            };
            let f = extract_features(&ellipse, &intr);
            let mean_x = (1..5).map(|i| f.points[i].x).sum::<f64>() / 4.0;
            let mean_y = (1..5).map(|i| f.points[i].y).sum::<f64>() / 4.0;
            prop_assert!((mean_x - f.points[0].x).abs() < 1e-12);
            prop_assert!((mean_y - f.points[0].y).abs() < 1e-12);
        }
    }
}
