//! Point-laser altimeters and the sudden-drop trigger that senses the
//! vehicle passing beneath the hovering quadrotor.
//!
//! The default fan has a center ray pointing straight down and two rays
//! angled 30 degrees to each side in the lateral plane. Rays are cast
//! against the ground plane and the vehicle, modeled as a solid box the
//! size of the deck footprint from the ground to the deck surface.

use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::se3::Vec3;
use crate::sim::{TruckState, UAVState};

/// One laser ray: tilt from straight down, azimuth about the down axis
/// (0 = body forward, PI/2 = body right).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserRay {
    pub tilt: f64,
    pub azimuth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaserConfig {
    pub rays: Vec<LaserRay>,
    /// Returned reading when a ray hits nothing closer (m).
    pub max_range: f64,
    /// Gaussian range noise (m).
    pub noise_sigma: f64,
}

impl Default for LaserConfig {
    /// Center ray down, side rays 30 degrees left and right.
    fn default() -> Self {
        let tilt = 30.0f64.to_radians();
        Self {
            rays: vec![
                LaserRay { tilt: 0.0, azimuth: 0.0 },
                LaserRay {
                    tilt,
                    azimuth: std::f64::consts::FRAC_PI_2,
                },
                LaserRay {
                    tilt,
                    azimuth: -std::f64::consts::FRAC_PI_2,
                },
            ],
            max_range: 50.0,
            noise_sigma: 0.0,
        }
    }
}

impl LaserConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.rays.is_empty() || self.rays.len() > 8 {
            return Err("between 1 and 8 rays are supported".to_string());
        }
        if !(self.max_range > 0.0) {
            return Err("max_range must be positive".to_string());
        }
        if self.noise_sigma < 0.0 {
            return Err("noise_sigma must be non-negative".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TriggerConfig {
    /// Range drop that signals the passing vehicle (m).
    pub drop_threshold: f64,
    /// Trailing comparison window (s).
    pub window: f64,
}

impl Default for TriggerConfig {
    fn default() -> Self {
        Self {
            drop_threshold: 1.0,
            window: 0.2,
        }
    }
}

impl TriggerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.drop_threshold > 0.0 && self.window > 0.0) {
            return Err("drop_threshold and window must be positive".to_string());
        }
        Ok(())
    }
}

/// Direction of a ray in body coordinates (z down).
fn ray_direction_body(ray: &LaserRay) -> Vec3 {
    let (sin_t, cos_t) = ray.tilt.sin_cos();
    let (sin_a, cos_a) = ray.azimuth.sin_cos();
    Vec3::new(sin_t * cos_a, sin_t * sin_a, cos_t)
}

/// First hit of a ray against an axis-aligned box given in a frame where the
/// box is `[-hx, hx] x [-hy, hy] x [zmin, zmax]`.
fn ray_box_distance(origin: &Vec3, dir: &Vec3, hx: f64, hy: f64, zmin: f64, zmax: f64) -> Option<f64> {
    let bounds = [(-hx, hx), (-hy, hy), (zmin, zmax)];
    let mut t_enter = 0.0f64;
    let mut t_exit = f64::INFINITY;
    for axis in 0..3 {
        let (lo, hi) = bounds[axis];
        let o = origin[axis];
        let d = dir[axis];
        if d.abs() < 1e-12 {
            if o < lo || o > hi {
                return None;
            }
        } else {
            let mut t0 = (lo - o) / d;
            let mut t1 = (hi - o) / d;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_enter = t_enter.max(t0);
            t_exit = t_exit.min(t1);
            if t_enter > t_exit {
                return None;
            }
        }
    }
    if t_exit < 0.0 {
        return None;
    }
    Some(t_enter.max(0.0))
}

/// Casts every configured ray from the UAV against the ground plane and the
/// vehicle box. Readings are first-hit distances plus noise; rays that hit
/// nothing within range read exactly `max_range`.
pub fn laser_measure(
    uav: &UAVState,
    truck: &TruckState,
    cfg: &LaserConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let (sin_y, cos_y) = uav.yaw.sin_cos();
    // Vehicle box in track coordinates: deck footprint wide, ground to deck
    // surface tall.
    let track_yaw = truck.path_direction.y.atan2(truck.path_direction.x);
    let (track_sin, track_cos) = track_yaw.sin_cos();
    let box_center = truck.ground_position();
    let half = 0.75;

    cfg.rays
        .iter()
        .map(|ray| {
            let d_body = ray_direction_body(ray);
            let d_world = Vec3::new(
                cos_y * d_body.x - sin_y * d_body.y,
                sin_y * d_body.x + cos_y * d_body.y,
                d_body.z,
            );

            let mut best: Option<f64> = None;

            // Ground plane z = 0.
            if d_world.z > 1e-12 && uav.position.z < 0.0 {
                best = Some(-uav.position.z / d_world.z);
            }

            // Vehicle box, in track-aligned coordinates.
            let rel = uav.position - box_center;
            let o_track = Vec3::new(
                track_cos * rel.x + track_sin * rel.y,
                -track_sin * rel.x + track_cos * rel.y,
                rel.z,
            );
            let d_track = Vec3::new(
                track_cos * d_world.x + track_sin * d_world.y,
                -track_sin * d_world.x + track_cos * d_world.y,
                d_world.z,
            );
            if let Some(t) = ray_box_distance(&o_track, &d_track, half, half, -truck.deck_height, 0.0)
            {
                best = Some(best.map_or(t, |b| b.min(t)));
            }

            match best {
                Some(t) if t <= cfg.max_range => {
                    if cfg.noise_sigma > 0.0 {
                        t + Normal::new(0.0, cfg.noise_sigma)
                            .expect("valid sigma")
                            .sample(rng)
                    } else {
                        t
                    }
                }
                _ => cfg.max_range,
            }
        })
        .collect()
}

/// Lateral offset of a tilted ray from the nadir at the given surface
/// height: `(altitude - surface_height) * tan(tilt)`.
pub fn lateral_coverage(altitude: f64, surface_height: f64, tilt: f64) -> f64 {
    (altitude - surface_height) * tilt.tan()
}

/// Sliding-window drop detector over the per-ray range histories.
#[derive(Debug, Clone)]
pub struct TriggerDetector {
    histories: Vec<VecDeque<(f64, f64)>>,
}

impl TriggerDetector {
    pub fn new(n_rays: usize) -> Self {
        Self {
            histories: vec![VecDeque::new(); n_rays],
        }
    }

    /// Feeds one set of readings at time `t`; returns true when any ray's
    /// range dropped by more than the threshold within the trailing window.
    /// Only drops count; a constant offset on all ranges changes nothing.
    pub fn update(&mut self, t: f64, ranges: &[f64], cfg: &TriggerConfig) -> bool {
        assert_eq!(ranges.len(), self.histories.len(), "ray count mismatch");
        let mut triggered = false;
        for (history, &r) in self.histories.iter_mut().zip(ranges) {
            while let Some(&(t0, _)) = history.front() {
                if t0 < t - cfg.window - 1e-12 {
                    history.pop_front();
                } else {
                    break;
                }
            }
            let max_prev = history
                .iter()
                .map(|&(_, r0)| r0)
                .fold(f64::NEG_INFINITY, f64::max);
            if max_prev.is_finite() && max_prev - r > cfg.drop_threshold {
                triggered = true;
            }
            history.push_back((t, r));
        }
        triggered
    }
}
