//! Shared domain types and angle helpers.
//!
//! All angles are radians. Point positions live in the world frame once a
//! frame has been ingested; only bearings keep a reference to the sensor.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    // rem_euclid can return exactly 2*pi for tiny negative inputs.
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// A single radar reflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarPoint {
    pub x_w: f64,
    pub y_w: f64,
    /// Measured Doppler range rate, not yet compensated for ego motion.
    pub range_rate_meas: f64,
    /// Bearing with respect to the sensor boresight.
    pub bearing_sensor: f64,
    pub timestamp: f64,
    pub sensor_id: u32,
}

/// Pose of a radar on the ego vehicle, in the ego frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorMount {
    pub x_s: f64,
    pub y_s: f64,
    /// Sensor yaw relative to the ego heading.
    pub theta_s: f64,
}

impl SensorMount {
    pub fn new(x_s: f64, y_s: f64, theta_s: f64) -> Self {
        Self { x_s, y_s, theta_s: normalize_angle(theta_s) }
    }

    /// Sensor position in the world frame for the given ego pose.
    pub fn world_position(&self, ego: &EgoState) -> (f64, f64) {
        let (s, c) = ego.alpha.sin_cos();
        (ego.x_e + c * self.x_s - s * self.y_s, ego.y_e + s * self.x_s + c * self.y_s)
    }

    /// Sensor boresight direction in the world frame.
    pub fn world_yaw(&self, ego: &EgoState) -> f64 {
        normalize_angle(ego.alpha + self.theta_s)
    }
}

impl Default for SensorMount {
    fn default() -> Self {
        // Front bumper of a compact car.
        Self { x_s: 3.6, y_s: 0.0, theta_s: 0.0 }
    }
}

/// Ego-vehicle pose and motion. Velocities are world-aligned.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EgoState {
    pub x_e: f64,
    pub y_e: f64,
    /// Rotation from the ego frame to the world frame.
    pub alpha: f64,
    pub vx_e: f64,
    pub vy_e: f64,
    pub omega_e: f64,
    pub timestamp: f64,
}

/// One radar scan with the matching ego state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub points: Vec<RadarPoint>,
    pub ego: EgoState,
    pub timestamp: f64,
    pub frame_index: u64,
}

/// Bearing of a point in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct WorldBearing(f64);

impl WorldBearing {
    pub fn new(phi_w: f64) -> Self {
        Self(normalize_angle(phi_w))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Unit line-of-sight vector `[cos, sin]`.
    pub fn unit(self) -> (f64, f64) {
        let (s, c) = self.0.sin_cos();
        (c, s)
    }
}

/// `phi_w = phi_s + theta_s + alpha`, wrapped.
pub fn bearing_to_world(phi_s: f64, mount: &SensorMount, ego: &EgoState) -> WorldBearing {
    WorldBearing::new(phi_s + mount.theta_s + ego.alpha)
}

/// Oriented rectangle: centre, extents along (`length`) and across (`width`)
/// the yaw direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub centre: (f64, f64),
    pub length: f64,
    pub width: f64,
    pub yaw: f64,
}

impl OrientedBox {
    /// Point expressed in the box frame (along, across).
    pub fn to_local(&self, p: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        let dx = p.0 - self.centre.0;
        let dy = p.1 - self.centre.1;
        (c * dx + s * dy, -s * dx + c * dy)
    }

    pub fn contains(&self, p: (f64, f64), tol: f64) -> bool {
        let (u, v) = self.to_local(p);
        u.abs() <= self.length / 2.0 + tol && v.abs() <= self.width / 2.0 + tol
    }

    pub fn area(&self) -> f64 {
        self.length * self.width
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_angle(0.0), 0.0);
        assert!(normalize_angle(2.0 * PI).abs() < EPS);
        assert!((normalize_angle(-1.5 * PI) - PI / 2.0).abs() < EPS);
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
    }

    #[test]
    fn bearing_examples() {
        let ego = |alpha| EgoState { alpha, ..Default::default() };
        let m = |t| SensorMount { x_s: 0.0, y_s: 0.0, theta_s: t };
        assert_eq!(bearing_to_world(0.0, &m(0.0), &ego(0.0)).radians(), 0.0);
        let b = bearing_to_world(PI / 4.0, &m(PI / 4.0), &ego(PI / 2.0)).radians();
        assert!((b - PI).abs() < EPS);
        // 3 + 1 + 1 = 5 wraps to 5 - 2pi
        let b = bearing_to_world(3.0, &m(1.0), &ego(1.0)).radians();
        assert!((b - (5.0 - 2.0 * PI)).abs() < EPS);
        assert!((b + 1.2832).abs() < 1e-4);
    }

    #[test]
    fn box_contains_and_local() {
        let b = OrientedBox { centre: (1.0, 1.0), length: 4.0, width: 2.0, yaw: PI / 2.0 };
        assert!(b.contains((1.0, 2.9), 0.0));
        assert!(!b.contains((2.9, 1.0), 0.0));
        let (u, v) = b.to_local((1.0, 3.0));
        assert!((u - 2.0).abs() < EPS && v.abs() < EPS);
    }

    proptest! {
        #[test]
        fn normalize_in_range_and_periodic(a in -100.0f64..100.0, k in -3i32..=3) {
            let n = normalize_angle(a);
            prop_assert!(n > -PI && n <= PI);
            let shifted = normalize_angle(a + 2.0 * PI * k as f64);
            let d = normalize_angle(shifted - n);
            prop_assert!(d.abs() < 1e-9);
        }

        #[test]
        fn bearing_equivariant_in_alpha(
            phi in -PI..PI, theta in -PI..PI, alpha in -PI..PI, delta in -10.0f64..10.0
        ) {
            let m = SensorMount { x_s: 0.0, y_s: 0.0, theta_s: theta };
            let e0 = EgoState { alpha, ..Default::default() };
            let e1 = EgoState { alpha: alpha + delta, ..Default::default() };
            let b0 = bearing_to_world(phi, &m, &e0).radians();
            let b1 = bearing_to_world(phi, &m, &e1).radians();
            prop_assert!(normalize_angle(b1 - b0 - delta).abs() < 1e-9);
        }
    }
}
