//! Ego-motion compensation of Doppler range rates.
//!
//! The ego vehicle's motion is transferred to the sensor position with a
//! rigid-body lever arm, projected onto the line of sight of each reflection,
//! and added to the measured range rate. The result is the radial velocity of
//! the target in the world frame.

use crate::error::{Error, Result};
use crate::types::{bearing_to_world, EgoState, RadarPoint, SensorMount};
use serde::{Deserialize, Serialize};

/// Motion experienced at the sensor, world-aligned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorMotion {
    pub omega_s: f64,
    pub vx_s: f64,
    pub vy_s: f64,
}

/// A point together with its compensated range rate and world bearing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompensatedPoint {
    pub base: RadarPoint,
    pub range_rate_comp: f64,
    pub phi_w: f64,
}

impl CompensatedPoint {
    pub fn position(&self) -> (f64, f64) {
        (self.base.x_w, self.base.y_w)
    }
}

/// Transfers ego motion to the sensor. The lever arm is taken in the world
/// frame, from the ego reference point to the sensor's world position.
pub fn motion_at_sensor(ego: &EgoState, mount: &SensorMount) -> SensorMotion {
    let (xs, ys) = mount.world_position(ego);
    motion_at_offset(ego, xs - ego.x_e, ys - ego.y_e)
}

/// Same as [`motion_at_sensor`] with an explicit world-frame lever arm.
pub fn motion_at_offset(ego: &EgoState, dx: f64, dy: f64) -> SensorMotion {
    SensorMotion {
        omega_s: ego.omega_e,
        vx_s: -dy * ego.omega_e + ego.vx_e,
        vy_s: dx * ego.omega_e + ego.vy_e,
    }
}

/// Range rate induced by the sensor's own motion along the line of sight.
///
/// `alpha` rotates the sensor-frame line of sight into the axes `motion` is
/// expressed in; pass 0 when the motion is already ego-aligned.
pub fn ego_range_rate(motion: &SensorMotion, mount: &SensorMount, phi_s: f64, alpha: f64) -> f64 {
    let (s, c) = (mount.theta_s + phi_s + alpha).sin_cos();
    motion.vx_s * c + motion.vy_s * s
}

pub fn compensate(point: &RadarPoint, ego: &EgoState, mount: &SensorMount) -> CompensatedPoint {
    let motion = motion_at_sensor(ego, mount);
    let r_e = ego_range_rate(&motion, mount, point.bearing_sensor, ego.alpha);
    CompensatedPoint {
        base: *point,
        range_rate_comp: point.range_rate_meas + r_e,
        phi_w: bearing_to_world(point.bearing_sensor, mount, ego).radians(),
    }
}

/// Compensates every point of a frame, looking mounts up by sensor id.
pub fn compensate_all(
    points: &[RadarPoint],
    ego: &EgoState,
    mounts: &[SensorMount],
) -> Result<Vec<CompensatedPoint>> {
    points
        .iter()
        .map(|p| {
            let mount = mounts.get(p.sensor_id as usize).ok_or(Error::UnknownSensor(p.sensor_id))?;
            Ok(compensate(p, ego, mount))
        })
        .collect()
}

/// Time-ordered ego states, queried by nearest timestamp.
#[derive(Debug, Clone, Default)]
pub struct EgoBuffer {
    states: Vec<EgoState>,
}

impl EgoBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, ego: EgoState) {
        let pos = self.states.partition_point(|s| s.timestamp <= ego.timestamp);
        self.states.insert(pos, ego);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Nearest ego state to `t`; errors if it is more than `max_skew` away.
    pub fn nearest(&self, t: f64, max_skew: f64) -> Result<EgoState> {
        let idx = self.states.partition_point(|s| s.timestamp < t);
        let candidates = [idx.checked_sub(1), Some(idx)];
        candidates
            .iter()
            .flatten()
            .filter_map(|&i| self.states.get(i))
            .min_by(|a, b| (a.timestamp - t).abs().total_cmp(&(b.timestamp - t).abs()))
            .filter(|s| (s.timestamp - t).abs() <= max_skew)
            .copied()
            .ok_or(Error::EgoSkew { t, max_skew })
    }
}
