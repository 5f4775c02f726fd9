//! Built-in scenario geometries.

use super::{NoiseModel, Scenario, SensorModel, Target};
use super::trajectory::{Path, Segment, SpeedProfile, Trajectory};
use crate::types::SensorMount;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioLabel {
    A,
    B,
    C,
    Circle,
    Traffic,
    Custom,
}

const CAR_LENGTH: f64 = 4.5;
const CAR_WIDTH: f64 = 1.8;

fn base(label: ScenarioLabel, duration: f64, ego: Trajectory, targets: Vec<Target>) -> Scenario {
    Scenario {
        label,
        duration,
        ego,
        targets,
        mounts: vec![SensorMount::default()],
        sensor: SensorModel::default(),
        noise: NoiseModel::default(),
        self_occlusion: true,
    }
}

/// Stadium-shaped test track of about 750 m.
pub fn stadium() -> Path {
    let radius = 30.0;
    let straight = (750.0 - 2.0 * PI * radius) / 2.0;
    Path {
        start: [0.0, 0.0, 0.0],
        segments: vec![
            Segment::Line { length: straight },
            Segment::Arc { radius, angle: PI },
            Segment::Line { length: straight },
            Segment::Arc { radius, angle: PI },
        ],
        closed: true,
    }
}

/// Ego follows the trackee around the closed track; both accelerate from
/// standstill to 14 m/s.
pub fn scenario_a() -> Scenario {
    let speed = SpeedProfile { initial: 0.0, phases: vec![[7.0, 2.0]] };
    let ego = Trajectory { path: stadium(), speed: speed.clone(), s0: 0.0 };
    let trackee = Trajectory { path: stadium(), speed, s0: 20.0 };
    base(ScenarioLabel::A, 60.0, ego, vec![Target { id: 0, length: CAR_LENGTH, width: CAR_WIDTH, trajectory: trackee }])
}

/// Stationary ego; the trackee drives towards it, accelerating, cruising
/// and braking to a halt.
pub fn scenario_b() -> Scenario {
    let speed = SpeedProfile { initial: 0.0, phases: vec![[5.0, 2.0], [3.0, 0.0], [5.0, -2.0]] };
    let trackee = Trajectory::straight(90.0, 1.5, PI, speed);
    base(
        ScenarioLabel::B,
        13.0,
        Trajectory::stationary(0.0, 0.0, 0.0),
        vec![Target { id: 0, length: CAR_LENGTH, width: CAR_WIDTH, trajectory: trackee }],
    )
}

/// Stationary ego; the trackee crosses the boresight at right angles,
/// passing the sensor at `distance` metres.
pub fn scenario_c() -> Scenario {
    let (distance, speed, duration) = (30.0, 10.0, 10.0);
    let sensor_x = SensorMount::default().x_s;
    let trackee = Trajectory::straight(sensor_x + distance, -speed * duration / 2.0, FRAC_PI_2, SpeedProfile::constant(speed));
    base(
        ScenarioLabel::C,
        duration,
        Trajectory::stationary(0.0, 0.0, 0.0),
        vec![Target { id: 0, length: CAR_LENGTH, width: CAR_WIDTH, trajectory: trackee }],
    )
}

/// Both vehicles on a circle around the origin, the ego `gap` metres of
/// arc behind, at constant speed.
pub fn circle(radius: f64, speed: f64, gap: f64, duration: f64) -> Scenario {
    let path = Path { start: [0.0, -radius, 0.0], segments: vec![Segment::Arc { radius, angle: 2.0 * PI }], closed: true };
    let ego = Trajectory { path: path.clone(), speed: SpeedProfile::constant(speed), s0: 0.0 };
    let trackee = Trajectory { path, speed: SpeedProfile::constant(speed), s0: gap };
    base(ScenarioLabel::Circle, duration, ego, vec![Target { id: 0, length: CAR_LENGTH, width: CAR_WIDTH, trajectory: trackee }])
}

/// `n` vehicles on six parallel lanes ahead of a stationary sensor.
pub fn traffic(n: usize, duration: f64) -> Scenario {
    let targets = (0..n)
        .map(|k| {
            let lane = k % 6;
            let slot = k / 6;
            let y = -8.75 + 3.5 * lane as f64;
            let x = 15.0 + 15.0 * slot as f64 + 3.0 * lane as f64;
            let speed = 3.0 + 0.5 * lane as f64;
            Target { id: k as u32, length: CAR_LENGTH, width: CAR_WIDTH, trajectory: Trajectory::straight(x, y, 0.0, SpeedProfile::constant(speed)) }
        })
        .collect();
    let mut s = base(ScenarioLabel::Traffic, duration, Trajectory::stationary(0.0, 0.0, 0.0), targets);
    s.sensor.max_range = 150.0;
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn track_length() {
        assert!((stadium().length() - 750.0).abs() < 1.0);
        let a = scenario_a();
        let end = a.targets[0].trajectory.state(a.duration);
        assert!((end.speed() - 14.0).abs() < 1e-12);
    }

    #[test]
    fn b_is_static_ego() {
        let b = scenario_b();
        for k in 0..b.frame_count() {
            let e = b.ego_state(b.frame_time(k));
            assert_eq!((e.vx_e, e.vy_e, e.omega_e), (0.0, 0.0, 0.0));
        }
        let end = b.targets[0].trajectory.state(b.duration);
        assert!(end.speed() < 1e-12 && (end.x - 10.0).abs() < 1e-9);
    }

    #[test]
    fn c_is_perpendicular_at_closest_approach() {
        let c = scenario_c();
        let k = c.targets[0].trajectory.state(c.duration / 2.0);
        assert!(k.y.abs() < 1e-9);
        let boresight = c.mounts[0].world_yaw(&c.ego_state(0.0));
        assert!((k.vx * boresight.cos() + k.vy * boresight.sin()).abs() < 1e-12);
    }

    #[test]
    fn scenarios_round_trip_through_toml() {
        for s in [scenario_a(), scenario_b(), scenario_c(), circle(30.0, 10.0, 15.0, 5.0), traffic(7, 1.0)] {
            let text = s.to_toml().unwrap();
            assert_eq!(Scenario::parse_toml(&text).unwrap(), s);
        }
    }
}
